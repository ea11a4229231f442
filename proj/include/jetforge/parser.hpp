#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jetforge/expr.hpp"

namespace jetforge {

/// Names and dimensions visible to the expression parser.
struct ExprContext {
    int m = 1;           // base dimension: x1..xm, xi1..xim
    int n = 1;           // fiber dimension: u1..un
    int order = -1;      // largest admissible |I| in u[I]; negative means unbounded
    int coords = 0;      // y1..y<coords> allowed when positive
    bool allow_jets = true;
    bool allow_covectors = true;
    std::map<std::string, Expr> definitions;  // inlined at use: `g11` or `g11(x)`
    std::set<std::string> symbols;            // free named constants (Param vars)
};

enum class TokenKind { End, Number, Ident, Symbol };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    std::size_t offset = 0, line = 1, column = 1;
};

/// Tokenizer shared by the expression and problem-file grammars. `#` starts
/// a comment running to the end of the line.
class TokenStream {
public:
    explicit TokenStream(std::string_view text);

    const Token& peek(std::size_t ahead = 0) const;
    Token next();
    bool at_end() const { return peek().kind == TokenKind::End; }
    bool accept(std::string_view symbol_or_word);
    Token expect(std::string_view symbol_or_word);
    Token expect_ident();
    long expect_int();
    [[noreturn]] void fail(const std::string& msg) const;
    [[noreturn]] void fail_at(const Token& t, const std::string& msg) const;

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

struct ParseFlags {
    bool saw_decimal = false;
};

/// expr := term (('+'|'-') term)*
/// term := unary (('*'|'/') unary)*
/// unary := ('-'|'+') unary | power
/// power := primary ('^' (int | '(' ['-'] int ')' | '-' int))?
/// primary := number | '(' expr ')' | u[α][(I)] | x<i> | xi<i> | y<j>
///          | name | name '(' ... ')' | primitive '(' expr ')'
Expr parse_expression(TokenStream& ts, const ExprContext& ctx, ParseFlags& flags);

/// Parses a complete expression; trailing input is an error.
Expr parse_expr(std::string_view text, const ExprContext& ctx, ParseFlags* flags = nullptr);

}  // namespace jetforge
