#include "jetforge/parser.hpp"

#include <cctype>
#include <regex>

namespace jetforge {

// ---- tokens --------------------------------------------------------------

TokenStream::TokenStream(std::string_view text) {
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t count) {
        for (std::size_t k = 0; k < count; ++k) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.offset = i;
        t.line = line;
        t.column = col;
        std::size_t j = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == '.') {
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            t.kind = TokenKind::Number;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            while (j < text.size() && text[j] == '\'') ++j;
            t.kind = TokenKind::Ident;
        } else if (std::string_view("+-*/^()[]{},;=<>").find(c) != std::string_view::npos) {
            j = i + 1;
            t.kind = TokenKind::Symbol;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", i, line, col);
        }
        t.text = std::string(text.substr(i, j - i));
        tokens_.push_back(std::move(t));
        advance(j - i);
    }
    Token end;
    end.offset = i;
    end.line = line;
    end.column = col;
    tokens_.push_back(end);
}

const Token& TokenStream::peek(std::size_t ahead) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
}

Token TokenStream::next() {
    Token t = peek();
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
}

bool TokenStream::accept(std::string_view s) {
    const Token& t = peek();
    if (t.kind != TokenKind::End && t.text == s) {
        next();
        return true;
    }
    return false;
}

Token TokenStream::expect(std::string_view s) {
    if (peek().kind == TokenKind::End || peek().text != s)
        fail("expected '" + std::string(s) + "'");
    return next();
}

Token TokenStream::expect_ident() {
    if (peek().kind != TokenKind::Ident) fail("expected identifier");
    return next();
}

long TokenStream::expect_int() {
    if (peek().kind != TokenKind::Number || peek().text.find('.') != std::string::npos)
        fail("expected integer");
    return std::stol(next().text);
}

void TokenStream::fail(const std::string& msg) const { fail_at(peek(), msg); }

void TokenStream::fail_at(const Token& t, const std::string& msg) const {
    std::string where = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(msg + " at " + where, t.offset, t.line, t.column);
}

// ---- expressions ---------------------------------------------------------

namespace {

class ExprParser {
public:
    ExprParser(TokenStream& ts, const ExprContext& ctx, ParseFlags& flags)
        : ts_(ts), ctx_(ctx), flags_(flags) {}

    Expr expr() {
        Expr acc = term();
        while (true) {
            if (ts_.accept("+"))
                acc = acc + term();
            else if (ts_.accept("-"))
                acc = acc - term();
            else
                return acc;
        }
    }

private:
    Expr term() {
        Expr acc = unary();
        while (true) {
            if (ts_.accept("*")) {
                acc = acc * unary();
            } else if (ts_.peek().text == "/" && ts_.peek().kind == TokenKind::Symbol) {
                Token slash = ts_.next();
                Expr d = unary();
                if (d.is_zero()) ts_.fail_at(slash, "division by zero");
                acc = acc / d;
            } else {
                return acc;
            }
        }
    }

    Expr unary() {
        if (ts_.accept("-")) return -unary();
        if (ts_.accept("+")) return unary();
        return power();
    }

    Expr power() {
        Token at = ts_.peek();
        Expr base = primary();
        if (!ts_.accept("^")) return base;
        int e = 0;
        if (ts_.accept("(")) {
            bool neg = ts_.accept("-");
            e = static_cast<int>(ts_.expect_int());
            if (neg) e = -e;
            ts_.expect(")");
        } else if (ts_.accept("-")) {
            e = -static_cast<int>(ts_.expect_int());
        } else {
            e = static_cast<int>(ts_.expect_int());
        }
        if (e < 0 && base.is_zero()) ts_.fail_at(at, "division by zero");
        return base.pow(e);
    }

    Expr primary() {
        const Token& t = ts_.peek();
        if (t.kind == TokenKind::Number) {
            Token num = ts_.next();
            if (num.text.find('.') != std::string::npos) flags_.saw_decimal = true;
            return Expr(parse_scalar(num.text));
        }
        if (ts_.accept("(")) {
            Expr e = expr();
            ts_.expect(")");
            return e;
        }
        if (t.kind != TokenKind::Ident) ts_.fail("expected expression");
        return identifier(ts_.next());
    }

    [[noreturn]] void semantic(const Token& t, const std::string& msg) const {
        throw SemanticError(msg, t.line, t.column);
    }

    Expr identifier(const Token& t) {
        const std::string& name = t.text;
        static const std::regex jet_re("u([0-9]*)"), base_re("x([0-9]+)"), cov_re("xi([0-9]+)"),
            coord_re("y([0-9]+)");
        std::smatch mt;

        if (ctx_.definitions.count(name) || ctx_.symbols.count(name)) return named(t);
        if (PrimitiveRegistry::instance().contains(name) && ts_.peek().text == "(") {
            ts_.expect("(");
            Expr arg = expr();
            ts_.expect(")");
            return Expr::call(name, arg);
        }
        if (std::regex_match(name, mt, jet_re) && ts_.peek().text == "[") {
            if (!ctx_.allow_jets) semantic(t, "jet variables are not allowed here");
            int comp = mt[1].str().empty() ? 1 : std::stoi(mt[1].str());
            if (comp < 1 || comp > ctx_.n) semantic(t, "fiber component out of range in '" + name + "'");
            MultiIndex I = multi_index();
            if (ctx_.order >= 0 && I.degree() > ctx_.order)
                semantic(t, "jet index exceeds order " + std::to_string(ctx_.order));
            return Expr::var(VarRef::jet_var(comp, std::move(I)));
        }
        if (std::regex_match(name, mt, cov_re)) {
            if (!ctx_.allow_covectors) semantic(t, "covector variables are not allowed here");
            int i = std::stoi(mt[1].str());
            if (i < 1 || i > ctx_.m) semantic(t, "covector index out of range in '" + name + "'");
            return Expr::var(VarRef::covector(i));
        }
        if (std::regex_match(name, mt, base_re)) {
            int i = std::stoi(mt[1].str());
            if (i < 1 || i > ctx_.m) semantic(t, "base coordinate out of range in '" + name + "'");
            return Expr::var(VarRef::base(i));
        }
        if (std::regex_match(name, mt, coord_re) && ctx_.coords > 0) {
            int j = std::stoi(mt[1].str());
            if (j < 1 || j > ctx_.coords) semantic(t, "coordinate out of range in '" + name + "'");
            return Expr::var(VarRef::coord(j));
        }
        semantic(t, "undeclared identifier '" + name + "'");
    }

    Expr named(const Token& t) {
        // A parameter function may be written with a dummy argument list,
        // g11(x); the argument carries no information and is skipped.
        if (ts_.peek().text == "(" && ts_.peek().kind == TokenKind::Symbol) {
            ts_.next();
            int depth = 1;
            while (depth > 0) {
                if (ts_.at_end()) ts_.fail("unbalanced parentheses");
                Token a = ts_.next();
                if (a.text == "(") ++depth;
                if (a.text == ")") --depth;
            }
        }
        if (auto it = ctx_.definitions.find(t.text); it != ctx_.definitions.end()) return it->second;
        return Expr::var(VarRef::param(t.text));
    }

    MultiIndex multi_index() {
        ts_.expect("[");
        bool paren = ts_.accept("(");
        std::vector<int> e;
        Token start = ts_.peek();
        do {
            long v = ts_.expect_int();
            e.push_back(static_cast<int>(v));
        } while (ts_.accept(","));
        if (paren) ts_.expect(")");
        ts_.expect("]");
        if (static_cast<int>(e.size()) != ctx_.m)
            semantic(start, "multi-index has " + std::to_string(e.size()) + " entries, base dimension is " +
                                std::to_string(ctx_.m));
        return MultiIndex(std::move(e));
    }

    TokenStream& ts_;
    const ExprContext& ctx_;
    ParseFlags& flags_;
};

}  // namespace

Expr parse_expression(TokenStream& ts, const ExprContext& ctx, ParseFlags& flags) {
    ExprParser p(ts, ctx, flags);
    return p.expr();
}

Expr parse_expr(std::string_view text, const ExprContext& ctx, ParseFlags* flags) {
    TokenStream ts(text);
    ParseFlags local;
    Expr e = parse_expression(ts, ctx, flags ? *flags : local);
    if (!ts.at_end()) ts.fail("unexpected trailing input");
    return e;
}

}  // namespace jetforge
