#include <doctest.h>

#include <random>

#include "jetforge/parser.hpp"

using namespace jetforge;

namespace {

ExprContext ctx2(int order = 2) {
    ExprContext c;
    c.m = 2;
    c.n = 1;
    c.order = order;
    return c;
}

Expr u(MultiIndex I) { return Expr::var(VarRef::jet_var(1, std::move(I))); }
Expr x(int i) { return Expr::var(VarRef::base(i)); }

}  // namespace

TEST_CASE("basic expressions") {
    auto c = ctx2();
    CHECK(parse_expr("u[(2,0)] + u[(0,2)]", c) == u(MultiIndex{2, 0}) + u(MultiIndex{0, 2}));
    CHECK(parse_expr("2*x1^2 - x2/3", c) == 2 * x(1).pow(2) - x(2) * Expr(Scalar(1, 3)));
    CHECK(parse_expr("-x1^2", c) == -(x(1).pow(2)));
    CHECK(parse_expr("x1^(-2)", c) == x(1).pow(-2));
    CHECK(parse_expr("(x1+1)^3", c) == (x(1) + 1).pow(3));
    CHECK(parse_expr("u[1,1]", c) == u(MultiIndex{1, 1}));
    CHECK(parse_expr("sin(x1)*u[(0,0)]", c) == Expr::call("sin", x(1)) * u(MultiIndex{0, 0}));
}

TEST_CASE("parameter functions are inlined") {
    auto c = ctx2();
    c.definitions["g11"] = 1 + x(1).pow(2);
    CHECK(parse_expr("g11(x)*u[(2,0)]", c) == (1 + x(1).pow(2)) * u(MultiIndex{2, 0}));
    CHECK(parse_expr("g11*2", c) == 2 + 2 * x(1).pow(2));
    c.symbols.insert("lam");
    CHECK(parse_expr("lam*x1", c) == Expr::var(VarRef::param("lam")) * x(1));
}

TEST_CASE("decimal literals are exact and flagged") {
    auto c = ctx2();
    ParseFlags f;
    CHECK(parse_expr("0.25*x1", c, &f) == Expr(Scalar(1, 4)) * x(1));
    CHECK(f.saw_decimal);
    ParseFlags g;
    parse_expr("1/4*x1", c, &g);
    CHECK(!g.saw_decimal);
}

TEST_CASE("errors") {
    auto c = ctx2();
    CHECK_THROWS_WITH_AS(parse_expr("u[(3,0)]", c), doctest::Contains("jet index exceeds order"), SemanticError);
    CHECK_THROWS_AS(parse_expr("foo + 1", c), SemanticError);
    CHECK_THROWS_AS(parse_expr("x3", c), SemanticError);
    CHECK_THROWS_AS(parse_expr("u[(1,0,0)]", c), SemanticError);
    try {
        parse_expr("x1 +\n  * 2", c);
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
    }
    CHECK_THROWS_AS(parse_expr("x1 x2", c), ParseError);
    CHECK_THROWS_AS(parse_expr("(x1", c), ParseError);
    CHECK_THROWS_AS(parse_expr("x1 / 0", c), ParseError);
    CHECK_THROWS_AS(parse_expr("x1 $ 2", c), ParseError);
}

TEST_CASE("comments and whitespace") {
    auto c = ctx2();
    CHECK(parse_expr("x1 # trailing comment\n + 1", c) == x(1) + 1);
}

TEST_CASE("parse-print-parse fixed point on a corpus") {
    PrimitiveRegistry::instance().add_opaque("K");
    ExprContext c;
    c.m = 3;
    c.n = 2;
    c.order = 3;
    c.symbols = {"a", "b"};
    const std::vector<std::string> corpus = {
        "0", "1", "-7/3", "x1", "x1 + x2 + x3", "x1*x2 - x3^2", "u1[(0,0,0)]", "u2[(1,0,2)]",
        "u1[(2,0,0)] - u1[(0,2,0)] - u1[(0,0,2)]", "(x1 + 1)^4", "1/(x1^2 + 1)", "x1/(x2 + 3)",
        "sin(x1)", "cos(x1 + x2)*u1[(1,0,0)]", "exp(-x3)", "K(u1[(0,0,0)])", "K'(u2[(0,0,0)])^2",
        "a*x1 + b", "a^2 - 2*a*b + b^2", "xi1^2 - xi2^2 - xi3^2", "xi1*xi2*u1[(1,1,0)]",
        "1/x1 + 1/x2", "x1^(-3)*x2^2", "(x1 - x2)^3/(x1 + x2)", "sin(x1)/(1 + x2^2)",
        "u1[(3,0,0)]*u2[(0,0,3)] - 5", "-u1[(0,1,0)]", "3*(x1 + x2)*(x1 - x2)",
        "exp(sin(x1))*cos(x2)", "1/(1 + 1/(1 + x1^2))", "(2*x1 + 4)/(x1 + 2)",
        "u1[(1,0,0)]^3 + u1[(0,1,0)]^3", "x1*x2*x3*xi1*xi2*xi3", "K(x1)*K(x2)",
        "1/3*x1 - 1/5*x2 + 1/7*x3", "(a + x1)^2*(b - x2)", "u2[(2,1,0)]/(1 + x3^2)",
        "cos(x1)^2 + sin(x1)^2", "-(x1 - x2)", "x1^10 - 1", "(xi1 + xi2)^3", "exp(x1)*exp(-x1)",
        "u1[(0,0,1)]*sin(u2[(0,0,0)])", "2/(x1*x2)", "(x1*x2 + 1)^(-2)", "b/(a + 1)",
        "x2^2*u1[(1,1,1)] + x1*u1[(0,0,0)]", "sin(1/(x1 + 1))", "1 - 2 + 3 - 4", "((x1))",
    };
    CHECK(corpus.size() == 50);
    for (const auto& text : corpus) {
        CAPTURE(text);
        Expr e = parse_expr(text, c);
        std::string printed = e.str(c.n);
        CAPTURE(printed);
        Expr again = parse_expr(printed, c);
        CHECK(again == e);
        CHECK(again.str(c.n) == printed);
    }
}
