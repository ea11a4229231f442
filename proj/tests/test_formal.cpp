#include <doctest.h>

#include <random>

#include "jetforge/formal.hpp"

using namespace jetforge;

namespace {

Expr x(int i) { return Expr::var(VarRef::base(i)); }
Expr z() { return Expr::var(nonlinearity_argument()); }

Scalar rnd(std::mt19937_64& rng, int lo = -4, int hi = 4) {
    std::uniform_int_distribution<int> num(lo, hi), den(1, 3);
    Scalar q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

Expr random_poly(std::mt19937_64& rng, int m, int deg) {
    Expr p;
    for (const auto& I : enumerate({static_cast<std::size_t>(m), 0, deg})) {
        Expr mono = rnd(rng);
        for (int i = 0; i < m; ++i) mono *= x(i + 1).pow(I[static_cast<std::size_t>(i)]);
        p += mono;
    }
    return p;
}

ExprMatrix diag(std::vector<Expr> d) {
    ExprMatrix g(d.size(), std::vector<Expr>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) g[i][i] = d[i];
    return g;
}

DiffOp curved_phi4(Expr f1) {
    MetricSpec g = make_metric(diag({1 + x(2).pow(2) / 4, -(1 + x(1) * x(2) / 2)}));
    return make_klein_gordon(g, std::move(f1), 1, z().pow(3));
}

}  // namespace

TEST_CASE("series arithmetic") {
    std::vector<Scalar> o{0};
    TruncSeries a = TruncSeries::of_polynomial(1 + x(1), 2, o), b = TruncSeries::of_polynomial(1 - x(1), 2, o);
    CHECK(series_mul(a, b) == TruncSeries::of_polynomial(1 - x(1).pow(2), 2, o));
    CHECK(series_mul(a, TruncSeries::constant(1, 2, o, 1)) == a);
    CHECK_THROWS_AS(series_mul(a, TruncSeries(1, 2, {Scalar(1)})), PreconditionError);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + trial % 3, n = 2 + trial % 3;
        std::vector<Scalar> base;
        for (int i = 0; i < m; ++i) base.push_back(rnd(rng));
        Expr p = random_poly(rng, m, 3), q = random_poly(rng, m, 3);
        CHECK(series_mul(TruncSeries::of_polynomial(p, n, base), TruncSeries::of_polynomial(q, n, base)) ==
              TruncSeries::of_polynomial(p * q, n, base));
        CHECK(TruncSeries::of_polynomial(TruncSeries::of_polynomial(p, 3, base).polynomial(), 3, base) ==
              TruncSeries::of_polynomial(p, 3, base));
    }
}

TEST_CASE("scalar composition") {
    std::vector<Scalar> base{Scalar(1, 2), Scalar(-1)};
    TruncSeries c = TruncSeries::constant(2, 3, base, Scalar(-2, 3));
    CHECK(series_compose_scalar(z().pow(3), c) == TruncSeries::constant(2, 3, base, Scalar(-8, 27)));
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        Expr p = random_poly(rng, 2, 3);
        TruncSeries s = TruncSeries::of_polynomial(p, 3, base);
        CHECK(series_compose_scalar(z(), s) == s);
        CHECK(series_compose_scalar(z().pow(3), s) == series_mul(s, series_mul(s, s)));
        CHECK(series_compose_scalar(z().pow(2) + 1, s) == TruncSeries::of_polynomial(p * p + 1, 3, base));
    }
    CHECK_THROWS_AS(series_compose_scalar(Expr::call("sin", z()), c), PreconditionError);
    CHECK_THROWS_AS(series_compose_scalar(x(1) * z(), c), PreconditionError);
}

TEST_CASE("serialization order") {
    TruncSeries s = TruncSeries::of_polynomial(3 * x(1) - x(2).pow(2) / 2, 2, {Scalar(0), Scalar(0)});
    auto t = s.triples();
    REQUIRE(t.size() == 6);
    CHECK(std::get<0>(t[1]) == MultiIndex{1, 0});
    CHECK(std::get<1>(t[1]) == 3);
    CHECK(std::get<0>(t[5]) == MultiIndex{0, 2});
    CHECK(std::get<1>(t[5]) == -1);
    CHECK(std::get<2>(t[5]) == 2);
}

TEST_CASE("jets and series correspond") {
    std::mt19937_64 rng(8);
    Expr p = random_poly(rng, 2, 4);
    std::vector<Scalar> base{Scalar(1, 3), Scalar(2)};
    JetPoint j = jet_of_section(SectionPoly{{p}}, 2, base, 4);
    TruncSeries s = series_of_jet(j, 1);
    CHECK(jet_of_series({s}, 4) == j);
    CHECK(jet_of_section(SectionPoly{{s.polynomial()}}, 2, base, 4) == j);
}

TEST_CASE("formal solution of the wave equation reproduces a polynomial") {
    DiffOp h = make_klein_gordon(minkowski(2), 0, 0, 0);
    Expr psi = (x(1) + x(2)).pow(3) + x(1) * x(2);
    std::vector<Scalar> p0{Scalar(0), Scalar(0)};
    JetPoint full = jet_of_section(SectionPoly{{psi}}, 2, p0, 5);
    FreeDataPolicy policy;
    policy.kind = FreeDataPolicy::Kind::Explicit;
    for (int q = 3; q <= 5; ++q)
        for (const auto& J : enumerate_degree(2, q)) policy.table[{1, J}] = full.jet(1, J);
    FormalSolution sol = formal_solve(h, full.project(2), 5, policy);
    CHECK(sol.components[0] == TruncSeries::of_polynomial(psi, 5, p0));
    CHECK(sol.free_counts == std::vector<std::size_t>{2, 2, 2});
    CHECK(verify_residual(sol, 3).exact_zero);
}

TEST_CASE("zero is a formal solution") {
    DiffOp h = make_klein_gordon(minkowski(4), 1, 1, z().pow(3));
    JetPoint seed({4, 1, 2});
    FormalSolution sol = formal_solve(h, seed, 4);
    CHECK(sol.components[0] == TruncSeries(4, 4, std::vector<Scalar>(4)));
    CHECK(verify_residual(sol, 2).exact_zero);
}

TEST_CASE("curved phi^4 formal solution") {
    DiffOp h = curved_phi4(1 + x(1) - x(2).pow(2));
    SamplerConfig cfg{1, 12};
    cfg.base_point = std::vector<Scalar>{Scalar(1, 2), Scalar(-1)};
    SampleSet seeds = sample_kernel(h, 0, cfg);
    REQUIRE(seeds.points.size() == 1);
    FreeDataPolicy policy;
    policy.kind = FreeDataPolicy::Kind::Random;
    policy.seed = 99;
    FormalSolution sol = formal_solve(h, seeds.points[0], 6, policy);

    for (int r = 0; r <= 4; ++r) CHECK(verify_residual(sol, r).exact_zero);
    // Thread compatibility along the chain.
    for (std::size_t i = 0; i < sol.chain.size(); ++i)
        for (std::size_t j = i; j < sol.chain.size(); ++j) CHECK(sol.chain[j].project(sol.chain[i].order()) == sol.chain[i]);
    // Free parameters per order versus the prolonged symbolic system.
    SymbolicSystem g = symbolic_system_at(h, seeds.points[0]);
    prolong_system(g, 4);
    REQUIRE(sol.free_counts.size() == 4);
    for (int l = 0; l < 4; ++l) CHECK(sol.free_counts[static_cast<std::size_t>(l)] == g.dim(3 + l));

    SUBCASE("negative control") {
        FormalSolution bad = sol;
        MultiIndex top{0, 6};
        bad.components[0].set(top, bad.components[0].coeff(top) + 1);
        CHECK(verify_residual(bad, 3).exact_zero);
        auto rep = verify_residual(bad, 4);
        CHECK_FALSE(rep.exact_zero);
        CHECK(rep.max_abs > 0);
    }
    SUBCASE("residual by substituting the Taylor polynomial") {
        // Compose h with the truncated polynomial and Taylor-expand at p0.
        Expr poly = sol.components[0].polynomial();
        Bindings subst;
        for (const auto& I : enumerate({2, 0, 2})) {
            Expr d = poly;
            for (std::size_t i = 0; i < 2; ++i)
                for (int t = 0; t < I[i]; ++t) d = differentiate(d, VarRef::base(static_cast<int>(i) + 1));
            subst[VarRef::jet_var(1, I)] = d;
        }
        Expr composed = substitute(h.components[0], subst);
        Assignment at;
        at.set(VarRef::base(1), sol.base[0]);
        at.set(VarRef::base(2), sol.base[1]);
        for (const auto& I : enumerate({2, 0, 4})) {
            Expr d = composed;
            for (std::size_t i = 0; i < 2; ++i)
                for (int t = 0; t < I[i]; ++t) d = differentiate(d, VarRef::base(static_cast<int>(i) + 1));
            CHECK(evaluate(d, at) == 0);
        }
        auto res = residual_of_section(h, SectionPoly{{poly}}, {sol.base});
        CHECK(res[0][0] == 0);
    }
}

TEST_CASE("formal solve errors") {
    DiffOp h = make_klein_gordon(minkowski(2), 0, 0, 0);
    JetPoint off({2, 1, 2});
    off.set_jet(1, MultiIndex{2, 0}, 1);
    CHECK_THROWS_AS(formal_solve(h, off, 4), PreconditionError);
    DiffOp deg = make_op(2, 1, 2, {x(1) * Expr::var(VarRef::jet_var(1, MultiIndex{2, 0})) +
                                   Expr::var(VarRef::jet_var(1, MultiIndex{0, 0}))});
    JetPoint b({2, 1, 2});
    b.set_jet(1, MultiIndex{2, 0}, 1);
    try {
        formal_solve(deg, b, 4);
        FAIL("expected an obstruction");
    } catch (const ObstructionError& e) {
        CHECK(e.order() == 3);
    }
}
