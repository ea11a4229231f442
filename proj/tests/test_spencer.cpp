#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "jetforge/spencer.hpp"

using namespace jetforge;

namespace {

Expr x(int i) { return Expr::var(VarRef::base(i)); }
Expr u(MultiIndex I, int a = 1) { return Expr::var(VarRef::jet_var(a, std::move(I))); }

Scalar rnd(std::mt19937_64& rng, int lo = -4, int hi = 4) {
    std::uniform_int_distribution<int> num(lo, hi), den(1, 3);
    Scalar q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

DiffOp dalembert(int m) {
    Expr e = u(MultiIndex(static_cast<std::size_t>(m))).pow(3) + x(1) * u(MultiIndex::unit(static_cast<std::size_t>(m), 0));
    for (int i = 0; i < m; ++i) {
        MultiIndex I = MultiIndex::unit(static_cast<std::size_t>(m), static_cast<std::size_t>(i));
        I = I + I;
        e += (i == 0 ? Expr(1) : Expr(-1)) * u(I);
    }
    return make_op(m, 1, 2, {e});
}

JetPoint point_of(const DiffOp& h, std::mt19937_64& rng) {
    JetChartSpec c = h.source();
    std::vector<Scalar> vals;
    for (std::size_t i = 0; i < c.coordinate_count(); ++i) vals.push_back(rnd(rng));
    return JetPoint(c, vals);
}

// Independent description of the l-th prolongation of a scalar order-k
// system: T (degree k+l) belongs to it iff every l-th partial derivative
// of the polynomial T is annihilated by the order-k functional.
std::size_t brute_force_dim(const RationalMatrix& functional, int m, int k, int l) {
    const auto cols = enumerate_degree(static_cast<std::size_t>(m), k + l);
    const auto top = enumerate_degree(static_cast<std::size_t>(m), k);
    const auto outer = enumerate_degree(static_cast<std::size_t>(m), l);
    RationalMatrix c(outer.size(), cols.size());
    for (std::size_t r = 0; r < outer.size(); ++r)
        for (std::size_t j = 0; j < top.size(); ++j) {
            const MultiIndex J = top[j] + outer[r];
            const std::size_t col = static_cast<std::size_t>(
                std::find(cols.begin(), cols.end(), J) - cols.begin());
            Scalar falling(factorial(J), factorial(top[j]));
            c(r, col) += functional(0, j) * falling;
        }
    return cols.size() - rank(c);
}

std::size_t wave_dim(int m, int q) {
    std::size_t full = binomial(static_cast<std::size_t>(m + q - 1), static_cast<std::size_t>(q));
    if (q < 2) return full;
    return full - binomial(static_cast<std::size_t>(m + q - 3), static_cast<std::size_t>(q - 2));
}

bool in_span(const RationalMatrix& basis, const std::vector<Scalar>& v) {
    RationalMatrix col(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) col(i, 0) = v[i];
    return rank(hstack(basis, col)) == rank(basis);
}

}  // namespace

TEST_CASE("wedge basis") {
    CHECK(wedge_basis(3, 2) == std::vector<std::vector<int>>{{0, 1}, {0, 2}, {1, 2}});
    CHECK(wedge_basis(3, 0).size() == 1);
    CHECK(wedge_basis(2, 3).empty());
    for (int m = 1; m <= 5; ++m)
        for (int p = 0; p <= m; ++p) CHECK(wedge_basis(m, p).size() == binomial(static_cast<std::size_t>(m), static_cast<std::size_t>(p)));
}

TEST_CASE("delta squares to zero") {
    for (int m = 1; m <= 3; ++m)
        for (int n = 1; n <= 2; ++n)
            for (int p = 0; p + 1 <= m; ++p)
                for (int q = 2; q <= 5; ++q) {
                    RationalMatrix dd = spencer_delta(p + 1, q - 1, m, n) * spencer_delta(p, q, m, n);
                    CHECK(dd.is_zero());
                }
    RationalMatrix d = spencer_delta(0, 1, 2, 1);
    CHECK(d.rows() == 2);
    CHECK(d.cols() == 2);
    CHECK(d == RationalMatrix::identity(2));
    CHECK(spencer_delta(2, 3, 2, 1).rows() == 0);
}

TEST_CASE("full system is acyclic") {
    for (int m = 1; m <= 3; ++m) {
        SymbolicSystem full = symbolic_system_from(m, 1, 1, RationalMatrix::identity(sym_dim(m, 1, 1)));
        auto dims = cohomology_dims(full, m, 4);
        for (int p = 0; p <= m; ++p)
            for (int q = 0; q <= 4; ++q) CHECK(dims[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] == (p == 0 && q == 0 ? 1u : 0u));
    }
}

TEST_CASE("Laplace system in two variables") {
    DiffOp h = make_op(2, 1, 2, {u(MultiIndex{2, 0}) + u(MultiIndex{0, 2})});
    SymbolicSystem g = symbolic_system_at(h, JetPoint({2, 1, 2}));
    CHECK_FALSE(g.symbol_zero);
    REQUIRE(g.dim(2) == 2);
    // Coordinates (t20, t11, t02).
    CHECK(in_span(g.basis(2), {0, 1, 0}));
    CHECK(in_span(g.basis(2), {1, 0, -1}));
    prolong_system(g, 1);
    REQUIRE(g.dim(3) == 2);
    // Coordinates (t30, t21, t12, t03): 3 t30 + t12 = 0 and t21 + 3 t03 = 0.
    CHECK(in_span(g.basis(3), {1, 0, -3, 0}));
    CHECK(in_span(g.basis(3), {0, -3, 0, 1}));
    CHECK(g.dim(1) == 2);
    CHECK(g.dim(0) == 1);
}

TEST_CASE("pure derivative in one variable") {
    for (int k = 1; k <= 3; ++k) {
        DiffOp h = make_op(1, 1, k, {u(MultiIndex{k})});
        SymbolicSystem g = symbolic_system_at(h, JetPoint({1, 1, k}));
        prolong_system(g, 4);
        for (int l = 0; l <= 4; ++l) CHECK(g.dim(k + l) == 0);
    }
}

TEST_CASE("zero symbol is flagged") {
    DiffOp h = make_op(2, 1, 2, {u(MultiIndex{1, 0}) + x(1) * u(MultiIndex{0, 2})});
    SymbolicSystem g = symbolic_system_at(h, JetPoint({2, 1, 2}));
    CHECK(g.symbol_zero);
    CHECK(g.dim(2) == 3);
}

TEST_CASE("d'Alembert systems") {
    std::mt19937_64 rng(31);
    for (int m = 2; m <= 4; ++m) {
        DiffOp h = dalembert(m);
        SymbolicSystem g = symbolic_system_at(h, point_of(h, rng));
        const int lmax = m == 2 ? 4 : 2;
        prolong_system(g, lmax);
        for (int l = 0; l <= lmax; ++l) {
            CHECK(g.dim(2 + l) == wave_dim(m, 2 + l));
            CHECK(g.dim(2 + l) == brute_force_dim(g.functional, m, 2, l));
        }
        if (m == 4) CHECK(g.dim(2) == 9);
    }
}

TEST_CASE("prolongation contracts into the previous level") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        const int m = 2 + trial % 2, n = 1 + trial % 2;
        // Random order-2 system cut out by one or two random functionals.
        RationalMatrix f(static_cast<std::size_t>(n), sym_dim(m, n, 2));
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t c = 0; c < f.cols(); ++c) f(r, c) = rnd(rng);
        SymbolicSystem g = symbolic_system_from(m, n, 2, kernel_basis(f));
        prolong_system(g, 2);
        for (int q = 2; q < 4; ++q) {
            RationalMatrix up = g.basis(q + 1);
            CHECK(rank(up) == up.cols());
            for (int i = 0; i < m; ++i) {
                RationalMatrix image = contraction(m, n, q, i) * up;
                CHECK(rank(hstack(g.basis(q), image)) == g.dim(q));
            }
        }
    }
}

TEST_CASE("cohomology of the wave system in two variables") {
    std::mt19937_64 rng(41);
    DiffOp h = dalembert(2);
    SymbolicSystem g = symbolic_system_at(h, point_of(h, rng));
    auto dims = cohomology_dims(g, 2, 5);
    for (int p = 0; p <= 2; ++p)
        for (int q = 0; q <= 5; ++q) {
            std::size_t expect = (p == 0 && q == 0) || (p == 1 && q == 1) ? 1 : 0;
            CHECK(dims[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] == expect);
        }
}

TEST_CASE("zero system in one variable: hand count") {
    SymbolicSystem g = symbolic_system_from(1, 1, 2, RationalMatrix(1, 0));
    auto dims = cohomology_dims(g, 1, 4);
    // H^{0,0} = R, H^{1,1} = Lambda^1 (x) Sym^1 since nothing of degree 2 hits it.
    std::vector<std::vector<std::size_t>> expect{{1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}};
    CHECK(dims == expect);
}

TEST_CASE("cohomology does not depend on the chosen basis") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 4; ++trial) {
        const int m = 2 + trial % 2;
        DiffOp h = dalembert(m);
        SymbolicSystem g = symbolic_system_at(h, point_of(h, rng));
        RationalMatrix B = g.basis(2);
        // Random invertible recombination followed by a column permutation.
        const std::size_t d = B.cols();
        RationalMatrix T = RationalMatrix::identity(d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = r + 1; c < d; ++c) T(r, c) = rnd(rng);
        std::vector<std::size_t> perm(d);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        SymbolicSystem other = symbolic_system_from(m, 1, 2, (B * T).columns(perm));
        CHECK(cohomology_dims(g, m, 3) == cohomology_dims(other, m, 3));
    }
}

TEST_CASE("rank plus nullity") {
    std::mt19937_64 rng(9);
    for (int m = 1; m <= 3; ++m)
        for (int p = 0; p <= m; ++p)
            for (int q = 1; q <= 3; ++q) {
                RationalMatrix d = spencer_delta(p, q, m, 1);
                CHECK(rank(d) + kernel_basis(d).cols() == d.cols());
            }
}
