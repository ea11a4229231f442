#include <doctest.h>

#include <algorithm>
#include <random>

#include "jetforge/matrix.hpp"

using namespace jetforge;

namespace {

// Independent rank oracle: fraction-free elimination over the integers
// after scaling every row by the lcm of its denominators.
std::size_t integer_rank(const RationalMatrix& m) {
    std::vector<std::vector<mpz_class>> a(m.rows(), std::vector<mpz_class>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        mpz_class l = 1;
        for (std::size_t c = 0; c < m.cols(); ++c) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(r, c).get_den_mpz_t());
        for (std::size_t c = 0; c < m.cols(); ++c) a[r][c] = m(r, c).get_num() * (l / m(r, c).get_den());
    }
    std::size_t rank = 0;
    std::vector<bool> used(m.rows(), false);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        std::size_t p = m.rows();
        for (std::size_t r = 0; r < m.rows(); ++r)
            if (!used[r] && a[r][c] != 0) {
                p = r;
                break;
            }
        if (p == m.rows()) continue;
        used[p] = true;
        ++rank;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (r == p || a[r][c] == 0) continue;
            mpz_class f = a[r][c], g = a[p][c];
            for (std::size_t j = 0; j < m.cols(); ++j) a[r][j] = a[r][j] * g - a[p][j] * f;
        }
    }
    return rank;
}

RationalMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int sparsity) {
    std::uniform_int_distribution<int> num(-4, 4), den(1, 3), keep(0, sparsity);
    RationalMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (keep(rng) == 0) {
                m(r, c) = Scalar(num(rng), den(rng));
                m(r, c).canonicalize();
            }
    return m;
}

}  // namespace

TEST_CASE("kernel of identity and zero") {
    CHECK(kernel_basis(RationalMatrix::identity(3)).cols() == 0);
    auto k = kernel_basis(RationalMatrix(2, 4));
    CHECK(k.cols() == 4);
    CHECK(k == RationalMatrix::identity(4));
}

TEST_CASE("random kernels against an independent rank oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = dim(rng), cols = dim(rng);
        RationalMatrix m = random_matrix(rng, rows, cols, trial % 3);
        RationalMatrix k = kernel_basis(m);
        CHECK((m * k).is_zero());
        CHECK(rank(m) == integer_rank(m));
        CHECK(rank(m) + k.cols() == cols);
        CHECK(rank(k) == k.cols());
    }
}

TEST_CASE("affine solve") {
    RationalMatrix a(2, 3);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 2) = 3;
    auto s = solve_affine(a, {Scalar(5), Scalar(6)});
    REQUIRE(s);
    CHECK(s->free_columns == std::vector<std::size_t>{1});
    CHECK(a * s->particular == std::vector<Scalar>{5, 6});
    CHECK(s->particular[1] == 0);
    auto t = solve_affine(a, {Scalar(5), Scalar(6)}, {Scalar(1)});
    REQUIRE(t);
    CHECK(t->particular[1] == 1);
    CHECK(a * t->particular == std::vector<Scalar>{5, 6});

    RationalMatrix b(2, 1);
    b(0, 0) = 1;
    b(1, 0) = 1;
    CHECK(!solve_affine(b, {Scalar(1), Scalar(2)}).has_value());
}

TEST_CASE("kron and stacking") {
    RationalMatrix a = RationalMatrix::identity(2);
    RationalMatrix b(1, 2);
    b(0, 0) = 1;
    b(0, 1) = 2;
    auto k = kron(a, b);
    CHECK(k.rows() == 2);
    CHECK(k.cols() == 4);
    CHECK(k(1, 3) == 2);
    CHECK(k(0, 3) == 0);
    CHECK(hstack(a, a).cols() == 4);
    CHECK(vstack(a, a).rows() == 4);
}

TEST_CASE("float rank") {
    CHECK(float_rank({{1, 2, 3}, {2, 4, 6}}) == 1);
    CHECK(float_rank({{1, 0}, {0, 1e-3}}) == 2);
    CHECK(float_rank({{0, 0}}) == 0);
}

TEST_CASE("exact polynomial division") {
    Expr x = Expr::var(VarRef::base(1)), y = Expr::var(VarRef::base(2));
    auto q = divide_exact((x + y) * (x - 2 * y + 1), x - 2 * y + 1);
    REQUIRE(q);
    CHECK(*q == x + y);
    CHECK(!divide_exact(x * x + 1, x + 1).has_value());
}

TEST_CASE("generic rank") {
    Expr x = Expr::var(VarRef::base(1)), y = Expr::var(VarRef::base(2));
    // Outer product of (1, x) and (x, y, 1): rank 1.
    ExprMatrix outer{{x, y, Expr(1)}, {x * x, x * y, x}};
    CHECK(generic_rank(outer) == 1);
    ExprMatrix zero{{Expr(), Expr()}, {Expr(), Expr()}};
    CHECK(generic_rank(zero) == 0);
    ExprMatrix full{{x, y}, {y, x}};
    CHECK(generic_rank(full) == 2);
    Expr inv = Expr(1) / (1 + x * x);
    ExprMatrix laurent{{x.pow(-1), inv}, {Expr(1), x * inv}};
    CHECK(generic_rank(laurent) == 1);
    Assignment a;
    a.set(VarRef::base(1), 3);
    a.set(VarRef::base(2), 3);
    CHECK(rank(evaluate_matrix(full, a)) == 1);
}

TEST_CASE("determinant of expression matrices") {
    Expr x1 = Expr::var(VarRef::base(1)), x2 = Expr::var(VarRef::base(2));
    CHECK(determinant({}) == Expr(1));
    CHECK(determinant({{x1, x2}, {Expr(1), x1}}) == x1 * x1 - x2);
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> d(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
        ExprMatrix m(n, std::vector<Expr>(n));
        for (auto& row : m)
            for (auto& e : row) e = Expr(d(rng)) + Expr(d(rng)) * x1 + Expr(d(rng)) * x2 * x1;
        Assignment at;
        Scalar a1(d(rng), 2), a2(d(rng), 3);
        a1.canonicalize();
        a2.canonicalize();
        at.set(VarRef::base(1), a1);
        at.set(VarRef::base(2), a2);
        RationalMatrix v = evaluate_matrix(m, at);
        // Leibniz formula over all permutations.
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        Scalar leibniz = 0;
        do {
            int inversions = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
            Scalar p = inversions % 2 ? -1 : 1;
            for (std::size_t i = 0; i < n; ++i) p *= v(i, perm[i]);
            leibniz += p;
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(evaluate(determinant(m), at) == leibniz);
    }
}
