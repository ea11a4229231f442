#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jetforge/jet.hpp"
#include "jetforge/matrix.hpp"

namespace jetforge {

/// Top-order part of an operator: s^(a,b)_I = dh_b/du^a_I for |I| = k.
/// Components a (fiber) and b (target) are 1-based.
struct SymbolPoly {
    int m = 1, n = 1, n_out = 1, k = 0;
    std::map<std::tuple<int, int, MultiIndex>, Expr> coeffs;  // zero entries omitted

    const Expr& coeff(int a, int b, const MultiIndex& I) const;
    bool is_zero() const { return coeffs.empty(); }
    /// S^(a,b)(xi) = sum_I s^(a,b)_I xi^I as an expression in xi1..xim.
    Expr in_covectors(int a, int b) const;
    /// S^(a,b)(xi; point) for a rational covector.
    Scalar evaluate(int a, int b, const Assignment& at, std::span<const Scalar> xi) const;
    /// Matrix of the functional sigma|_a on Sym^k (x) R^n: rows b, columns
    /// (a, I) with I graded lex, entries s_I(a) / multinomial(I).
    RationalMatrix functional(const Assignment& at) const;
};

SymbolPoly symbol_of(const DiffOp& h);
SymbolPoly symbol_linear(const LinearCoefficients& c);
bool same_coefficients(const SymbolPoly& a, const SymbolPoly& b);

struct DiagramReport {
    bool pass = true;
    std::size_t checked = 0;
    std::string witness;  // first failing (a, xi) with both values
};

/// Compares the coefficient picture of a linear operator with the bundle
/// picture: d/dt h(a + t v)|_0 along the pure top-order vertical vector v
/// representing xi^k (x) e_a.
DiagramReport check_linear_symbol_diagram(const LinearCoefficients& lin, const DiffOp& h,
                                          const std::vector<JetPoint>& points,
                                          const std::vector<std::vector<Scalar>>& covectors);

/// (id (x) sigma) o delta as a matrix of expressions on J^k: rows (i, b) with
/// i outer; columns (a, J) with a outer, |J| = k+1 graded lex. Entry
/// (J_i/(k+1)) s^(a,b)_(J-1_i) / multinomial(J-1_i).
ExprMatrix symbol_prolong1(const DiffOp& h);
/// Decomposable embedding of v^(k+1) (x) e_a into the column space above.
std::vector<Scalar> decomposable_power(int m, int n, int degree, int component, std::span<const Scalar> v);

bool characteristic_test(const DiffOp& h, const JetPoint& a, std::span<const Scalar> xi);

enum class RankMode { Exact, Float };

struct RankReport {
    RankMode mode = RankMode::Exact;
    std::optional<std::size_t> generic_rank;
    std::vector<std::size_t> sampled;
    std::size_t min_rank = 0, max_rank = 0;
    bool certified = false;
    std::size_t sampler_failures = 0;
    std::string note;
};

/// Rank statistics of an expression matrix over sample points. Exact mode
/// (primitive-free entries) adds the generic rank and certifies constancy
/// when it agrees with every sampled rank.
RankReport rank_profile(const ExprMatrix& m, const std::vector<JetPoint>& samples, RankMode requested,
                        std::size_t sampler_failures = 0, double tol = 1e-9);

}  // namespace jetforge
