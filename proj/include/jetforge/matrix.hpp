#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jetforge/expr.hpp"

namespace jetforge {

/// Dense row-major matrix of exact rationals.
class RationalMatrix {
public:
    RationalMatrix() = default;
    RationalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

    static RationalMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Scalar& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    const Scalar& operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    bool is_zero() const;
    RationalMatrix transpose() const;
    RationalMatrix columns(const std::vector<std::size_t>& which) const;
    RationalMatrix rows_subset(const std::vector<std::size_t>& which) const;
    std::vector<Scalar> column(std::size_t c) const;

    friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);
    friend RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b);
    friend RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b);
    std::vector<Scalar> operator*(const std::vector<Scalar>& v) const;
    bool operator==(const RationalMatrix& o) const = default;

    std::string str() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Scalar> a_;
};

RationalMatrix hstack(const RationalMatrix& a, const RationalMatrix& b);
RationalMatrix vstack(const RationalMatrix& a, const RationalMatrix& b);
RationalMatrix kron(const RationalMatrix& a, const RationalMatrix& b);

struct RowEchelon {
    RationalMatrix reduced;            // reduced row echelon form
    std::vector<std::size_t> pivots;   // pivot column of each nonzero row
};

/// Gauss-Jordan elimination; pivots are chosen left to right, first nonzero row.
RowEchelon rref(const RationalMatrix& m);
std::size_t rank(const RationalMatrix& m);

/// Columns form a basis of {v : M v = 0}; one basis vector per non-pivot
/// column, with a 1 in that column (deterministic by column order).
RationalMatrix kernel_basis(const RationalMatrix& m);

/// Solution set of A v = b: a particular solution with the free variables at
/// the given values (zero when omitted) and the list of free columns.
struct AffineSolution {
    std::vector<Scalar> particular;
    std::vector<std::size_t> free_columns;
    std::vector<std::size_t> pivot_columns;
};
/// nullopt when the system is inconsistent.
std::optional<AffineSolution> solve_affine(const RationalMatrix& a, const std::vector<Scalar>& b,
                                           const std::vector<Scalar>& free_values = {});

/// Numerical rank from singular values; a value counts when above
/// tol * largest singular value.
std::size_t float_rank(const std::vector<std::vector<double>>& rows, double tol = 1e-9);

// ---- matrices of expressions ---------------------------------------------

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Exact quotient a / b for polynomials (atoms treated as independent
/// indeterminates); nullopt when b does not divide a.
std::optional<Expr> divide_exact(const Expr& a, const Expr& b);

/// Rank over the field of rational functions in all atoms occurring, with
/// every atom regarded as an independent indeterminate. An upper bound for
/// the rank at every specialization. Laurent monomials are cleared row-wise
/// first; fraction-free (Bareiss) elimination follows.
std::size_t generic_rank(const ExprMatrix& m);

/// Determinant of a square expression matrix by cofactor expansion over
/// column subsets (O(2^n n) products; meant for n <= 8).
Expr determinant(const ExprMatrix& m);

RationalMatrix evaluate_matrix(const ExprMatrix& m, const Assignment& a);

}  // namespace jetforge
