#pragma once

#include <map>
#include <tuple>
#include <vector>

#include "jetforge/integrability.hpp"

namespace jetforge {

/// Taylor polynomial sum_{|I| <= N} c_I (x - p)^I in m variables around p.
class TruncSeries {
public:
    TruncSeries() = default;
    TruncSeries(int m, int order, std::vector<Scalar> base);  // zero series
    static TruncSeries constant(int m, int order, std::vector<Scalar> base, const Scalar& c);
    /// Taylor data of a polynomial in x1..xm around base.
    static TruncSeries of_polynomial(const Expr& p, int order, std::vector<Scalar> base);

    int vars() const { return m_; }
    int order() const { return order_; }
    const std::vector<Scalar>& base() const { return base_; }
    const Scalar& coeff(const MultiIndex& I) const;
    void set(const MultiIndex& I, const Scalar& v);
    const std::map<MultiIndex, Scalar>& coeffs() const { return c_; }

    TruncSeries truncated(int order) const;
    /// The Taylor polynomial as an expression in x1..xm.
    Expr polynomial() const;
    /// (I, numerator, denominator) in graded-lex order.
    std::vector<std::tuple<MultiIndex, mpz_class, mpz_class>> triples() const;

    bool operator==(const TruncSeries&) const = default;

private:
    int m_ = 1, order_ = 0;
    std::vector<Scalar> base_;
    std::map<MultiIndex, Scalar> c_;  // every |I| <= order present
};

TruncSeries series_add(const TruncSeries& a, const TruncSeries& b);
/// Cauchy product truncated at min of the two orders; the base points must agree.
TruncSeries series_mul(const TruncSeries& a, const TruncSeries& b);
/// K(s) for K a polynomial in nonlinearity_argument(); throws
/// PreconditionError otherwise.
TruncSeries series_compose_scalar(const Expr& k, const TruncSeries& s);

/// c_I = u^a_I / I! read off a jet point.
TruncSeries series_of_jet(const JetPoint& p, int component);
/// The jet of order k at the base point: u^a_I = I! c_I.
JetPoint jet_of_series(const std::vector<TruncSeries>& components, int k);

struct FreeDataPolicy {
    enum class Kind { Zero, Explicit, Random };
    Kind kind = Kind::Zero;
    std::map<std::pair<int, MultiIndex>, Scalar> table;  // Explicit: (component, J) -> u_J
    std::uint64_t seed = 1;                               // Random
    int range = 3;
};

struct FormalSolution {
    DiffOp op;
    std::vector<Scalar> base;
    std::vector<TruncSeries> components;
    int order = 0;
    std::vector<JetPoint> chain;            // seed, then one point per lift
    std::vector<std::size_t> free_counts;   // free parameters consumed per lift
};

/// Lifts a point of ker(h)^(l0) order by order up to total order N.
/// Throws PreconditionError for a seed off the kernel and ObstructionError
/// (carrying the failing order) when a lift is inconsistent.
FormalSolution formal_solve(const DiffOp& h, const JetPoint& seed, int order, const FreeDataPolicy& policy = {});

struct ResidualReport {
    int outer_order = 0;
    bool exact_zero = true;
    double max_abs = 0;
    std::vector<std::pair<ComponentLabel, Scalar>> nonzero;
};

/// All components of prolong_op(h, r) evaluated on the series jets at the
/// base point (needs r <= N - k).
ResidualReport verify_residual(const FormalSolution& sol, int r);

}  // namespace jetforge
