#pragma once

#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "jetforge/expr.hpp"

namespace jetforge {

/// Fibered chart U x R^n of J^k: coordinates x1..xm followed by the jet
/// coordinates u^a_I, |I| <= k, ordered by I (graded lex) and then by a.
/// With this order J^k coordinates are a prefix of J^(k+1) coordinates.
struct JetChartSpec {
    int m = 1;
    int n = 1;
    int k = 0;

    std::size_t jet_count() const;          // n * dim F(m,0,k)
    std::size_t coordinate_count() const;   // m + jet_count()
    std::vector<VarRef> coordinates() const;
    /// Position of u^a_I among all coordinates.
    std::size_t jet_position(int component, const MultiIndex& I) const;
    JetChartSpec with_order(int order) const { return {m, n, order}; }
    bool operator==(const JetChartSpec&) const = default;
};

/// A point of J^k in the fixed chart, stored in coordinate order.
class JetPoint {
public:
    JetPoint() = default;
    explicit JetPoint(JetChartSpec chart);
    JetPoint(JetChartSpec chart, std::vector<Scalar> values);

    const JetChartSpec& chart() const { return chart_; }
    int order() const { return chart_.k; }
    std::span<const Scalar> values() const { return values_; }

    const Scalar& base(int i) const;                                  // 1-based
    void set_base(int i, const Scalar& v);
    const Scalar& jet(int component, const MultiIndex& I) const;      // 1-based component
    void set_jet(int component, const MultiIndex& I, const Scalar& v);
    std::vector<Scalar> base_point() const;

    /// Truncation to order k1 <= k.
    JetPoint project(int k1) const;
    /// Same point viewed in a higher-order chart, new coordinates zero.
    JetPoint extended(int k2) const;

    Assignment assignment() const;
    FloatAssignment float_assignment() const;

    bool operator==(const JetPoint&) const = default;

private:
    JetChartSpec chart_;
    std::vector<Scalar> values_;
};

using ComponentLabel = std::pair<MultiIndex, int>;  // (outer I, index into the base components)

/// Component expressions h_b on J^k. Prolonged operators also carry the
/// label (outer index I, original component b) of each component.
struct DiffOp {
    int m = 1;
    int n = 1;
    int k = 0;
    std::vector<Expr> components;
    bool declared_linear = false;
    std::vector<ComponentLabel> labels;

    JetChartSpec source() const { return {m, n, k}; }
    std::size_t target_dim() const { return components.size(); }
};

/// Builds a DiffOp; throws PreconditionError when a jet variable exceeds
/// the order or a base index exceeds m.
DiffOp make_op(int m, int n, int k, std::vector<Expr> components);

struct SectionPoly {
    std::vector<Expr> components;  // expressions in x1..xm
};

/// Evaluates all components of h at a point (whose order may exceed h.k).
std::vector<Scalar> evaluate_op(const DiffOp& h, const JetPoint& a);

JetPoint jet_of_section(const SectionPoly& psi, int m, std::span<const Scalar> p, int k);

/// D_i e = de/dx_i + sum over jet variables u^a_I of u^a_(I+1_i) de/du^a_I.
/// `axis` is 1-based.
Expr total_derivative(const Expr& e, int axis);

/// Iterated total derivatives D_I h_b computed incrementally and cached.
class Prolongator {
public:
    explicit Prolongator(DiffOp h);
    const DiffOp& op() const { return h_; }
    /// D_I h_b; every index is reached from the one with its last nonzero
    /// slot decremented.
    const Expr& derivative(const MultiIndex& I, int component);
    /// Components (I, b) for |I| <= l ordered by I then b.
    DiffOp prolong(int l);
    /// Components with |I| == l exactly.
    std::vector<std::pair<ComponentLabel, Expr>> degree(int l);

private:
    DiffOp h_;
    std::map<ComponentLabel, Expr> cache_;
};

DiffOp prolong_op(const DiffOp& h, int l);

/// One coordinate of J^l(pi_k): inner jet coordinate (a, I) of pi_k, outer
/// multi-index J, pulled back to u^a_(I+J) on J^(k+l).
struct IotaEntry {
    int component;
    MultiIndex inner;
    MultiIndex outer;
    MultiIndex target;
};

/// The relabeling behind J^(k+l)(pi) -> J^l(pi_k), ordered by outer J, then
/// by the inner coordinate order of J^k.
std::vector<IotaEntry> iota_reindex(int m, int n, int k, int l);
/// Point map: base coordinates followed by the iota_reindex entries.
std::vector<Scalar> iota_point(const JetPoint& b, int k, int l);

/// Coefficients of a linear operator, D^(a,b)_I keyed by (a, b, I).
struct LinearCoefficients {
    int m = 1, n = 1, n_out = 1, k = 0;
    std::map<std::tuple<int, int, MultiIndex>, Expr> coeffs;
};

DiffOp classical_to_bundle(const LinearCoefficients& c);
/// Inverse of classical_to_bundle; throws PreconditionError if h is not
/// linear.
LinearCoefficients bundle_to_classical(const DiffOp& h);
/// Homogeneous of degree one in jet variables with coefficients depending on
/// base coordinates only.
bool is_linear(const DiffOp& h);

/// h evaluated at j^k_p psi for each point p.
std::vector<std::vector<Scalar>> residual_of_section(const DiffOp& h, const SectionPoly& psi,
                                                     const std::vector<std::vector<Scalar>>& points);

}  // namespace jetforge
