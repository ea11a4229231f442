#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jetforge/spencer.hpp"
#include "jetforge/symbols.hpp"

namespace jetforge {

/// Pseudo-metric g_ij on the base with cached inverse and Christoffel
/// symbols. Indices are 0-based.
struct MetricSpec {
    int m = 1;
    ExprMatrix lower;    // g_ij
    ExprMatrix inverse;  // g^ij
    Expr det;
    std::vector<ExprMatrix> christoffel;  // christoffel[k][i][j] = Gamma^k_ij

    bool diagonal() const;
};

/// Throws PreconditionError for asymmetric input or a zero determinant.
MetricSpec make_metric(ExprMatrix lower);
/// diag(1, -1, ..., -1).
MetricSpec minkowski(int m);

/// The argument of the nonlinearity K, a parameter named "z".
VarRef nonlinearity_argument();

/// g^ij u_(1_ij) - g^ij Gamma^k_ij u_(1_k) + F1 u_0 + F2 K(u_0) on J^2 of the
/// trivial line bundle; K is an expression in nonlinearity_argument().
DiffOp make_klein_gordon(const MetricSpec& g, const Expr& f1, const Expr& f2, const Expr& k);

/// Random small rationals num/den with |num| <= range and 1 <= den <= range.
/// The mapping from the engine output is fixed, so a seed reproduces the
/// same values on every platform.
class RationalSource {
public:
    explicit RationalSource(std::uint64_t seed, int range = 3) : rng_(seed), range_(range) {}
    Scalar next();
    std::uint64_t raw() { return rng_(); }

private:
    std::mt19937_64 rng_;
    int range_;
};

struct LiftOptions {
    std::vector<Scalar> free_values;           // leading free columns
    // remaining free top jets (component, J); zero when empty
    std::function<Scalar(int, const MultiIndex&)> free_source;
    bool check_precondition = true;
};

struct LiftResult {
    JetPoint point;
    std::vector<std::pair<int, MultiIndex>> free_coordinates;  // (component, J) of each free top jet
    std::size_t equations = 0;
    std::size_t unknowns = 0;
};

/// Extends points of ker(h)^(l) in J^(k+l) to ker(h)^(l+1) in J^(k+l+1)
/// by solving the affine system D_I h = 0, |I| = l+1, for the new top
/// coefficients. Derivatives are cached across calls.
class Lifter {
public:
    explicit Lifter(DiffOp h);
    const DiffOp& op() const { return prolong_.op(); }

    /// Throws PreconditionError when b is not on ker(h)^(l) and
    /// ObstructionError when the top-order system is inconsistent.
    LiftResult lift(const JetPoint& b, const LiftOptions& options = {});
    /// True when every component of prolong_op(h, l) vanishes at b.
    bool on_kernel(const JetPoint& b, int l);
    /// Rows (I, b) with |I| = l+1, columns (J, a) of the top jets of order
    /// k+l+1, entries s^(a,b)_(J-I) at the point.
    RationalMatrix top_system(const JetPoint& b);

    Prolongator& prolongator() { return prolong_; }

private:
    Prolongator prolong_;
    SymbolPoly symbol_;
};

LiftResult lift_point(const DiffOp& h, const JetPoint& b, const LiftOptions& options = {});

struct SamplerConfig {
    std::size_t count = 10;
    std::uint64_t seed = 1;
    std::optional<std::vector<Scalar>> base_point;  // fixed base coordinates
    int range = 3;
    std::size_t max_attempts = 0;  // 0: 20 * count
};

struct SampleSet {
    std::vector<JetPoint> points;
    std::size_t failures = 0;
    std::string note;
};

/// Rational points of ker(h)^(l) in J^(k+l) for scalar h: a random point of
/// J^k is moved onto ker(h) by solving h for a jet coordinate in which h is
/// affine, then lifted l times with random free data.
SampleSet sample_kernel(Lifter& lifter, int l, const SamplerConfig& config);
SampleSet sample_kernel(const DiffOp& h, int l, const SamplerConfig& config);

enum class Verdict { FormallyIntegrable, ConditionFails, Inconclusive };
std::string verdict_name(Verdict v);

struct ConditionSymbol {
    bool holds = false;
    bool certified = false;
    std::string certificate;              // why the symbol never vanishes
    std::vector<std::string> witnesses;   // sample points where it vanishes
    std::size_t checked = 0;
};

struct ConditionRank {
    bool holds = false;
    RankReport profile;
    std::size_t expected = 0;  // m * n_out (surjectivity onto T* (x) R)
};

struct ConditionLift {
    bool holds = false;
    int depth = 0;                      // lifts attempted from levels 0..depth-1
    std::size_t attempts = 0;
    std::size_t failures = 0;
    std::vector<std::size_t> free_counts;  // per level, first sample
    std::vector<std::string> diagnostics;
};

struct IntegrabilityReport {
    ConditionSymbol symbol;
    ConditionRank rank;
    ConditionLift lift;
    Verdict verdict = Verdict::Inconclusive;
    std::size_t sampler_failures = 0;
    std::uint64_t seed = 0;
    std::string note;
};

struct CheckConfig {
    SamplerConfig sampler;
    int lift_depth = 2;
    RankMode mode = RankMode::Exact;
};

IntegrabilityReport check_conditions(const DiffOp& h, const CheckConfig& config = {});

/// Reasons an expression cannot vanish where it is defined: nonzero
/// constant, or a single term built from inverse atoms, negative powers and
/// exponentials.
std::optional<std::string> nowhere_zero(const Expr& e);

struct CodimReport {
    int l = 0;
    std::size_t expected = 0;  // dim F(m, 0, l) * n_out
    std::vector<std::size_t> observed;
    std::size_t sampler_failures = 0;
    bool pass = false;
};

/// Jacobian rank of prolong_op(h, l) with respect to all coordinates of
/// J^(k+l) at sampled points of ker(h)^(l).
CodimReport variety_codim(const DiffOp& h, int l, const SamplerConfig& config);

}  // namespace jetforge
