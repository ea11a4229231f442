#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jetforge/formal.hpp"

namespace jetforge {

// ---- towers ----------------------------------------------------------------

/// One level of a smooth projective system in a single chart: its
/// coordinates and the connecting map down to the previous level, given as
/// the previous level's coordinates in terms of this level's.
struct TowerLevel {
    std::vector<VarRef> coords;
    std::vector<Expr> down;  // empty at level 0
    std::string label;
};

/// Finite prefix of a projective system, extended on demand by an optional
/// generator. Connecting maps between non-adjacent levels are composed on
/// request, so identities on the diagonal and under composition hold by
/// construction.
class Tower {
public:
    using Generator = std::function<TowerLevel(int level)>;

    Tower() = default;
    explicit Tower(std::vector<TowerLevel> levels, Generator generator = {});

    /// Number of levels currently built.
    int size() const { return static_cast<int>(levels_.size()); }
    /// Builds levels up to L; throws PreconditionError without a generator.
    void extend_to(int level);
    const TowerLevel& level(int i) const;
    std::size_t dim(int i) const { return level(i).coords.size(); }

    /// Level-i coordinates as expressions in level-j coordinates, i <= j.
    std::vector<Expr> composite(int i, int j) const;
    /// Jacobian of the composite map, dim(i) x dim(j).
    ExprMatrix jacobian(int i, int j) const;
    std::vector<Scalar> project(const std::vector<Scalar>& point, int from, int to) const;
    Assignment assignment(int i, const std::vector<Scalar>& point) const;

private:
    std::vector<TowerLevel> levels_;
    Generator generator_;
};

/// Level i = J^i of the trivial bundle R^m x R^n in the fixed jet chart; the
/// base is part of level 0. Connecting maps forget the top-order jets.
/// Levels 0..top are built, further ones on demand.
Tower make_jet_tower(int m, int n, int top);
/// Constant tower with identity connecting maps.
Tower make_trivial_tower(std::size_t dim, int top);

/// Random rational point of one level.
std::vector<Scalar> random_point(const Tower& t, int level, RationalSource& src);

struct SubmersionReport {
    int level = 0;                       // the map level -> level-1
    std::size_t expected = 0;            // dim(level - 1)
    std::vector<std::size_t> observed;   // Jacobian ranks at the samples
    std::size_t failures = 0;            // samples outside the chart domain
    bool pass = false;
    std::string note;
};

/// Rank of the Jacobian of level -> level-1 at random rational points.
SubmersionReport check_submersion(const Tower& t, int level, std::size_t samples, std::uint64_t seed);

// ---- threads -----------------------------------------------------------------

/// Compatible points p_0..p_L, one per level.
struct Thread {
    std::vector<std::vector<Scalar>> points;
    int top() const { return static_cast<int>(points.size()) - 1; }
    bool operator==(const Thread&) const = default;
};

class IncompatiblePoint : public Error {
public:
    IncompatiblePoint(const std::string& what_arg, std::vector<Scalar> residual)
        : Error(what_arg), residual_(std::move(residual)) {}
    /// Projection of the new point minus the stored top point.
    const std::vector<Scalar>& residual() const { return residual_; }

private:
    std::vector<Scalar> residual_;
};

/// Appends `point` at level top()+1 when it projects onto the current top;
/// throws IncompatiblePoint otherwise.
Thread thread_check_extend(const Tower& t, Thread thread, std::vector<Scalar> point);
/// p_i = projection of the jet point to order i for i <= its order.
Thread thread_of_jet(const Tower& jets, const JetPoint& p);

/// Polynomial section with the given derivatives at the base point of the
/// data: coefficient of (x - p)^I is u^a_I / I!.
SectionPoly borel_realize(const JetPoint& data);

// ---- local functions -----------------------------------------------------

struct LocalFunction {
    int level = 0;
    Expr f;
    bool operator==(const LocalFunction&) const = default;
};

LocalFunction pullback(const Tower& t, const LocalFunction& f, int level);
Scalar evaluate_on(const Tower& t, const LocalFunction& f, const Thread& thread);

// ---- tangent threads -------------------------------------------------------

struct TangentThread {
    Thread base;
    std::vector<std::vector<Scalar>> vectors;  // v_i at p_i
};

/// Index of the first level i with J(i, i+1)(p_(i+1)) v_(i+1) != v_i, if any.
std::optional<int> tangent_mismatch(const Tower& t, const TangentThread& v);

// ---- local vector fields ---------------------------------------------------

/// A field V given levelwise: at level i it is a tangent vector field of the
/// i-th level whose components are functions on level type(i).
struct LocalVectorField {
    std::function<int(int)> type;
    std::function<std::vector<Expr>(int)> components;
};

/// Total derivative D_axis on the jet tower: type i+1, slot u^a_I carries
/// u^a_(I + 1_axis), slot x_j carries the Kronecker delta.
LocalVectorField total_derivative_field(int m, int n, int axis);
/// Constant field on every level (components at level i itself).
LocalVectorField constant_field(std::vector<Scalar> components);
LocalVectorField zero_field();

/// V f = sum_j V^j * d f / d c_j, a local function on level type(f.level).
LocalFunction vf_apply(const Tower& t, const LocalVectorField& V, const LocalFunction& f);
/// [V, W] with components V(W^j) - W(V^j), realized at the larger of the
/// two levels reached.
LocalVectorField lie_bracket(const Tower& t, const LocalVectorField& V, const LocalVectorField& W);
/// Sampled check of J(i, i+1) V_(i+1) = V_i with both sides on a common level.
bool vf_compatible(const Tower& t, const LocalVectorField& V, int level, std::size_t samples, std::uint64_t seed);

// ---- local forms -----------------------------------------------------------

/// sum over increasing index tuples A of c_A dc_A1 ^ ... ^ dc_Ak, where c are
/// the coordinates of `level` (0-based positions).
struct LocalForm {
    int level = 0;
    int degree = 0;
    std::map<std::vector<int>, Expr> coeffs;  // zero entries omitted

    static LocalForm function(const LocalFunction& f);
    /// Adds v times dc_(indices) for any order of distinct indices.
    void add(std::vector<int> indices, const Expr& v);
    Expr coeff(std::vector<int> indices) const;
    bool is_zero() const { return coeffs.empty(); }
};

/// Pullback to a higher level; coefficients and coframe both move.
LocalForm pullback(const Tower& t, const LocalForm& w, int level);
LocalForm exterior_d(const Tower& t, const LocalForm& w);
LocalForm wedge(const Tower& t, const LocalForm& a, const LocalForm& b);
LocalForm form_add(const Tower& t, const LocalForm& a, const LocalForm& b);
LocalForm form_scale(const Tower& t, const LocalFunction& f, const LocalForm& w);
/// i_V w; the result lives on level type(w.level) with coframe pulled back.
LocalForm contract(const Tower& t, const LocalVectorField& V, const LocalForm& w);
/// w(v_1, ..., v_k) at a point of level w.level with vectors in its coordinates.
Scalar evaluate_form(const Tower& t, const LocalForm& w, const std::vector<Scalar>& point,
                     const std::vector<std::vector<Scalar>>& vectors);
/// Structural zero after canonical simplification.
bool forms_equal(const Tower& t, const LocalForm& a, const LocalForm& b);

// ---- equation subtowers ------------------------------------------------------

struct LiftWitness {
    int outer_order = 0;
    std::size_t sampled = 0;
    std::size_t lifted = 0;
    std::vector<std::size_t> free_counts;
    std::vector<bool> differential_onto;  // projection of tangent spaces at each lift
    bool pass = false;
};

/// ker(h)^(r) inside J^(k+r) for r >= 0; jet orders below k are unconstrained.
class EquationSubtower {
public:
    explicit EquationSubtower(DiffOp h);
    const DiffOp& op() const { return lifter_.op(); }

    bool contains(const JetPoint& p);
    /// dim J^(k+r) - n_out dim F(m, 0, r) for the chart fibers.
    std::size_t expected_dimension(int r) const;
    CodimReport dimension_report(int r, const SamplerConfig& config) const;
    /// Lifts sampled points of level r and checks that the tangent space of
    /// level r+1 projects onto that of level r.
    LiftWitness surjectivity(int r, const SamplerConfig& config);

private:
    Lifter lifter_;
};

// ---- linear towers and tensor products -------------------------------------

/// Linear projective system: steps[i] is the matrix of V_(i+1) -> V_i.
struct LinearTower {
    std::vector<std::size_t> dims;
    std::vector<RationalMatrix> steps;

    int size() const { return static_cast<int>(dims.size()); }
    /// Composite V_j -> V_i.
    RationalMatrix composite(int i, int j) const;
    /// Throws PreconditionError if a step has the wrong shape or is not onto.
    void validate() const;
    Tower as_tower() const;
};

/// R^1 <- R^2 <- ... with coordinate projections.
LinearTower coordinate_tower(int levels);
/// Random step matrices of full row rank with the given dimensions.
LinearTower random_linear_tower(std::vector<std::size_t> dims, RationalSource& src);

/// Kernel decomposition of one linear tower: kernel_i spans ker(V_i -> V_(i-1))
/// (all of V_0 at i = 0), splitting_i is a right inverse of V_i -> V_(i-1),
/// and lifted_i : prod_j kernel_j -> V_i follows the recursion
/// lifted_0 = proj_0, lifted_(i+1) = proj_(i+1) + splitting_(i+1) lifted_i.
struct Splitting {
    std::vector<RationalMatrix> kernels;
    std::vector<RationalMatrix> splittings;  // index 0 unused
    std::vector<RationalMatrix> lifted;
    std::vector<std::size_t> offsets;        // column block of each kernel
};

Splitting split_tower(const LinearTower& v);

struct TensorTowerReport {
    LinearTower product;
    Splitting left, right;
    bool splittings_right_inverse = false;
    bool lifted_compatible = false;      // lifted_i = composite(i, k) lifted_k
    bool lifted_isomorphic = false;      // lifted_k restricted to blocks <= k invertible
    bool dimension_identity = false;     // dim V_k dim W_k = sum dim K_i dim L_j
    bool pass() const { return splittings_right_inverse && lifted_compatible && lifted_isomorphic && dimension_identity; }
};

TensorTowerReport tensor_tower(const LinearTower& v, const LinearTower& w);

// ---- equivalences ------------------------------------------------------------

/// Levelwise morphism (index, maps) between towers: maps(a) gives the
/// target's level-a coordinates in terms of the source's level index(a).
struct TowerMorphism {
    std::function<int(int)> index;
    std::function<std::vector<Expr>(int)> maps;
};

struct EquivalenceReport {
    bool pass = true;
    std::size_t checks = 0;
    std::vector<std::string> failures;  // first witness per failing diagram
};

/// Checks, for levels 0..levels, both morphism squares, both triangles
/// G_i F_psi(i) = mu_(i, phi psi i) and F_a G_phi(a) = mu'_(a, psi phi a),
/// and the triangles again along the supplied threads of `a`.
EquivalenceReport verify_equivalence(const Tower& a, const Tower& b, const TowerMorphism& f, const TowerMorphism& g,
                                     int levels, std::size_t samples, std::uint64_t seed,
                                     const std::vector<Thread>& threads = {});

}  // namespace jetforge
