#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "jetforge/errors.hpp"
#include "jetforge/mindex.hpp"

namespace jetforge {

using Scalar = mpq_class;

std::string to_string(const Scalar& q);
/// Parses "3", "-3/7" or a decimal such as "0.25" into an exact rational.
Scalar parse_scalar(const std::string& text);
Scalar pow(const Scalar& base, int exponent);

/// A variable of the expression language.
///   Base(i)        x_i, base coordinate, i = 1..m
///   Jet(a, I)      u^a_I, jet coordinate, a = 1..n
///   Covector(i)    xi_i, symbol covector component
///   Coord(j)       y_j, generic tower-level coordinate
///   Param(name)    named constant symbol
struct VarRef {
    enum class Kind : std::uint8_t { Base, Jet, Covector, Coord, Param };

    Kind kind = Kind::Base;
    int index = 0;
    MultiIndex jet;
    std::string name;

    static VarRef base(int i) { return {Kind::Base, i, {}, {}}; }
    static VarRef jet_var(int component, MultiIndex I) { return {Kind::Jet, component, std::move(I), {}}; }
    static VarRef covector(int i) { return {Kind::Covector, i, {}, {}}; }
    static VarRef coord(int j) { return {Kind::Coord, j, {}, {}}; }
    static VarRef param(std::string n) { return {Kind::Param, 0, {}, std::move(n)}; }

    bool is_jet() const { return kind == Kind::Jet; }

    /// Printed form; `fiber_dim` controls whether jet variables carry their
    /// component number (u2[(1,0)]) or not (u[(1,0)]).
    std::string str(int fiber_dim = 1) const;

    bool operator==(const VarRef& o) const = default;
};

std::strong_ordering operator<=>(const VarRef& a, const VarRef& b);

using AtomId = std::uint32_t;
using Monomial = std::vector<std::pair<AtomId, int>>;  // sorted by atom id, nonzero exponents

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const noexcept;
};

class Expr;

struct Term {
    Monomial mono;
    Scalar coef;
    bool operator==(const Term& o) const { return mono == o.mono && coef == o.coef; }
};

/// Canonical Laurent polynomial with rational coefficients over interned
/// atoms. Atoms are variables, opaque primitive applications f(arg), and
/// inverses 1/S of normalized multi-term sums S. Two expressions are equal
/// iff their term lists are equal.
class Expr {
public:
    Expr() = default;
    Expr(const Scalar& c);  // NOLINT: implicit constants are convenient
    Expr(long c) : Expr(Scalar(c)) {}  // NOLINT
    Expr(int c) : Expr(Scalar(c)) {}   // NOLINT

    static Expr var(const VarRef& v);
    static Expr call(const std::string& primitive, const Expr& arg);
    static Expr from_terms(std::vector<Term> terms);  // normalizes

    std::span<const Term> terms() const;
    std::size_t size() const { return terms_ ? terms_->size() : 0; }
    bool is_zero() const { return size() == 0; }
    bool is_constant() const;
    /// Constant value if the expression is a constant.
    std::optional<Scalar> constant() const;
    /// Single term with coefficient 1 and one atom of exponent 1.
    std::optional<AtomId> as_atom() const;

    Expr operator-() const;
    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    Expr& operator+=(const Expr& o) { return *this = *this + o; }
    Expr& operator-=(const Expr& o) { return *this = *this - o; }
    Expr& operator*=(const Expr& o) { return *this = *this * o; }
    Expr pow(int n) const;
    Expr scaled(const Scalar& c) const;

    bool operator==(const Expr& o) const;
    std::strong_ordering compare(const Expr& o) const;
    std::size_t hash() const;

    /// Parseable text, e.g. "2*u[(1,1)] + x1^2 - 1/3*sin(x1)".
    std::string str(int fiber_dim = 1) const;

private:
    explicit Expr(std::shared_ptr<const std::vector<Term>> t) : terms_(std::move(t)) {}
    std::shared_ptr<const std::vector<Term>> terms_;
    friend class Accumulator;
};

struct ExprHash {
    std::size_t operator()(const Expr& e) const noexcept { return e.hash(); }
};

/// Hash-map accumulation of terms; finish() produces the canonical Expr.
class Accumulator {
public:
    void add(const Monomial& m, const Scalar& c);
    void add(Monomial&& m, const Scalar& c);
    void add(const Expr& e, const Scalar& scale = 1);
    /// Adds scale * m * e.
    void add_product(const Monomial& m, const Scalar& scale, const Expr& e);
    Expr finish();

private:
    std::unordered_map<Monomial, Scalar, MonomialHash> map_;
};

Monomial mono_mul(const Monomial& a, const Monomial& b);

// ---- atoms ---------------------------------------------------------------

enum class AtomKind : std::uint8_t { Var, Call, Inverse };

struct AtomInfo {
    AtomKind kind;
    VarRef var;        // Var
    std::string fn;    // Call
    Expr arg;          // Call argument, or the sum S of an Inverse atom 1/S
};

/// Interned atom data; ids are process-stable and reused for equal atoms.
const AtomInfo& atom_info(AtomId id);
AtomId intern_var(const VarRef& v);
std::optional<AtomId> find_var(const VarRef& v);

// ---- primitives ----------------------------------------------------------

struct Primitive {
    std::string name;
    /// f'(arg); empty when no rule is known.
    std::function<Expr(const Expr&)> derivative;
    std::function<std::optional<double>(double)> eval_float;
    /// Rational value at rational arguments where one exists (sin(0) = 0).
    std::function<std::optional<Scalar>(const Scalar&)> eval_exact;
};

/// Process-wide registry. sin, cos, exp are preregistered.
class PrimitiveRegistry {
public:
    static PrimitiveRegistry& instance();
    void add(Primitive p);
    /// Opaque smooth function whose derivative is the primitive name + "'",
    /// registered recursively on demand (K, K', K'', ...).
    void add_opaque(const std::string& name);
    const Primitive* find(const std::string& name) const;
    bool contains(const std::string& name) const { return find(name) != nullptr; }

private:
    PrimitiveRegistry();
    std::map<std::string, Primitive> prims_;
};

// ---- calculus ------------------------------------------------------------

/// Applies the derivation determined by its values on variables. Composite
/// atoms use the chain rule.
Expr apply_derivation(const Expr& e, const std::function<Expr(const VarRef&)>& on_var);

Expr differentiate(const Expr& e, const VarRef& v);

using Bindings = std::map<VarRef, Expr>;
/// Simultaneous substitution of variables.
Expr substitute(const Expr& e, const Bindings& bindings);

// ---- evaluation ----------------------------------------------------------

class Assignment {
public:
    void set(const VarRef& v, const Scalar& value);
    std::optional<Scalar> get(const VarRef& v) const;
    const Scalar* find(AtomId id) const;

private:
    std::unordered_map<AtomId, Scalar> values_;
};

class FloatAssignment {
public:
    void set(const VarRef& v, double value);
    const double* find(AtomId id) const;

private:
    std::unordered_map<AtomId, double> values_;
};

/// Exact evaluator with an atom cache shared across calls at one point.
class Evaluator {
public:
    explicit Evaluator(const Assignment& a) : a_(a) {}
    Scalar operator()(const Expr& e);

private:
    Scalar atom_value(AtomId id);
    const Assignment& a_;
    std::unordered_map<AtomId, Scalar> cache_;
};

class FloatEvaluator {
public:
    explicit FloatEvaluator(const FloatAssignment& a) : a_(a) {}
    double operator()(const Expr& e);

private:
    double atom_value(AtomId id);
    const FloatAssignment& a_;
    std::unordered_map<AtomId, double> cache_;
};

Scalar evaluate(const Expr& e, const Assignment& a);
double evaluate_float(const Expr& e, const FloatAssignment& a);

// ---- structure queries ---------------------------------------------------

/// Variables occurring anywhere, including inside composite atoms.
std::vector<VarRef> free_vars(const Expr& e);
bool depends_on(const Expr& e, const VarRef& v);
bool has_primitives(const Expr& e);
/// No primitives, no inverses of sums, no negative exponents.
bool is_polynomial(const Expr& e);
/// Largest |I| over jet variables, -1 when none occur.
int max_jet_order(const Expr& e);
/// Degree in a variable appearing only as a plain atom; nullopt if the
/// variable occurs inside a composite atom or with negative exponent.
std::optional<int> polynomial_degree_in(const Expr& e, const VarRef& v);

}  // namespace jetforge
