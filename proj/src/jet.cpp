#include "jetforge/jet.hpp"

namespace jetforge {

// ---- charts and points ---------------------------------------------------

std::size_t JetChartSpec::jet_count() const {
    return static_cast<std::size_t>(n) * dim_F(static_cast<std::size_t>(m), 0, k);
}

std::size_t JetChartSpec::coordinate_count() const { return static_cast<std::size_t>(m) + jet_count(); }

std::vector<VarRef> JetChartSpec::coordinates() const {
    std::vector<VarRef> out;
    out.reserve(coordinate_count());
    for (int i = 1; i <= m; ++i) out.push_back(VarRef::base(i));
    for (const auto& I : enumerate({static_cast<std::size_t>(m), 0, k}))
        for (int a = 1; a <= n; ++a) out.push_back(VarRef::jet_var(a, I));
    return out;
}

std::size_t JetChartSpec::jet_position(int component, const MultiIndex& I) const {
    if (component < 1 || component > n) throw std::out_of_range("jet component out of range");
    if (I.dim() != static_cast<std::size_t>(m) || I.degree() > k)
        throw std::out_of_range("jet index " + I.str() + " outside the chart");
    return static_cast<std::size_t>(m) + grlex_position(I) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(component - 1);
}

JetPoint::JetPoint(JetChartSpec chart) : chart_(chart), values_(chart.coordinate_count()) {}

JetPoint::JetPoint(JetChartSpec chart, std::vector<Scalar> values) : chart_(chart), values_(std::move(values)) {
    if (values_.size() != chart_.coordinate_count())
        throw std::invalid_argument("JetPoint: expected " + std::to_string(chart_.coordinate_count()) +
                                    " coordinates, got " + std::to_string(values_.size()));
}

const Scalar& JetPoint::base(int i) const {
    if (i < 1 || i > chart_.m) throw std::out_of_range("base index out of range");
    return values_[static_cast<std::size_t>(i - 1)];
}

void JetPoint::set_base(int i, const Scalar& v) {
    if (i < 1 || i > chart_.m) throw std::out_of_range("base index out of range");
    values_[static_cast<std::size_t>(i - 1)] = v;
}

const Scalar& JetPoint::jet(int component, const MultiIndex& I) const {
    return values_[chart_.jet_position(component, I)];
}

void JetPoint::set_jet(int component, const MultiIndex& I, const Scalar& v) {
    values_[chart_.jet_position(component, I)] = v;
}

std::vector<Scalar> JetPoint::base_point() const {
    return {values_.begin(), values_.begin() + chart_.m};
}

JetPoint JetPoint::project(int k1) const {
    if (k1 > chart_.k || k1 < 0) throw std::invalid_argument("project: order out of range");
    JetChartSpec c = chart_.with_order(k1);
    return JetPoint(c, {values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(c.coordinate_count())});
}

JetPoint JetPoint::extended(int k2) const {
    if (k2 < chart_.k) throw std::invalid_argument("extended: order must not decrease");
    JetPoint out(chart_.with_order(k2));
    std::copy(values_.begin(), values_.end(), out.values_.begin());
    return out;
}

Assignment JetPoint::assignment() const {
    Assignment a;
    auto coords = chart_.coordinates();
    for (std::size_t i = 0; i < coords.size(); ++i) a.set(coords[i], values_[i]);
    return a;
}

FloatAssignment JetPoint::float_assignment() const {
    FloatAssignment a;
    auto coords = chart_.coordinates();
    for (std::size_t i = 0; i < coords.size(); ++i) a.set(coords[i], values_[i].get_d());
    return a;
}

// ---- operators -----------------------------------------------------------

DiffOp make_op(int m, int n, int k, std::vector<Expr> components) {
    for (const auto& c : components)
        for (const auto& v : free_vars(c)) {
            if (v.kind == VarRef::Kind::Jet) {
                if (v.jet.dim() != static_cast<std::size_t>(m) || v.jet.degree() > k || v.index < 1 || v.index > n)
                    throw PreconditionError("operator uses " + v.str(n) + " outside J^" + std::to_string(k));
            } else if (v.kind == VarRef::Kind::Base && (v.index < 1 || v.index > m)) {
                throw PreconditionError("operator uses base coordinate " + v.str() + " with m = " + std::to_string(m));
            }
        }
    DiffOp h;
    h.m = m;
    h.n = n;
    h.k = k;
    h.components = std::move(components);
    for (std::size_t b = 0; b < h.components.size(); ++b)
        h.labels.emplace_back(MultiIndex(static_cast<std::size_t>(m)), static_cast<int>(b));
    return h;
}

std::vector<Scalar> evaluate_op(const DiffOp& h, const JetPoint& a) {
    Assignment asg = a.assignment();
    Evaluator ev(asg);
    std::vector<Scalar> out;
    out.reserve(h.components.size());
    for (const auto& c : h.components) out.push_back(ev(c));
    return out;
}

JetPoint jet_of_section(const SectionPoly& psi, int m, std::span<const Scalar> p, int k) {
    const int n = static_cast<int>(psi.components.size());
    JetPoint out(JetChartSpec{m, n, k});
    Assignment at;
    for (int i = 1; i <= m; ++i) {
        at.set(VarRef::base(i), p[static_cast<std::size_t>(i - 1)]);
        out.set_base(i, p[static_cast<std::size_t>(i - 1)]);
    }
    for (int a = 1; a <= n; ++a) {
        std::map<MultiIndex, Expr> d;
        for (const auto& I : enumerate({static_cast<std::size_t>(m), 0, k})) {
            Expr e;
            if (I.degree() == 0) {
                e = psi.components[static_cast<std::size_t>(a - 1)];
            } else {
                std::size_t j = 0;
                while (I[j] == 0) ++j;
                e = differentiate(d.at(*I.offset(j, -1)), VarRef::base(static_cast<int>(j) + 1));
            }
            out.set_jet(a, I, evaluate(e, at));
            d.emplace(I, std::move(e));
        }
    }
    return out;
}

Expr total_derivative(const Expr& e, int axis) {
    const std::size_t slot = static_cast<std::size_t>(axis - 1);
    return apply_derivation(e, [axis, slot](const VarRef& v) -> Expr {
        if (v.kind == VarRef::Kind::Base) return v.index == axis ? Expr(1) : Expr();
        if (v.kind == VarRef::Kind::Jet) {
            if (slot >= v.jet.dim()) throw std::out_of_range("total derivative axis exceeds base dimension");
            return Expr::var(VarRef::jet_var(v.index, *v.jet.offset(slot, +1)));
        }
        return Expr();
    });
}

Prolongator::Prolongator(DiffOp h) : h_(std::move(h)) {}

const Expr& Prolongator::derivative(const MultiIndex& I, int component) {
    ComponentLabel key{I, component};
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    Expr e;
    if (I.degree() == 0) {
        e = h_.components.at(static_cast<std::size_t>(component));
    } else {
        std::size_t j = I.dim() - 1;
        while (I[j] == 0) --j;
        const Expr& parent = derivative(*I.offset(j, -1), component);
        e = total_derivative(parent, static_cast<int>(j) + 1);
    }
    return cache_.emplace(std::move(key), std::move(e)).first->second;
}

DiffOp Prolongator::prolong(int l) {
    if (l < 0) throw std::invalid_argument("prolong: negative order");
    DiffOp out;
    out.m = h_.m;
    out.n = h_.n;
    out.k = h_.k + l;
    out.declared_linear = h_.declared_linear;
    for (const auto& I : enumerate({static_cast<std::size_t>(h_.m), 0, l}))
        for (std::size_t b = 0; b < h_.components.size(); ++b) {
            out.components.push_back(derivative(I, static_cast<int>(b)));
            out.labels.emplace_back(I, static_cast<int>(b));
        }
    return out;
}

std::vector<std::pair<ComponentLabel, Expr>> Prolongator::degree(int l) {
    std::vector<std::pair<ComponentLabel, Expr>> out;
    for (const auto& I : enumerate_degree(static_cast<std::size_t>(h_.m), l))
        for (std::size_t b = 0; b < h_.components.size(); ++b)
            out.emplace_back(ComponentLabel{I, static_cast<int>(b)}, derivative(I, static_cast<int>(b)));
    return out;
}

DiffOp prolong_op(const DiffOp& h, int l) {
    if (l == 0) return h;
    Prolongator p(h);
    return p.prolong(l);
}

std::vector<IotaEntry> iota_reindex(int m, int n, int k, int l) {
    std::vector<IotaEntry> out;
    const auto inner = enumerate({static_cast<std::size_t>(m), 0, k});
    for (const auto& J : enumerate({static_cast<std::size_t>(m), 0, l}))
        for (const auto& I : inner)
            for (int a = 1; a <= n; ++a) out.push_back({a, I, J, I + J});
    return out;
}

std::vector<Scalar> iota_point(const JetPoint& b, int k, int l) {
    const JetChartSpec& c = b.chart();
    if (c.k < k + l) throw std::invalid_argument("iota_point: point order below k + l");
    std::vector<Scalar> out = b.base_point();
    for (const auto& e : iota_reindex(c.m, c.n, k, l)) out.push_back(b.jet(e.component, e.target));
    return out;
}

// ---- linear operators ----------------------------------------------------

DiffOp classical_to_bundle(const LinearCoefficients& c) {
    std::vector<Expr> comps(static_cast<std::size_t>(c.n_out));
    for (const auto& [key, coef] : c.coeffs) {
        const auto& [a, b, I] = key;
        if (I.degree() > c.k) throw PreconditionError("coefficient index " + I.str() + " exceeds order");
        comps.at(static_cast<std::size_t>(b - 1)) += coef * Expr::var(VarRef::jet_var(a, I));
    }
    DiffOp h = make_op(c.m, c.n, c.k, std::move(comps));
    h.declared_linear = true;
    return h;
}

namespace {

bool base_only(const Expr& e) {
    for (const auto& v : free_vars(e))
        if (v.kind != VarRef::Kind::Base) return false;
    return true;
}

std::optional<LinearCoefficients> classical_coefficients(const DiffOp& h) {
    LinearCoefficients c;
    c.m = h.m;
    c.n = h.n;
    c.n_out = static_cast<int>(h.components.size());
    c.k = h.k;
    const auto indices = enumerate({static_cast<std::size_t>(h.m), 0, h.k});
    for (std::size_t b = 0; b < h.components.size(); ++b) {
        Expr rebuilt;
        for (int a = 1; a <= h.n; ++a)
            for (const auto& I : indices) {
                VarRef v = VarRef::jet_var(a, I);
                Expr d = differentiate(h.components[b], v);
                if (d.is_zero()) continue;
                if (!base_only(d)) return std::nullopt;
                rebuilt += d * Expr::var(v);
                c.coeffs.emplace(std::make_tuple(a, static_cast<int>(b) + 1, I), d);
            }
        if (!(rebuilt == h.components[b])) return std::nullopt;
    }
    return c;
}

}  // namespace

LinearCoefficients bundle_to_classical(const DiffOp& h) {
    auto c = classical_coefficients(h);
    if (!c) throw PreconditionError("operator is not linear");
    return *c;
}

bool is_linear(const DiffOp& h) { return classical_coefficients(h).has_value(); }

std::vector<std::vector<Scalar>> residual_of_section(const DiffOp& h, const SectionPoly& psi,
                                                     const std::vector<std::vector<Scalar>>& points) {
    std::vector<std::vector<Scalar>> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(evaluate_op(h, jet_of_section(psi, h.m, p, h.k)));
    return out;
}

}  // namespace jetforge
