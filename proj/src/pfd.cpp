#include "jetforge/pfd.hpp"

#include <algorithm>
#include <future>
#include <numeric>

namespace jetforge {

namespace {

std::vector<Expr> vars_of(const std::vector<VarRef>& coords) {
    std::vector<Expr> out;
    out.reserve(coords.size());
    for (const auto& v : coords) out.push_back(Expr::var(v));
    return out;
}

Bindings bindings_for(const std::vector<VarRef>& coords, const std::vector<Expr>& values) {
    if (coords.size() != values.size()) throw PreconditionError("tower: map has the wrong number of components");
    Bindings b;
    for (std::size_t i = 0; i < coords.size(); ++i) b[coords[i]] = values[i];
    return b;
}

std::vector<Expr> substitute_all(const std::vector<Expr>& exprs, const Bindings& b) {
    std::vector<Expr> out;
    out.reserve(exprs.size());
    for (const auto& e : exprs) out.push_back(substitute(e, b));
    return out;
}

std::vector<Scalar> evaluate_all(const std::vector<Expr>& exprs, const Assignment& a) {
    Evaluator ev(a);
    std::vector<Scalar> out;
    out.reserve(exprs.size());
    for (const auto& e : exprs) out.push_back(ev(e));
    return out;
}

std::string point_str(const std::vector<Scalar>& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + to_string(p[i]);
    return s + ")";
}

// Sign of the permutation sorting `v`; 0 when an index repeats.
int sort_with_sign(std::vector<int>& v) {
    int sign = 1;
    for (std::size_t i = 1; i < v.size(); ++i)
        for (std::size_t j = i; j > 0 && v[j - 1] >= v[j]; --j) {
            if (v[j - 1] == v[j]) return 0;
            std::swap(v[j - 1], v[j]);
            sign = -sign;
        }
    return sign;
}

LocalForm wedge_same_level(const LocalForm& a, const LocalForm& b) {
    LocalForm out;
    out.level = a.level;
    out.degree = a.degree + b.degree;
    for (const auto& [A, ca] : a.coeffs)
        for (const auto& [B, cb] : b.coeffs) {
            std::vector<int> idx = A;
            idx.insert(idx.end(), B.begin(), B.end());
            out.add(std::move(idx), ca * cb);
        }
    return out;
}

// Coframe dc_a of level `from` as one-forms on level `to`, via the Jacobian.
std::vector<LocalForm> coframe_pullback(const Tower& t, int from, int to) {
    ExprMatrix jac = t.jacobian(from, to);
    std::vector<LocalForm> out;
    for (const auto& row : jac) {
        LocalForm w;
        w.level = to;
        w.degree = 1;
        for (std::size_t b = 0; b < row.size(); ++b) w.add({static_cast<int>(b)}, row[b]);
        out.push_back(std::move(w));
    }
    return out;
}

// sum_A c_A dc_A with c_A already on level `to` and dc_A on level `from`.
LocalForm move_coframe(const Tower& t, const std::map<std::vector<int>, Expr>& coeffs, int degree, int from, int to) {
    LocalForm out;
    out.level = to;
    out.degree = degree;
    if (from == to) {
        out.coeffs = coeffs;
        return out;
    }
    const auto frame = coframe_pullback(t, from, to);
    for (const auto& [A, c] : coeffs) {
        LocalForm term = LocalForm::function({to, c});
        for (int a : A) term = wedge_same_level(term, frame[static_cast<std::size_t>(a)]);
        for (const auto& [B, v] : term.coeffs) out.add(B, v);
    }
    return out;
}

Scalar rational_det(RationalMatrix a) {
    const std::size_t n = a.rows();
    Scalar det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a(p, c) == 0) ++p;
        if (p == n) return 0;
        if (p != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
            det = -det;
        }
        det *= a(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            if (a(r, c) == 0) continue;
            const Scalar f = a(r, c) / a(c, c);
            for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
        }
    }
    return det;
}

}  // namespace

// ---- towers ----------------------------------------------------------------

Tower::Tower(std::vector<TowerLevel> levels, Generator generator)
    : levels_(std::move(levels)), generator_(std::move(generator)) {
    for (std::size_t i = 1; i < levels_.size(); ++i)
        if (levels_[i].down.size() != levels_[i - 1].coords.size())
            throw PreconditionError("tower: connecting map into level " + std::to_string(i - 1) + " has wrong arity");
}

void Tower::extend_to(int level) {
    while (size() <= level) {
        if (!generator_) throw PreconditionError("tower: level " + std::to_string(level) + " requested but no generator");
        TowerLevel next = generator_(size());
        if (size() > 0 && next.down.size() != levels_.back().coords.size())
            throw PreconditionError("tower: generated connecting map has wrong arity");
        levels_.push_back(std::move(next));
    }
}

const TowerLevel& Tower::level(int i) const {
    if (i < 0 || i >= size())
        throw PreconditionError("tower: level " + std::to_string(i) + " not built (have " + std::to_string(size()) + ")");
    return levels_[static_cast<std::size_t>(i)];
}

std::vector<Expr> Tower::composite(int i, int j) const {
    if (i > j) throw PreconditionError("tower: composite needs i <= j");
    std::vector<Expr> out = vars_of(level(i).coords);
    for (int s = i + 1; s <= j; ++s) out = substitute_all(out, bindings_for(level(s - 1).coords, level(s).down));
    return out;
}

ExprMatrix Tower::jacobian(int i, int j) const {
    const auto map = composite(i, j);
    const auto& cols = level(j).coords;
    ExprMatrix jac(map.size(), std::vector<Expr>(cols.size()));
    for (std::size_t r = 0; r < map.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) jac[r][c] = differentiate(map[r], cols[c]);
    return jac;
}

Assignment Tower::assignment(int i, const std::vector<Scalar>& point) const {
    const auto& coords = level(i).coords;
    if (point.size() != coords.size()) throw PreconditionError("tower: point has wrong dimension for level " + std::to_string(i));
    Assignment a;
    for (std::size_t c = 0; c < coords.size(); ++c) a.set(coords[c], point[c]);
    return a;
}

std::vector<Scalar> Tower::project(const std::vector<Scalar>& point, int from, int to) const {
    return evaluate_all(composite(to, from), assignment(from, point));
}

Tower make_jet_tower(int m, int n, int levels) {
    if (m < 1 || n < 1) throw PreconditionError("make_jet_tower: m and n must be positive");
    auto gen = [m, n](int i) {
        TowerLevel lvl;
        lvl.coords = JetChartSpec{m, n, i}.coordinates();
        if (i > 0) lvl.down = vars_of(JetChartSpec{m, n, i - 1}.coordinates());
        lvl.label = "J^" + std::to_string(i);
        return lvl;
    };
    Tower t({}, gen);
    t.extend_to(levels);
    return t;
}

Tower make_trivial_tower(std::size_t dim, int levels) {
    std::vector<VarRef> coords;
    for (std::size_t j = 1; j <= dim; ++j) coords.push_back(VarRef::coord(static_cast<int>(j)));
    auto gen = [coords](int i) {
        TowerLevel lvl{coords, i > 0 ? vars_of(coords) : std::vector<Expr>{}, "M"};
        return lvl;
    };
    Tower t({}, gen);
    t.extend_to(levels);
    return t;
}

std::vector<Scalar> random_point(const Tower& t, int level, RationalSource& src) {
    std::vector<Scalar> p(t.dim(level));
    for (auto& v : p) v = src.next();
    return p;
}

SubmersionReport check_submersion(const Tower& t, int level, std::size_t samples, std::uint64_t seed) {
    if (level < 1) throw PreconditionError("check_submersion: level must be at least 1");
    SubmersionReport rep;
    rep.level = level;
    rep.expected = t.dim(level - 1);
    ExprMatrix jac = t.jacobian(level - 1, level);
    RationalSource src(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        auto p = random_point(t, level, src);
        try {
            rep.observed.push_back(rank(evaluate_matrix(jac, t.assignment(level, p))));
        } catch (const DivisionByZero&) {
            ++rep.failures;
        }
    }
    rep.pass = !rep.observed.empty() &&
               std::all_of(rep.observed.begin(), rep.observed.end(), [&](std::size_t r) { return r == rep.expected; });
    rep.note = "sampled at " + std::to_string(rep.observed.size()) + " points, seed " + std::to_string(seed);
    return rep;
}

// ---- threads -----------------------------------------------------------------

Thread thread_check_extend(const Tower& t, Thread thread, std::vector<Scalar> point) {
    const int next = thread.top() + 1;
    if (point.size() != t.dim(next)) throw PreconditionError("thread: point has wrong dimension for level " + std::to_string(next));
    if (next > 0) {
        auto down = t.project(point, next, next - 1);
        const auto& prev = thread.points.back();
        std::vector<Scalar> residual(down.size());
        bool ok = true;
        for (std::size_t i = 0; i < down.size(); ++i) {
            residual[i] = down[i] - prev[i];
            if (residual[i] != 0) ok = false;
        }
        if (!ok) {
            std::string msg = "thread: point does not project onto level " + std::to_string(next - 1) + ", residual " +
                              point_str(residual);
            throw IncompatiblePoint(msg, std::move(residual));
        }
    }
    thread.points.push_back(std::move(point));
    return thread;
}

Thread thread_of_jet(const Tower& jets, const JetPoint& p) {
    Thread th;
    for (int i = 0; i <= p.order() && i < jets.size(); ++i) {
        const JetPoint q = p.project(i);
        th = thread_check_extend(jets, std::move(th), std::vector<Scalar>(q.values().begin(), q.values().end()));
    }
    return th;
}

SectionPoly borel_realize(const JetPoint& data) {
    SectionPoly psi;
    for (int a = 1; a <= data.chart().n; ++a) psi.components.push_back(series_of_jet(data, a).polynomial());
    return psi;
}

// ---- local functions -----------------------------------------------------

LocalFunction pullback(const Tower& t, const LocalFunction& f, int level) {
    if (level < f.level) throw PreconditionError("pullback: target level below the function's level");
    if (level == f.level) return f;
    return {level, substitute(f.f, bindings_for(t.level(f.level).coords, t.composite(f.level, level)))};
}

Scalar evaluate_on(const Tower& t, const LocalFunction& f, const Thread& thread) {
    if (f.level > thread.top()) throw PreconditionError("evaluate_on: thread too short");
    return evaluate(f.f, t.assignment(f.level, thread.points[static_cast<std::size_t>(f.level)]));
}

// ---- tangent threads -------------------------------------------------------

std::optional<int> tangent_mismatch(const Tower& t, const TangentThread& v) {
    if (v.vectors.size() != v.base.points.size()) throw PreconditionError("tangent thread: one vector per point required");
    for (int i = 0; i + 1 < static_cast<int>(v.vectors.size()); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        RationalMatrix jac = evaluate_matrix(t.jacobian(i, i + 1), t.assignment(i + 1, v.base.points[idx + 1]));
        if (jac * v.vectors[idx + 1] != v.vectors[idx]) return i;
    }
    return std::nullopt;
}

// ---- local vector fields ---------------------------------------------------

LocalVectorField total_derivative_field(int m, int n, int axis) {
    if (axis < 1 || axis > m) throw PreconditionError("total_derivative_field: axis out of range");
    LocalVectorField v;
    v.type = [](int i) { return i + 1; };
    v.components = [m, n, axis](int i) {
        std::vector<Expr> out;
        for (const auto& c : JetChartSpec{m, n, i}.coordinates()) {
            if (c.kind == VarRef::Kind::Base)
                out.emplace_back(c.index == axis ? 1 : 0);
            else
                out.push_back(Expr::var(VarRef::jet_var(c.index, c.jet + MultiIndex::unit(static_cast<std::size_t>(m),
                                                                                           static_cast<std::size_t>(axis - 1)))));
        }
        return out;
    };
    return v;
}

LocalVectorField constant_field(std::vector<Scalar> components) {
    LocalVectorField v;
    v.type = [](int i) { return i; };
    v.components = [c = std::move(components)](int) { return std::vector<Expr>(c.begin(), c.end()); };
    return v;
}

LocalVectorField zero_field() {
    LocalVectorField v;
    v.type = [](int i) { return i; };
    v.components = [](int) { return std::vector<Expr>{}; };
    return v;
}

LocalFunction vf_apply(const Tower& t, const LocalVectorField& V, const LocalFunction& f) {
    if (!V.type || !V.components) throw PreconditionError("vf_apply: field has no component maps");
    const int target = V.type(f.level);
    auto comps = V.components(f.level);
    const auto& coords = t.level(f.level).coords;
    if (comps.empty()) comps.assign(coords.size(), Expr());
    if (comps.size() != coords.size())
        throw PreconditionError("vf_apply: field has " + std::to_string(comps.size()) + " components on a level of dimension " +
                                std::to_string(coords.size()));
    const Bindings up = bindings_for(coords, t.composite(f.level, target));
    Expr out;
    for (std::size_t j = 0; j < coords.size(); ++j) {
        if (comps[j].is_zero()) continue;
        Expr d = differentiate(f.f, coords[j]);
        if (!d.is_zero()) out += comps[j] * substitute(d, up);
    }
    return {target, out};
}

LocalVectorField lie_bracket(const Tower& t, const LocalVectorField& V, const LocalVectorField& W) {
    LocalVectorField out;
    out.type = [V, W](int i) { return std::max(V.type(W.type(i)), W.type(V.type(i))); };
    out.components = [t, V, W, type = out.type](int i) {
        const int top = type(i);
        auto wc = W.components(i), vc = V.components(i);
        const std::size_t n = t.dim(i);
        if (wc.empty()) wc.assign(n, Expr());
        if (vc.empty()) vc.assign(n, Expr());
        std::vector<Expr> res;
        for (std::size_t j = 0; j < n; ++j) {
            LocalFunction a = vf_apply(t, V, {W.type(i), wc[j]});
            LocalFunction b = vf_apply(t, W, {V.type(i), vc[j]});
            res.push_back(pullback(t, a, top).f - pullback(t, b, top).f);
        }
        return res;
    };
    return out;
}

bool vf_compatible(const Tower& t, const LocalVectorField& V, int level, std::size_t samples, std::uint64_t seed) {
    const int lo = V.type(level), hi = V.type(level + 1);
    const int top = std::max({lo, hi, level + 1});
    auto below = V.components(level), above = V.components(level + 1);
    if (below.empty()) below.assign(t.dim(level), Expr());
    if (above.empty()) above.assign(t.dim(level + 1), Expr());
    ExprMatrix jac = t.jacobian(level, level + 1);
    std::vector<Expr> lhs(jac.size()), rhs(jac.size());
    for (std::size_t a = 0; a < jac.size(); ++a) {
        Expr s;
        for (std::size_t b = 0; b < above.size(); ++b)
            s += pullback(t, {level + 1, jac[a][b]}, top).f * pullback(t, {hi, above[b]}, top).f;
        lhs[a] = s;
        rhs[a] = pullback(t, {lo, below[a]}, top).f;
    }
    RationalSource src(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        Assignment at = t.assignment(top, random_point(t, top, src));
        if (evaluate_all(lhs, at) != evaluate_all(rhs, at)) return false;
    }
    return true;
}

// ---- local forms -----------------------------------------------------------

LocalForm LocalForm::function(const LocalFunction& f) {
    LocalForm w;
    w.level = f.level;
    w.add({}, f.f);
    return w;
}

void LocalForm::add(std::vector<int> indices, const Expr& v) {
    if (v.is_zero()) return;
    if (static_cast<int>(indices.size()) != degree) throw PreconditionError("form: index tuple does not match the degree");
    const int sign = sort_with_sign(indices);
    if (sign == 0) return;
    auto [it, fresh] = coeffs.try_emplace(std::move(indices), Expr());
    it->second += sign > 0 ? v : -v;
    if (it->second.is_zero()) coeffs.erase(it);
}

Expr LocalForm::coeff(std::vector<int> indices) const {
    const int sign = sort_with_sign(indices);
    if (sign == 0) return {};
    auto it = coeffs.find(indices);
    if (it == coeffs.end()) return {};
    return sign > 0 ? it->second : -it->second;
}

LocalForm pullback(const Tower& t, const LocalForm& w, int level) {
    if (level < w.level) throw PreconditionError("pullback: target level below the form's level");
    if (level == w.level) return w;
    const Bindings up = bindings_for(t.level(w.level).coords, t.composite(w.level, level));
    std::map<std::vector<int>, Expr> moved;
    for (const auto& [A, c] : w.coeffs) moved[A] = substitute(c, up);
    return move_coframe(t, moved, w.degree, w.level, level);
}

LocalForm exterior_d(const Tower& t, const LocalForm& w) {
    const auto& coords = t.level(w.level).coords;
    LocalForm out;
    out.level = w.level;
    out.degree = w.degree + 1;
    for (const auto& [A, c] : w.coeffs)
        for (std::size_t b = 0; b < coords.size(); ++b) {
            std::vector<int> idx{static_cast<int>(b)};
            idx.insert(idx.end(), A.begin(), A.end());
            out.add(std::move(idx), differentiate(c, coords[b]));
        }
    return out;
}

LocalForm wedge(const Tower& t, const LocalForm& a, const LocalForm& b) {
    const int level = std::max(a.level, b.level);
    return wedge_same_level(pullback(t, a, level), pullback(t, b, level));
}

LocalForm form_add(const Tower& t, const LocalForm& a, const LocalForm& b) {
    if (a.degree != b.degree) throw PreconditionError("form_add: degree mismatch");
    const int level = std::max(a.level, b.level);
    LocalForm out = pullback(t, a, level);
    for (const auto& [B, v] : pullback(t, b, level).coeffs) out.add(B, v);
    return out;
}

LocalForm form_scale(const Tower& t, const LocalFunction& f, const LocalForm& w) {
    return wedge(t, LocalForm::function(f), w);
}

LocalForm contract(const Tower& t, const LocalVectorField& V, const LocalForm& w) {
    if (w.degree == 0) throw PreconditionError("contract: degree mismatch (0-form)");
    const int target = V.type(w.level);
    auto comps = V.components(w.level);
    if (comps.empty()) comps.assign(t.dim(w.level), Expr());
    const Bindings up = bindings_for(t.level(w.level).coords, t.composite(w.level, target));
    LocalForm inner;
    inner.level = w.level;
    inner.degree = w.degree - 1;
    for (const auto& [A, c] : w.coeffs) {
        const Expr moved = substitute(c, up);
        for (std::size_t s = 0; s < A.size(); ++s) {
            const Expr& vs = comps[static_cast<std::size_t>(A[s])];
            if (vs.is_zero()) continue;
            std::vector<int> rest;
            for (std::size_t r = 0; r < A.size(); ++r)
                if (r != s) rest.push_back(A[r]);
            inner.add(std::move(rest), (s % 2 ? -vs : vs) * moved);
        }
    }
    return move_coframe(t, inner.coeffs, inner.degree, w.level, target);
}

Scalar evaluate_form(const Tower& t, const LocalForm& w, const std::vector<Scalar>& point,
                     const std::vector<std::vector<Scalar>>& vectors) {
    if (static_cast<int>(vectors.size()) != w.degree) throw PreconditionError("evaluate_form: degree mismatch");
    Assignment at = t.assignment(w.level, point);
    Evaluator ev(at);
    Scalar total = 0;
    const auto k = static_cast<std::size_t>(w.degree);
    for (const auto& [A, c] : w.coeffs) {
        RationalMatrix minor(k, k);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t j = 0; j < k; ++j) minor(r, j) = vectors[j][static_cast<std::size_t>(A[r])];
        total += ev(c) * rational_det(minor);
    }
    return total;
}

bool forms_equal(const Tower& t, const LocalForm& a, const LocalForm& b) {
    if (a.degree != b.degree) return false;
    const int level = std::max(a.level, b.level);
    return pullback(t, a, level).coeffs == pullback(t, b, level).coeffs;
}

// ---- equation subtowers ------------------------------------------------------

EquationSubtower::EquationSubtower(DiffOp h) : lifter_(std::move(h)) {}

bool EquationSubtower::contains(const JetPoint& p) {
    const int r = p.order() - op().k;
    if (r < 0) return true;
    return lifter_.on_kernel(p, r);
}

std::size_t EquationSubtower::expected_dimension(int r) const {
    const DiffOp& h = op();
    return JetChartSpec{h.m, h.n, h.k + r}.coordinate_count() -
           h.target_dim() * dim_F(static_cast<std::size_t>(h.m), 0, r);
}

CodimReport EquationSubtower::dimension_report(int r, const SamplerConfig& config) const {
    return variety_codim(op(), r, config);
}

namespace {

ExprMatrix jacobian_of(const DiffOp& p, const JetChartSpec& chart) {
    const auto coords = chart.coordinates();
    ExprMatrix jac(p.components.size(), std::vector<Expr>(coords.size()));
    for (std::size_t r = 0; r < p.components.size(); ++r)
        for (std::size_t c = 0; c < coords.size(); ++c) jac[r][c] = differentiate(p.components[r], coords[c]);
    return jac;
}

}  // namespace

LiftWitness EquationSubtower::surjectivity(int r, const SamplerConfig& config) {
    const DiffOp h = op();
    LiftWitness w;
    w.outer_order = r;
    const ExprMatrix lower = jacobian_of(lifter_.prolongator().prolong(r), h.source().with_order(h.k + r));
    const ExprMatrix upper = jacobian_of(lifter_.prolongator().prolong(r + 1), h.source().with_order(h.k + r + 1));
    const std::size_t prefix = h.source().with_order(h.k + r).coordinate_count();
    SampleSet pts = sample_kernel(lifter_, r, config);
    w.sampled = pts.points.size();
    for (const auto& b : pts.points) {
        LiftResult res;
        try {
            res = lifter_.lift(b);
        } catch (const ObstructionError&) {
            w.differential_onto.push_back(false);
            continue;
        }
        ++w.lifted;
        w.free_counts.push_back(res.free_coordinates.size());
        // Tangent space of level r+1 at the lift, projected to the first chart coordinates.
        RationalMatrix k_up = kernel_basis(evaluate_matrix(upper, res.point.assignment()));
        std::vector<std::size_t> rows(prefix);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const std::size_t projected = rank(k_up.rows_subset(rows));
        const std::size_t below = prefix - rank(evaluate_matrix(lower, b.assignment()));
        w.differential_onto.push_back(projected == below);
    }
    w.pass = w.sampled > 0 && w.lifted == w.sampled &&
             std::all_of(w.differential_onto.begin(), w.differential_onto.end(), [](bool x) { return x; });
    return w;
}

// ---- linear towers and tensor products -------------------------------------

RationalMatrix LinearTower::composite(int i, int j) const {
    if (i > j || i < 0 || j >= size()) throw PreconditionError("linear tower: composite needs 0 <= i <= j < levels");
    RationalMatrix out = RationalMatrix::identity(dims[static_cast<std::size_t>(i)]);
    for (int s = i; s < j; ++s) out = out * steps[static_cast<std::size_t>(s)];
    return out;
}

void LinearTower::validate() const {
    if (dims.empty() || steps.size() + 1 != dims.size()) throw PreconditionError("linear tower: need one step per adjacent pair");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].rows() != dims[i] || steps[i].cols() != dims[i + 1])
            throw PreconditionError("linear tower: step " + std::to_string(i) + " has the wrong shape");
        if (rank(steps[i]) != dims[i]) throw PreconditionError("linear tower: step " + std::to_string(i) + " is not onto");
    }
}

Tower LinearTower::as_tower() const {
    validate();
    std::vector<TowerLevel> levels;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        TowerLevel lvl;
        for (std::size_t j = 1; j <= dims[i]; ++j) lvl.coords.push_back(VarRef::coord(static_cast<int>(j)));
        if (i > 0) {
            const RationalMatrix& s = steps[i - 1];
            for (std::size_t r = 0; r < s.rows(); ++r) {
                Expr e;
                for (std::size_t c = 0; c < s.cols(); ++c)
                    if (s(r, c) != 0) e += s(r, c) * Expr::var(lvl.coords[c]);
                lvl.down.push_back(e);
            }
        }
        lvl.label = "V_" + std::to_string(i);
        levels.push_back(std::move(lvl));
    }
    return Tower(std::move(levels));
}

LinearTower coordinate_tower(int levels) {
    LinearTower v;
    for (int i = 0; i < levels; ++i) v.dims.push_back(static_cast<std::size_t>(i + 1));
    for (int i = 0; i + 1 < levels; ++i) {
        RationalMatrix s(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(i + 2));
        for (std::size_t r = 0; r < s.rows(); ++r) s(r, r) = 1;
        v.steps.push_back(std::move(s));
    }
    return v;
}

LinearTower random_linear_tower(std::vector<std::size_t> dims, RationalSource& src) {
    LinearTower v;
    v.dims = std::move(dims);
    for (std::size_t i = 0; i + 1 < v.dims.size(); ++i) {
        if (v.dims[i] > v.dims[i + 1]) throw PreconditionError("random_linear_tower: dimensions must not decrease");
        RationalMatrix s(v.dims[i], v.dims[i + 1]);
        do {
            for (std::size_t r = 0; r < s.rows(); ++r)
                for (std::size_t c = 0; c < s.cols(); ++c) s(r, c) = src.next();
        } while (rank(s) != s.rows());
        v.steps.push_back(std::move(s));
    }
    return v;
}

namespace {

RationalMatrix right_inverse(const RationalMatrix& a) {
    RationalMatrix f(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.rows(); ++j) {
        std::vector<Scalar> e(a.rows());
        e[j] = 1;
        auto sol = solve_affine(a, e);
        if (!sol) throw PreconditionError("split_tower: step is not onto");
        for (std::size_t r = 0; r < a.cols(); ++r) f(r, j) = sol->particular[r];
    }
    return f;
}

}  // namespace

Splitting split_tower(const LinearTower& v) {
    v.validate();
    Splitting s;
    const auto levels = static_cast<std::size_t>(v.size());
    s.kernels.push_back(RationalMatrix::identity(v.dims[0]));
    s.splittings.emplace_back();
    for (std::size_t i = 1; i < levels; ++i) {
        s.kernels.push_back(kernel_basis(v.steps[i - 1]));
        s.splittings.push_back(right_inverse(v.steps[i - 1]));
    }
    std::size_t total = 0;
    for (const auto& k : s.kernels) {
        s.offsets.push_back(total);
        total += k.cols();
    }
    // proj_i followed by the inclusion of the kernel into V_i.
    auto embedded = [&](std::size_t i) {
        RationalMatrix p(v.dims[i], total);
        for (std::size_t r = 0; r < v.dims[i]; ++r)
            for (std::size_t c = 0; c < s.kernels[i].cols(); ++c) p(r, s.offsets[i] + c) = s.kernels[i](r, c);
        return p;
    };
    s.lifted.push_back(embedded(0));
    for (std::size_t i = 1; i < levels; ++i) s.lifted.push_back(embedded(i) + s.splittings[i] * s.lifted[i - 1]);
    return s;
}

namespace {

bool check_splitting(const LinearTower& v, const Splitting& s, bool& right_inv, bool& compatible, bool& iso) {
    const auto levels = static_cast<std::size_t>(v.size());
    right_inv = true;
    for (std::size_t i = 1; i < levels; ++i)
        if (!(v.steps[i - 1] * s.splittings[i] == RationalMatrix::identity(v.dims[i - 1]))) right_inv = false;
    compatible = true;
    for (std::size_t i = 0; i < levels; ++i)
        for (std::size_t k = i; k < levels; ++k)
            if (!(s.lifted[i] == v.composite(static_cast<int>(i), static_cast<int>(k)) * s.lifted[k])) compatible = false;
    iso = true;
    for (std::size_t k = 0; k < levels; ++k) {
        const std::size_t width = s.offsets[k] + s.kernels[k].cols();
        std::vector<std::size_t> cols(width);
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        if (width != v.dims[k] || rank(s.lifted[k].columns(cols)) != v.dims[k]) iso = false;
    }
    return right_inv && compatible && iso;
}

}  // namespace

TensorTowerReport tensor_tower(const LinearTower& v, const LinearTower& w) {
    if (v.size() != w.size()) throw PreconditionError("tensor_tower: towers need the same number of levels");
    TensorTowerReport rep;
    rep.left = split_tower(v);
    rep.right = split_tower(w);
    for (int i = 0; i < v.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        rep.product.dims.push_back(v.dims[idx] * w.dims[idx]);
        if (i > 0) rep.product.steps.push_back(kron(v.steps[idx - 1], w.steps[idx - 1]));
    }
    rep.product.validate();

    bool ri[2], co[2], is[2];
    check_splitting(v, rep.left, ri[0], co[0], is[0]);
    check_splitting(w, rep.right, ri[1], co[1], is[1]);
    rep.splittings_right_inverse = ri[0] && ri[1];
    rep.lifted_compatible = co[0] && co[1];
    rep.lifted_isomorphic = is[0] && is[1];

    rep.dimension_identity = true;
    for (std::size_t k = 0; k < v.dims.size(); ++k) {
        std::size_t sum = 0;
        for (std::size_t i = 0; i <= k; ++i)
            for (std::size_t j = 0; j <= k; ++j) sum += rep.left.kernels[i].cols() * rep.right.kernels[j].cols();
        if (sum != rep.product.dims[k]) rep.dimension_identity = false;
    }
    return rep;
}

// ---- equivalences ------------------------------------------------------------

namespace {

struct DiagramCheck {
    std::string name;
    const Tower* source;
    int level;
    std::vector<Expr> lhs, rhs;  // both in the source level's coordinates
};

std::vector<Expr> compose(const std::vector<Expr>& outer, const std::vector<VarRef>& outer_vars,
                          const std::vector<Expr>& inner) {
    return substitute_all(outer, bindings_for(outer_vars, inner));
}

}  // namespace

EquivalenceReport verify_equivalence(const Tower& a, const Tower& b, const TowerMorphism& f, const TowerMorphism& g,
                                     int levels, std::size_t samples, std::uint64_t seed, const std::vector<Thread>& threads) {
    EquivalenceReport rep;
    for (int i = 0; i < levels; ++i) {
        if (f.index(i + 1) <= f.index(i) || g.index(i + 1) <= g.index(i))
            throw PreconditionError("verify_equivalence: index maps must be strictly increasing");
    }
    std::vector<DiagramCheck> checks;
    for (int i = 0; i <= levels; ++i) {
        const int fi = f.index(i), gi = g.index(i);
        // Morphism squares mu'_(i,i+1) F_(i+1) = F_i mu_(phi i, phi(i+1)).
        if (i < levels) {
            const int fn = f.index(i + 1), gn = g.index(i + 1);
            checks.push_back({"F square at " + std::to_string(i), &a, fn,
                              compose(b.composite(i, i + 1), b.level(i + 1).coords, f.maps(i + 1)),
                              compose(f.maps(i), a.level(fi).coords, a.composite(fi, fn))});
            checks.push_back({"G square at " + std::to_string(i), &b, gn,
                              compose(a.composite(i, i + 1), a.level(i + 1).coords, g.maps(i + 1)),
                              compose(g.maps(i), b.level(gi).coords, b.composite(gi, gn))});
        }
        // Triangles G_i F_psi(i) = mu_(i, phi psi i) and F_i G_phi(i) = mu'_(i, psi phi i).
        const int fg = f.index(gi), gf = g.index(fi);
        checks.push_back({"G F triangle at " + std::to_string(i), &a, fg,
                          compose(g.maps(i), b.level(gi).coords, f.maps(gi)), a.composite(i, fg)});
        checks.push_back({"F G triangle at " + std::to_string(i), &b, gf,
                          compose(f.maps(i), a.level(fi).coords, g.maps(fi)), b.composite(i, gf)});
    }

    auto record = [&rep](const std::string& name, const std::vector<Scalar>& at, const std::vector<Scalar>& l,
                         const std::vector<Scalar>& r) {
        ++rep.checks;
        if (l == r) return true;
        rep.pass = false;
        rep.failures.push_back(name + " fails at " + point_str(at) + ": " + point_str(l) + " vs " + point_str(r));
        return false;
    };

    std::vector<std::future<void>> jobs;
    std::vector<EquivalenceReport> partial(checks.size());
    for (std::size_t c = 0; c < checks.size(); ++c) {
        jobs.push_back(std::async(std::launch::async, [&, c] {
            const DiagramCheck& d = checks[c];
            EquivalenceReport& out = partial[c];
            RationalSource src(seed + 7919 * c);
            for (std::size_t s = 0; s < samples; ++s) {
                auto p = random_point(*d.source, d.level, src);
                Assignment at = d.source->assignment(d.level, p);
                ++out.checks;
                auto l = evaluate_all(d.lhs, at), r = evaluate_all(d.rhs, at);
                if (l != r) {
                    out.pass = false;
                    out.failures.push_back(d.name + " fails at " + point_str(p) + ": " + point_str(l) + " vs " + point_str(r));
                    break;
                }
            }
        }));
    }
    for (auto& j : jobs) j.get();
    for (auto& p : partial) {
        rep.checks += p.checks;
        if (!p.pass) rep.pass = false;
        rep.failures.insert(rep.failures.end(), p.failures.begin(), p.failures.end());
    }

    // Along threads of a: p_i = G_i(F_psi(i)(p_(phi psi i))).
    for (const auto& th : threads)
        for (int i = 0; i <= levels; ++i) {
            const int gi = g.index(i), fg = f.index(gi);
            if (fg > th.top()) continue;
            const auto& p = th.points[static_cast<std::size_t>(fg)];
            auto q = evaluate_all(f.maps(gi), a.assignment(fg, p));
            auto back = evaluate_all(g.maps(i), b.assignment(gi, q));
            if (!record("thread triangle at " + std::to_string(i), p, back, th.points[static_cast<std::size_t>(i)])) break;
        }
    return rep;
}

}  // namespace jetforge
