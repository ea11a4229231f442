#include "jetforge/integrability.hpp"

#include <algorithm>
#include <future>
#include <sstream>

namespace jetforge {

// ---- metrics -------------------------------------------------------------

bool MetricSpec::diagonal() const {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && !lower[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].is_zero()) return false;
    return true;
}

namespace {

ExprMatrix minor_of(const ExprMatrix& a, std::size_t row, std::size_t col) {
    ExprMatrix out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i == row) continue;
        out.emplace_back();
        for (std::size_t j = 0; j < a.size(); ++j)
            if (j != col) out.back().push_back(a[i][j]);
    }
    return out;
}

bool base_only(const Expr& e) {
    for (const auto& v : free_vars(e))
        if (v.kind != VarRef::Kind::Base) return false;
    return true;
}

}  // namespace

MetricSpec make_metric(ExprMatrix lower) {
    MetricSpec g;
    g.m = static_cast<int>(lower.size());
    if (g.m < 1) throw PreconditionError("metric: empty matrix");
    const auto m = static_cast<std::size_t>(g.m);
    for (std::size_t i = 0; i < m; ++i) {
        if (lower[i].size() != m) throw PreconditionError("metric: matrix is not square");
        for (std::size_t j = 0; j < m; ++j) {
            if (!(lower[i][j] == lower[j][i])) throw PreconditionError("metric: matrix is not symmetric");
            if (!base_only(lower[i][j])) throw PreconditionError("metric: entries must depend on base coordinates only");
        }
    }
    g.lower = std::move(lower);
    g.det = determinant(g.lower);
    if (g.det.is_zero()) throw PreconditionError("metric: determinant is identically zero");

    g.inverse.assign(m, std::vector<Expr>(m));
    if (g.diagonal()) {
        for (std::size_t i = 0; i < m; ++i) g.inverse[i][i] = Expr(1) / g.lower[i][i];
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                Expr cof = determinant(minor_of(g.lower, j, i));
                if ((i + j) % 2) cof = -cof;
                g.inverse[i][j] = cof / g.det;
            }
    }

    // dg[l][i][j] = d g_ij / dx_l
    std::vector<ExprMatrix> dg(m, ExprMatrix(m, std::vector<Expr>(m)));
    for (std::size_t l = 0; l < m; ++l)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j)
                dg[l][i][j] = dg[l][j][i] = differentiate(g.lower[i][j], VarRef::base(static_cast<int>(l) + 1));

    g.christoffel.assign(m, ExprMatrix(m, std::vector<Expr>(m)));
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) {
                Expr s;
                for (std::size_t l = 0; l < m; ++l) {
                    if (g.inverse[k][l].is_zero()) continue;
                    Expr bracket = dg[i][j][l] + dg[j][i][l] - dg[l][i][j];
                    if (!bracket.is_zero()) s += g.inverse[k][l] * bracket;
                }
                g.christoffel[k][i][j] = g.christoffel[k][j][i] = s.scaled(Scalar(1, 2));
            }
    return g;
}

MetricSpec minkowski(int m) {
    ExprMatrix lower(static_cast<std::size_t>(m), std::vector<Expr>(static_cast<std::size_t>(m)));
    for (int i = 0; i < m; ++i) lower[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = i == 0 ? 1 : -1;
    return make_metric(std::move(lower));
}

VarRef nonlinearity_argument() { return VarRef::param("z"); }

DiffOp make_klein_gordon(const MetricSpec& g, const Expr& f1, const Expr& f2, const Expr& k) {
    if (!base_only(f1) || !base_only(f2)) throw PreconditionError("Klein-Gordon: F1 and F2 must depend on base coordinates only");
    for (const auto& v : free_vars(k))
        if (!(v == nonlinearity_argument())) throw PreconditionError("Klein-Gordon: K may only depend on z");
    const auto m = static_cast<std::size_t>(g.m);
    auto jet = [m](std::initializer_list<std::size_t> slots) {
        return Expr::var(VarRef::jet_var(1, ones_at(m, slots)));
    };
    Expr h;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (!g.inverse[i][j].is_zero()) h += g.inverse[i][j] * jet({i, j});
    for (std::size_t k2 = 0; k2 < m; ++k2) {
        Expr contracted;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (!g.inverse[i][j].is_zero() && !g.christoffel[k2][i][j].is_zero())
                    contracted += g.inverse[i][j] * g.christoffel[k2][i][j];
        if (!contracted.is_zero()) h -= contracted * jet({k2});
    }
    const Expr u0 = Expr::var(VarRef::jet_var(1, MultiIndex(m)));
    h += f1 * u0;
    h += f2 * substitute(k, {{nonlinearity_argument(), u0}});
    return make_op(g.m, 1, 2, {h});
}

// ---- sampling ------------------------------------------------------------

Scalar RationalSource::next() {
    const auto span = static_cast<std::uint64_t>(2 * range_ + 1);
    const auto num = static_cast<long>(rng_() % span) - range_;
    const auto den = static_cast<long>(rng_() % static_cast<std::uint64_t>(range_)) + 1;
    Scalar q(num, den);
    q.canonicalize();
    return q;
}

// ---- lifting -------------------------------------------------------------

Lifter::Lifter(DiffOp h) : prolong_(std::move(h)), symbol_(symbol_of(prolong_.op())) {}

bool Lifter::on_kernel(const JetPoint& b, int l) {
    Assignment at = b.assignment();
    Evaluator ev(at);
    const auto& h = prolong_.op();
    for (const auto& I : enumerate({static_cast<std::size_t>(h.m), 0, l}))
        for (std::size_t c = 0; c < h.components.size(); ++c)
            if (ev(prolong_.derivative(I, static_cast<int>(c))) != 0) return false;
    return true;
}

RationalMatrix Lifter::top_system(const JetPoint& b) {
    const auto& h = prolong_.op();
    const int l = b.order() - h.k;
    const auto outer = enumerate_degree(static_cast<std::size_t>(h.m), l + 1);
    const auto top = enumerate_degree(static_cast<std::size_t>(h.m), h.k + l + 1);
    const std::size_t n_out = h.components.size(), n = static_cast<std::size_t>(h.n);
    RationalMatrix a(outer.size() * n_out, top.size() * n);
    Assignment at = b.assignment();
    Evaluator ev(at);
    for (std::size_t r = 0; r < outer.size(); ++r)
        for (std::size_t j = 0; j < top.size(); ++j) {
            auto rest = top[j].minus(outer[r]);
            if (!rest) continue;
            for (std::size_t beta = 0; beta < n_out; ++beta)
                for (std::size_t alpha = 0; alpha < n; ++alpha) {
                    const Expr& c = symbol_.coeff(static_cast<int>(alpha) + 1, static_cast<int>(beta) + 1, *rest);
                    if (!c.is_zero()) a(r * n_out + beta, j * n + alpha) = ev(c);
                }
        }
    return a;
}

LiftResult Lifter::lift(const JetPoint& b, const LiftOptions& options) {
    const auto& h = prolong_.op();
    const int l = b.order() - h.k;
    if (l < 0) throw PreconditionError("lift: point order is below the operator order");
    if (b.chart().m != h.m || b.chart().n != h.n) throw PreconditionError("lift: point chart does not match the operator");
    if (options.check_precondition && !on_kernel(b, l))
        throw PreconditionError("lift: point does not satisfy prolong_op(h, " + std::to_string(l) + ") = 0");

    const int order = h.k + l + 1;
    JetPoint ext = b.extended(order);
    RationalMatrix a = top_system(b);
    std::vector<Scalar> rhs;
    {
        Assignment at = ext.assignment();
        Evaluator ev(at);
        for (const auto& [label, e] : prolong_.degree(l + 1)) rhs.push_back(-ev(e));
    }

    const auto top = enumerate_degree(static_cast<std::size_t>(h.m), order);
    const auto n = static_cast<std::size_t>(h.n);
    std::vector<Scalar> free_values = options.free_values;
    auto sol = solve_affine(a, rhs, free_values);
    if (!sol) throw ObstructionError("lift: top-order system is inconsistent at the given point", order);
    if (options.free_source && sol->free_columns.size() > free_values.size()) {
        for (std::size_t f = free_values.size(); f < sol->free_columns.size(); ++f) {
            const std::size_t c = sol->free_columns[f];
            free_values.push_back(options.free_source(static_cast<int>(c % n) + 1, top[c / n]));
        }
        sol = solve_affine(a, rhs, free_values);
    }

    for (std::size_t j = 0; j < top.size(); ++j)
        for (std::size_t alpha = 0; alpha < n; ++alpha)
            ext.set_jet(static_cast<int>(alpha) + 1, top[j], sol->particular[j * n + alpha]);

    LiftResult r;
    r.point = std::move(ext);
    r.equations = a.rows();
    r.unknowns = a.cols();
    for (auto c : sol->free_columns) r.free_coordinates.emplace_back(static_cast<int>(c % n) + 1, top[c / n]);
    return r;
}

LiftResult lift_point(const DiffOp& h, const JetPoint& b, const LiftOptions& options) {
    Lifter lifter(h);
    return lifter.lift(b, options);
}

namespace {

// Moves a random point of J^k onto {h = 0} by solving for one coordinate
// in which h is affine with a nonzero coefficient there.
bool solve_onto_kernel(const DiffOp& h, JetPoint& p) {
    const Expr& e = h.components.front();
    const auto coords = h.source().coordinates();
    for (std::size_t idx = coords.size(); idx-- > static_cast<std::size_t>(h.m);) {
        const VarRef& v = coords[idx];
        if (polynomial_degree_in(e, v) != std::optional<int>(1)) continue;
        Expr coeff = differentiate(e, v);
        p.set_jet(v.index, v.jet, 0);
        Assignment at = p.assignment();
        Scalar c = evaluate(coeff, at);
        if (c == 0) continue;
        Scalar rest = evaluate(e, at);
        p.set_jet(v.index, v.jet, -rest / c);
        return true;
    }
    return false;
}

}  // namespace

SampleSet sample_kernel(Lifter& lifter, int l, const SamplerConfig& config) {
    const DiffOp& h = lifter.op();
    if (h.components.size() != 1) throw PreconditionError("sample_kernel: scalar equation required");
    SampleSet out;
    RationalSource src(config.seed, config.range);
    const std::size_t max_attempts = config.max_attempts ? config.max_attempts : 20 * std::max<std::size_t>(config.count, 1);
    std::size_t attempts = 0;
    while (out.points.size() < config.count && attempts < max_attempts) {
        ++attempts;
        JetPoint p(h.source());
        std::vector<Scalar> vals;
        for (std::size_t i = 0; i < p.values().size(); ++i) vals.push_back(src.next());
        p = JetPoint(h.source(), vals);
        if (config.base_point)
            for (int i = 1; i <= h.m; ++i) p.set_base(i, (*config.base_point)[static_cast<std::size_t>(i - 1)]);
        try {
            if (!solve_onto_kernel(h, p)) {
                ++out.failures;
                out.note = "no jet coordinate in which the equation is affine with nonzero coefficient";
                continue;
            }
            LiftOptions opts;
            opts.free_source = [&src](int, const MultiIndex&) { return src.next(); };
            opts.check_precondition = false;
            for (int level = 0; level < l; ++level) p = lifter.lift(p, opts).point;
        } catch (const Error& err) {
            ++out.failures;
            out.note = err.what();
            continue;
        }
        out.points.push_back(std::move(p));
    }
    return out;
}

SampleSet sample_kernel(const DiffOp& h, int l, const SamplerConfig& config) {
    Lifter lifter(h);
    return sample_kernel(lifter, l, config);
}

// ---- the three conditions ------------------------------------------------

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::FormallyIntegrable: return "formally integrable";
        case Verdict::ConditionFails: return "condition fails";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::optional<std::string> nowhere_zero(const Expr& e) {
    if (auto c = e.constant()) {
        if (*c != 0) return "nonzero constant " + to_string(*c);
        return std::nullopt;
    }
    if (e.size() != 1) return std::nullopt;
    for (const auto& [atom, exp] : e.terms()[0].mono) {
        const AtomInfo& info = atom_info(atom);
        const bool ok = info.kind == AtomKind::Inverse || (info.kind == AtomKind::Var && exp < 0) ||
                        (info.kind == AtomKind::Call && info.fn == "exp");
        if (!ok) return std::nullopt;
    }
    return "single term of nonvanishing factors: " + e.str();
}

namespace {

std::string point_str(const JetPoint& p) {
    std::string s = "(";
    auto v = p.values();
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_string(v[i]);
    return s + ")";
}

ConditionSymbol check_symbol(const DiffOp& h, const std::vector<JetPoint>& samples) {
    ConditionSymbol c;
    SymbolPoly s = symbol_of(h);
    if (s.is_zero()) {
        c.witnesses.push_back("symbol is identically zero");
        return c;
    }
    for (const auto& [key, e] : s.coeffs)
        if (auto why = nowhere_zero(e)) {
            c.certified = true;
            c.certificate = "coefficient of xi^" + std::get<2>(key).str() + ": " + *why;
            break;
        }
    if (!c.certified && h.k == 2) {
        const auto m = static_cast<std::size_t>(h.m);
        ExprMatrix form(m, std::vector<Expr>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                MultiIndex I = ones_at(m, {i, j});
                form[i][j] = s.coeff(1, 1, I).scaled(Scalar(1) / Scalar(multinomial(I)));
            }
        if (auto why = nowhere_zero(determinant(form))) {
            c.certified = true;
            c.certificate = "determinant of the symbol form: " + *why;
        }
    }
    for (const auto& p : samples) {
        ++c.checked;
        if (s.functional(p.assignment()).is_zero()) c.witnesses.push_back(point_str(p));
    }
    c.holds = c.witnesses.empty() && (c.certified || c.checked > 0);
    return c;
}

}  // namespace

IntegrabilityReport check_conditions(const DiffOp& h, const CheckConfig& config) {
    if (h.n != 1 || h.components.size() != 1) throw PreconditionError("check_conditions: scalar operator required");
    IntegrabilityReport r;
    r.seed = config.sampler.seed;
    Lifter lifter(h);

    SampleSet base = sample_kernel(lifter, 0, config.sampler);
    r.sampler_failures = base.failures;
    if (base.points.empty()) r.note = "sampler found no points of ker(h): " + base.note;

    r.symbol = check_symbol(h, base.points);

    r.rank.expected = static_cast<std::size_t>(h.m) * h.components.size();
    r.rank.profile = rank_profile(symbol_prolong1(h), base.points, config.mode, base.failures);
    r.rank.holds = !base.points.empty() && r.rank.profile.min_rank == r.rank.profile.max_rank;

    r.lift.depth = config.lift_depth;
    for (int level = 0; level < config.lift_depth; ++level) {
        SamplerConfig sc = config.sampler;
        sc.seed = config.sampler.seed + static_cast<std::uint64_t>(level) * 7919;
        SampleSet pts = level == 0 ? base : sample_kernel(lifter, level, sc);
        r.sampler_failures += level == 0 ? 0 : pts.failures;
        for (std::size_t s = 0; s < pts.points.size(); ++s) {
            ++r.lift.attempts;
            try {
                LiftResult lr = lifter.lift(pts.points[s]);
                if (s == 0) r.lift.free_counts.push_back(lr.free_coordinates.size());
            } catch (const ObstructionError& e) {
                ++r.lift.failures;
                r.lift.diagnostics.push_back("level " + std::to_string(level) + ", point " + point_str(pts.points[s]) +
                                             ": " + e.what());
            }
        }
    }
    r.lift.holds = r.lift.attempts > 0 && r.lift.failures == 0;

    const bool fails = !r.symbol.witnesses.empty() ||
                       (!base.points.empty() && r.rank.profile.min_rank != r.rank.profile.max_rank) ||
                       r.lift.failures > 0;
    if (fails)
        r.verdict = Verdict::ConditionFails;
    else if (r.symbol.holds && r.rank.holds && r.lift.holds)
        r.verdict = Verdict::FormallyIntegrable;
    else
        r.verdict = Verdict::Inconclusive;
    if (r.note.empty() && r.verdict == Verdict::FormallyIntegrable && !r.rank.profile.certified)
        r.note = "constant rank and surjectivity established at samples only";
    else if (r.note.empty() && r.verdict == Verdict::FormallyIntegrable)
        r.note = "surjectivity established at samples only";
    return r;
}

// ---- codimension ---------------------------------------------------------

CodimReport variety_codim(const DiffOp& h, int l, const SamplerConfig& config) {
    CodimReport r;
    r.l = l;
    r.expected = dim_F(static_cast<std::size_t>(h.m), 0, l) * h.components.size();
    Lifter lifter(h);
    SampleSet pts = sample_kernel(lifter, l, config);
    r.sampler_failures = pts.failures;
    DiffOp hl = lifter.prolongator().prolong(l);
    const auto coords = hl.source().coordinates();
    ExprMatrix jac(hl.components.size(), std::vector<Expr>(coords.size()));
    for (std::size_t i = 0; i < hl.components.size(); ++i)
        for (std::size_t j = 0; j < coords.size(); ++j) jac[i][j] = differentiate(hl.components[i], coords[j]);
    std::vector<std::future<std::size_t>> jobs;
    for (const auto& p : pts.points)
        jobs.push_back(std::async(std::launch::async, [&jac, &p] { return rank(evaluate_matrix(jac, p.assignment())); }));
    for (auto& j : jobs) r.observed.push_back(j.get());
    r.pass = !r.observed.empty() &&
             std::all_of(r.observed.begin(), r.observed.end(), [&r](std::size_t v) { return v == r.expected; });
    return r;
}

}  // namespace jetforge
