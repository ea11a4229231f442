#include "jetforge/symbols.hpp"

#include <algorithm>
#include <future>
#include <sstream>

namespace jetforge {

namespace {

const Expr kZero;

Expr covector_power(const MultiIndex& I) {
    Expr e = 1;
    for (std::size_t i = 0; i < I.dim(); ++i)
        if (I[i]) e *= Expr::var(VarRef::covector(static_cast<int>(i) + 1)).pow(I[i]);
    return e;
}

Scalar scalar_power(std::span<const Scalar> v, const MultiIndex& I) {
    Scalar r = 1;
    for (std::size_t i = 0; i < I.dim(); ++i) r *= pow(v[i], I[i]);
    return r;
}

std::string vec_str(std::span<const Scalar> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_string(v[i]);
    return s + ")";
}

}  // namespace

const Expr& SymbolPoly::coeff(int a, int b, const MultiIndex& I) const {
    auto it = coeffs.find({a, b, I});
    return it == coeffs.end() ? kZero : it->second;
}

Expr SymbolPoly::in_covectors(int a, int b) const {
    Expr s;
    for (const auto& I : enumerate_degree(static_cast<std::size_t>(m), k)) {
        const Expr& c = coeff(a, b, I);
        if (!c.is_zero()) s += c * covector_power(I);
    }
    return s;
}

Scalar SymbolPoly::evaluate(int a, int b, const Assignment& at, std::span<const Scalar> xi) const {
    Evaluator ev(at);
    Scalar s = 0;
    for (const auto& I : enumerate_degree(static_cast<std::size_t>(m), k)) {
        const Expr& c = coeff(a, b, I);
        if (!c.is_zero()) s += ev(c) * scalar_power(xi, I);
    }
    return s;
}

RationalMatrix SymbolPoly::functional(const Assignment& at) const {
    const auto top = enumerate_degree(static_cast<std::size_t>(m), k);
    RationalMatrix f(static_cast<std::size_t>(n_out), static_cast<std::size_t>(n) * top.size());
    Evaluator ev(at);
    for (int b = 1; b <= n_out; ++b)
        for (int a = 1; a <= n; ++a)
            for (std::size_t j = 0; j < top.size(); ++j) {
                const Expr& c = coeff(a, b, top[j]);
                if (c.is_zero()) continue;
                f(static_cast<std::size_t>(b - 1), static_cast<std::size_t>(a - 1) * top.size() + j) =
                    ev(c) / Scalar(multinomial(top[j]));
            }
    return f;
}

SymbolPoly symbol_of(const DiffOp& h) {
    SymbolPoly s;
    s.m = h.m;
    s.n = h.n;
    s.n_out = static_cast<int>(h.components.size());
    s.k = h.k;
    const auto top = enumerate_degree(static_cast<std::size_t>(h.m), h.k);
    for (int b = 1; b <= s.n_out; ++b)
        for (int a = 1; a <= h.n; ++a)
            for (const auto& I : top) {
                Expr d = differentiate(h.components[static_cast<std::size_t>(b - 1)], VarRef::jet_var(a, I));
                if (!d.is_zero()) s.coeffs.emplace(std::make_tuple(a, b, I), std::move(d));
            }
    return s;
}

SymbolPoly symbol_linear(const LinearCoefficients& c) {
    SymbolPoly s;
    s.m = c.m;
    s.n = c.n;
    s.n_out = c.n_out;
    s.k = c.k;
    for (const auto& [key, e] : c.coeffs)
        if (std::get<2>(key).degree() == c.k && !e.is_zero()) s.coeffs.emplace(key, e);
    return s;
}

bool same_coefficients(const SymbolPoly& a, const SymbolPoly& b) {
    if (a.m != b.m || a.n != b.n || a.n_out != b.n_out || a.k != b.k || a.coeffs.size() != b.coeffs.size())
        return false;
    for (const auto& [key, e] : a.coeffs) {
        auto it = b.coeffs.find(key);
        if (it == b.coeffs.end() || !(it->second == e)) return false;
    }
    return true;
}

DiagramReport check_linear_symbol_diagram(const LinearCoefficients& lin, const DiffOp& h,
                                          const std::vector<JetPoint>& points,
                                          const std::vector<std::vector<Scalar>>& covectors) {
    DiagramReport r;
    const VarRef t = VarRef::param("t'");
    const auto top = enumerate_degree(static_cast<std::size_t>(h.m), h.k);
    const std::size_t count = std::min(points.size(), covectors.size());
    for (std::size_t s = 0; s < count && r.pass; ++s) {
        const JetPoint& a = points[s];
        const auto& xi = covectors[s];
        Assignment at = a.assignment();
        at.set(t, 0);
        for (int alpha = 1; alpha <= h.n && r.pass; ++alpha) {
            // v = xi^k (x) e_alpha: the vertical top-order vector u_I -> xi^I.
            Bindings shift;
            for (const auto& I : top) {
                VarRef v = VarRef::jet_var(alpha, I);
                shift[v] = Expr::var(v) + Expr(scalar_power(xi, I)) * Expr::var(t);
            }
            for (int beta = 1; beta <= static_cast<int>(h.components.size()); ++beta) {
                Expr along = substitute(h.components[static_cast<std::size_t>(beta - 1)], shift);
                Scalar bundle = jetforge::evaluate(differentiate(along, t), at);
                Scalar classical = 0;
                for (const auto& I : top) {
                    auto it = lin.coeffs.find({alpha, beta, I});
                    if (it != lin.coeffs.end()) classical += jetforge::evaluate(it->second, at) * scalar_power(xi, I);
                }
                if (bundle != classical) {
                    r.pass = false;
                    std::ostringstream os;
                    os << "sample " << s << ": a=" << vec_str(a.base_point()) << " xi=" << vec_str(xi)
                       << " component (" << alpha << "," << beta << "): bundle=" << to_string(bundle)
                       << " classical=" << to_string(classical);
                    r.witness = os.str();
                    break;
                }
            }
        }
        ++r.checked;
    }
    return r;
}

ExprMatrix symbol_prolong1(const DiffOp& h) {
    SymbolPoly s = symbol_of(h);
    const auto cols = enumerate_degree(static_cast<std::size_t>(h.m), h.k + 1);
    const int n_out = static_cast<int>(h.components.size());
    ExprMatrix M(static_cast<std::size_t>(h.m * n_out),
                 std::vector<Expr>(static_cast<std::size_t>(h.n) * cols.size()));
    for (int i = 0; i < h.m; ++i)
        for (int b = 1; b <= n_out; ++b)
            for (int a = 1; a <= h.n; ++a)
                for (std::size_t j = 0; j < cols.size(); ++j) {
                    const MultiIndex& J = cols[j];
                    if (J[static_cast<std::size_t>(i)] == 0) continue;
                    MultiIndex I = *J.offset(static_cast<std::size_t>(i), -1);
                    const Expr& c = s.coeff(a, b, I);
                    if (c.is_zero()) continue;
                    Scalar w = Scalar(J[static_cast<std::size_t>(i)], h.k + 1) / Scalar(multinomial(I));
                    w.canonicalize();
                    M[static_cast<std::size_t>(i * n_out + b - 1)][static_cast<std::size_t>(a - 1) * cols.size() + j] =
                        c.scaled(w);
                }
    return M;
}

std::vector<Scalar> decomposable_power(int m, int n, int degree, int component, std::span<const Scalar> v) {
    const auto cols = enumerate_degree(static_cast<std::size_t>(m), degree);
    std::vector<Scalar> out(static_cast<std::size_t>(n) * cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        out[static_cast<std::size_t>(component - 1) * cols.size() + j] =
            Scalar(multinomial(cols[j])) * scalar_power(v, cols[j]);
    return out;
}

bool characteristic_test(const DiffOp& h, const JetPoint& a, std::span<const Scalar> xi) {
    if (h.n != 1 || h.components.size() != 1)
        throw PreconditionError("characteristic_test needs a scalar operator");
    return symbol_of(h).evaluate(1, 1, a.assignment(), xi) == 0;
}

RankReport rank_profile(const ExprMatrix& m, const std::vector<JetPoint>& samples, RankMode requested,
                        std::size_t sampler_failures, double tol) {
    RankReport r;
    r.sampler_failures = sampler_failures;
    bool primitives = false;
    for (const auto& row : m)
        for (const auto& e : row) primitives = primitives || has_primitives(e);
    r.mode = (requested == RankMode::Float || primitives) ? RankMode::Float : RankMode::Exact;
    if (primitives && requested == RankMode::Exact)
        r.note = "entries contain transcendental primitives; ranks computed in float mode";

    auto rank_at = [&m, mode = r.mode, tol](const JetPoint& p) -> std::size_t {
        if (mode == RankMode::Exact) return rank(evaluate_matrix(m, p.assignment()));
        FloatAssignment fa = p.float_assignment();
        FloatEvaluator ev(fa);
        std::vector<std::vector<double>> rows;
        for (const auto& row : m) {
            rows.emplace_back();
            for (const auto& e : row) rows.back().push_back(ev(e));
        }
        return float_rank(rows, tol);
    };
    std::vector<std::future<std::size_t>> jobs;
    for (const auto& p : samples) jobs.push_back(std::async(std::launch::async, rank_at, std::cref(p)));
    for (auto& j : jobs) r.sampled.push_back(j.get());
    if (!r.sampled.empty()) {
        r.min_rank = *std::min_element(r.sampled.begin(), r.sampled.end());
        r.max_rank = *std::max_element(r.sampled.begin(), r.sampled.end());
    }
    if (r.mode == RankMode::Exact) {
        r.generic_rank = generic_rank(m);
        r.certified = !r.sampled.empty() && r.min_rank == *r.generic_rank && r.max_rank == *r.generic_rank;
    }
    if (!r.certified) {
        if (!r.note.empty()) r.note += "; ";
        r.note += "sampled evidence only";
    }
    return r;
}

}  // namespace jetforge
