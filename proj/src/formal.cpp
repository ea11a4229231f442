#include "jetforge/formal.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace jetforge {

namespace {

const Scalar kZeroScalar;

void require_compatible(const TruncSeries& a, const TruncSeries& b) {
    if (a.vars() != b.vars()) throw PreconditionError("series: variable counts differ");
    if (a.base() != b.base()) throw PreconditionError("series: base points differ");
}

}  // namespace

TruncSeries::TruncSeries(int m, int order, std::vector<Scalar> base) : m_(m), order_(order), base_(std::move(base)) {
    if (base_.size() != static_cast<std::size_t>(m)) throw PreconditionError("series: base point has wrong dimension");
    for (const auto& I : enumerate({static_cast<std::size_t>(m), 0, order})) c_.emplace(I, Scalar(0));
}

TruncSeries TruncSeries::constant(int m, int order, std::vector<Scalar> base, const Scalar& c) {
    TruncSeries s(m, order, std::move(base));
    s.set(MultiIndex(static_cast<std::size_t>(m)), c);
    return s;
}

TruncSeries TruncSeries::of_polynomial(const Expr& p, int order, std::vector<Scalar> base) {
    const int m = static_cast<int>(base.size());
    return series_of_jet(jet_of_section(SectionPoly{{p}}, m, base, order), 1);
}

const Scalar& TruncSeries::coeff(const MultiIndex& I) const {
    auto it = c_.find(I);
    return it == c_.end() ? kZeroScalar : it->second;
}

void TruncSeries::set(const MultiIndex& I, const Scalar& v) {
    auto it = c_.find(I);
    if (it == c_.end()) throw std::out_of_range("series: index " + I.str() + " beyond truncation order");
    it->second = v;
}

TruncSeries TruncSeries::truncated(int order) const {
    TruncSeries s(m_, std::min(order, order_), base_);
    for (auto& [I, v] : s.c_) v = coeff(I);
    return s;
}

Expr TruncSeries::polynomial() const {
    std::vector<Expr> shifted;
    for (int i = 0; i < m_; ++i)
        shifted.push_back(Expr::var(VarRef::base(i + 1)) - Expr(base_[static_cast<std::size_t>(i)]));
    Expr p;
    for (const auto& [I, c] : c_) {
        if (c == 0) continue;
        Expr t = c;
        for (std::size_t i = 0; i < I.dim(); ++i)
            if (I[i]) t *= shifted[i].pow(I[i]);
        p += t;
    }
    return p;
}

std::vector<std::tuple<MultiIndex, mpz_class, mpz_class>> TruncSeries::triples() const {
    std::vector<std::tuple<MultiIndex, mpz_class, mpz_class>> out;
    for (const auto& [I, c] : c_) out.emplace_back(I, c.get_num(), c.get_den());
    return out;
}

TruncSeries series_add(const TruncSeries& a, const TruncSeries& b) {
    require_compatible(a, b);
    TruncSeries s(a.vars(), std::min(a.order(), b.order()), a.base());
    for (const auto& [I, v] : s.coeffs()) s.set(I, a.coeff(I) + b.coeff(I));
    return s;
}

TruncSeries series_mul(const TruncSeries& a, const TruncSeries& b) {
    require_compatible(a, b);
    const int order = std::min(a.order(), b.order());
    std::map<MultiIndex, Scalar> acc;
    for (const auto& [I, x] : a.coeffs()) {
        if (x == 0 || I.degree() > order) continue;
        for (const auto& [J, y] : b.coeffs()) {
            if (y == 0 || I.degree() + J.degree() > order) continue;
            acc[I + J] += x * y;
        }
    }
    TruncSeries s(a.vars(), order, a.base());
    for (const auto& [K, v] : acc) s.set(K, v);
    return s;
}

TruncSeries series_compose_scalar(const Expr& k, const TruncSeries& s) {
    const VarRef z = nonlinearity_argument();
    for (const auto& v : free_vars(k))
        if (!(v == z)) throw PreconditionError("series_compose_scalar: K may only depend on z");
    if (!is_polynomial(k)) throw PreconditionError("series_compose_scalar: K must be a polynomial on exact paths");
    const int degree = polynomial_degree_in(k, z).value_or(0);
    // Taylor coefficients of K at 0, then Horner in the series ring.
    std::vector<Scalar> c;
    Expr d = k;
    Scalar fact = 1;
    Assignment at0;
    at0.set(z, 0);
    for (int j = 0; j <= degree; ++j) {
        if (j > 0) {
            d = differentiate(d, z);
            fact *= j;
        }
        c.push_back(evaluate(d, at0) / fact);
    }
    TruncSeries out = TruncSeries::constant(s.vars(), s.order(), s.base(), c.back());
    for (int j = degree - 1; j >= 0; --j)
        out = series_add(series_mul(out, s), TruncSeries::constant(s.vars(), s.order(), s.base(), c[static_cast<std::size_t>(j)]));
    return out;
}

TruncSeries series_of_jet(const JetPoint& p, int component) {
    const JetChartSpec& c = p.chart();
    TruncSeries s(c.m, c.k, p.base_point());
    for (const auto& I : enumerate({static_cast<std::size_t>(c.m), 0, c.k}))
        s.set(I, p.jet(component, I) / Scalar(factorial(I)));
    return s;
}

JetPoint jet_of_series(const std::vector<TruncSeries>& components, int k) {
    if (components.empty()) throw PreconditionError("jet_of_series: no components");
    const TruncSeries& first = components.front();
    if (k > first.order()) throw PreconditionError("jet_of_series: order exceeds truncation");
    JetPoint p(JetChartSpec{first.vars(), static_cast<int>(components.size()), k});
    for (int i = 1; i <= first.vars(); ++i) p.set_base(i, first.base()[static_cast<std::size_t>(i - 1)]);
    for (std::size_t a = 0; a < components.size(); ++a)
        for (const auto& I : enumerate({static_cast<std::size_t>(first.vars()), 0, k}))
            p.set_jet(static_cast<int>(a) + 1, I, components[a].coeff(I) * Scalar(factorial(I)));
    return p;
}

FormalSolution formal_solve(const DiffOp& h, const JetPoint& seed, int order, const FreeDataPolicy& policy) {
    if (order < h.k) throw PreconditionError("formal_solve: truncation order below the operator order");
    Lifter lifter(h);
    const int l0 = seed.order() - h.k;
    if (l0 < 0) throw PreconditionError("formal_solve: seed order below the operator order");
    if (!lifter.on_kernel(seed, l0))
        throw PreconditionError("formal_solve: seed does not satisfy prolong_op(h, " + std::to_string(l0) + ") = 0");

    RationalSource src(policy.seed, policy.range);
    LiftOptions opts;
    opts.check_precondition = false;
    switch (policy.kind) {
        case FreeDataPolicy::Kind::Zero: break;
        case FreeDataPolicy::Kind::Explicit:
            opts.free_source = [&policy](int a, const MultiIndex& J) {
                auto it = policy.table.find({a, J});
                return it == policy.table.end() ? Scalar(0) : it->second;
            };
            break;
        case FreeDataPolicy::Kind::Random:
            opts.free_source = [&src](int, const MultiIndex&) { return src.next(); };
            break;
    }

    FormalSolution sol;
    sol.op = h;
    sol.base = seed.base_point();
    sol.order = order;
    JetPoint current = seed.order() > order ? seed.project(order) : seed;
    sol.chain.push_back(current);
    while (current.order() < order) {
        LiftResult r = lifter.lift(current, opts);
        sol.free_counts.push_back(r.free_coordinates.size());
        current = std::move(r.point);
        sol.chain.push_back(current);
    }
    for (int a = 1; a <= h.n; ++a) sol.components.push_back(series_of_jet(current, a));
    return sol;
}

ResidualReport verify_residual(const FormalSolution& sol, int r) {
    const DiffOp& h = sol.op;
    if (r < 0 || r > sol.order - h.k) throw PreconditionError("verify_residual: order exceeds truncation minus operator order");
    ResidualReport rep;
    rep.outer_order = r;
    JetPoint at = jet_of_series(sol.components, h.k + r);
    DiffOp hr = prolong_op(h, r);
    const Assignment asg = at.assignment();
    std::vector<std::future<Scalar>> jobs;
    for (const auto& c : hr.components)
        jobs.push_back(std::async(std::launch::async, [&asg, &c] { return evaluate(c, asg); }));
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        Scalar v = jobs[i].get();
        if (v == 0) continue;
        rep.exact_zero = false;
        rep.max_abs = std::max(rep.max_abs, std::fabs(v.get_d()));
        rep.nonzero.emplace_back(hr.labels[i], v);
    }
    return rep;
}

}  // namespace jetforge
