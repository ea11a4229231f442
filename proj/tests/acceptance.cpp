// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "jetforge/cli.hpp"
#include "jetforge/formal.hpp"
#include "kg_oracle.hpp"

using namespace jetforge;
namespace fs = std::filesystem;

namespace {

Expr x(int i) { return Expr::var(VarRef::base(i)); }
Expr z() { return Expr::var(nonlinearity_argument()); }

Scalar rnd(std::mt19937_64& rng, int lo = -4, int hi = 4) {
    std::uniform_int_distribution<int> num(lo, hi), den(1, 3);
    Scalar q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

ExprMatrix diag(const std::vector<Expr>& d) {
    ExprMatrix g(d.size(), std::vector<Expr>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) g[i][i] = d[i];
    return g;
}

// eta plus quadratic perturbations: first derivatives of g vanish at the origin.
std::vector<Expr> normal_eta(int m, RationalSource& src) {
    std::vector<Expr> d;
    for (int i = 0; i < m; ++i) {
        Expr w = 1;
        for (int a = 1; a <= m; ++a) w += src.next() * x(a) * x(1 + a % m);
        d.push_back(i == 0 ? w : -w);
    }
    return d;
}

Expr random_poly(std::mt19937_64& rng, int m, int deg) {
    Expr p;
    for (const auto& I : enumerate({static_cast<std::size_t>(m), 0, deg})) {
        Expr mono = rnd(rng);
        for (int i = 0; i < m; ++i) mono *= x(i + 1).pow(I[static_cast<std::size_t>(i)]);
        p += mono;
    }
    return p;
}

std::vector<Scalar> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::vector<Scalar> v(n);
    for (auto& s : v) s = rnd(rng);
    return v;
}

JetPoint random_jet(JetChartSpec c, std::mt19937_64& rng) {
    return JetPoint(c, random_vector(c.coordinate_count(), rng));
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

Outcome lift_golden() {
    Outcome out;
    const int m = 4;
    const auto start = std::chrono::steady_clock::now();
    RationalSource src(2024);
    kg_oracle::DiagonalData data{m, normal_eta(m, src), 2 - x(1) + x(2) * x(3), 1, 3 * z().pow(2)};
    const DiffOp h = make_klein_gordon(make_metric(diag(data.diag)), data.f1, data.f2, z().pow(3));
    Lifter lifter(h);
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SamplerConfig cfg;
        cfg.count = 1;
        cfg.seed = seed;
        cfg.base_point = std::vector<Scalar>(m, Scalar(0));
        const SampleSet pts = sample_kernel(lifter, 0, cfg);
        if (pts.points.empty()) {
            out.require(false, "sampler failed at seed " + std::to_string(seed));
            continue;
        }
        const JetPoint& b = pts.points.front();
        const LiftResult r = lifter.lift(b);
        for (const auto& [J, v] : kg_oracle::expected_top(data, b))
            out.require(r.point.jet(1, J) == v, "coefficient mismatch at seed " + std::to_string(seed));
        out.require(r.point.project(2) == b, "lift does not project back");
        ++checked;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(secs < 60, "runtime " + std::to_string(secs) + " s");
    out.detail = out.pass ? std::to_string(checked) + " seeds, " + std::to_string(secs) + " s" : out.detail;
    return out;
}

Outcome integrability_verdict() {
    Outcome out;
    std::mt19937_64 rng(5);
    const std::vector<std::pair<std::string, MetricSpec>> metrics{
        {"Minkowski", minkowski(3)},
        {"curved", make_metric(diag({1 + x(2).pow(2), -(1 + x(1) * x(3)), -(2 + x(2).pow(2))}))}};
    for (const auto& [name, g] : metrics) {
        const DiffOp h = make_klein_gordon(g, random_poly(rng, 3, 2), 1, z().pow(3));
        CheckConfig cfg;
        cfg.sampler.count = 6;
        cfg.sampler.seed = 3;
        const IntegrabilityReport r = check_conditions(h, cfg);
        out.require(r.symbol.holds && r.rank.holds && r.lift.holds, name + ": a condition fails");
        out.require(r.rank.profile.certified, name + ": rank not certified");
        out.require(r.verdict == Verdict::FormallyIntegrable, name + ": " + verdict_name(r.verdict));
    }
    return out;
}

Outcome spencer_vanishing() {
    Outcome out;
    for (int m = 2; m <= 4; ++m) {
        const DiffOp h = make_klein_gordon(minkowski(m), 0, 0, 0);
        const SampleSet pts = sample_kernel(h, 0, SamplerConfig{});
        out.require(!pts.points.empty(), "no kernel point");
        if (pts.points.empty()) continue;
        const SymbolicSystem g = symbolic_system_at(h, pts.points.front());
        const int qmax = h.k + 3;
        const auto dims = cohomology_dims(g, m, qmax);
        for (int p = 0; p <= m; ++p)
            for (int q = 2; q <= qmax; ++q)
                out.require(dims[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] == 0,
                            "H^{" + std::to_string(p) + "," + std::to_string(q) + "} != 0 at m=" + std::to_string(m));
        for (int p = 0; p < m; ++p)
            for (int q = 1; q <= qmax; ++q)
                out.require((spencer_delta(p + 1, q - 1, m, 1) * spencer_delta(p, q, m, 1)).is_zero(),
                            "delta^2 != 0");
    }
    return out;
}

Outcome symbol_diagram() {
    Outcome out;
    std::mt19937_64 rng(19);
    std::vector<LinearCoefficients> ops;
    LinearCoefficients grad{3, 1, 3, 1, {}};
    for (int i = 0; i < 3; ++i) {
        grad.coeffs[{1, i + 1, MultiIndex::unit(3, static_cast<std::size_t>(i))}] = 1 + x(1 + (i + 1) % 3).pow(2);
        grad.coeffs[{1, i + 1, MultiIndex(3)}] = x(i + 1);
    }
    ops.push_back(grad);
    LinearCoefficients lap{2, 1, 1, 2, {}};
    lap.coeffs[{1, 1, MultiIndex{2, 0}}] = 1;
    lap.coeffs[{1, 1, MultiIndex{0, 2}}] = 1;
    ops.push_back(lap);
    LinearCoefficients third{2, 1, 1, 3, {}};
    for (const auto& I : enumerate({2, 0, 3})) {
        Expr c = rnd(rng) + rnd(rng) * x(1) + rnd(rng) * x(2).pow(2);
        if (!c.is_zero()) third.coeffs[{1, 1, I}] = c;
    }
    ops.push_back(third);
    for (const auto& c : ops) {
        const DiffOp h = classical_to_bundle(c);
        std::vector<JetPoint> pts;
        std::vector<std::vector<Scalar>> covs;
        for (int s = 0; s < 50; ++s) {
            pts.push_back(random_jet(h.source(), rng));
            covs.push_back(random_vector(static_cast<std::size_t>(c.m), rng));
        }
        const DiagramReport r = check_linear_symbol_diagram(c, h, pts, covs);
        out.require(r.pass && r.checked == 50, "diagram fails: " + r.witness);
    }
    return out;
}

Outcome prolongation_residuals() {
    Outcome out;
    const DiffOp h = make_op(2, 1, 2, {Expr::var(VarRef::jet_var(1, MultiIndex{2, 0})) -
                                       Expr::var(VarRef::jet_var(1, MultiIndex{0, 2}))});
    const std::vector<std::vector<Scalar>> points{{0, 0}, {1, -2}, {Scalar(1, 3), Scalar(5, 2)}};
    for (int l = 0; l <= 4; ++l) {
        const DiffOp p = prolong_op(h, l);
        for (int d = 0; d <= 5; ++d) {
            const SectionPoly psi{{(x(1) + x(2)).pow(d)}};
            for (const auto& row : residual_of_section(p, psi, points))
                for (const auto& v : row)
                    out.require(v == 0, "nonzero at l=" + std::to_string(l) + ", d=" + std::to_string(d));
        }
    }
    return out;
}

Outcome codimension_law() {
    Outcome out;
    std::vector<DiffOp> ops;
    ops.push_back(make_op(1, 1, 2, {Expr::var(VarRef::jet_var(1, MultiIndex{2})) +
                                    Expr::var(VarRef::jet_var(1, MultiIndex{0})).pow(3)}));
    ops.push_back(make_klein_gordon(minkowski(2), 1 + x(1), 1, z().pow(3)));
    ops.push_back(make_klein_gordon(minkowski(3), x(2), 1, z().pow(3)));
    for (const auto& h : ops)
        for (int l = 0; l <= 3; ++l) {
            SamplerConfig cfg;
            cfg.count = 25;
            cfg.seed = static_cast<std::uint64_t>(40 + l);
            const CodimReport r = variety_codim(h, l, cfg);
            const std::size_t expected = dim_F(static_cast<std::size_t>(h.m), 0, l);
            out.require(r.observed.size() == 25, "sampler returned fewer than 25 points");
            for (auto c : r.observed)
                out.require(c == expected, "codim " + std::to_string(c) + " != " + std::to_string(expected) +
                                               " at m=" + std::to_string(h.m) + ", l=" + std::to_string(l));
        }
    return out;
}

Outcome formal_order6() {
    Outcome out;
    const MetricSpec g = make_metric(diag({1 + x(2).pow(2) / 4, -(1 + x(1) * x(2) / 2)}));
    const DiffOp h = make_klein_gordon(g, 1 + x(1) - x(2).pow(2), 1, z().pow(3));
    SamplerConfig cfg;
    cfg.count = 1;
    cfg.seed = 12;
    cfg.base_point = std::vector<Scalar>{Scalar(1, 2), Scalar(-1)};
    const SampleSet seeds = sample_kernel(h, 0, cfg);
    if (seeds.points.empty()) return {false, "no kernel point"};
    FreeDataPolicy policy;
    policy.kind = FreeDataPolicy::Kind::Random;
    policy.seed = 6;
    const FormalSolution sol = formal_solve(h, seeds.points[0], 6, policy);
    for (int r = 0; r <= 4; ++r) out.require(verify_residual(sol, r).exact_zero, "residual at " + std::to_string(r));
    SymbolicSystem sys = symbolic_system_at(h, seeds.points[0]);
    prolong_system(sys, 4);
    out.require(sol.free_counts.size() == 4, "expected four lifts");
    for (std::size_t l = 0; l < sol.free_counts.size(); ++l)
        out.require(sol.free_counts[l] == sys.dim(3 + static_cast<int>(l)), "free count at lift " + std::to_string(l));
    return out;
}

Outcome tensor_splitting() {
    Outcome out;
    RationalSource src(8);
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> step(0, 2);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::size_t> dv{1 + step(rng)}, dw{1 + step(rng)};
        for (int i = 1; i < 5; ++i) {
            dv.push_back(std::min<std::size_t>(6, dv.back() + step(rng)));
            dw.push_back(std::min<std::size_t>(6, dw.back() + step(rng)));
        }
        const LinearTower v = random_linear_tower(dv, src), w = random_linear_tower(dw, src);
        const TensorTowerReport r = tensor_tower(v, w);
        out.require(r.pass(), "library report fails");
        for (const auto& [tower, split] : {std::pair{&v, &r.left}, std::pair{&w, &r.right}})
            for (std::size_t i = 0; i < tower->dims.size(); ++i)
                for (std::size_t k = i; k <= 4 && k < tower->dims.size(); ++k) {
                    RationalMatrix chain = RationalMatrix::identity(tower->dims[i]);
                    for (std::size_t s = i; s < k; ++s) chain = chain * tower->steps[s];
                    out.require(split->lifted[i] == chain * split->lifted[k], "lifted maps incompatible");
                }
        for (std::size_t k = 0; k <= 4; ++k) {
            std::size_t sum = 0;
            for (std::size_t i = 0; i <= k; ++i)
                for (std::size_t j = 0; j <= k; ++j) sum += r.left.kernels[i].cols() * r.right.kernels[j].cols();
            out.require(r.product.dims[k] == dv[k] * dw[k] && sum == dv[k] * dw[k], "dimension identity");
        }
    }
    return out;
}

LocalFunction random_function(const Tower& t, int level, std::mt19937_64& rng) {
    const auto& coords = t.level(level).coords;
    std::uniform_int_distribution<std::size_t> pick(0, coords.size() - 1);
    std::uniform_int_distribution<int> deg(0, 3);
    Expr f;
    for (int s = 0; s < 4; ++s) {
        Expr mono = rnd(rng);
        for (int d = deg(rng); d > 0; --d) mono *= Expr::var(coords[pick(rng)]);
        f += mono;
    }
    return {level, f};
}

LocalForm random_form(const Tower& t, int level, int degree, std::mt19937_64& rng) {
    LocalForm w;
    w.level = level;
    w.degree = degree;
    std::uniform_int_distribution<int> slot(0, static_cast<int>(t.dim(level)) - 1);
    for (int s = 0; s < 3; ++s) {
        std::vector<int> idx;
        while (static_cast<int>(idx.size()) < degree) {
            const int c = slot(rng);
            if (std::find(idx.begin(), idx.end(), c) == idx.end()) idx.push_back(c);
        }
        w.add(idx, random_function(t, level, rng).f);
    }
    return w;
}

Outcome pfd_calculus() {
    Outcome out;
    Tower t = make_jet_tower(2, 1, 6);
    std::mt19937_64 rng(9);
    for (int s = 0; s < 10; ++s) {
        const int lvl = s % 4;
        const LocalForm a = random_form(t, lvl, 1, rng), b = random_form(t, 1 + s % 3, 2, rng);
        out.require(exterior_d(t, exterior_d(t, a)).is_zero(), "d d a != 0");
        out.require(exterior_d(t, exterior_d(t, b)).is_zero(), "d d b != 0");
        LocalForm neg = wedge(t, a, exterior_d(t, b));
        for (auto& [I, c] : neg.coeffs) c = -c;
        out.require(forms_equal(t, exterior_d(t, wedge(t, a, b)), form_add(t, wedge(t, exterior_d(t, a), b), neg)),
                    "Leibniz rule fails");
    }
    const LocalVectorField d1 = total_derivative_field(2, 1, 1), d2 = total_derivative_field(2, 1, 2);
    const LocalVectorField br = lie_bracket(t, d1, d2);
    for (int s = 0; s < 20; ++s) {
        const LocalFunction f = random_function(t, s % 4, rng);
        out.require(vf_apply(t, br, f).f.is_zero(), "[D1, D2] f != 0");
        out.require(vf_apply(t, d1, vf_apply(t, d2, f)).f == vf_apply(t, d2, vf_apply(t, d1, f)).f,
                    "D1 D2 f != D2 D1 f");
    }
    for (int trial = 0; trial < 10; ++trial) {
        const JetPoint data = random_jet({2, 1, 4}, rng);
        const SectionPoly psi = borel_realize(data);
        out.require(jet_of_section(psi, 2, data.base_point(), 4) == data, "Borel round trip");
    }
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism_and_parsing() {
    Outcome out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(JETFORGE_TEST_DATA))
        if (e.path().extension() == ".jf") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    out.require(files.size() >= 10, "corpus has fewer than 10 files");
    for (const auto& f : files) {
        const ProblemSpec a = parse_problem(slurp(f));
        const std::string printed = print_problem(a);
        const ProblemSpec b = parse_problem(printed);
        out.require(a == b && print_problem(b) == printed, "round trip fails on " + f.filename().string());
        RunFlags flags;
        flags.seed = 17;
        out.require(emit_json(run_command(a, "run", flags)) == emit_json(run_command(b, "run", flags)),
                    "JSON differs on " + f.filename().string());
    }
    out.detail = out.pass ? std::to_string(files.size()) + " files" : out.detail;
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Klein-Gordon lift golden test", lift_golden},
        {"integrability verdict", integrability_verdict},
        {"Spencer vanishing", spencer_vanishing},
        {"symbol diagram", symbol_diagram},
        {"prolongation residuals", prolongation_residuals},
        {"codimension law", codimension_law},
        {"formal solution to order 6", formal_order6},
        {"tensor tower splitting", tensor_splitting},
        {"pfd calculus", pfd_calculus},
        {"determinism and parsing", determinism_and_parsing},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first;
        if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
        std::cout << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
