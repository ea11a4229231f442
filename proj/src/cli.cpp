#include "jetforge/cli.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace jetforge {

namespace {

constexpr double kFloatTol = 1e-9;

// Query arguments with command-line overrides on top.
class Args {
public:
    Args(const QueryDef* q, const RunFlags& f, const ProblemSpec& problem) : flags_(f), problem_(problem) {
        if (q)
            for (const auto& [k, v] : q->args) args_[k] = v;
    }

    int integer(const std::string& key, const std::optional<int>& flag, int fallback) {
        if (flag) return record(key, *flag);
        auto it = args_.find(key);
        if (it == args_.end()) return record(key, fallback);
        try {
            return record(key, std::stoi(it->second));
        } catch (const std::exception&) {
            throw UsageError("argument " + key + "=" + it->second + " is not an integer");
        }
    }
    int order(int fallback) { return integer("order", flags_.order, fallback); }
    std::size_t samples() {
        return static_cast<std::size_t>(integer("samples", flags_.samples ? std::optional<int>(static_cast<int>(*flags_.samples)) : std::nullopt, 10));
    }
    std::uint64_t seed() {
        if (flags_.seed) return static_cast<std::uint64_t>(record("seed", static_cast<long long>(*flags_.seed)));
        auto it = args_.find("seed");
        const long long v = it == args_.end() ? 1 : std::stoll(it->second);
        return static_cast<std::uint64_t>(record("seed", v));
    }
    RankMode mode() {
        RankMode m = problem_.float_mode ? RankMode::Float : RankMode::Exact;
        if (auto it = args_.find("mode"); it != args_.end()) m = parse_mode(it->second);
        if (flags_.mode) m = *flags_.mode;
        used_["mode"] = m == RankMode::Exact ? "exact" : "float";
        return m;
    }
    std::string word(const std::string& key, const std::optional<std::string>& flag, const std::string& fallback) {
        std::string v = fallback;
        if (auto it = args_.find(key); it != args_.end()) v = it->second;
        if (flag) v = *flag;
        used_[key] = v;
        return v;
    }
    const Report& used() const { return used_; }

    static RankMode parse_mode(const std::string& s) {
        if (s == "exact") return RankMode::Exact;
        if (s == "float") return RankMode::Float;
        throw UsageError("mode must be exact or float, got '" + s + "'");
    }

private:
    template <class T>
    T record(const std::string& key, T v) {
        used_[key] = v;
        return v;
    }

    std::map<std::string, std::string> args_;
    const RunFlags& flags_;
    const ProblemSpec& problem_;
    Report used_ = Report::object();
};

std::string sampled_tag(std::size_t n, std::uint64_t seed) {
    return "sampled(" + std::to_string(n) + ", " + std::to_string(seed) + ")";
}

std::string float_tag() {
    std::ostringstream s;
    s << "float(" << kFloatTol << ")";
    return s.str();
}

Report scalar_json(const Scalar& q) { return to_string(q); }

Report point_json(std::span<const Scalar> v) {
    Report a = Report::array();
    for (const auto& s : v) a.push_back(scalar_json(s));
    return a;
}

Report index_json(const MultiIndex& I) { return I.exponents(); }

SamplerConfig sampler_config(std::size_t count, std::uint64_t seed) {
    SamplerConfig c;
    c.count = count;
    c.seed = seed;
    return c;
}

// Points of ker(h) for scalar operators, random jets otherwise.
SampleSet sample_points(const DiffOp& h, std::size_t count, std::uint64_t seed) {
    if (h.target_dim() == 1) return sample_kernel(h, 0, sampler_config(count, seed));
    SampleSet s;
    RationalSource src(seed);
    for (std::size_t i = 0; i < count; ++i) {
        JetPoint p(h.source());
        std::vector<Scalar> v(p.values().size());
        for (auto& x : v) x = src.next();
        s.points.emplace_back(h.source(), std::move(v));
    }
    s.note = "random jets (the operator has several components)";
    return s;
}

Report rank_json(const RankReport& r) {
    Report j;
    j["mode"] = r.mode == RankMode::Exact ? "exact" : "float";
    j["generic_rank"] = r.generic_rank ? Report(*r.generic_rank) : Report(nullptr);
    j["sampled"] = r.sampled;
    j["min"] = r.min_rank;
    j["max"] = r.max_rank;
    j["certified"] = r.certified;
    j["sampler_failures"] = r.sampler_failures;
    j["note"] = r.note;
    return j;
}

Report cmd_prolong(const ProblemSpec& problem, Args& a) {
    const DiffOp h = problem.build_operator();
    const int l = a.order(1);
    if (l < 0) throw UsageError("order must be nonnegative");
    const DiffOp p = prolong_op(h, l);
    Report r;
    r["provenance"] = "exact";
    r["components"] = p.components.size();
    Report entries = Report::array();
    for (std::size_t i = 0; i < p.components.size(); ++i) {
        Report e;
        e["outer"] = index_json(p.labels[i].first);
        e["component"] = p.labels[i].second + 1;
        e["expr"] = p.components[i].str(h.n);
        entries.push_back(std::move(e));
    }
    r["entries"] = std::move(entries);
    r["pass"] = true;
    return r;
}

Report cmd_symbol(const ProblemSpec& problem, Args& a) {
    const DiffOp h = problem.build_operator();
    const std::size_t samples = a.samples();
    const std::uint64_t seed = a.seed();
    const RankMode mode = a.mode();
    const SymbolPoly s = symbol_of(h);
    Report r;
    Report coeffs = Report::array();
    for (int b = 1; b <= static_cast<int>(h.target_dim()); ++b)
        for (int c = 1; c <= h.n; ++c) {
            const Expr poly = s.in_covectors(c, b);
            if (poly.is_zero()) continue;
            coeffs.push_back({{"fiber", c}, {"target", b}, {"polynomial", poly.str(h.n)}});
        }
    r["symbol"] = std::move(coeffs);
    r["symbol_zero"] = s.is_zero();
    r["linear"] = is_linear(h);
    const SampleSet pts = sample_points(h, samples, seed);
    const RankReport rank = rank_profile(symbol_prolong1(h), pts.points, mode, pts.failures, kFloatTol);
    r["rank"] = rank_json(rank);
    r["expected_rank"] = static_cast<std::size_t>(h.m) * h.target_dim();
    r["provenance"] = rank.mode == RankMode::Float ? float_tag() : (rank.certified ? "exact" : sampled_tag(samples, seed));
    r["pass"] = !s.is_zero() && rank.min_rank == rank.max_rank && (rank.certified || mode == RankMode::Float);
    return r;
}

Report cmd_spencer(const ProblemSpec& problem, Args& a, const RunFlags& flags) {
    const DiffOp h = problem.build_operator();
    const std::uint64_t seed = a.seed();
    const int qmax = a.integer("qmax", flags.qmax, h.k + 3);
    if (qmax < 0) throw UsageError("qmax must be nonnegative");
    const SampleSet pts = sample_points(h, 1, seed);
    if (pts.points.empty()) throw Error("no rational point of ker(h) found");
    const JetPoint& at = pts.points.front();
    const SymbolicSystem g = symbolic_system_at(h, at);
    const auto dims = cohomology_dims(g, h.m, qmax);
    Report r;
    r["point"] = point_json(at.values());
    r["provenance"] = "exact at " + sampled_tag(1, seed);
    Report table = Report::array();
    Report nonzero = Report::array();
    for (std::size_t p = 0; p < dims.size(); ++p) {
        table.push_back(dims[p]);
        for (std::size_t q = 0; q < dims[p].size(); ++q)
            if (dims[p][q] != 0) nonzero.push_back({p, q, dims[p][q]});
    }
    r["g_dims"] = Report::array();
    for (int q = 0; q <= qmax; ++q) {
        SymbolicSystem copy = g;
        if (q > copy.top()) prolong_system(copy, q - h.k);
        r["g_dims"].push_back(copy.dim(q));
    }
    r["h_dims"] = std::move(table);
    r["nonzero"] = std::move(nonzero);
    bool dd = true;
    for (int p = 0; p + 1 <= h.m; ++p)
        for (int q = 2; q <= qmax; ++q)
            if (!(spencer_delta(p + 1, q - 1, h.m, h.n) * spencer_delta(p, q, h.m, h.n)).is_zero()) dd = false;
    r["delta_squared_zero"] = dd;
    r["pass"] = dd;
    return r;
}

Report cmd_integrability(const ProblemSpec& problem, Args& a) {
    const DiffOp h = problem.build_operator();
    CheckConfig cfg;
    cfg.sampler.count = a.samples();
    cfg.sampler.seed = a.seed();
    cfg.lift_depth = a.order(2);
    cfg.mode = a.mode();
    const IntegrabilityReport rep = check_conditions(h, cfg);
    Report r;
    r["symbol"] = {{"holds", rep.symbol.holds}, {"certified", rep.symbol.certified},
                   {"certificate", rep.symbol.certificate}, {"witnesses", rep.symbol.witnesses},
                   {"checked", rep.symbol.checked}};
    r["rank"] = rank_json(rep.rank.profile);
    r["rank"]["holds"] = rep.rank.holds;
    r["rank"]["expected"] = rep.rank.expected;
    r["lift"] = {{"holds", rep.lift.holds}, {"depth", rep.lift.depth}, {"attempts", rep.lift.attempts},
                 {"failures", rep.lift.failures}, {"free_counts", rep.lift.free_counts},
                 {"diagnostics", rep.lift.diagnostics}};
    r["verdict"] = verdict_name(rep.verdict);
    if (rep.symbol.holds && rep.rank.holds && rep.lift.holds) {
        r["conditions"] = "conditions (1)-(3) satisfied";
    } else {
        std::string failed;
        if (!rep.symbol.holds) failed += " (1)";
        if (!rep.rank.holds) failed += " (2)";
        if (!rep.lift.holds) failed += " (3)";
        r["conditions"] = "not satisfied:" + failed;
    }
    r["sampler_failures"] = rep.sampler_failures;
    r["note"] = rep.note;
    r["provenance"] = cfg.mode == RankMode::Float ? float_tag() : sampled_tag(cfg.sampler.count, cfg.sampler.seed);
    r["pass"] = rep.verdict == Verdict::FormallyIntegrable &&
                (rep.rank.profile.certified || cfg.mode == RankMode::Float);
    return r;
}

FreeDataPolicy read_policy(const std::string& kind, std::uint64_t seed, const std::optional<std::string>& file) {
    FreeDataPolicy policy;
    policy.seed = seed;
    if (kind == "zero") return policy;
    if (kind == "random") {
        policy.kind = FreeDataPolicy::Kind::Random;
        return policy;
    }
    if (kind != "file") throw UsageError("free-data must be zero, random or file");
    if (!file) throw UsageError("--free-data file needs --free-file <path>");
    std::ifstream in(*file);
    if (!in) throw UsageError("cannot open free-data file " + *file);
    Report table;
    try {
        table = Report::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("free-data file: " + std::string(e.what()));
    }
    policy.kind = FreeDataPolicy::Kind::Explicit;
    for (const auto& entry : table) {
        MultiIndex I(entry.at("index").get<std::vector<int>>());
        policy.table[{entry.at("component").get<int>(), I}] = parse_scalar(entry.at("value").get<std::string>());
    }
    return policy;
}

Report cmd_solve(const ProblemSpec& problem, Args& a, const RunFlags& flags) {
    const DiffOp h = problem.build_operator();
    const int order = a.order(h.k + 4);
    const std::uint64_t seed = a.seed();
    const std::string kind = a.word("free", flags.free_data, "zero");
    const FreeDataPolicy policy = read_policy(kind, seed, flags.free_file);
    const SampleSet pts = sample_points(h, 1, seed);
    if (pts.points.empty()) throw Error("no rational point of ker(h) found");
    const FormalSolution sol = formal_solve(h, pts.points.front(), order, policy);
    Report r;
    r["base"] = point_json(sol.base);
    r["order"] = order;
    Report series = Report::array();
    for (std::size_t c = 0; c < sol.components.size(); ++c) {
        Report coeffs = Report::array();
        for (const auto& [I, num, den] : sol.components[c].triples())
            coeffs.push_back({index_json(I), num.get_str(), den.get_str()});
        series.push_back({{"component", c + 1}, {"coefficients", std::move(coeffs)}});
    }
    r["series"] = std::move(series);
    r["free_counts"] = sol.free_counts;
    Report res = Report::array();
    bool ok = true;
    for (int l = 0; l <= order - h.k; ++l) {
        const ResidualReport rr = verify_residual(sol, l);
        ok = ok && rr.exact_zero;
        res.push_back({{"outer_order", l}, {"exact_zero", rr.exact_zero}, {"nonzero", rr.nonzero.size()}});
    }
    r["residuals"] = std::move(res);
    r["provenance"] = "exact at " + sampled_tag(1, seed);
    r["pass"] = ok;
    return r;
}

Report cmd_tower(const ProblemSpec& problem, Args& a) {
    const std::size_t samples = a.samples();
    const std::uint64_t seed = a.seed();
    Report r;
    bool ok = true;
    auto submersions = [&](const Tower& t, int top) {
        Report levels = Report::array();
        for (int i = 0; i <= top; ++i) {
            Report lvl{{"level", i}, {"dim", t.dim(i)}};
            if (i > 0) {
                const SubmersionReport s = check_submersion(t, i, samples, seed);
                lvl["submersion"] = s.pass;
                lvl["ranks"] = s.observed;
                ok = ok && s.pass;
            }
            levels.push_back(std::move(lvl));
        }
        return levels;
    };
    if (problem.tower) {
        const Tower t = problem.tower->build();
        r["tower"] = submersions(t, t.size() - 1);
    }
    if (problem.op) {
        const DiffOp h = problem.build_operator();
        const int top = a.order(2);
        if (top < 0) throw UsageError("order must be nonnegative");
        Tower jets = make_jet_tower(h.m, h.n, h.k + top + 1);
        r["jet_tower"] = submersions(jets, h.k + top + 1);
        EquationSubtower sub(h);
        Report levels = Report::array();
        for (int l = 0; l <= top; ++l) {
            const CodimReport c = sub.dimension_report(l, sampler_config(samples, seed));
            Report lvl{{"outer_order", l}, {"jet_order", h.k + l}, {"expected_dimension", sub.expected_dimension(l)},
                       {"codimension", c.expected}, {"observed_codimension", c.observed}, {"dimension_ok", c.pass}};
            if (h.target_dim() == 1) {
                const LiftWitness w = sub.surjectivity(l, sampler_config(samples, seed + static_cast<std::uint64_t>(l)));
                lvl["lifted"] = w.lifted;
                lvl["sampled"] = w.sampled;
                lvl["free_counts"] = w.free_counts;
                lvl["projection_onto"] = w.pass;
                ok = ok && w.pass;
            }
            ok = ok && c.pass;
            levels.push_back(std::move(lvl));
        }
        r["equation_subtower"] = std::move(levels);
    }
    if (!problem.tower && !problem.op) throw UsageError("tower needs a tower block or an operator");
    r["provenance"] = sampled_tag(samples, seed);
    r["note"] = "submersion and projection properties are sampled, not proved";
    r["pass"] = ok;
    return r;
}

Report dispatch(const ProblemSpec& problem, const std::string& command, const QueryDef* q, const RunFlags& flags) {
    Args a(q, flags, problem);
    Report r;
    r["query"] = command;
    const auto start = std::chrono::steady_clock::now();
    Report body;
    try {
        if (command == "prolong") body = cmd_prolong(problem, a);
        else if (command == "symbol") body = cmd_symbol(problem, a);
        else if (command == "spencer") body = cmd_spencer(problem, a, flags);
        else if (command == "integrability") body = cmd_integrability(problem, a);
        else if (command == "solve") body = cmd_solve(problem, a, flags);
        else if (command == "tower") body = cmd_tower(problem, a);
        else throw UsageError("unknown query '" + command + "'");
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        body = {{"pass", false}, {"error", e.what()}};
    }
    r["args"] = a.used();
    for (auto& [k, v] : body.items()) r[k] = v;
    if (flags.timings)
        r["elapsed_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

void render(std::ostringstream& out, const Report& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool nested = it->is_object() || (it->is_array() && !it->empty() && (it->front().is_object()));
        const std::string key = j.is_object() ? it.key() : "-";
        if (nested) {
            out << pad << key << ":\n";
            render(out, *it, indent + 2);
        } else {
            out << pad << key << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << "\n";
        }
    }
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"prolong", "symbol", "spencer", "integrability", "solve", "tower"};
    return names;
}

bool is_command(const std::string& name) {
    const auto& n = command_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

Report run_command(const ProblemSpec& problem, const std::string& command, const RunFlags& flags) {
    if (command != "run" && !is_command(command)) throw UsageError("unknown command '" + command + "'");
    Report r;
    r["schema"] = kReportSchema;
    r["command"] = command;
    Report summary{{"m", problem.m}, {"n", problem.n}, {"k", problem.k}, {"mode", problem.float_mode ? "float" : "exact"}};
    if (problem.op) {
        Report comps = Report::array();
        try {
            for (const auto& c : problem.build_operator().components) comps.push_back(c.str(problem.n));
        } catch (const Error& e) {
            comps = e.what();
        }
        summary["operator"] = std::move(comps);
    } else {
        summary["operator"] = nullptr;
    }
    r["problem"] = std::move(summary);
    Report results = Report::array();
    if (command == "run") {
        for (const auto& q : problem.queries) {
            if (!is_command(q.name)) throw UsageError("unknown query '" + q.name + "'");
            results.push_back(dispatch(problem, q.name, &q, flags));
        }
    } else {
        bool any = false;
        for (const auto& q : problem.queries)
            if (q.name == command) {
                results.push_back(dispatch(problem, command, &q, flags));
                any = true;
            }
        if (!any) results.push_back(dispatch(problem, command, nullptr, flags));
    }
    bool pass = true;
    for (const auto& res : results) pass = pass && res.value("pass", false);
    r["results"] = std::move(results);
    r["pass"] = pass;
    return r;
}

int report_exit_code(const Report& r) { return r.value("pass", false) ? 0 : 1; }

std::string emit_json(const Report& r) { return r.dump(2) + "\n"; }

std::string emit_text(const Report& r) {
    std::ostringstream out;
    render(out, r, 0);
    return out.str();
}

}  // namespace jetforge
