#include "jetforge/problem.hpp"

#include <sstream>

#include "jetforge/parser.hpp"

namespace jetforge {

namespace {

class ProblemParser {
public:
    explicit ProblemParser(std::string_view text) : ts_(text) {}

    ProblemSpec run() {
        header();
        while (!ts_.at_end()) {
            const Token t = ts_.peek();
            if (t.kind != TokenKind::Ident) ts_.fail("expected a declaration");
            if (t.text == "mode") mode();
            else if (t.text == "primitive") primitive();
            else if (t.text == "metric") metric();
            else if (t.text == "param") param();
            else if (t.text == "operator") op();
            else if (t.text == "tower") tower();
            else if (t.text == "query") query();
            else ts_.fail("unknown declaration '" + t.text + "'");
        }
        if (flags_.saw_decimal) p_.float_mode = true;
        return std::move(p_);
    }

private:
    int header_int(std::string_view keyword, std::string_view name) {
        ts_.expect(keyword);
        ts_.expect(name);
        ts_.expect("=");
        const Token at = ts_.peek();
        const long v = ts_.expect_int();
        ts_.expect(";");
        if (v < 1 || v > 64) throw SemanticError(std::string(name) + " must lie in 1..64", at.line, at.column);
        return static_cast<int>(v);
    }

    void header() {
        p_.m = header_int("base", "m");
        p_.n = header_int("fiber", "n");
        p_.k = header_int("order", "k");
    }

    ExprContext context(bool jets) const {
        ExprContext c;
        c.m = p_.m;
        c.n = p_.n;
        c.order = p_.k;
        c.allow_jets = jets;
        c.allow_covectors = false;
        for (const auto& [name, e] : p_.params) c.definitions[name] = e;
        return c;
    }

    Expr expression(const ExprContext& c) { return parse_expression(ts_, c, flags_); }

    void mode() {
        ts_.expect("mode");
        const Token t = ts_.expect_ident();
        if (t.text == "float") p_.float_mode = true;
        else if (t.text != "exact") ts_.fail_at(t, "mode must be exact or float");
        ts_.expect(";");
    }

    void primitive() {
        ts_.expect("primitive");
        const Token t = ts_.expect_ident();
        ts_.expect(";");
        if (!PrimitiveRegistry::instance().contains(t.text)) PrimitiveRegistry::instance().add_opaque(t.text);
        p_.primitives.push_back(t.text);
    }

    void metric() {
        const Token start = ts_.expect("metric");
        ts_.expect("{");
        const ExprContext c = context(false);
        while (!ts_.accept("}")) {
            ts_.expect("g");
            int ij[2];
            for (int& v : ij) {
                ts_.expect("[");
                const Token at = ts_.peek();
                v = static_cast<int>(ts_.expect_int());
                ts_.expect("]");
                if (v < 1 || v > p_.m) throw SemanticError("metric index out of range", at.line, at.column);
            }
            ts_.expect("=");
            p_.metric[{ij[0], ij[1]}] = expression(c);
            ts_.expect(";");
        }
        for (const auto& [ij, e] : p_.metric) {
            auto it = p_.metric.find({ij.second, ij.first});
            if (it != p_.metric.end() && !(it->second == e))
                throw SemanticError("metric is not symmetric at g[" + std::to_string(ij.first) + "][" +
                                        std::to_string(ij.second) + "]",
                                    start.line, start.column);
        }
    }

    void param() {
        ts_.expect("param");
        const Token name = ts_.expect_ident();
        ts_.expect("=");
        Expr e = expression(context(false));
        ts_.expect(";");
        for (const auto& [n, v] : p_.params)
            if (n == name.text) throw SemanticError("parameter '" + n + "' defined twice", name.line, name.column);
        p_.params.emplace_back(name.text, std::move(e));
    }

    void op() {
        const Token start = ts_.expect("operator");
        if (p_.op) throw SemanticError("only one operator per problem file", start.line, start.column);
        OperatorDef d;
        d.name = ts_.expect_ident().text;
        ts_.expect("=");
        if (ts_.peek().text == "klein_gordon" && ts_.peek(1).text == "(") {
            const Token kg = ts_.next();
            if (p_.n != 1) throw SemanticError("klein_gordon needs fiber n=1", kg.line, kg.column);
            if (p_.k < 2) throw SemanticError("klein_gordon needs order k>=2", kg.line, kg.column);
            ts_.expect("(");
            KleinGordonDef k{Expr(0), Expr(0), Expr(0)};
            bool seen[3] = {false, false, false};
            do {
                const Token key = ts_.expect_ident();
                ts_.expect("=");
                if (key.text == "F1" || key.text == "F2") {
                    (key.text == "F1" ? k.f1 : k.f2) = expression(context(false));
                    seen[key.text == "F1" ? 0 : 1] = true;
                } else if (key.text == "K") {
                    ExprContext c = context(false);
                    c.symbols.insert("z");
                    k.k = expression(c);
                    for (const auto& v : free_vars(k.k))
                        if (!(v == nonlinearity_argument()))
                            throw SemanticError("K may depend on z only", key.line, key.column);
                    seen[2] = true;
                } else {
                    throw SemanticError("unknown klein_gordon argument '" + key.text + "'", key.line, key.column);
                }
            } while (ts_.accept(","));
            ts_.expect(")");
            if (!seen[0] || !seen[1] || !seen[2])
                throw SemanticError("klein_gordon needs F1, F2 and K", kg.line, kg.column);
            d.klein_gordon = std::move(k);
        } else if (ts_.accept("[")) {
            do d.components.push_back(expression(context(true)));
            while (ts_.accept(","));
            ts_.expect("]");
        } else {
            d.components.push_back(expression(context(true)));
        }
        ts_.expect(";");
        p_.op = std::move(d);
    }

    void tower() {
        const Token start = ts_.expect("tower");
        if (p_.tower) throw SemanticError("only one tower per problem file", start.line, start.column);
        ts_.expect("{");
        TowerDef t;
        while (!ts_.accept("}")) {
            ts_.expect("level");
            const Token at = ts_.peek();
            const long dim = ts_.expect_int();
            if (dim < 1) throw SemanticError("level dimension must be positive", at.line, at.column);
            std::vector<Expr> down;
            if (!t.dims.empty()) {
                ts_.expect("-");
                ts_.expect(">");
                ts_.expect("(");
                ExprContext c;
                c.m = 0;
                c.coords = static_cast<int>(dim);
                c.allow_jets = false;
                c.allow_covectors = false;
                for (const auto& [name, e] : p_.params) c.definitions[name] = e;
                do down.push_back(expression(c));
                while (ts_.accept(","));
                ts_.expect(")");
                if (down.size() != t.dims.back())
                    throw SemanticError("connecting map needs " + std::to_string(t.dims.back()) + " components",
                                        at.line, at.column);
            }
            ts_.expect(";");
            t.dims.push_back(static_cast<std::size_t>(dim));
            t.down.push_back(std::move(down));
        }
        if (t.dims.empty()) throw SemanticError("tower without levels", start.line, start.column);
        p_.tower = std::move(t);
    }

    void query() {
        ts_.expect("query");
        QueryDef q;
        q.name = ts_.expect_ident().text;
        ts_.expect("(");
        if (!ts_.accept(")")) {
            do {
                const std::string key = ts_.expect_ident().text;
                ts_.expect("=");
                std::string value;
                if (ts_.accept("-")) value = "-";
                const Token v = ts_.next();
                if (v.kind != TokenKind::Number && v.kind != TokenKind::Ident) ts_.fail_at(v, "expected a value");
                q.args.emplace_back(key, value + v.text);
            } while (ts_.accept(","));
            ts_.expect(")");
        }
        ts_.expect(";");
        p_.queries.push_back(std::move(q));
    }

    TokenStream ts_;
    ParseFlags flags_;
    ProblemSpec p_;
};

std::string join(const std::vector<Expr>& v, int n) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].str(n);
    return s;
}

}  // namespace

Tower TowerDef::build() const {
    std::vector<TowerLevel> levels;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        TowerLevel lvl;
        for (std::size_t j = 1; j <= dims[i]; ++j) lvl.coords.push_back(VarRef::coord(static_cast<int>(j)));
        lvl.down = down[i];
        lvl.label = "level " + std::to_string(i);
        levels.push_back(std::move(lvl));
    }
    return Tower(std::move(levels));
}

MetricSpec ProblemSpec::metric_spec() const {
    if (metric.empty()) return minkowski(m);
    const auto size = static_cast<std::size_t>(m);
    ExprMatrix g(size, std::vector<Expr>(size));
    for (const auto& [ij, e] : metric) {
        const auto i = static_cast<std::size_t>(ij.first - 1), j = static_cast<std::size_t>(ij.second - 1);
        g[i][j] = e;
        g[j][i] = e;
    }
    return make_metric(std::move(g));
}

DiffOp ProblemSpec::build_operator() const {
    if (!op) throw SemanticError("problem declares no operator");
    if (op->klein_gordon) {
        const auto& kg = *op->klein_gordon;
        return make_klein_gordon(metric_spec(), kg.f1, kg.f2, kg.k);
    }
    return make_op(m, n, k, op->components);
}

ProblemSpec parse_problem(std::string_view text) { return ProblemParser(text).run(); }

std::string print_problem(const ProblemSpec& p) {
    std::ostringstream out;
    out << "base m=" << p.m << "; fiber n=" << p.n << "; order k=" << p.k << ";\n";
    if (p.float_mode) out << "mode float;\n";
    for (const auto& name : p.primitives) out << "primitive " << name << ";\n";
    for (const auto& [name, e] : p.params) out << "param " << name << " = " << e.str(p.n) << ";\n";
    if (!p.metric.empty()) {
        out << "metric {\n";
        for (const auto& [ij, e] : p.metric)
            out << "  g[" << ij.first << "][" << ij.second << "] = " << e.str(p.n) << ";\n";
        out << "}\n";
    }
    if (p.op) {
        out << "operator " << p.op->name << " = ";
        if (p.op->klein_gordon) {
            const auto& kg = *p.op->klein_gordon;
            out << "klein_gordon(F1=" << kg.f1.str() << ", F2=" << kg.f2.str() << ", K=" << kg.k.str() << ")";
        } else if (p.op->components.size() == 1) {
            out << p.op->components[0].str(p.n);
        } else {
            out << "[" << join(p.op->components, p.n) << "]";
        }
        out << ";\n";
    }
    if (p.tower) {
        out << "tower {\n";
        for (std::size_t i = 0; i < p.tower->dims.size(); ++i) {
            out << "  level " << p.tower->dims[i];
            if (i > 0) out << " -> (" << join(p.tower->down[i], 1) << ")";
            out << ";\n";
        }
        out << "}\n";
    }
    for (const auto& q : p.queries) {
        out << "query " << q.name << "(";
        for (std::size_t i = 0; i < q.args.size(); ++i) out << (i ? ", " : "") << q.args[i].first << "=" << q.args[i].second;
        out << ");\n";
    }
    return out.str();
}

}  // namespace jetforge
