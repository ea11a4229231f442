#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jetforge/jet.hpp"
#include "jetforge/pfd.hpp"

namespace jetforge {

struct KleinGordonDef {
    Expr f1, f2, k;  // k in the parameter z
    bool operator==(const KleinGordonDef&) const = default;
};

struct OperatorDef {
    std::string name = "h";
    std::vector<Expr> components;          // explicit operator
    std::optional<KleinGordonDef> klein_gordon;
    bool operator==(const OperatorDef&) const = default;
};

struct QueryDef {
    std::string name;
    std::vector<std::pair<std::string, std::string>> args;  // in file order
    bool operator==(const QueryDef&) const = default;
};

/// Level descriptions of a user tower: level 0 gives only a dimension, level
/// i > 0 also the previous level's coordinates in y1..y<dim>.
struct TowerDef {
    std::vector<std::size_t> dims;
    std::vector<std::vector<Expr>> down;  // down[i] for level i, empty at 0
    bool operator==(const TowerDef&) const = default;
    Tower build() const;
};

/// One problem file: a chart of the jet bundle and one operator family.
struct ProblemSpec {
    int m = 1, n = 1, k = 1;
    bool float_mode = false;            // decimal literals or `mode float;`
    std::vector<std::string> primitives;
    std::map<std::pair<int, int>, Expr> metric;  // 1-based (i, j) as written
    std::vector<std::pair<std::string, Expr>> params;
    std::optional<OperatorDef> op;
    std::optional<TowerDef> tower;
    std::vector<QueryDef> queries;

    bool operator==(const ProblemSpec&) const = default;

    /// Full symmetric metric; Minkowski when no block was given.
    MetricSpec metric_spec() const;
    /// Throws SemanticError when no operator is declared.
    DiffOp build_operator() const;
};

/// Grammar:
///   base m=<int>; fiber n=<int>; order k=<int>;
///   [mode exact|float;] [primitive <name>;]...
///   [metric { g[i][j] = <expr>; ... }]
///   [param <name> = <expr>;]...
///   [operator <name> = <expr> | [<expr>, ...] | klein_gordon(F1=<expr>, F2=<expr>, K=<expr in z>);]
///   [tower { level <dim>; level <dim> -> (<expr>, ...); ... }]
///   [query <name>(<key>=<value>, ...);]...
/// Throws ParseError (syntax) or SemanticError (names, ranges, orders).
ProblemSpec parse_problem(std::string_view text);
/// Canonical text; parse_problem(print_problem(p)) == p.
std::string print_problem(const ProblemSpec& p);

}  // namespace jetforge
