#pragma once

// Closed-form third-order jet of a point of ker(h) for the Klein-Gordon
// operator with a diagonal metric that equals diag(1,-1,...,-1) at the
// base point. Used as an oracle by the unit and acceptance tests; it
// recomputes Christoffel symbols from the diagonal formulas rather than
// the general Levi-Civita contraction used by the library.

#include <map>
#include <vector>

#include "jetforge/jet.hpp"

namespace kg_oracle {

using jetforge::Expr;
using jetforge::MultiIndex;
using jetforge::Scalar;
using jetforge::VarRef;

struct DiagonalData {
    int m;
    std::vector<Expr> diag;  // g_ii
    Expr f1;
    Scalar f2;               // constant coefficient of K
    Expr k_prime;            // K'(z) as an expression in the parameter z
};

inline Expr gamma(const DiagonalData& d, int k, int i, int j) {
    auto dx = [](const Expr& e, int axis) { return jetforge::differentiate(e, VarRef::base(axis + 1)); };
    const Expr& gk = d.diag[static_cast<std::size_t>(k)];
    if (i == k && j == k) return dx(gk, k) / (2 * gk);
    if (i == k) return dx(gk, j) / (2 * gk);
    if (j == k) return dx(gk, i) / (2 * gk);
    if (i == j) return -dx(d.diag[static_cast<std::size_t>(i)], k) / (2 * gk);
    return Expr();
}

/// Expected order-3 coordinates: u_(1_11l) from the closed form, zero for
/// every other |J| = 3.
inline std::map<MultiIndex, Scalar> expected_top(const DiagonalData& d, const jetforge::JetPoint& b) {
    const int m = d.m;
    const auto ms = static_cast<std::size_t>(m);
    jetforge::Assignment at = b.assignment();
    at.set(VarRef::param("z"), b.jet(1, MultiIndex(ms)));
    auto ev = [&at](const Expr& e) { return jetforge::evaluate(e, at); };
    auto dx = [](const Expr& e, int axis) { return jetforge::differentiate(e, VarRef::base(axis + 1)); };
    auto u = [&b, ms](std::initializer_list<std::size_t> slots) { return b.jet(1, jetforge::ones_at(ms, slots)); };

    std::map<MultiIndex, Scalar> out;
    for (const auto& J : jetforge::enumerate_degree(ms, 3)) out[J] = 0;
    for (int l = 0; l < m; ++l) {
        const auto ls = static_cast<std::size_t>(l);
        Scalar v = 0;
        for (int i = 0; i < m; ++i) {
            const auto is = static_cast<std::size_t>(i);
            const Expr inv = Expr(1) / d.diag[is];
            const Expr d_inv = -dx(d.diag[is], l) / d.diag[is].pow(2);
            v -= ev(d_inv) * u({is, is});
            for (int k = 0; k < m; ++k) {
                const auto ks = static_cast<std::size_t>(k);
                const Expr g = gamma(d, k, i, i);
                v += ev(d_inv) * ev(g) * u({ks});
                v += ev(inv) * ev(dx(g, l)) * u({ks});
                v += ev(inv) * ev(g) * u({ls, ks});
            }
        }
        v -= ev(dx(d.f1, l)) * u({});
        v -= ev(d.f1) * u({ls});
        v -= d.f2 * ev(d.k_prime) * u({ls});
        out[jetforge::ones_at(ms, {0, 0, ls})] = v;
    }
    return out;
}

}  // namespace kg_oracle
