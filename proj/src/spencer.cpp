#include "jetforge/spencer.hpp"

#include <algorithm>
#include <future>

namespace jetforge {

std::size_t sym_dim(int m, int n, int q) {
    if (q < 0) return 0;
    return static_cast<std::size_t>(n) * dim_F(static_cast<std::size_t>(m), q, q);
}

std::vector<std::vector<int>> wedge_basis(int m, int p) {
    std::vector<std::vector<int>> out;
    if (p < 0 || p > m) return out;
    std::vector<int> s(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) s[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(s);
        int i = p - 1;
        while (i >= 0 && s[static_cast<std::size_t>(i)] == m - p + i) --i;
        if (i < 0) break;
        ++s[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < p; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

RationalMatrix SymbolicSystem::basis(int q) const {
    if (q < k) return RationalMatrix::identity(sym_dim(m, n, q));
    auto it = levels.find(q);
    if (it == levels.end())
        throw PreconditionError("symbolic system level " + std::to_string(q) + " has not been computed");
    return it->second;
}

std::size_t SymbolicSystem::dim(int q) const {
    if (q < k) return sym_dim(m, n, q);
    return basis(q).cols();
}

SymbolicSystem symbolic_system_at(const DiffOp& h, const JetPoint& a) {
    if (a.order() < h.k) throw PreconditionError("symbolic_system_at: point order below operator order");
    SymbolicSystem g;
    g.m = h.m;
    g.n = h.n;
    g.k = h.k;
    g.point = a;
    g.functional = symbol_of(h).functional(a.assignment());
    g.symbol_zero = g.functional.is_zero();
    g.levels.emplace(h.k, kernel_basis(g.functional));
    return g;
}

SymbolicSystem symbolic_system_from(int m, int n, int k, RationalMatrix g_k) {
    if (g_k.rows() != sym_dim(m, n, k)) throw PreconditionError("symbolic_system_from: basis has wrong row count");
    SymbolicSystem g;
    g.m = m;
    g.n = n;
    g.k = k;
    g.symbol_zero = g_k.cols() == g_k.rows();
    g.levels.emplace(k, std::move(g_k));
    return g;
}

RationalMatrix contraction(int m, int n, int q, int direction) {
    const auto src = enumerate_degree(static_cast<std::size_t>(m), q + 1);
    const std::size_t ds = src.size(), dt = dim_F(static_cast<std::size_t>(m), q, q);
    RationalMatrix c(static_cast<std::size_t>(n) * dt, static_cast<std::size_t>(n) * ds);
    const auto axis = static_cast<std::size_t>(direction);
    for (std::size_t j = 0; j < ds; ++j) {
        if (src[j][axis] == 0) continue;
        MultiIndex I = *src[j].offset(axis, -1);
        Scalar w(src[j][axis], q + 1);
        w.canonicalize();
        const std::size_t row = grlex_position_in_degree(I);
        for (int a = 0; a < n; ++a)
            c(static_cast<std::size_t>(a) * dt + row, static_cast<std::size_t>(a) * ds + j) = w;
    }
    return c;
}

void prolong_system(SymbolicSystem& g, int l) {
    for (int q = g.top(); q < g.k + l; ++q) {
        RationalMatrix annihilator = kernel_basis(g.basis(q).transpose()).transpose();
        const std::size_t cols = sym_dim(g.m, g.n, q + 1);
        if (annihilator.rows() == 0) {
            g.levels[q + 1] = RationalMatrix::identity(cols);
            continue;
        }
        RationalMatrix conditions(0, cols);
        for (int i = 0; i < g.m; ++i) conditions = vstack(conditions, annihilator * contraction(g.m, g.n, q, i));
        g.levels[q + 1] = kernel_basis(conditions);
    }
}

RationalMatrix spencer_delta(int p, int q, int m, int n) {
    const auto src_wedge = wedge_basis(m, p);
    const auto dst_wedge = wedge_basis(m, p + 1);
    const std::size_t ds = sym_dim(m, n, q), dt = sym_dim(m, n, q - 1);
    RationalMatrix d(dst_wedge.size() * dt, src_wedge.size() * ds);
    if (q == 0 || dst_wedge.empty()) return d;
    for (std::size_t s = 0; s < src_wedge.size(); ++s) {
        const auto& S = src_wedge[s];
        for (int i = 0; i < m; ++i) {
            if (std::find(S.begin(), S.end(), i) != S.end()) continue;
            // e_i ^ e_S reordered: sign (-1)^{#{s in S : s < i}}.
            std::vector<int> T = S;
            T.insert(std::lower_bound(T.begin(), T.end(), i), i);
            const auto before = std::count_if(S.begin(), S.end(), [i](int v) { return v < i; });
            const std::size_t t = static_cast<std::size_t>(
                std::lower_bound(dst_wedge.begin(), dst_wedge.end(), T) - dst_wedge.begin());
            RationalMatrix c = contraction(m, n, q - 1, i);
            const bool negative = before % 2 != 0;
            for (std::size_t r = 0; r < dt; ++r)
                for (std::size_t col = 0; col < ds; ++col) {
                    const Scalar& v = c(r, col);
                    if (v == 0) continue;
                    d(t * dt + r, s * ds + col) = negative ? Scalar(-v) : v;
                }
        }
    }
    return d;
}

std::vector<std::vector<std::size_t>> cohomology_dims(const SymbolicSystem& g0, int pmax, int qmax) {
    SymbolicSystem g = g0;
    prolong_system(g, std::max(0, qmax + 1 - g.k));
    pmax = std::min(pmax, g.m);

    // rank(delta_{p,q} restricted to Lambda^p (x) g_q)
    auto restricted_rank = [&g](int p, int q) -> std::size_t {
        if (p < 0 || p > g.m || q < 0) return 0;
        RationalMatrix E = kron(RationalMatrix::identity(binomial(static_cast<std::size_t>(g.m),
                                                                  static_cast<std::size_t>(p))),
                                g.basis(q));
        RationalMatrix d = spencer_delta(p, q, g.m, g.n);
        if (d.rows() == 0 || E.cols() == 0) return 0;
        return rank(d * E);
    };

    std::vector<std::vector<std::future<std::size_t>>> ranks;
    for (int p = -1; p <= pmax; ++p) {
        ranks.emplace_back();
        for (int q = 0; q <= qmax + 1; ++q) ranks.back().push_back(std::async(std::launch::async, restricted_rank, p, q));
    }
    std::vector<std::vector<std::size_t>> r(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i)
        for (auto& f : ranks[i]) r[i].push_back(f.get());

    std::vector<std::vector<std::size_t>> dims(static_cast<std::size_t>(pmax + 1),
                                               std::vector<std::size_t>(static_cast<std::size_t>(qmax + 1)));
    for (int p = 0; p <= pmax; ++p)
        for (int q = 0; q <= qmax; ++q) {
            const std::size_t chain = binomial(static_cast<std::size_t>(g.m), static_cast<std::size_t>(p)) * g.dim(q);
            const std::size_t kernel = chain - r[static_cast<std::size_t>(p + 1)][static_cast<std::size_t>(q)];
            const std::size_t image = r[static_cast<std::size_t>(p)][static_cast<std::size_t>(q + 1)];
            dims[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = kernel - image;
        }
    return dims;
}

}  // namespace jetforge
