#pragma once

#include <map>
#include <vector>

#include "jetforge/symbols.hpp"

namespace jetforge {

/// Coordinates on Sym^q (x) R^n: (a, J), a outer, |J| = q graded lex.
std::size_t sym_dim(int m, int n, int q);

/// Increasing p-subsets of {0..m-1} in lexicographic order; the basis
/// e_S = e_s1 ^ ... ^ e_sp of Lambda^p.
std::vector<std::vector<int>> wedge_basis(int m, int p);

/// The symbolic system of an operator at a point. Levels below the operator
/// order are the full spaces; level k is the kernel of the symbol; higher
/// levels are prolongations.
struct SymbolicSystem {
    int m = 1, n = 1, k = 0;
    JetPoint point;
    RationalMatrix functional;  // rows b, columns (a, I) with |I| = k
    bool symbol_zero = false;   // functional vanishes at the point
    std::map<int, RationalMatrix> levels;  // q -> basis (columns) of g_q, q >= k

    /// Basis of g_q; identity for q < k. Throws when q has not been computed.
    RationalMatrix basis(int q) const;
    std::size_t dim(int q) const;
    int top() const { return levels.empty() ? k - 1 : levels.rbegin()->first; }
};

/// Throws PreconditionError when the point does not carry rational data for
/// every coefficient of the symbol.
SymbolicSystem symbolic_system_at(const DiffOp& h, const JetPoint& a);
/// A system given directly by its order-k kernel basis.
SymbolicSystem symbolic_system_from(int m, int n, int k, RationalMatrix g_k);

/// Matrix of the contraction T -> (1/(q+1)) dT/dxi_i from Sym^(q+1) (x) R^n
/// to Sym^q (x) R^n (0-based direction).
RationalMatrix contraction(int m, int n, int q, int direction);

/// Adds levels up to k + l (g_(q+1) = {T : every contraction lies in g_q}).
void prolong_system(SymbolicSystem& g, int l);

/// delta: Lambda^p (x) Sym^q (x) R^n -> Lambda^(p+1) (x) Sym^(q-1) (x) R^n.
/// Row and column order: wedge subset outer, then (a, J).
RationalMatrix spencer_delta(int p, int q, int m, int n);

/// dims[p][q] = dim H^(p,q) for 0 <= p <= pmax, 0 <= q <= qmax. Missing
/// prolongations (up to qmax + 1) are computed on a copy.
std::vector<std::vector<std::size_t>> cohomology_dims(const SymbolicSystem& g, int pmax, int qmax);

}  // namespace jetforge
