#include "jetforge/mindex.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace jetforge {

MultiIndex::MultiIndex(std::initializer_list<int> exps) : e_(exps) {
    for (int v : e_)
        if (v < 0) throw std::invalid_argument("MultiIndex: negative exponent");
}

MultiIndex::MultiIndex(std::vector<int> exps) : e_(std::move(exps)) {
    for (int v : e_)
        if (v < 0) throw std::invalid_argument("MultiIndex: negative exponent");
}

MultiIndex MultiIndex::unit(std::size_t m, std::size_t axis) {
    if (axis >= m) throw std::out_of_range("MultiIndex::unit: axis out of range");
    MultiIndex r(m);
    r.e_[axis] = 1;
    return r;
}

int MultiIndex::degree() const { return std::accumulate(e_.begin(), e_.end(), 0); }

std::optional<MultiIndex> MultiIndex::offset(std::size_t axis, int delta) const {
    if (axis >= e_.size()) throw std::out_of_range("MultiIndex::offset: axis out of range");
    if (e_[axis] + delta < 0) return std::nullopt;
    MultiIndex r = *this;
    r.e_[axis] += delta;
    return r;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
    if (o.dim() != dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    MultiIndex r = *this;
    for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] += o.e_[i];
    return r;
}

std::optional<MultiIndex> MultiIndex::minus(const MultiIndex& o) const {
    if (o.dim() != dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    MultiIndex r = *this;
    for (std::size_t i = 0; i < e_.size(); ++i) {
        r.e_[i] -= o.e_[i];
        if (r.e_[i] < 0) return std::nullopt;
    }
    return r;
}

bool MultiIndex::divides(const MultiIndex& o) const {
    if (o.dim() != dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    for (std::size_t i = 0; i < e_.size(); ++i)
        if (e_[i] > o.e_[i]) return false;
    return true;
}

std::string MultiIndex::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < e_.size(); ++i) {
        if (i) os << ',';
        os << e_[i];
    }
    os << ')';
    return os.str();
}

std::strong_ordering grlex_compare(const MultiIndex& a, const MultiIndex& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    if (auto c = a.degree() <=> b.degree(); c != 0) return c;
    for (std::size_t i = 0; i < a.dim(); ++i)
        if (a[i] != b[i]) return b[i] <=> a[i];
    return std::strong_ordering::equal;
}

namespace {

void fill_degree(std::size_t m, int d, std::size_t pos, std::vector<int>& cur,
                 std::vector<MultiIndex>& out) {
    if (pos + 1 == m) {
        cur[pos] = d;
        out.emplace_back(cur);
        return;
    }
    for (int v = d; v >= 0; --v) {
        cur[pos] = v;
        fill_degree(m, d - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

}  // namespace

std::vector<MultiIndex> enumerate_degree(std::size_t m, int d) {
    std::vector<MultiIndex> out;
    if (m == 0 || d < 0) return out;
    std::vector<int> cur(m, 0);
    fill_degree(m, d, 0, cur, out);
    return out;
}

std::vector<MultiIndex> enumerate(const GradedIndexRange& range) {
    if (range.k1 < 0 || range.k1 > range.k2)
        throw std::invalid_argument("GradedIndexRange: need 0 <= k1 <= k2");
    std::vector<MultiIndex> out;
    for (int d = range.k1; d <= range.k2; ++d) {
        auto level = enumerate_degree(range.m, d);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

std::size_t dim_F(std::size_t m, int k1, int k2) {
    if (k1 < 0 || k1 > k2) throw std::invalid_argument("GradedIndexRange: need 0 <= k1 <= k2");
    // C(m + k2, m) - C(m + k1 - 1, m)
    std::size_t upper = binomial(m + static_cast<std::size_t>(k2), m);
    std::size_t lower = k1 == 0 ? 0 : binomial(m + static_cast<std::size_t>(k1) - 1, m);
    return upper - lower;
}

std::size_t dim_F(const GradedIndexRange& range) { return dim_F(range.m, range.k1, range.k2); }

mpz_class factorial(const MultiIndex& I) {
    mpz_class r = 1;
    for (int v : I.exponents()) {
        mpz_class f;
        mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(v));
        r *= f;
    }
    return r;
}

mpz_class multinomial(const MultiIndex& I) {
    mpz_class top;
    mpz_fac_ui(top.get_mpz_t(), static_cast<unsigned long>(I.degree()));
    return top / factorial(I);
}

std::size_t grlex_position_in_degree(const MultiIndex& I) {
    const std::size_t m = I.dim();
    int remaining = I.degree();
    std::size_t pos = 0;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        // Indices agreeing on slots < j with a larger entry at j come first.
        const std::size_t tail = m - j - 1;
        for (int v = remaining; v > I[j]; --v)
            pos += binomial(static_cast<std::size_t>(remaining - v) + tail - 1, tail - 1);
        remaining -= I[j];
    }
    return pos;
}

std::size_t grlex_position(const MultiIndex& I) {
    const int d = I.degree();
    const std::size_t below = d == 0 ? 0 : dim_F(I.dim(), 0, d - 1);
    return below + grlex_position_in_degree(I);
}

MultiIndex ones_at(std::size_t m, std::initializer_list<std::size_t> slots) {
    std::vector<int> e(m, 0);
    for (auto s : slots) {
        if (s >= m) throw std::out_of_range("ones_at: slot out of range");
        ++e[s];
    }
    return MultiIndex(std::move(e));
}

}  // namespace jetforge
