#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace jetforge {

/// Exponent tuple in N^m. The dimension m is part of the value; operations
/// that combine two indices of different dimension throw.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::size_t m) : e_(m, 0) {}
    MultiIndex(std::initializer_list<int> exps);
    explicit MultiIndex(std::vector<int> exps);

    static MultiIndex unit(std::size_t m, std::size_t axis);  // 0-based axis

    std::size_t dim() const { return e_.size(); }
    int operator[](std::size_t i) const { return e_[i]; }
    int degree() const;
    const std::vector<int>& exponents() const { return e_; }

    /// Entry `axis` (0-based) shifted by delta; nullopt if it would go negative.
    std::optional<MultiIndex> offset(std::size_t axis, int delta) const;

    MultiIndex operator+(const MultiIndex& o) const;
    /// Componentwise difference, nullopt unless o <= *this entrywise.
    std::optional<MultiIndex> minus(const MultiIndex& o) const;
    bool divides(const MultiIndex& o) const;  // *this <= o entrywise

    std::string str() const;  // "(2,0,1)"

    bool operator==(const MultiIndex&) const = default;

private:
    std::vector<int> e_;
};

/// Graded lexicographic order: degree ascending, then tuples compared
/// lexicographically with larger leading entries first, so that for m = 2
/// the degree-one indices come out as (1,0), (0,1).
std::strong_ordering grlex_compare(const MultiIndex& a, const MultiIndex& b);

/// Total order for ordered containers: dimension first, then graded lex.
inline bool operator<(const MultiIndex& a, const MultiIndex& b) {
    if (a.dim() != b.dim()) return a.dim() < b.dim();
    return grlex_compare(a, b) < 0;
}

struct GradedLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        return grlex_compare(a, b) < 0;
    }
};

struct GradedIndexRange {
    std::size_t m = 1;
    int k1 = 0;
    int k2 = 0;
};

/// All I with k1 <= |I| <= k2 in graded lexicographic order.
std::vector<MultiIndex> enumerate(const GradedIndexRange& range);
/// Indices of exactly degree d.
std::vector<MultiIndex> enumerate_degree(std::size_t m, int d);

/// dim F(m, k1, k2) = number of multi-indices with degree in [k1, k2].
std::size_t dim_F(const GradedIndexRange& range);
std::size_t dim_F(std::size_t m, int k1, int k2);

std::size_t binomial(std::size_t n, std::size_t k);

/// I! = prod I_j!
mpz_class factorial(const MultiIndex& I);
/// |I|! / I!
mpz_class multinomial(const MultiIndex& I);

/// Position of I inside enumerate({m, 0, |I| or more}); independent of the
/// upper bound because lower degrees come first.
std::size_t grlex_position(const MultiIndex& I);
/// Position of I among the indices of the same degree.
std::size_t grlex_position_in_degree(const MultiIndex& I);

/// Multi-index with ones in the listed (0-based) slots, e.g. 1_{ij}.
MultiIndex ones_at(std::size_t m, std::initializer_list<std::size_t> slots);

}  // namespace jetforge
