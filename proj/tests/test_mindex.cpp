#include <doctest.h>

#include <set>

#include "jetforge/mindex.hpp"

using namespace jetforge;

namespace {

// Brute force: all tuples in [0, k2]^m filtered by degree, sorted with an
// independently written comparator.
std::vector<std::vector<int>> brute_indices(std::size_t m, int k1, int k2) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(m, 0);
    while (true) {
        int d = 0;
        for (int v : cur) d += v;
        if (d >= k1 && d <= k2) out.push_back(cur);
        std::size_t pos = 0;
        while (pos < m && cur[pos] == k2) cur[pos++] = 0;
        if (pos == m) break;
        ++cur[pos];
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int da = 0, db = 0;
        for (int v : a) da += v;
        for (int v : b) db += v;
        if (da != db) return da < db;
        return a > b;
    });
    return out;
}

}  // namespace

TEST_CASE("enumerate small ranges") {
    auto e = enumerate({2, 0, 1});
    REQUIRE(e.size() == 3);
    CHECK(e[0] == MultiIndex{0, 0});
    CHECK(e[1] == MultiIndex{1, 0});
    CHECK(e[2] == MultiIndex{0, 1});

    for (int k = 0; k < 6; ++k) {
        auto one = enumerate({1, k, k});
        REQUIRE(one.size() == 1);
        CHECK(one[0] == MultiIndex{k});
    }
    CHECK(enumerate({4, 0, 2}).size() == 15);
    auto d2 = enumerate_degree(3, 2);
    std::vector<MultiIndex> expect{{2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
    CHECK(d2 == expect);
}

TEST_CASE("enumerate matches brute force and dim_F") {
    for (std::size_t m = 1; m <= 6; ++m)
        for (int k2 = 0; k2 <= 8; ++k2) {
            if (m >= 5 && k2 > 6) continue;  // brute force grows as (k2+1)^m
            auto got = enumerate({m, 0, k2});
            auto ref = brute_indices(m, 0, k2);
            REQUIRE(got.size() == ref.size());
            CHECK(got.size() == dim_F(m, 0, k2));
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].exponents() == ref[i]);
        }
    for (std::size_t m = 1; m <= 6; ++m)
        for (int k2 = 0; k2 <= 8; ++k2)
            for (int k1 = 0; k1 <= k2; ++k1)
                CHECK(enumerate({m, k1, k2}).size() == dim_F(m, k1, k2));
}

TEST_CASE("dim_F values and Pascal recurrence") {
    CHECK(dim_F(4, 0, 2) == 15);
    for (std::size_t m = 1; m <= 6; ++m) CHECK(dim_F(m, 0, 0) == 1);
    CHECK(dim_F(2, 1, 1) == 2);
    for (std::size_t m = 1; m <= 6; ++m)
        for (int k = 1; k <= 8; ++k) {
            CHECK(dim_F(m, 0, k) == dim_F(m, 0, k - 1) + dim_F(m, k, k));
            CHECK(dim_F(m, 0, k) == binomial(m + k, m));
        }
    CHECK_THROWS(dim_F(2, 3, 1));
}

TEST_CASE("factorial and multinomial") {
    CHECK(factorial(MultiIndex{2, 1}) == 2);
    CHECK(factorial(MultiIndex{0, 0, 0}) == 1);
    CHECK(factorial(MultiIndex{3, 2}) == 12);
    CHECK(multinomial(MultiIndex{1, 1}) == 2);
    CHECK(multinomial(MultiIndex{4, 0, 0}) == 1);
    CHECK(multinomial(MultiIndex{2, 1}) == 3);
}

TEST_CASE("offset and arithmetic") {
    CHECK(*MultiIndex{1, 0}.offset(1, +1) == MultiIndex{1, 1});
    CHECK(!MultiIndex{0, 3}.offset(0, -1).has_value());
    CHECK(*MultiIndex{2, 1}.offset(0, -1) == MultiIndex{1, 1});
    CHECK(MultiIndex{1, 2} + MultiIndex{0, 1} == MultiIndex{1, 3});
    CHECK(*MultiIndex{1, 2}.minus(MultiIndex{1, 0}) == MultiIndex{0, 2});
    CHECK(!MultiIndex{1, 2}.minus(MultiIndex{2, 0}).has_value());
    CHECK_THROWS_AS((MultiIndex{1, 2} + MultiIndex{1}), std::invalid_argument);
    CHECK_THROWS_AS(MultiIndex({1, -1}), std::invalid_argument);
    CHECK(ones_at(3, {0, 0, 2}) == MultiIndex{2, 0, 1});
    CHECK(MultiIndex{2, 0, 1}.str() == "(2,0,1)");
}

TEST_CASE("grlex positions agree with enumeration") {
    for (std::size_t m = 1; m <= 4; ++m) {
        auto all = enumerate({m, 0, 5});
        for (std::size_t i = 0; i < all.size(); ++i) CHECK(grlex_position(all[i]) == i);
        for (std::size_t i = 1; i < all.size(); ++i) CHECK(grlex_compare(all[i - 1], all[i]) < 0);
    }
}
