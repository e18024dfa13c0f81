#include <doctest.h>

#include <cmath>
#include <set>

#include "theory.hpp"

using namespace khop;

TEST_CASE("f and g tables follow the construction") {
    auto [f, g] = build_fg(3);
    // Universe {0, x0, x1, x2} with f = cyclic shift on the x's.
    CHECK(f == RelationMap{0, 2, 3, 1});
    CHECK(g == RelationMap{0, 0, 2, 3});
    CHECK(g[1] == 0); // g(x0) = 0
    CHECK(g[2] == 2); // g(x1) = x1

    // f restricted to the x's is a bijection.
    std::set<int> image(f.begin() + 1, f.end());
    CHECK(image.size() == 3);
    CHECK(image.count(0) == 0);
}

TEST_CASE("n below 2 is rejected") {
    CHECK_THROWS_AS(build_fg(1), KhopError);
}

TEST_CASE("k=1 yields the two base words") {
    auto [f, g] = build_fg(4);
    auto census = enumerate_ggfree_compositions(f, g, 1);
    CHECK(census.word_count == 2);
    CHECK(census.distinct_count == 2);
    CHECK(fib_count(1) == 2);
}

TEST_CASE("k=2 yields ff, fg, gf and three distinct maps") {
    auto [f, g] = build_fg(3);
    auto census = enumerate_ggfree_compositions(f, g, 2);
    CHECK(census.word_count == 3);
    CHECK(census.distinct_count == 3);
    CHECK(fib_count(2) == 3);
}

TEST_CASE("k=3 yields five words and five distinct maps") {
    auto [f, g] = build_fg(4);
    auto census = enumerate_ggfree_compositions(f, g, 3);
    CHECK(census.word_count == 5);
    CHECK(census.distinct_count == 5);
}

TEST_CASE("fibonacci values") {
    CHECK(fib_count(4) == 8); // F_6
    CHECK(fib_count(1) == 2);
    CHECK(fib_count(2) == 3);
    CHECK(fib_count(10) == 144); // F_12
}

TEST_CASE("word counts match F_{k+2} with all compositions distinct, k <= n-1") {
    for (int n = 2; n <= 10; ++n) {
        auto [f, g] = build_fg(n);
        for (int k = 1; k <= std::min(n - 1, 9); ++k) {
            auto census = enumerate_ggfree_compositions(f, g, k);
            CHECK(census.word_count == fib_count(k));
            CHECK(census.distinct_count == census.word_count);
        }
    }
}

TEST_CASE("fibonacci dominates (3/2)^k for k up to 30") {
    for (int k = 1; k <= 30; ++k) {
        CHECK(static_cast<double>(fib_count(k)) >= ggfree_lower_bound(k));
    }
}

TEST_CASE("a composition sends x_i to the sink iff some g lands on x_0") {
    // With f shifting indices forward, the walker from x_i sits on x_0 after
    // exactly (n - i) mod n applications of f, so the composed map kills x_i
    // iff the word has a g whose preceding f count is that value.
    const int n = 8;
    auto [f, g] = build_fg(n);
    const int k = 6;
    for (std::uint32_t w = 0; w < (1u << k); ++w) {
        bool ok = true;
        for (int i = 0; i + 1 < k; ++i) {
            if (((w >> i) & 1u) && ((w >> (i + 1)) & 1u)) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            continue;
        }
        for (int xi = 0; xi < n; ++xi) {
            // Predicted kill from the word structure alone.
            bool predicted = false;
            int f_count = 0;
            for (int pos = 0; pos < k; ++pos) {
                if ((w >> pos) & 1u) {
                    if (f_count == (n - xi) % n) {
                        predicted = true;
                    }
                } else {
                    ++f_count;
                }
            }
            // Actual composition result.
            int cur = xi + 1;
            for (int pos = 0; pos < k; ++pos) {
                cur = ((w >> pos) & 1u) ? g[cur] : f[cur];
            }
            CHECK((cur == 0) == predicted);
        }
    }
}

TEST_CASE("depth bound evaluates exactly") {
    Rational r = depth_lower_bound({4, 32, 768, 12});
    CHECK(r.num == 4);
    CHECK(r.den == 2359296); // 8 * 32 * 768 * 12

    // k = 8 p d H gives exactly 1.
    Rational unit = depth_lower_bound({8 * 32 * 768 * 12, 32, 768, 12});
    CHECK(unit.num == unit.den);

    // Doubling d halves the bound.
    Rational half = depth_lower_bound({4, 32, 1536, 12});
    CHECK(half.value() == doctest::Approx(r.value() / 2.0));
}

TEST_CASE("invalid bound inputs are rejected") {
    CHECK_THROWS_AS(depth_lower_bound({0, 32, 768, 12}), KhopError);
    CHECK_THROWS_AS(fib_count(0), KhopError);
}
