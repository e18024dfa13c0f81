#include <doctest.h>

#include <algorithm>
#include <set>

#include "rng.hpp"

using namespace khop;

TEST_CASE("identical seeds reproduce identical streams") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.u64() == b.u64());
    }
}

TEST_CASE("derived streams are independent of sibling usage") {
    Rng root(7);
    Rng a1 = root.stream("alpha", 1);
    Rng b = root.stream("beta");
    // Consuming from beta must not change alpha's output.
    std::vector<std::uint64_t> before;
    for (int i = 0; i < 16; ++i) {
        before.push_back(a1.u64());
    }
    for (int i = 0; i < 99; ++i) {
        b.u64();
    }
    Rng a2 = Rng(7).stream("alpha", 1);
    for (int i = 0; i < 16; ++i) {
        CHECK(a2.u64() == before[i]);
    }
}

TEST_CASE("distinct purposes and indices give distinct streams") {
    Rng root(3);
    std::set<std::uint64_t> firsts;
    firsts.insert(root.stream("x", 0).u64());
    firsts.insert(root.stream("x", 1).u64());
    firsts.insert(root.stream("y", 0).u64());
    firsts.insert(root.stream("x", 0, 1).u64());
    CHECK(firsts.size() == 4);
}

TEST_CASE("below is in range and covers small supports") {
    Rng r(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 200; ++i) {
        const auto v = r.below(5);
        CHECK(v < 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("shuffle is a permutation") {
    Rng r(13);
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) {
        v[i] = i;
    }
    auto w = v;
    r.shuffle(w);
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}

TEST_CASE("sample_indices draws distinct values uniformly located") {
    Rng r(17);
    auto picks = r.sample_indices(1000, 50);
    CHECK(picks.size() == 50);
    std::set<std::uint64_t> s(picks.begin(), picks.end());
    CHECK(s.size() == 50);
    for (auto p : picks) {
        CHECK(p < 1000);
    }
}

TEST_CASE("normal has plausible first moments") {
    Rng r(23);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}
