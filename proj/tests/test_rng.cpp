#include "sdsim/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

using sdsim::RngStream;

TEST_CASE("identical seed and path give identical sequences") {
    RngStream a = RngStream(42).derive(3).derive(7);
    RngStream b = RngStream(42).derive(3).derive(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different ids and different orders give different streams") {
    RngStream root(42);
    CHECK(root.derive(1).next_u64() != root.derive(2).next_u64());
    CHECK(root.derive(1).derive(2).next_u64() != root.derive(2).derive(1).next_u64());
    CHECK(RngStream(1).next_u64() != RngStream(2).next_u64());
}

TEST_CASE("derive does not disturb the parent stream") {
    RngStream a(9);
    RngStream b(9);
    (void)a.derive(5);
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("next_unit stays in [0, 1)") {
    RngStream rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("next_below is in range and roughly uniform") {
    RngStream rng(11);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.next_below(10);
        REQUIRE(v < 10);
        ++counts[v];
    }
    for (int c : counts) {
        CHECK(c > n / 10 - 5 * 95);  // ~5 sigma around n/10
        CHECK(c < n / 10 + 5 * 95);
    }
    CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_normal has the right first two moments") {
    RngStream rng(13);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.next_normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("sibling streams do not collide") {
    RngStream root(123);
    std::set<std::uint64_t> firsts;
    for (std::uint64_t id = 0; id < 10000; ++id) {
        firsts.insert(root.derive(id).next_u64());
    }
    CHECK(firsts.size() == 10000);
}
