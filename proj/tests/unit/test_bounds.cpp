#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "packgap/bounds.hpp"
#include "packgap/rng.hpp"

using namespace packgap;

TEST_CASE("min_sequence_length implements the Np >= 5 rule") {
    CHECK(min_sequence_length(0.5) == 10);
    CHECK(min_sequence_length(0.7) == 17);
    CHECK(min_sequence_length(0.1) == 50);
    CHECK_THROWS_AS(min_sequence_length(0.0), std::invalid_argument);
    CHECK_THROWS_AS(min_sequence_length(1.0), std::invalid_argument);
}

TEST_CASE("count_bounds: sigma interval arithmetic") {
    const CountBound b = count_bounds(0.5, 100);
    // sigma = 0.05, z*sigma*N = 19.45
    CHECK(b.lower == 31);
    CHECK(b.upper == 69);

    const CountBound clamped = count_bounds(0.99, 1000);
    CHECK(clamped.upper == 1000);

    const CountBound degenerate = count_bounds(0.7, 100, 0.0);
    CHECK(degenerate.lower == 70);
    CHECK(degenerate.upper == 70);

    CHECK_THROWS_WITH_AS(count_bounds(0.7, 10), doctest::Contains("rule of thumb"),
                         std::invalid_argument);
}

TEST_CASE("count_bounds contain round(Np) for random valid (p, N)") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double p = rng.next_real(0.02, 0.98);
        const int n = min_sequence_length(p) + static_cast<int>(rng.next_below(400));
        const CountBound b = count_bounds(p, n);
        CHECK(b.contains(static_cast<int>(std::llround(n * p))));
        CHECK(b.lower >= 0);
        CHECK(b.upper <= n);
        CHECK(b.lower <= b.upper);
    }
}

TEST_CASE("larger z never shrinks the interval") {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const double p = rng.next_real(0.05, 0.95);
        const int n = min_sequence_length(p) + static_cast<int>(rng.next_below(200));
        const double z1 = rng.next_real(0.5, 3.0);
        const double z2 = z1 + rng.next_real(0.0, 2.0);
        const CountBound a = count_bounds(p, n, z1);
        const CountBound b = count_bounds(p, n, z2);
        CHECK(b.lower <= a.lower);
        CHECK(b.upper >= a.upper);
    }
}

TEST_CASE("partition_bounds: single partition returns the global bound") {
    const CountBound global = count_bounds(0.7, 40);
    const auto parts = partition_bounds(global, {40}, 1);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].lower == global.lower);
    CHECK(parts[0].upper == global.upper);
}

TEST_CASE("partition_bounds: p = 1 pins every partition to its size") {
    CountBound global;
    global.n = 12;
    global.p = 1.0;
    global.lower = 12;
    global.upper = 12;
    const auto parts = partition_bounds(global, {4, 4, 4}, 7);
    for (const auto& b : parts) {
        CHECK(b.lower == 4);
        CHECK(b.upper == 4);
    }
}

TEST_CASE("partition_bounds: sampled bounds bracket the per-partition expectation") {
    const CountBound global = count_bounds(0.7, 200);
    const auto parts = partition_bounds(global, std::vector<int>(10, 20), 11, 10000);
    REQUIRE(parts.size() == 10);
    long lo_sum = 0, hi_sum = 0;
    for (const auto& b : parts) {
        CHECK(b.contains(14));  // round(20 * 0.7)
        lo_sum += b.lower;
        hi_sum += b.upper;
    }
    CHECK(lo_sum <= global.upper);
    CHECK(hi_sum >= global.lower);

    const auto again = partition_bounds(global, std::vector<int>(10, 20), 11, 10000);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        CHECK(parts[i].lower == again[i].lower);  // deterministic per seed
        CHECK(parts[i].upper == again[i].upper);
    }

    CHECK_THROWS_AS(partition_bounds(global, {100, 40}, 1), std::invalid_argument);
}

TEST_CASE("monte_carlo_coverage matches the interval semantics") {
    const CountBound wide{"", 50, 0, 50, 0.5, 0.0};
    CHECK(monte_carlo_coverage(0.5, 50, wide, 2000) == 1.0);

    const CountBound tight = count_bounds(0.7, 200, 0.0);
    const double low = monte_carlo_coverage(0.7, 200, tight, 5000);
    CHECK(low < 0.5);

    const CountBound normal = count_bounds(0.7, 200);
    const double high = monte_carlo_coverage(0.7, 200, normal, 20000);
    CHECK(high >= 0.999);
}

TEST_CASE("profile JSON round-trip and validation") {
    DistributionProfile p;
    p.joint_cells["cpu"][{0, 0}] = 0.45;
    p.joint_cells["cpu"][{0, 1}] = 0.15;
    p.joint_cells["cpu"][{1, 0}] = 0.15;
    p.joint_cells["cpu"][{1, 1}] = 0.25;
    p.label_mix["cpu"][0] = 0.6;
    p.label_mix["cpu"][1] = 0.4;
    p.vm_type_mix[{2, 8}] = 1.0;
    p.arrival_rate = {0.5, 0.5};
    p.validate();
    const auto back = DistributionProfile::from_json(p.to_json());
    CHECK(back.joint_cells.at("cpu").at({1, 1}) == doctest::Approx(0.25));

    DistributionProfile bad = p;
    bad.label_mix["cpu"][1] = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
