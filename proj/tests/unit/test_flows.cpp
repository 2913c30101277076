#include <doctest.h>

#include <numeric>
#include <stdexcept>

#include "packgap/flows.hpp"
#include "packgap/rng.hpp"

using namespace packgap;

namespace {

CapacityProfile profile_from(const char* a0, const char* a1, const char* a2, const char* b0,
                             const char* b1, const char* b2, const char* c0, const char* c1,
                             const char* c2) {
    CapacityProfile p;
    p.m1 = {rational_from_decimal(a0), rational_from_decimal(a1), rational_from_decimal(a2)};
    p.m2 = {rational_from_decimal(b0), rational_from_decimal(b1), rational_from_decimal(b2)};
    p.r = {rational_from_decimal(c0), rational_from_decimal(c1), rational_from_decimal(c2)};
    p.validate();
    return p;
}

}  // namespace

TEST_CASE("rational parsing is exact") {
    CHECK(rational_from_decimal("0.70") == Rational(7, 10));
    CHECK(rational_from_decimal("-1/3") == Rational(-1, 3));
    CHECK(rational_from_double(0.05) == Rational(1, 20));
    CHECK(rational_to_string(Rational(7, 10)) == "7/10");
}

TEST_CASE("valid paths satisfy r = m2 - m1 and exclude opposite signs") {
    const auto& paths = flow_paths();
    CHECK(paths.size() == 7);
    for (const auto& p : paths) {
        CHECK(p.r == p.m2 - p.m1);
        CHECK(!(p.m1 == +1 && p.m2 == -1));
        CHECK(!(p.m1 == -1 && p.m2 == +1));
    }
}

TEST_CASE("solve_flows: the worked capacity profile is feasible with zero residuals") {
    const CapacityProfile p = profile_from("0.70", "0.15", "0.15", "0.80", "0.10", "0.10",
                                           "0.90", "0.05", "0.05");
    const FlowResult r = solve_flows(p);
    REQUIRE(r.feasible);
    for (const auto& res : node_residuals(p, r.solution)) CHECK(res == 0);
    Rational total = 0;
    for (const auto& f : r.solution.path_flows) {
        CHECK(f >= 0);
        total += f;
    }
    CHECK(total == 1);
}

TEST_CASE("solve_flows: perfect agreement with unequal accuracies is infeasible") {
    const CapacityProfile p = profile_from("0.70", "0.15", "0.15", "0.80", "0.10", "0.10",
                                           "1", "0", "0");
    const FlowResult r = solve_flows(p);
    REQUIRE(!r.feasible);
    CHECK(certificate_refutes(p, r.certificate));
}

TEST_CASE("solve_flows: identical capacities with identity coupling use diagonal paths") {
    const CapacityProfile p = profile_from("0.70", "0.15", "0.15", "0.70", "0.15", "0.15",
                                           "1", "0", "0");
    const FlowResult r = solve_flows(p);
    REQUIRE(r.feasible);
    const auto& paths = flow_paths();
    for (int j = 0; j < kNumFlowPaths; ++j)
        if (paths[j].r != 0) CHECK(r.solution.path_flows[j] == 0);
}

TEST_CASE("solve_flows: random feasible instances produce exact solutions") {
    // build profiles from known flows so feasibility is guaranteed
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<int, kNumFlowPaths> weights{};
        int total = 0;
        for (auto& w : weights) {
            w = static_cast<int>(rng.next_below(5));
            total += w;
        }
        if (total == 0) {
            weights[0] = 1;
            total = 1;
        }
        CapacityProfile p;
        p.m1 = {0, 0, 0};
        p.m2 = {0, 0, 0};
        p.r = {0, 0, 0};
        const auto& paths = flow_paths();
        for (int j = 0; j < kNumFlowPaths; ++j) {
            const Rational f(weights[j], total);
            p.m1[offset_index(paths[j].m1)] += f;
            p.m2[offset_index(paths[j].m2)] += f;
            p.r[offset_index(paths[j].r)] += f;
        }
        p.validate();
        const FlowResult r = solve_flows(p);
        REQUIRE(r.feasible);
        for (const auto& res : node_residuals(p, r.solution)) CHECK(res == 0);
    }
}

TEST_CASE("malformed profiles are rejected") {
    CapacityProfile p;
    p.m1 = {Rational(1, 2), Rational(1, 4), Rational(1, 8)};  // sums to 7/8
    p.m2 = {1, 0, 0};
    p.r = {1, 0, 0};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("profile JSON accepts decimal strings and numbers") {
    const std::string text = R"({"m1": ["0.70", "0.15", "0.15"],
                                 "m2": [0.8, 0.1, 0.1],
                                 "r":  ["9/10", "1/20", "1/20"]})";
    const CapacityProfile p = CapacityProfile::from_json(text);
    CHECK(p.m1[0] == Rational(7, 10));
    CHECK(p.m2[0] == Rational(4, 5));
    CHECK(p.r[1] == Rational(1, 20));
}

TEST_CASE("flows_to_constraints: largest-remainder counts on the worked witness") {
    FlowSolution sol;
    sol.path_flows = {rational_from_decimal("0.70"), 0, 0, rational_from_decimal("0.05"),
                      rational_from_decimal("0.10"), rational_from_decimal("0.05"),
                      rational_from_decimal("0.10")};
    const FlowConstraints fc = flows_to_constraints(sol, 20, 3);
    CHECK(fc.path_counts == std::array<int, 7>{14, 0, 0, 1, 2, 1, 2});
    CHECK(fc.path_per_vm.size() == 20);
    int total = std::accumulate(fc.path_counts.begin(), fc.path_counts.end(), 0);
    CHECK(total == 20);

    // single path takes everything
    FlowSolution single;
    single.path_flows[0] = 1;
    const FlowConstraints one = flows_to_constraints(single, 5, 1);
    for (int path : one.path_per_vm) CHECK(path == 0);

    // too small a sequence for the smallest nonzero fraction
    CHECK_THROWS_WITH_AS(flows_to_constraints(sol, 4, 1), doctest::Contains("too small"),
                         std::invalid_argument);
}

TEST_CASE("flows_to_constraints counts always sum to N") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        std::array<int, kNumFlowPaths> weights{};
        int total = 0;
        for (auto& w : weights) {
            w = 1 + static_cast<int>(rng.next_below(7));
            total += w;
        }
        FlowSolution sol;
        for (int j = 0; j < kNumFlowPaths; ++j) sol.path_flows[j] = Rational(weights[j], total);
        const int n = 20 + static_cast<int>(rng.next_below(100));
        const FlowConstraints fc = flows_to_constraints(sol, n, trial);
        CHECK(std::accumulate(fc.path_counts.begin(), fc.path_counts.end(), 0) == n);
    }
}
