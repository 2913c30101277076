#include <doctest.h>

#include "fixtures.hpp"
#include "packgap/dpbfr.hpp"
#include "packgap/workload.hpp"

using namespace packgap;
using fixtures::svm;
using fixtures::vm;

TEST_CASE("over_utilized_servers: empty cluster counts zero everywhere") {
    AllocatorConfig cfg = fixtures::small_cfg(2, 10, 32, 3);
    Scenario empty;
    const auto result = simulate(empty, cfg);
    CHECK(result.metrics.over_utilized_per_epoch == std::vector<int>{0, 0, 0});
    CHECK(result.metrics.risk_of_migration == 0.0);
}

TEST_CASE("over_utilized_servers: CPU underprediction on a shared server") {
    // one server (10 cores, 32 GB); vm a reserves 6.5 (pred 0) but uses 10
    // (label 1); vm b reserves/uses 3.25; actual CPU 13.25 > 10
    AllocatorConfig cfg = fixtures::small_cfg(1, 10, 32, 4);
    Scenario s;
    s.vms.push_back(svm(vm("a", 10, 8, 0, 1, 10, 3), 0));
    s.vms.push_back(svm(vm("b", 5, 8, 0, 0, 10, 3), 0));
    const auto result = simulate(s, cfg);
    CHECK(result.trace.rejection_count == 0);
    CHECK(result.metrics.over_utilized_per_epoch == std::vector<int>{1, 1, 1, 0});
}

TEST_CASE("over_utilized_servers: ground-truth predictions never over-utilize") {
    AllocatorConfig cfg = fixtures::small_cfg(2, 8, 16, 6);
    Scenario s;
    s.vms.push_back(svm(vm("a", 8, 8, 0, 1, 7, 2), 1));
    s.vms.push_back(svm(vm("b", 4, 8, 1, 0, 5, 3), 0));
    s.vms.push_back(svm(vm("c", 2, 4, 2, 1, 10, 2), 1));
    const auto result = simulate(s, cfg);
    for (int c : result.metrics.over_utilized_per_epoch) CHECK(c == 0);
}

TEST_CASE("risk_of_migration arithmetic and errors") {
    CHECK(risk_of_migration({0, 0, 0}) == 0.0);
    CHECK(risk_of_migration({2, 4}) == 3.0);
    CHECK(risk_of_migration({2, 4}, 3.0) == 1.0);
    CHECK_THROWS_AS(risk_of_migration({2, 4}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(risk_of_migration({}), std::invalid_argument);
}

TEST_CASE("risk_of_migration is invariant under epoch permutation") {
    const std::vector<int> counts{3, 0, 5, 1, 1};
    std::vector<int> shuffled{1, 5, 0, 3, 1};
    CHECK(risk_of_migration(counts) == risk_of_migration(shuffled));
}

TEST_CASE("excess_servers subtracts elementwise and keeps sign") {
    MetricsReport sys, base;
    sys.horizon_epochs = base.horizon_epochs = 2;
    sys.servers_used_per_epoch = {5, 6};
    base.servers_used_per_epoch = {4, 4};
    CHECK(excess_servers(sys, base) == std::vector<int>{1, 2});
    CHECK(excess_servers(base, sys) == std::vector<int>{-1, -2});
    CHECK(excess_servers(sys, sys) == std::vector<int>{0, 0});
    base.horizon_epochs = 3;
    CHECK_THROWS_AS(excess_servers(sys, base), std::invalid_argument);
}

TEST_CASE("conservation: per-epoch actual usage equals the sum over alive VMs") {
    AllocatorConfig cfg = fixtures::small_cfg(3, 16, 64, 8);
    Scenario s;
    s.vms.push_back(svm(vm("a", 4, 16, 0, 1, 6, 3), 0));
    s.vms.push_back(svm(vm("b", 8, 32, 1, 0, 10, 7), 1));
    s.vms.push_back(svm(vm("c", 2, 8, 2, 1, 2, 2), 0));
    const auto result = simulate(s, cfg);
    const ClusterState& st = result.trace.final_state;
    for (int t = 0; t < cfg.horizon; ++t) {
        for (int d = 0; d < kDims; ++d) {
            double total = 0.0;
            for (std::size_t j = 0; j < st.servers.size(); ++j) total += st.actual[j][t][d];
            double expected = 0.0;
            for (const auto& sv : s.vms) {
                const bool alive =
                    sv.vm.arrival <= t && t < sv.vm.arrival + sv.vm.true_lifetime_epochs;
                if (alive) expected += actual_sizes(sv.vm, cfg)[d];
            }
            CHECK(total == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("workload JSON round-trips and enforces ordering + invariants") {
    std::vector<VmRequest> vms;
    vms.push_back(vm("a", 2, 8, 0, 0, 5, 3));
    vms.push_back(vm("b", 4, 16, 1, 1, 10, 7));
    const std::string text = workload_to_json(vms);
    const auto parsed = parse_workload(text);
    CHECK(parsed.size() == 2);
    CHECK(parsed[1].true_lifetime_label == 1);
    CHECK(workload_to_json(parsed) == text);

    std::vector<VmRequest> unsorted{vms[1], vms[0]};
    CHECK_THROWS_AS(parse_workload(workload_to_json(unsorted)), std::invalid_argument);

    VmRequest bad = vm("c", 2, 8, 0, 0, 5, 3);
    bad.true_mem_decile = 11;
    CHECK_THROWS_AS(bad.validate(6), std::invalid_argument);
    bad = vm("d", 2, 8, 0, 0, 5, 7);
    bad.true_lifetime_label = 0;
    CHECK_THROWS_AS(bad.validate(6), std::invalid_argument);
}
