#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "packgap/dpbfr.hpp"
#include "packgap/rng.hpp"

using namespace packgap;
using fixtures::svm;
using fixtures::vm;

TEST_CASE("reserved_sizes follows the oversubscription rule") {
    AllocatorConfig cfg;
    VmRequest v = vm("a", 10, 32, 0, 0, 10, 3);

    VmPredictions low;
    low.cpu = 0;
    auto r = reserved_sizes(v, low, cfg);
    CHECK(r[0] == doctest::Approx(6.5));
    CHECK(r[1] == doctest::Approx(32.0));

    VmPredictions high;
    high.cpu = 1;
    high.mem_decile = 5;
    r = reserved_sizes(v, high, cfg);
    CHECK(r[0] == doctest::Approx(10.0));
    CHECK(r[1] == doctest::Approx(16.0));

    AllocatorConfig no_oversub = cfg;
    no_oversub.oversub_fraction = 1.0;
    CHECK(reserved_sizes(v, low, no_oversub)[0] == doctest::Approx(10.0));
    CHECK(reserved_sizes(v, high, no_oversub)[0] == doctest::Approx(10.0));

    VmPredictions bad;
    bad.mem_decile = 11;
    CHECK_THROWS_AS(reserved_sizes(v, bad, cfg), std::invalid_argument);
}

TEST_CASE("best_fit_score: normalized residual after placement") {
    AllocatorConfig cfg;
    const std::vector<double> cap{8.0, 32.0};
    CHECK(best_fit_score({8.0, 32.0}, {2.0, 8.0}, cap, cfg) == doctest::Approx(0.75));
    CHECK(best_fit_score({8.0, 32.0}, {8.0, 32.0}, cap, cfg) == doctest::Approx(0.0));
    CHECK(best_fit_score({4.0, 16.0}, {0.0, 0.0}, cap, cfg) == doctest::Approx(0.5));
    CHECK_THROWS_AS(best_fit_score({1.0, 32.0}, {2.0, 8.0}, cap, cfg), std::logic_error);

    AllocatorConfig maxagg = cfg;
    maxagg.score_aggregation = ScoreAggregation::Max;
    CHECK(best_fit_score({8.0, 32.0}, {2.0, 16.0}, cap, maxagg) == doctest::Approx(0.75));
}

TEST_CASE("bucket quantization") {
    AllocatorConfig cfg;  // 3 short, 5 long
    CHECK(bucket(0.0, 0, cfg) == 0);
    CHECK(bucket(0.5, 1, cfg) == 2);
    CHECK(bucket(1.0, 0, cfg) == 2);
    CHECK(bucket(1.0, 1, cfg) == 4);
    CHECK(bucket(0.34, 0, cfg) == 1);
}

TEST_CASE("bucket index is non-decreasing in score") {
    AllocatorConfig cfg;
    Rng rng(3);
    for (int pred : {0, 1}) {
        double prev_score = 0.0;
        int prev_bucket = bucket(0.0, pred, cfg);
        for (int i = 0; i < 500; ++i) {
            const double s = std::min(1.0, prev_score + rng.next_real() * 0.01);
            const int b = bucket(s, pred, cfg);
            CHECK(b >= prev_bucket);
            prev_bucket = b;
            prev_score = s;
        }
    }
}

TEST_CASE("place: single server, and round-robin rotation on ties") {
    AllocatorConfig cfg = fixtures::small_cfg(1, 8, 32, 4);
    Scenario s;
    s.vms.push_back(svm(vm("a", 2, 8, 0, 0, 10, 2), 0));
    auto result = simulate(s, cfg);
    CHECK(result.trace.placements[0].chosen_server == 0);

    // two identical big servers: tiny VMs keep both servers in the top bucket
    AllocatorConfig two = fixtures::small_cfg(2, 100, 100, 4);
    Scenario s2;
    s2.vms.push_back(svm(vm("a", 1, 1, 0, 0, 10, 2), 0));
    s2.vms.push_back(svm(vm("b", 1, 1, 0, 0, 10, 2), 0));
    result = simulate(s2, two);
    CHECK(result.trace.placements[0].chosen_server == 0);
    CHECK(result.trace.placements[1].candidate_set == std::vector<int>{0, 1});
    CHECK(result.trace.placements[1].chosen_server == 1);
}

TEST_CASE("place: candidate set is exactly the minimum-bucket fitting servers") {
    // rotation places the fillers on distinct servers (each step ties in one
    // bucket), leaving occupancies (1,1), (4,4), (7,7)
    AllocatorConfig cfg = fixtures::small_cfg(3, 10, 10, 6);
    cfg.selection_mode = SelectionMode::RoundRobin;
    Scenario s;
    s.vms.push_back(svm(vm("f0", 1, 1, 0, 1, 10, 5), 1));
    s.vms.push_back(svm(vm("f1", 4, 4, 0, 1, 10, 5), 1));
    s.vms.push_back(svm(vm("f2", 7, 7, 0, 1, 10, 5), 1));
    // probe reserve (1,1): scores 0.8 / 0.5 / 0.2 -> buckets 2 / 1 / 0
    s.vms.push_back(svm(vm("probe", 1, 1, 1, 1, 10, 2), 1));
    const auto result = simulate(s, cfg);
    CHECK(result.trace.placements[0].chosen_server == 0);
    CHECK(result.trace.placements[1].chosen_server == 1);
    CHECK(result.trace.placements[2].chosen_server == 2);

    const VmPlacement& probe = result.trace.placements[3];
    CHECK(probe.vm_id == "probe");
    CHECK(probe.fitting_servers == std::vector<int>{0, 1, 2});

    // brute-force the buckets from the recorded scores
    std::vector<int> expect_bucket;
    int min_bucket = 99;
    for (int j = 0; j < 3; ++j) {
        const int b = bucket(std::clamp(probe.score_per_server[j], 0.0, 1.0), 0, cfg);
        expect_bucket.push_back(b);
        min_bucket = std::min(min_bucket, b);
    }
    CHECK(expect_bucket == std::vector<int>{2, 1, 0});
    std::vector<int> expect_candidates;
    for (int j = 0; j < 3; ++j)
        if (expect_bucket[j] == min_bucket) expect_candidates.push_back(j);
    CHECK(probe.candidate_set == expect_candidates);
    CHECK(probe.chosen_server == 2);
}

TEST_CASE("fixed pool rejections are recorded, never dropped") {
    AllocatorConfig cfg = fixtures::small_cfg(1, 4, 8, 4);
    Scenario s;
    s.vms.push_back(svm(vm("big", 8, 32, 0, 1, 10, 2), 1));
    const auto result = simulate(s, cfg);
    CHECK(result.trace.rejection_count == 1);
    CHECK(result.trace.placements[0].rejected);
    CHECK(result.trace.final_state.assignments.empty());
}

TEST_CASE("unbounded pool opens a fresh server only when nothing fits") {
    AllocatorConfig cfg = fixtures::small_cfg(0, 8, 32, 6);
    cfg.pool_mode = PoolMode::Unbounded;
    Scenario s;
    s.vms.push_back(svm(vm("a", 8, 8, 0, 1, 10, 4), 1));   // opens server 0, fills cpu
    s.vms.push_back(svm(vm("b", 2, 8, 1, 1, 10, 4), 1));   // does not fit -> opens server 1
    s.vms.push_back(svm(vm("c", 2, 8, 2, 1, 10, 4), 1));   // fits server 1, no new server
    const auto result = simulate(s, cfg);
    CHECK(result.trace.final_state.servers.size() == 2);
    CHECK(result.trace.placements[1].chosen_server == 1);
    CHECK(result.trace.placements[2].chosen_server == 1);
    CHECK(result.trace.rejection_count == 0);
}

TEST_CASE("lifetime predictions alone never cause over-utilization") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        AllocatorConfig cfg = fixtures::small_cfg(3, 16, 64, 10);
        Scenario s;
        const int n = 2 + static_cast<int>(rng.next_below(5));
        for (int i = 0; i < n; ++i) {
            const int life = rng.next_bernoulli(0.5) ? 8 : 2;
            VmRequest v = vm("v" + std::to_string(i), 2 + static_cast<int>(rng.next_below(8)),
                             4 + static_cast<int>(rng.next_below(16)),
                             static_cast<int>(rng.next_below(5)),
                             rng.next_bernoulli(0.5) ? 1 : 0,
                             1 + static_cast<int>(rng.next_below(10)), life);
            ScenarioVm sv;
            sv.vm = v;
            sv.preds.cpu = v.true_cpu_label;               // ground truth CPU
            sv.preds.mem_decile = v.true_mem_decile;       // ground truth memory
            sv.preds.lifetime = rng.next_bernoulli(0.5);   // arbitrary lifetime prediction
            s.vms.push_back(sv);
        }
        const auto result = simulate(s, cfg);
        for (int c : result.metrics.over_utilized_per_epoch) CHECK(c == 0);
    }
}

TEST_CASE("simulate is deterministic for a fixed seed") {
    AllocatorConfig cfg = fixtures::small_cfg(3, 16, 64, 8);
    cfg.selection_mode = SelectionMode::SeededRandom;
    cfg.selection_seed = 99;
    Scenario s;
    for (int i = 0; i < 6; ++i)
        s.vms.push_back(svm(vm("v" + std::to_string(i), 2 + i % 3, 8, i % 4, i % 2, 10, 3),
                            (i + 1) % 2));
    const auto a = simulate(s, cfg);
    const auto b = simulate(s, cfg);
    for (std::size_t i = 0; i < a.trace.placements.size(); ++i) {
        CHECK(a.trace.placements[i].chosen_server == b.trace.placements[i].chosen_server);
        CHECK(a.trace.placements[i].scan_order == b.trace.placements[i].scan_order);
    }
    CHECK(a.metrics.over_utilized_per_epoch == b.metrics.over_utilized_per_epoch);
}

namespace {

Scenario random_scenario(Rng& rng, int n, int horizon) {
    Scenario s;
    for (int i = 0; i < n; ++i) {
        const int life = 1 + static_cast<int>(rng.next_below(horizon - 1));
        VmRequest v = fixtures::vm("v" + std::to_string(i),
                                   1 + static_cast<int>(rng.next_below(6)),
                                   2 + static_cast<int>(rng.next_below(14)),
                                   static_cast<int>(rng.next_below(horizon - 1)),
                                   rng.next_bernoulli(0.5) ? 1 : 0,
                                   1 + static_cast<int>(rng.next_below(10)), life);
        ScenarioVm sv;
        sv.vm = v;
        sv.preds.cpu = rng.next_bernoulli(0.5) ? 1 : 0;
        if (rng.next_bernoulli(0.5)) sv.preds.mem_decile = 1 + static_cast<int>(rng.next_below(10));
        sv.preds.lifetime = rng.next_bernoulli(0.5) ? 1 : 0;
        s.vms.push_back(sv);
    }
    return s;
}

}  // namespace

TEST_CASE("trace feasibility: simulator traces satisfy the encoding") {
    Rng rng(2024);
    int verified = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(8));
        const int j = 1 + static_cast<int>(rng.next_below(4));
        const int horizon = 4 + static_cast<int>(rng.next_below(8));
        // vary capacities so fit indicators and bucket gating both bind
        AllocatorConfig cfg = fixtures::small_cfg(
            j, 14 + static_cast<int>(rng.next_below(19)),
            40 + 4 * static_cast<int>(rng.next_below(23)), horizon);
        cfg.selection_mode = trial % 2 ? SelectionMode::SeededRandom : SelectionMode::RoundRobin;
        cfg.selection_seed = trial;
        Scenario s = random_scenario(rng, n, horizon);
        const auto result = simulate(s, cfg);
        if (result.trace.rejection_count != 0) continue;  // encoding covers placed VMs
        verified += 1;
        const auto enc = encode_constraints(s, cfg);
        const auto violations = verify_trace(enc, result.trace, cfg);
        if (!violations.empty()) {
            CAPTURE(violations[0].constraint);
            CAPTURE(violations[0].family);
            CAPTURE(violations[0].residual);
        }
        CHECK(violations.empty());
    }
    CHECK(verified >= 20);
}

TEST_CASE("encoder audit: family counts match the closed-form tally") {
    AllocatorConfig cfg = fixtures::small_cfg(1, 8, 32, 1);
    Scenario s;
    s.vms.push_back(svm(vm("a", 2, 8, 0, 0, 10, 1), 0));
    const auto enc = encode_constraints(s, cfg);
    const auto counts = enc.system.family_counts();

    // independent per-family tally for N VMs, J servers, T epochs, D dims
    const int N = 1, J = 1, T = 1, D = 2;
    int arrival_zero = 0, continuity = 0;
    for (int a : {0}) {
        arrival_zero += J * a;
        continuity += J * std::max(0, T - 1 - a);
    }
    CHECK(counts.count("arrival_zero") == (arrival_zero ? 1 : 0));
    CHECK(counts.at("initial_placement") == N);
    CHECK(counts.count("continuity") == (continuity ? 1 : 0));
    CHECK(counts.at("lifetime") == N);
    CHECK(counts.at("occupancy_link") == N * J * T * D);
    CHECK(counts.at("occupancy_total_ub") == N * T * D);
    CHECK(counts.at("occupancy_total_lb") == N * T * D);
    CHECK(counts.at("residual_def") == N * J * D);
    CHECK(counts.at("residual_min") == N * J * D);
    CHECK(counts.at("fit_lb") == N * J);
    CHECK(counts.at("fit_ub") == N * J);
    CHECK(counts.at("score_def") == N * J);
    CHECK(counts.at("bucket_lo") == N * J);
    CHECK(counts.at("bucket_hi") == N * J);
    CHECK(counts.at("min_bucket") == N * J);
    CHECK(counts.at("candidate_fit") == N * J);
    CHECK(counts.at("candidate_ub") == N * J);
    CHECK(counts.at("candidate_lb") == N * J);
    CHECK(counts.at("selection") == N * J);
    CHECK(counts.at("reserved_capacity") == J * T * D);
}

TEST_CASE("encoder: pre-arrival variables forced to zero, one initial placement") {
    AllocatorConfig cfg = fixtures::small_cfg(2, 8, 32, 5);
    Scenario s;
    s.vms.push_back(svm(vm("a", 2, 8, 3, 0, 10, 2), 0));
    const auto enc = encode_constraints(s, cfg);
    const auto counts = enc.system.family_counts();
    CHECK(counts.at("arrival_zero") == 2 * 3);  // J * arrival epochs
    CHECK(counts.at("initial_placement") == 1);
    CHECK_THROWS_AS(
        [&] {
            AllocatorConfig unbounded = cfg;
            unbounded.pool_mode = PoolMode::Unbounded;
            encode_constraints(s, unbounded);
        }(),
        std::invalid_argument);
}

TEST_CASE("verify_trace flags pre-arrival and double placements") {
    AllocatorConfig cfg = fixtures::small_cfg(2, 8, 32, 6);
    Scenario s;
    s.vms.push_back(svm(vm("a", 2, 8, 2, 0, 10, 2), 0));
    auto result = simulate(s, cfg);
    const auto enc = encode_constraints(s, cfg);

    REQUIRE(verify_trace(enc, result.trace, cfg).empty());

    SUBCASE("pre-arrival placement violates the arrival family") {
        PlacementTrace bad = result.trace;
        bad.final_state.assignments.at("a").start_epoch -= 1;
        const auto violations = verify_trace(enc, bad, cfg);
        bool flagged = false;
        for (const auto& v : violations)
            if (v.family == "arrival_zero") flagged = true;
        CHECK(flagged);
    }

    SUBCASE("a VM placed nowhere violates the one-server placement family") {
        PlacementTrace bad = result.trace;
        bad.final_state.assignments.erase("a");
        const auto violations = verify_trace(enc, bad, cfg);
        bool flagged = false;
        for (const auto& v : violations)
            if (v.family == "initial_placement") flagged = true;
        CHECK(flagged);
    }

    SUBCASE("claiming a non-first candidate violates the selection family") {
        PlacementTrace bad = result.trace;
        bad.final_state.assignments.at("a").server = 1;  // simulator chose 0
        const auto violations = verify_trace(enc, bad, cfg);
        bool flagged = false;
        for (const auto& v : violations)
            if (v.family == "selection" || v.family == "initial_placement") flagged = true;
        CHECK(flagged);
    }
}

TEST_CASE("LP export emits a readable feasibility file") {
    AllocatorConfig cfg = fixtures::small_cfg(1, 8, 32, 2);
    Scenario s;
    s.vms.push_back(svm(vm("a", 2, 8, 0, 0, 10, 1), 0));
    const auto enc = encode_constraints(s, cfg);
    const std::string lp = enc.system.to_lp_format("test");
    CHECK(lp.find("Subject To") != std::string::npos);
    CHECK(lp.find("Binary") != std::string::npos);
    CHECK(lp.find("init_0") != std::string::npos);
}
