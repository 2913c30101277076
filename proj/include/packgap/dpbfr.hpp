#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "packgap/constraint_system.hpp"
#include "packgap/scenario.hpp"
#include "packgap/workload.hpp"

namespace packgap {

enum class SelectionMode { RoundRobin, SeededRandom };
enum class PoolMode { Fixed, Unbounded };
enum class ScoreAggregation { Mean, Max };

struct AllocatorConfig {
    double oversub_fraction = 0.65;
    int short_buckets = 3;
    int long_buckets = 5;
    SelectionMode selection_mode = SelectionMode::RoundRobin;
    PoolMode pool_mode = PoolMode::Fixed;
    int pool_size = 4;               // fixed pool J; unbounded opens servers on demand
    double server_cpu = 48.0;        // capacity of a pool server
    double server_mem = 192.0;
    int lifetime_threshold_epochs = 6;
    ScoreAggregation score_aggregation = ScoreAggregation::Mean;
    int horizon = 144;               // 10-minute epochs, one day
    std::uint64_t selection_seed = 0;

    void validate() const;
    std::vector<Server> make_servers() const;
    int buckets_for(int lifetime_pred) const {
        return lifetime_pred ? long_buckets : short_buckets;
    }
};

// Reserved sizes the allocator books for a VM given model predictions.
std::vector<double> reserved_sizes(const VmRequest& vm, const VmPredictions& preds,
                                   const AllocatorConfig& cfg);
// Sizes the VM actually uses, derived from its ground-truth labels.
std::vector<double> actual_sizes(const VmRequest& vm, const AllocatorConfig& cfg);

// Normalized residual after hypothetically placing `reserved` on a server with
// the given residual capacities, aggregated across dimensions per cfg.
// Pre: the VM fits (residual >= reserved in every dimension).
double best_fit_score(const std::vector<double>& residual, const std::vector<double>& reserved,
                      const std::vector<double>& capacity, const AllocatorConfig& cfg);

// Equal-width bucket index over [0,1]; score 1.0 maps to the last bucket.
int bucket(double score, int lifetime_pred, const AllocatorConfig& cfg);

// Scan order used to pick among minimum-bucket candidates for the k-th
// processed VM: round-robin rotates the start index by k, seeded_random draws
// a permutation from (selection_seed, k).
std::vector<int> selection_scan_order(const AllocatorConfig& cfg, int processed_index,
                                      int num_servers);

struct VmPlacement {
    std::string vm_id;
    int processing_index = -1;
    int chosen_server = -1;               // -1 = rejected
    bool rejected = false;
    std::vector<int> fitting_servers;
    std::vector<int> candidate_set;       // fitting servers in the minimum bucket
    std::vector<double> score_per_server; // formula value for every server
    std::vector<int> bucket_per_server;   // meaningful for fitting servers
    int min_bucket = 0;                   // z_i
    std::vector<int> scan_order;
    std::vector<double> reserved;
};

struct PlacementTrace {
    std::vector<VmPlacement> placements;
    ClusterState final_state;
    int rejection_count = 0;
};

struct SimulationResult {
    PlacementTrace trace;
    MetricsReport metrics;
};

// Deterministic DPBFR run over the scenario. VMs are processed in
// (arrival, id) order; departures take effect at epoch boundaries before the
// epoch's arrivals.
SimulationResult simulate(const Scenario& scenario, const AllocatorConfig& cfg);
SimulationResult simulate(const Scenario& scenario, const AllocatorConfig& cfg,
                          std::vector<Server> servers);

struct DpbfrEncoding {
    ConstraintSystem system;
    // layout metadata for substitution, in processing order
    int num_vms = 0;
    int num_servers = 0;
    int horizon = 0;
    std::vector<Server> servers;
    std::vector<std::size_t> order;  // processing order into scenario.vms
    std::vector<int> arrivals;
    std::vector<int> clipped_lifetime;
    std::vector<std::vector<double>> reserved;
    std::vector<int> bucket_counts;
    std::vector<std::vector<int>> scan_orders;
};

// MILP-style constraint encoding of the allocator's behavior on the scenario.
// Requires a fixed pool (the encoding needs a finite server count).
DpbfrEncoding encode_constraints(const Scenario& scenario, const AllocatorConfig& cfg);
DpbfrEncoding encode_constraints(const Scenario& scenario, const AllocatorConfig& cfg,
                                 std::vector<Server> servers);

// Substitutes the simulator's decisions into every variable of the encoding
// and checks each constraint with the given tolerance.
std::vector<ConstraintViolation> verify_trace(const DpbfrEncoding& encoding,
                                              const PlacementTrace& trace,
                                              const AllocatorConfig& cfg,
                                              double tol = 1e-9);

std::string trace_to_json(const PlacementTrace& trace);

}  // namespace packgap
