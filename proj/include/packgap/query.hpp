#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "packgap/bounds.hpp"
#include "packgap/dpbfr.hpp"
#include "packgap/models.hpp"
#include "packgap/search.hpp"
#include "packgap/workload.hpp"

namespace packgap {

enum class QueryKind { Q1Gap, Q2Ablation, Q3Drift, Q4RiskSurface, Q5Hypothetical };

struct QueryConfig {
    QueryKind query = QueryKind::Q1Gap;
    std::string metric = "risk_of_migration";  // or "servers_used"
    int n = 20;
    int horizon = 36;
    long iterations = 10000;
    std::uint64_t seed = 1;
    double z = 3.89;
    std::vector<int> plan_schedule;  // empty: plain annealing

    AllocatorConfig allocator;
    int short_epochs = 3;
    int long_epochs = 12;

    std::string workload_path;
    std::string profile_path;        // optional; estimated from the workload when absent
    std::string cpu_model_path;      // required for Q4
    double cpu_accuracy = 0.7;       // joint-cell synthesis when no model/profile supplies them
    double lifetime_accuracy = -1.0; // < 0: lifetime predictions stay pinned

    double drift_p = 0.2;          // Q3
    std::string capacity_profile_path;  // Q5
    int risk_threshold = 2;        // Q4
    int cegar_initial_depth = 1;
    int cegar_max_rounds = 64;

    std::string out_dir = "out";

    static QueryConfig from_json(const std::string& text);
    static QueryConfig load(const std::string& path);
    std::string canonical_json() const;
    std::string config_hash() const;  // FNV-1a digest of the canonical form
};

struct ReportBundle {
    // filename -> content; written together only after the query finishes
    std::map<std::string, std::string> files;
    int exit_code = 0;
    std::string summary;
};

ReportBundle run_query(const QueryConfig& config);

// Dry-run schema, bound-feasibility, and sequence-length checks; empty = ok.
std::vector<std::string> validate_query(const QueryConfig& config);

// Writes every file of the bundle under out_dir (created if needed).
void write_bundle(const ReportBundle& bundle, const std::string& out_dir);

struct WorkloadGenParams {
    int n = 60;
    int horizon = 36;
    std::uint64_t seed = 1;
    double p_cpu_label1 = 0.4;
    double p_lifetime_label1 = 0.5;
    int short_epochs = 3;
    int long_epochs = 12;
    int lifetime_threshold = 6;
    int feature_dim = 3;  // 0: no features
    std::vector<std::pair<int, int>> vm_types = {{2, 8}, {4, 16}, {8, 32}};
};

std::vector<VmRequest> gen_workload(const WorkloadGenParams& params);

// Shallow seeded ensemble over the feature space, a stand-in deployed model.
Ensemble gen_random_model(std::uint64_t seed, const std::vector<std::string>& feature_names,
                          const std::vector<std::pair<double, double>>& bounds,
                          int trees_per_class = 2, int depth = 2);

// Frequency-counting profile estimation; the cpu model, when given with
// featureful VMs, supplies the measured (label, prediction) joint cells.
DistributionProfile estimate_profile(const std::vector<VmRequest>& vms,
                                     const Ensemble* cpu_model = nullptr,
                                     double synth_cpu_accuracy = 0.7,
                                     double synth_lifetime_accuracy = -1.0,
                                     int arrival_windows = 6, int horizon = 36);

// Scenario skeleton + template + count-bound constraints for a query run.
struct SearchInputs {
    SearchTemplate tpl;
    std::vector<ScenarioConstraint> constraints;
};

SearchInputs build_search_inputs(const QueryConfig& config, const std::vector<VmRequest>& vms,
                                 const DistributionProfile& profile);

std::string fnv1a_hex(const std::string& data);

}  // namespace packgap
