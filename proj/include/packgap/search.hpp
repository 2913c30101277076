#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "packgap/bounds.hpp"
#include "packgap/dpbfr.hpp"
#include "packgap/flows.hpp"
#include "packgap/rng.hpp"
#include "packgap/scenario.hpp"

namespace packgap {

enum class GapMetric { RiskOfMigration, MeanServersUsed };
enum class ModelFreedom { Pinned, Free };  // Pinned: predictions follow the ground truth

// Joint-outcome pin from a hypothetical-model flow path: constrains the
// ground-truth label (unless both offsets are 0) and derives the system's
// prediction as label + pred_offset.
struct FlowPin {
    std::optional<int> forced_cpu_label;
    int pred_offset = 0;     // hypothetical model offset
    int current_offset = 0;  // deployed model offset, kept for reporting
};

// The VM skeleton plus which fields the search may vary. Both inner
// evaluations share the skeleton; predictions are the only difference
// between the system run and the ground-truth baseline.
struct SearchTemplate {
    Scenario base;
    AllocatorConfig cfg;
    GapMetric metric = GapMetric::RiskOfMigration;
    bool labels_free = true;
    bool lifetime_labels_free = true;  // effective only when labels_free
    bool arrivals_free = true;
    ModelFreedom cpu = ModelFreedom::Free;
    ModelFreedom lifetime = ModelFreedom::Pinned;
    ModelFreedom memory = ModelFreedom::Pinned;
    int short_epochs = 3;  // lifetime label 0
    int long_epochs = 12;  // lifetime label 1
    std::vector<FlowPin> flow_pins;  // empty, or one per VM

    void validate() const;
};

struct ScenarioProperty {
    enum class Kind {
        CpuCorrect,
        CpuCell,       // (label, pred)
        CpuLabel,      // label == value
        LifetimeCorrect,
        LifetimeCell,
        LifetimeLabel,
        MemCorrect,
    };
    Kind kind = Kind::CpuCorrect;
    int label = 0;
    int pred = 0;

    bool matches(const ScenarioVm& sv) const;
    std::string id() const;
};

// A count bound on a property over a half-open range of VM list positions
// (end = -1 covers the whole sequence).
struct ScenarioConstraint {
    ScenarioProperty property;
    CountBound bound;
    int begin = 0;
    int end = -1;
};

int count_property(const Scenario& s, const ScenarioProperty& p, int begin = 0, int end = -1);

// Violated constraint ids (count bounds and flow pins); empty means feasible.
std::vector<std::string> check_constraints(const Scenario& s, const SearchTemplate& tpl,
                                           const std::vector<ScenarioConstraint>& constraints);

// metric(system run on predictions) - metric(baseline run on ground truth).
// Throws when the scenario violates its constraint set.
double gap(const Scenario& s, const SearchTemplate& tpl,
           const std::vector<ScenarioConstraint>& constraints);
double gap_unchecked(const Scenario& s, const SearchTemplate& tpl);

struct SearchBudget {
    long iterations = 10000;  // total across restarts
    std::uint64_t seed = 1;
    int restarts = 1;  // independent seeded restarts; incumbents merged
    double initial_temperature = -1.0;  // < 0: estimated from random neighbors
};

struct GapTracePoint {
    long iteration = 0;
    double gap = 0.0;
};

struct SearchResult {
    Scenario scenario;
    double gap = 0.0;
    std::vector<GapTracePoint> trace;  // incumbent discoveries, non-decreasing
    long evaluations = 0;
};

// Brute-force oracle: enumerates every (label, prediction) assignment the
// template allows, filters by the constraints, returns the maximum gap.
SearchResult exhaustive_search(const SearchTemplate& tpl,
                               const std::vector<ScenarioConstraint>& constraints,
                               long space_cap = 1000000);

// Cardinality of the assignment space exhaustive_search would enumerate.
long exhaustive_space_size(const SearchTemplate& tpl, long cap);

// Simulated annealing whose moves preserve feasibility by construction:
// count-preserving swaps, slack-checked cell flips, arrival swaps.
SearchResult anneal_search(const SearchTemplate& tpl,
                           const std::vector<ScenarioConstraint>& constraints,
                           const SearchBudget& budget);

// Repeated independent feasible sampling under the same budget; the
// simulation-style benchmark the annealer is compared against.
SearchResult random_search(const SearchTemplate& tpl,
                           const std::vector<ScenarioConstraint>& constraints,
                           const SearchBudget& budget);

struct PartitionStage {
    std::vector<std::pair<int, int>> ranges;         // list-position ranges, arrival order
    std::vector<ScenarioConstraint> constraints;     // per-partition bounds
};

struct PartitionPlan {
    std::vector<int> schedule;  // partition counts, e.g. 6 -> 3 -> 1
    std::vector<PartitionStage> stages;
};

// Derives per-partition count bounds for every stage of the schedule via the
// frequentist sampling bound machinery.
PartitionPlan make_partition_plan(const std::vector<ScenarioConstraint>& global, int n,
                                  std::vector<int> schedule, std::uint64_t seed,
                                  int trials = 10000);

// Solves partitions in arrival order carrying cluster state forward, then
// re-solves at each coarser partition count seeding from the concatenated
// incumbent; the globally feasible incumbent is retained across stages.
SearchResult partitioned_search(const SearchTemplate& tpl, const PartitionPlan& plan,
                                const std::vector<ScenarioConstraint>& global,
                                const SearchBudget& budget);

// Models outside the subset have predictions pinned to the ground truth.
SearchResult ablation_search(SearchTemplate tpl,
                             const std::vector<ScenarioConstraint>& constraints,
                             const SearchBudget& budget, bool cpu_free, bool lifetime_free,
                             bool memory_free);

// Feasible starting point: the template's base scenario repaired toward the
// bounds by greedy cell reassignment. Deterministic per rng state.
Scenario make_feasible(const SearchTemplate& tpl,
                       const std::vector<ScenarioConstraint>& constraints, Rng& rng,
                       std::optional<Scenario> start = std::nullopt);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

}  // namespace packgap
