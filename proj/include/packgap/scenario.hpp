#pragma once

#include <optional>
#include <vector>

#include "packgap/workload.hpp"

namespace packgap {

// Per-VM model outputs fed to the allocator. mem_decile is absent when no
// memory model is in play (the allocator then reserves the full request).
struct VmPredictions {
    int cpu = 0;                       // binary: 1 = will use > oversub fraction
    std::optional<int> mem_decile;     // 1..10
    int lifetime = 0;                  // binary: 1 = long-lived
};

struct ScenarioVm {
    VmRequest vm;
    VmPredictions preds;
};

// The search variable: an ordered VM sequence with ground-truth labels and
// per-model predictions.
struct Scenario {
    std::vector<ScenarioVm> vms;

    std::size_t size() const { return vms.size(); }

    // Same skeleton with predictions replaced by the ground truth. Prediction
    // fields that are absent stay absent (both runs reserve the full request).
    Scenario with_ground_truth_predictions() const {
        Scenario s = *this;
        for (auto& sv : s.vms) {
            sv.preds.cpu = sv.vm.true_cpu_label;
            sv.preds.lifetime = sv.vm.true_lifetime_label;
            if (sv.preds.mem_decile) sv.preds.mem_decile = sv.vm.true_mem_decile;
        }
        return s;
    }

    // Processing order: by (arrival, id). Returns indices into vms.
    std::vector<std::size_t> processing_order() const;
};

}  // namespace packgap
