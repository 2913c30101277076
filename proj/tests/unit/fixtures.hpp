#pragma once

#include <string>
#include <vector>

#include "packgap/dpbfr.hpp"
#include "packgap/models.hpp"
#include "packgap/scenario.hpp"

namespace fixtures {

using namespace packgap;

// Three-class single-tree-per-class model over features f1, f2, f3, every
// threshold 0.5, left iff <=. Routing (0.2, 0.2, 0.2) scores (0.9, 1.1, 0.3).
inline Ensemble fig_model() {
    Ensemble m;
    m.feature_names = {"f1", "f2", "f3"};
    m.classes = {"c1", "c2", "c3"};
    m.feature_bounds = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};

    auto internal = [](int f, int l, int r) {
        TreeNode n;
        n.is_leaf = false;
        n.feature = f;
        n.threshold = 0.5;
        n.left = l;
        n.right = r;
        return n;
    };
    auto leaf = [](double v) {
        TreeNode n;
        n.is_leaf = true;
        n.value = v;
        return n;
    };

    DecisionTree t1;
    t1.nodes = {internal(0, 1, 6), internal(1, 2, 3), leaf(0.9),
                internal(2, 4, 5), leaf(1.3),         leaf(0.5), leaf(0.6)};
    DecisionTree t2;
    t2.nodes = {internal(0, 1, 6), internal(2, 2, 5), internal(1, 3, 4), leaf(1.1), leaf(0.4),
                leaf(0.2),         internal(1, 7, 8), leaf(0.8),         leaf(1.0)};
    DecisionTree t3;
    t3.nodes = {internal(1, 1, 6), internal(0, 2, 3), leaf(0.3),
                internal(2, 4, 5), leaf(1.4),         leaf(0.7), leaf(0.5)};

    m.trees = {{t1}, {t2}, {t3}};
    m.validate();
    return m;
}

// Binary model that predicts class 1 exactly when feature f1 <= split.
inline Ensemble step_model(double split, bool class1_below, const std::string& feature = "f1") {
    Ensemble m;
    m.feature_names = {feature};
    m.classes = {"0", "1"};
    m.feature_bounds = {{0.0, 1.0}};
    DecisionTree zero;
    {
        TreeNode n;
        n.is_leaf = true;
        n.value = 0.0;
        zero.nodes = {n};
    }
    DecisionTree one;
    {
        TreeNode root;
        root.is_leaf = false;
        root.feature = 0;
        root.threshold = split;
        root.left = 1;
        root.right = 2;
        TreeNode l, r;
        l.is_leaf = r.is_leaf = true;
        l.value = class1_below ? 1.0 : -1.0;
        r.value = class1_below ? -1.0 : 1.0;
        one.nodes = {root, l, r};
    }
    m.trees = {{zero}, {one}};
    m.validate();
    return m;
}

inline VmRequest vm(const std::string& id, int cpu, int mem, int arrival, int cpu_label,
                    int mem_decile, int life_epochs, int threshold = 6) {
    VmRequest v;
    v.id = id;
    v.req_cpu = cpu;
    v.req_mem = mem;
    v.arrival = arrival;
    v.true_cpu_label = cpu_label;
    v.true_mem_decile = mem_decile;
    v.true_lifetime_epochs = life_epochs;
    v.true_lifetime_label = life_epochs >= threshold ? 1 : 0;
    return v;
}

inline ScenarioVm svm(VmRequest v, int cpu_pred, int lifetime_pred = -1) {
    ScenarioVm sv;
    sv.preds.cpu = cpu_pred;
    sv.preds.lifetime = lifetime_pred < 0 ? v.true_lifetime_label : lifetime_pred;
    sv.vm = std::move(v);
    return sv;
}

inline AllocatorConfig small_cfg(int servers, double cpu_cap, double mem_cap, int horizon) {
    AllocatorConfig cfg;
    cfg.pool_mode = PoolMode::Fixed;
    cfg.pool_size = servers;
    cfg.server_cpu = cpu_cap;
    cfg.server_mem = mem_cap;
    cfg.horizon = horizon;
    return cfg;
}

}  // namespace fixtures
