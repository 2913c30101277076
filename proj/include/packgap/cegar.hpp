#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "packgap/models.hpp"

namespace packgap {

// Shared feature space across models: identity by feature name, bounds
// intersected where names overlap.
struct FeatureSpace {
    std::vector<std::string> names;
    std::vector<std::pair<double, double>> bounds;
    std::map<std::string, int> index;
    // per model: local feature index -> global index
    std::vector<std::vector<int>> to_global;

    static FeatureSpace build(const std::vector<const Ensemble*>& models);
    std::vector<double> project(int model, const std::vector<double>& global_point) const;
};

// Axis-aligned box of half-open intervals [lo, hi) per shared feature.
// Splits use the next representable double above the threshold so that
// "x <= t" / "x > t" partition the box exactly.
struct Box {
    std::vector<std::pair<double, double>> iv;

    static Box full(const FeatureSpace& space);
    bool empty() const;
    bool clip_left(int feature, double threshold);   // keep x <= threshold
    bool clip_right(int feature, double threshold);  // keep x > threshold
    bool contains(const std::vector<double>& point) const;
    std::vector<double> midpoint() const;
};

// Original tree truncated at a depth; truncated positions become abstract
// leaves carrying the max (target-class group) or min (competitors) over the
// pruned subtree, with a back-pointer for refinement.
struct AbstractNode {
    bool is_leaf = true;
    bool is_abstract = false;
    double value = 0.0;
    int orig_node = -1;  // node in the original tree this position mirrors
    int feature = -1;    // global feature index (internal nodes)
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

struct AbstractTree {
    std::vector<AbstractNode> nodes;
    const DecisionTree* original = nullptr;
    bool maximize = false;  // pessimistic direction of abstract values

    int route(const std::vector<double>& global_point) const;
    double evaluate(const std::vector<double>& global_point) const {
        return nodes[route(global_point)].value;
    }
    int pruned_internal_count() const;
};

struct AbstractModel {
    const Ensemble* model = nullptr;
    int target_class = 0;
    std::vector<std::vector<AbstractTree>> trees;  // [class][tree]
};

struct AbstractEnsembles {
    FeatureSpace space;
    std::vector<AbstractModel> models;

    int total_pruned() const;
};

struct Witness {
    std::vector<double> point;  // in the shared feature space
    // chosen leaf (node index in the abstract tree) per flattened tree
    std::vector<int> leaf_selection;
    Box box;
};

struct ModelTarget {
    const Ensemble* model = nullptr;
    int target_class = 0;
};

// Depth-bounded pessimistic abstraction of every tree, biased toward the
// target classes: pruning never loses a satisfiable target assignment.
AbstractEnsembles abstract(const std::vector<ModelTarget>& targets, int depth);

struct FeasibilityResult {
    bool sat = false;
    Witness witness;
};

// Branch-and-bound over one-leaf-per-tree selections across all ensembles
// simultaneously, with box intersection and optimistic/pessimistic score
// pruning. UNSAT is sound for the concrete models.
FeasibilityResult feasibility(const AbstractEnsembles& abs);

struct WitnessCheck {
    bool pass = false;
    int failing_model = -1;
    int actual_class = -1;
};

WitnessCheck check_witness(const std::vector<ModelTarget>& targets,
                           const FeatureSpace& space, const std::vector<double>& point);

// Expands, by one level, the abstract leaf the failing witness routes into in
// every tree whose full evaluation disagrees with its abstract value.
// Strictly decreases the total pruned-node count.
void refine(AbstractEnsembles& abs, const Witness& witness);

enum class FindStatus { Point, ProvenUnsat, BudgetExhausted };

struct FindResult {
    FindStatus status = FindStatus::BudgetExhausted;
    std::vector<double> point;             // valid when status == Point
    std::vector<int> verified_classes;     // per model, full-inference class at point
    int refinement_rounds = 0;
    int pruned_at_exit = 0;
    FeatureSpace space;
};

// abstract -> feasibility -> check -> refine loop. UNSAT at any abstraction
// level is final; returned points always pass check_witness.
FindResult find_features(const std::vector<ModelTarget>& targets, int initial_depth,
                         int max_rounds);

// Memorizing partition-tree ensemble over a labeled dataset: every training
// point routes to a leaf of its own label, one tree per class scoring 1/0.
// Axis-aligned, so it joins the CEGAR conjunction like any other model.
Ensemble memorizing_ensemble(const LabeledDataset& dataset,
                             const std::vector<std::string>& feature_names,
                             std::vector<std::pair<double, double>> feature_bounds = {});

}  // namespace packgap
