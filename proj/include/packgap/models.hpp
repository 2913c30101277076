#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace packgap {

// A decision tree stored as a flat node array. Index 0 is the root; internal
// nodes route left iff x[feature] <= threshold, strictly right otherwise.
struct TreeNode {
    bool is_leaf = true;
    double value = 0.0;   // leaf score
    int feature = -1;     // internal only
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    bool empty() const { return nodes.empty(); }
    int height() const;
    int internal_count() const;
    // Leaf reached by routing x through the tree.
    int route(const std::vector<double>& x) const;
    double evaluate(const std::vector<double>& x) const { return nodes[route(x)].value; }
    void validate(int feature_count) const;
};

// Gradient-boosted classifier: one group of trees per class, class score is
// the sum of the group's leaf outputs, prediction is the softmax-free argmax.
struct Ensemble {
    std::vector<std::string> feature_names;
    std::vector<std::string> classes;
    std::vector<std::vector<DecisionTree>> trees;          // [class][tree]
    std::vector<std::pair<double, double>> feature_bounds; // per feature [min, max]

    std::size_t num_classes() const { return classes.size(); }
    std::size_t num_features() const { return feature_names.size(); }
    void validate() const;
};

struct Prediction {
    int class_index = 0;
    std::vector<double> raw_scores;
};

// Sum of each class group's routed leaf values.
std::vector<double> class_scores(const Ensemble& model, const std::vector<double>& x);

// Argmax of class_scores with lowest-index tie-break.
Prediction predict(const Ensemble& model, const std::vector<double>& x);

int argmax_lowest_index(const std::vector<double>& scores);

// Memorizing stand-in for the true feature-to-label map: exact lookup for
// vectors seen in training, nearest-neighbor (Euclidean, lowest-id tie-break)
// for anything else.
class ReferenceModel {
public:
    ReferenceModel(std::vector<std::vector<double>> features, std::vector<int> labels,
                   int num_classes);

    int predict(const std::vector<double>& x) const;
    int num_classes() const { return num_classes_; }
    std::size_t size() const { return features_.size(); }
    std::size_t arity() const { return features_.empty() ? 0 : features_[0].size(); }

    // View of the reference map as a one-leaf-per-point ensemble is not
    // provided; use as_ensemble() below for the CEGAR conjunction.
    const std::vector<std::vector<double>>& features() const { return features_; }
    const std::vector<int>& labels() const { return labels_; }

private:
    std::vector<std::vector<double>> features_;
    std::vector<int> labels_;
    int num_classes_;
};

struct LabeledDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    int num_classes = 2;
};

ReferenceModel build_reference_model(const LabeledDataset& dataset);

// Changes exactly ceil(p * n) labels (chosen uniformly by seed) to a
// different class, uniform over the other classes. Order preserved.
LabeledDataset perturb_labels(const LabeledDataset& dataset, double p, std::uint64_t rng_seed);

// Portable JSON schema round-trip. Nodes are serialized in preorder with
// explicit child indices.
Ensemble parse_model(const std::string& json_text);
Ensemble load_model(const std::string& path);
std::string model_to_json(const Ensemble& model);
void save_model(const Ensemble& model, const std::string& path);

// Feature bounds defaulted from dataset min/max padded by 1% per side.
std::vector<std::pair<double, double>> bounds_from_data(
    const std::vector<std::vector<double>>& features);

}  // namespace packgap
