#include "packgap/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "packgap/rng.hpp"

namespace packgap {

using nlohmann::json;

int DecisionTree::height() const {
    std::function<int(int)> depth = [&](int i) -> int {
        const TreeNode& n = nodes[i];
        if (n.is_leaf) return 0;
        return 1 + std::max(depth(n.left), depth(n.right));
    };
    return nodes.empty() ? 0 : depth(0);
}

int DecisionTree::internal_count() const {
    int c = 0;
    for (const auto& n : nodes)
        if (!n.is_leaf) ++c;
    return c;
}

int DecisionTree::route(const std::vector<double>& x) const {
    int i = 0;
    while (!nodes[i].is_leaf) {
        const TreeNode& n = nodes[i];
        i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return i;
}

void DecisionTree::validate(int feature_count) const {
    if (nodes.empty()) throw std::invalid_argument("tree has no nodes");
    std::vector<int> seen(nodes.size(), 0);
    std::function<void(int)> walk = [&](int i) {
        if (i < 0 || i >= static_cast<int>(nodes.size()))
            throw std::invalid_argument("tree child index out of range");
        if (seen[i]++) throw std::invalid_argument("tree is not acyclic");
        const TreeNode& n = nodes[i];
        if (n.is_leaf) {
            if (!std::isfinite(n.value)) throw std::invalid_argument("leaf value not finite");
            return;
        }
        if (n.feature < 0 || n.feature >= feature_count)
            throw std::invalid_argument("node references unknown feature index");
        if (n.left < 0 || n.right < 0)
            throw std::invalid_argument("internal node missing a child");
        walk(n.left);
        walk(n.right);
    };
    walk(0);
}

void Ensemble::validate() const {
    if (classes.empty()) throw std::invalid_argument("model: empty class list");
    if (trees.size() != classes.size())
        throw std::invalid_argument("model: tree groups do not match classes");
    if (feature_bounds.size() != feature_names.size())
        throw std::invalid_argument("model: feature_bounds do not match feature_names");
    for (const auto& group : trees) {
        if (group.empty()) throw std::invalid_argument("model: class with no trees");
        for (const auto& t : group) t.validate(static_cast<int>(feature_names.size()));
    }
    for (const auto& [lo, hi] : feature_bounds)
        if (!(lo < hi)) throw std::invalid_argument("model: degenerate feature bound");
}

std::vector<double> class_scores(const Ensemble& model, const std::vector<double>& x) {
    if (x.size() != model.num_features())
        throw std::invalid_argument("class_scores: feature dimension mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("class_scores: non-finite input");
    std::vector<double> scores(model.num_classes(), 0.0);
    for (std::size_t c = 0; c < model.trees.size(); ++c)
        for (const auto& t : model.trees[c]) scores[c] += t.evaluate(x);
    return scores;
}

int argmax_lowest_index(const std::vector<double>& scores) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

Prediction predict(const Ensemble& model, const std::vector<double>& x) {
    Prediction p;
    p.raw_scores = class_scores(model, x);
    p.class_index = argmax_lowest_index(p.raw_scores);
    return p;
}

ReferenceModel::ReferenceModel(std::vector<std::vector<double>> features,
                               std::vector<int> labels, int num_classes)
    : features_(std::move(features)), labels_(std::move(labels)), num_classes_(num_classes) {
    if (features_.empty()) throw std::invalid_argument("reference model: empty dataset");
    if (features_.size() != labels_.size())
        throw std::invalid_argument("reference model: features/labels size mismatch");
    const std::size_t arity = features_[0].size();
    for (const auto& f : features_)
        if (f.size() != arity)
            throw std::invalid_argument("reference model: inconsistent feature arity");

    // The map must be a function: duplicate vectors with conflicting labels
    // are a dataset error, reported with the offending indices.
    std::map<std::vector<double>, std::pair<std::size_t, int>> seen;
    std::string conflicts;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        auto it = seen.find(features_[i]);
        if (it == seen.end()) {
            seen.emplace(features_[i], std::make_pair(i, labels_[i]));
        } else if (it->second.second != labels_[i]) {
            conflicts += " (" + std::to_string(it->second.first) + "," + std::to_string(i) + ")";
        }
    }
    if (!conflicts.empty())
        throw std::invalid_argument("reference model: conflicting labels for duplicate vectors at indices" + conflicts);
}

int ReferenceModel::predict(const std::vector<double>& x) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double d = features_[i][k] - x[k];
            d2 += d * d;
        }
        if (d2 == 0.0) return labels_[i];  // exact memorized hit (lowest index first)
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return labels_[best];
}

ReferenceModel build_reference_model(const LabeledDataset& dataset) {
    return ReferenceModel(dataset.features, dataset.labels, dataset.num_classes);
}

LabeledDataset perturb_labels(const LabeledDataset& dataset, double p, std::uint64_t rng_seed) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("perturb_labels: p out of [0,1]");
    LabeledDataset out = dataset;
    const std::size_t n = dataset.labels.size();
    const std::size_t k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    if (k == 0) return out;
    if (dataset.num_classes < 2)
        throw std::invalid_argument("perturb_labels: no different label exists in a single-class space");
    Rng rng(rng_seed);
    auto order = rng.permutation(n);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t idx = order[i];
        const int old = out.labels[idx];
        int next = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(dataset.num_classes - 1)));
        if (next >= old) ++next;  // uniform over the other classes
        out.labels[idx] = next;
    }
    return out;
}

static json tree_to_json(const DecisionTree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        json o;
        if (n.is_leaf) {
            o["value"] = n.value;
        } else {
            o["feature"] = n.feature;
            o["threshold"] = n.threshold;
            o["left"] = n.left;
            o["right"] = n.right;
        }
        nodes.push_back(o);
    }
    return nodes;
}

static DecisionTree tree_from_json(const json& arr) {
    DecisionTree t;
    for (const auto& o : arr) {
        TreeNode n;
        if (o.contains("value")) {
            n.is_leaf = true;
            n.value = o.at("value").get<double>();
        } else {
            n.is_leaf = false;
            if (!o.contains("feature") || !o.contains("threshold") || !o.contains("left") ||
                !o.contains("right"))
                throw std::invalid_argument("model: malformed tree node");
            n.feature = o.at("feature").get<int>();
            n.threshold = o.at("threshold").get<double>();
            n.left = o.at("left").get<int>();
            n.right = o.at("right").get<int>();
        }
        t.nodes.push_back(n);
    }
    return t;
}

std::string model_to_json(const Ensemble& model) {
    json o;
    o["feature_names"] = model.feature_names;
    o["classes"] = model.classes;
    json bounds = json::array();
    for (const auto& [lo, hi] : model.feature_bounds) bounds.push_back(json::array({lo, hi}));
    o["feature_bounds"] = bounds;
    json groups = json::array();
    for (const auto& group : model.trees) {
        json g = json::array();
        for (const auto& t : group) g.push_back(tree_to_json(t));
        groups.push_back(g);
    }
    o["trees"] = groups;
    return o.dump(2) + "\n";
}

Ensemble parse_model(const std::string& json_text) {
    json o = json::parse(json_text);
    Ensemble m;
    m.feature_names = o.at("feature_names").get<std::vector<std::string>>();
    m.classes = o.at("classes").get<std::vector<std::string>>();
    for (const auto& b : o.at("feature_bounds"))
        m.feature_bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    for (const auto& g : o.at("trees")) {
        std::vector<DecisionTree> group;
        for (const auto& t : g) group.push_back(tree_from_json(t));
        m.trees.push_back(std::move(group));
    }
    m.validate();
    return m;
}

Ensemble load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

void save_model(const Ensemble& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(model);
}

std::vector<std::pair<double, double>> bounds_from_data(
    const std::vector<std::vector<double>>& features) {
    if (features.empty()) throw std::invalid_argument("bounds_from_data: empty dataset");
    const std::size_t arity = features[0].size();
    std::vector<std::pair<double, double>> bounds(
        arity, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    for (const auto& f : features)
        for (std::size_t k = 0; k < arity; ++k) {
            bounds[k].first = std::min(bounds[k].first, f[k]);
            bounds[k].second = std::max(bounds[k].second, f[k]);
        }
    for (auto& [lo, hi] : bounds) {
        const double pad = 0.01 * std::max(hi - lo, 1e-9);
        lo -= pad;
        hi += pad;
    }
    return bounds;
}

}  // namespace packgap
