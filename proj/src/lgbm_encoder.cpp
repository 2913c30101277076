#include "packgap/lgbm_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

namespace packgap {

namespace {

std::string nm(const char* stem, std::initializer_list<int> idx) {
    std::string s = stem;
    for (int i : idx) {
        s += "_";
        s += std::to_string(i);
    }
    return s;
}

// leaves under a node, in preorder
void collect_leaves(const DecisionTree& tree, int node, std::vector<int>& out) {
    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf) {
        out.push_back(node);
        return;
    }
    collect_leaves(tree, n.left, out);
    collect_leaves(tree, n.right, out);
}

}  // namespace

LgbmConstraintBundle encode(const Ensemble& model) {
    model.validate();
    for (const auto& [lo, hi] : model.feature_bounds)
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("encode: feature bounds must be finite");

    LgbmConstraintBundle bundle;
    bundle.model = &model;
    ConstraintSystem& cs = bundle.system;

    double max_span = 0.0;
    for (const auto& [lo, hi] : model.feature_bounds) max_span = std::max(max_span, hi - lo);
    const double eps = 1.0 / (2.0 * max_span);

    // smallest gap between distinct thresholds of the same feature bounds the
    // usable right-branch margin; cap it so boundary-adjacent inputs still
    // satisfy the encoding
    double min_gap = max_span;
    std::vector<std::set<double>> per_feature_thresholds(model.num_features());
    for (const auto& group : model.trees)
        for (const auto& t : group)
            for (const auto& n : t.nodes)
                if (!n.is_leaf) per_feature_thresholds[n.feature].insert(n.threshold);
    for (const auto& ts : per_feature_thresholds) {
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (double v : ts) {
            if (!std::isnan(prev)) min_gap = std::min(min_gap, v - prev);
            prev = v;
        }
    }
    const double mu = eps * std::min(min_gap, 1e-6 * max_span) / 2.0;

    double score_hi = -std::numeric_limits<double>::infinity();
    double score_lo = std::numeric_limits<double>::infinity();
    for (const auto& group : model.trees) {
        double lo = 0.0, hi = 0.0;
        for (const auto& t : group) {
            double tmin = std::numeric_limits<double>::infinity();
            double tmax = -std::numeric_limits<double>::infinity();
            for (const auto& n : t.nodes)
                if (n.is_leaf) {
                    tmin = std::min(tmin, n.value);
                    tmax = std::max(tmax, n.value);
                }
            lo += tmin;
            hi += tmax;
        }
        score_lo = std::min(score_lo, lo);
        score_hi = std::max(score_hi, hi);
    }
    cs.big_m = score_hi - score_lo + 1.0;
    cs.epsilon = eps;
    cs.mu = mu;
    const double M = cs.big_m;

    const int C = static_cast<int>(model.num_classes());
    const int F = static_cast<int>(model.num_features());

    for (int k = 0; k < F; ++k)
        bundle.feature_vars.push_back(cs.add_variable(nm("feat", {k}), VarKind::Real,
                                                      model.feature_bounds[k].first,
                                                      model.feature_bounds[k].second));
    for (int c = 0; c < C; ++c)
        bundle.class_indicator_vars.push_back(cs.add_variable(nm("xind", {c}), VarKind::Binary));
    for (int c = 0; c < C; ++c)
        bundle.class_score_vars.push_back(cs.add_variable(nm("score", {c}), VarKind::Real));

    bundle.leaf_vars.resize(C);
    bundle.leaf_nodes.resize(C);
    for (int c = 0; c < C; ++c) {
        const auto& group = model.trees[c];
        bundle.leaf_vars[c].resize(group.size());
        bundle.leaf_nodes[c].resize(group.size());
        for (int t = 0; t < static_cast<int>(group.size()); ++t) {
            std::vector<int> leaves;
            collect_leaves(group[t], 0, leaves);
            bundle.leaf_nodes[c][t] = leaves;
            for (int l = 0; l < static_cast<int>(leaves.size()); ++l)
                bundle.leaf_vars[c][t].push_back(
                    cs.add_variable(nm("act", {c, t, l}), VarKind::Binary));
        }
    }

    for (int c = 0; c < C; ++c) {
        const auto& group = model.trees[c];

        // class score equals the sum of activated leaf values
        std::vector<LinTerm> score_terms{{1.0, bundle.class_score_vars[c]}};
        for (int t = 0; t < static_cast<int>(group.size()); ++t)
            for (int l = 0; l < static_cast<int>(bundle.leaf_nodes[c][t].size()); ++l)
                score_terms.push_back(
                    {-group[t].nodes[bundle.leaf_nodes[c][t][l]].value, bundle.leaf_vars[c][t][l]});
        cs.add_constraint("class_score_def", nm("sdef", {c}), std::move(score_terms), Rel::Eq, 0.0);

        for (int t = 0; t < static_cast<int>(group.size()); ++t) {
            const DecisionTree& tree = group[t];
            const auto& leaves = bundle.leaf_nodes[c][t];
            auto ordinal = [&](int node) {
                return static_cast<int>(std::find(leaves.begin(), leaves.end(), node) -
                                        leaves.begin());
            };

            // exactly one leaf is activated per tree
            std::vector<LinTerm> one;
            for (int v : bundle.leaf_vars[c][t]) one.push_back({1.0, v});
            cs.add_constraint("one_leaf", nm("one", {c, t}), std::move(one), Rel::Eq, 1.0);

            // per internal node: leaves on the wrong side of the threshold
            // cannot be active
            for (int node = 0; node < static_cast<int>(tree.nodes.size()); ++node) {
                const TreeNode& n = tree.nodes[node];
                if (n.is_leaf) continue;
                std::vector<int> left_leaves, right_leaves;
                collect_leaves(tree, n.left, left_leaves);
                collect_leaves(tree, n.right, right_leaves);

                std::vector<LinTerm> lrow;
                for (int ln : left_leaves)
                    lrow.push_back({1.0, bundle.leaf_vars[c][t][ordinal(ln)]});
                lrow.push_back({eps, bundle.feature_vars[n.feature]});
                cs.add_constraint("leaf_left", nm("ll", {c, t, node}), std::move(lrow), Rel::Le,
                                  1.0 + eps * n.threshold);

                std::vector<LinTerm> rrow;
                for (int rn : right_leaves)
                    rrow.push_back({1.0, bundle.leaf_vars[c][t][ordinal(rn)]});
                rrow.push_back({-eps, bundle.feature_vars[n.feature]});
                cs.add_constraint("leaf_right", nm("lr", {c, t, node}), std::move(rrow), Rel::Le,
                                  1.0 - eps * n.threshold - mu);
            }
        }
    }

    // argmax: the indicated class's score is within M of dominating every other
    for (int i = 0; i < C; ++i)
        for (int j = 0; j < C; ++j) {
            if (i == j) continue;
            cs.add_constraint("argmax", nm("amax", {i, j}),
                              {{1.0, bundle.class_score_vars[j]},
                               {-1.0, bundle.class_score_vars[i]},
                               {M, bundle.class_indicator_vars[i]}},
                              Rel::Le, M);
        }
    std::vector<LinTerm> one_class;
    for (int c = 0; c < C; ++c) one_class.push_back({1.0, bundle.class_indicator_vars[c]});
    cs.add_constraint("one_class", "onecls", std::move(one_class), Rel::Eq, 1.0);

    return bundle;
}

std::vector<ConstraintViolation> verify_inference(const LgbmConstraintBundle& bundle,
                                                  const Ensemble& model,
                                                  const std::vector<double>& x, double tol) {
    const ConstraintSystem& cs = bundle.system;
    std::vector<double> values(cs.variables().size(), 0.0);

    for (std::size_t k = 0; k < x.size(); ++k) values[bundle.feature_vars[k]] = x[k];

    const Prediction pred = predict(model, x);
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
        values[bundle.class_indicator_vars[c]] = c == static_cast<std::size_t>(pred.class_index);
        values[bundle.class_score_vars[c]] = pred.raw_scores[c];
        for (std::size_t t = 0; t < model.trees[c].size(); ++t) {
            const int leaf = model.trees[c][t].route(x);
            const auto& leaves = bundle.leaf_nodes[c][t];
            const auto it = std::find(leaves.begin(), leaves.end(), leaf);
            values[bundle.leaf_vars[c][t][it - leaves.begin()]] = 1.0;
        }
    }
    return cs.check(values, tol);
}

}  // namespace packgap
