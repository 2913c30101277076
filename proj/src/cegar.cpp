#include "packgap/cegar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace packgap {

FeatureSpace FeatureSpace::build(const std::vector<const Ensemble*>& models) {
    FeatureSpace space;
    for (const Ensemble* m : models) {
        for (std::size_t k = 0; k < m->feature_names.size(); ++k) {
            const std::string& name = m->feature_names[k];
            auto it = space.index.find(name);
            if (it == space.index.end()) {
                space.index[name] = static_cast<int>(space.names.size());
                space.names.push_back(name);
                space.bounds.push_back(m->feature_bounds[k]);
            } else {
                auto& b = space.bounds[it->second];
                b.first = std::max(b.first, m->feature_bounds[k].first);
                b.second = std::min(b.second, m->feature_bounds[k].second);
                if (!(b.first < b.second))
                    throw std::invalid_argument("feature space: bounds of shared feature '" +
                                                name + "' do not overlap");
            }
        }
    }
    for (const Ensemble* m : models) {
        std::vector<int> map;
        for (const auto& name : m->feature_names) map.push_back(space.index.at(name));
        space.to_global.push_back(std::move(map));
    }
    return space;
}

std::vector<double> FeatureSpace::project(int model, const std::vector<double>& global_point) const {
    std::vector<double> local;
    local.reserve(to_global[model].size());
    for (int g : to_global[model]) local.push_back(global_point[g]);
    return local;
}

Box Box::full(const FeatureSpace& space) {
    Box b;
    for (const auto& [lo, hi] : space.bounds)
        b.iv.emplace_back(lo, std::nextafter(hi, std::numeric_limits<double>::infinity()));
    return b;
}

bool Box::empty() const {
    for (const auto& [lo, hi] : iv)
        if (!(lo < hi)) return true;
    return false;
}

bool Box::clip_left(int feature, double threshold) {
    // x <= t  <=>  x < next_up(t)
    auto& [lo, hi] = iv[feature];
    hi = std::min(hi, std::nextafter(threshold, std::numeric_limits<double>::infinity()));
    return lo < hi;
}

bool Box::clip_right(int feature, double threshold) {
    // x > t  <=>  x >= next_up(t)
    auto& [lo, hi] = iv[feature];
    lo = std::max(lo, std::nextafter(threshold, std::numeric_limits<double>::infinity()));
    return lo < hi;
}

bool Box::contains(const std::vector<double>& point) const {
    for (std::size_t k = 0; k < iv.size(); ++k)
        if (point[k] < iv[k].first || point[k] >= iv[k].second) return false;
    return true;
}

std::vector<double> Box::midpoint() const {
    std::vector<double> p;
    p.reserve(iv.size());
    for (const auto& [lo, hi] : iv) {
        double mid = lo + (hi - lo) / 2.0;
        if (mid >= hi) mid = lo;  // degenerate one-ulp interval
        p.push_back(mid);
    }
    return p;
}

namespace {

void subtree_extrema(const DecisionTree& tree, int node, double& mn, double& mx) {
    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf) {
        mn = std::min(mn, n.value);
        mx = std::max(mx, n.value);
        return;
    }
    subtree_extrema(tree, n.left, mn, mx);
    subtree_extrema(tree, n.right, mn, mx);
}

double pessimistic_value(const DecisionTree& tree, int node, bool maximize) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    subtree_extrema(tree, node, mn, mx);
    return maximize ? mx : mn;
}

int count_internal(const DecisionTree& tree, int node) {
    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf) return 0;
    return 1 + count_internal(tree, n.left) + count_internal(tree, n.right);
}

AbstractTree truncate_tree(const DecisionTree& tree, bool maximize, int depth,
                           const std::vector<int>& to_global) {
    AbstractTree at;
    at.original = &tree;
    at.maximize = maximize;
    std::function<int(int, int)> build = [&](int orig, int level) -> int {
        const TreeNode& n = tree.nodes[orig];
        AbstractNode an;
        an.orig_node = orig;
        const int idx = static_cast<int>(at.nodes.size());
        at.nodes.push_back(an);
        if (n.is_leaf) {
            at.nodes[idx].is_leaf = true;
            at.nodes[idx].value = n.value;
        } else if (level >= depth) {
            at.nodes[idx].is_leaf = true;
            at.nodes[idx].is_abstract = true;
            at.nodes[idx].value = pessimistic_value(tree, orig, maximize);
        } else {
            at.nodes[idx].is_leaf = false;
            at.nodes[idx].feature = to_global[n.feature];
            at.nodes[idx].threshold = n.threshold;
            const int l = build(n.left, level + 1);
            const int r = build(n.right, level + 1);
            at.nodes[idx].left = l;
            at.nodes[idx].right = r;
        }
        return idx;
    };
    build(0, 0);
    return at;
}

}  // namespace

int AbstractTree::route(const std::vector<double>& global_point) const {
    int i = 0;
    while (!nodes[i].is_leaf) {
        const AbstractNode& n = nodes[i];
        i = global_point[n.feature] <= n.threshold ? n.left : n.right;
    }
    return i;
}

int AbstractTree::pruned_internal_count() const {
    int pruned = 0;
    for (const auto& n : nodes)
        if (n.is_leaf && n.is_abstract) pruned += count_internal(*original, n.orig_node);
    return pruned;
}

int AbstractEnsembles::total_pruned() const {
    int total = 0;
    for (const auto& m : models)
        for (const auto& group : m.trees)
            for (const auto& t : group) total += t.pruned_internal_count();
    return total;
}

AbstractEnsembles abstract(const std::vector<ModelTarget>& targets, int depth) {
    if (depth < 0) throw std::invalid_argument("abstract: depth must be >= 0");
    std::vector<const Ensemble*> models;
    for (const auto& t : targets) {
        if (t.target_class < 0 || t.target_class >= static_cast<int>(t.model->num_classes()))
            throw std::invalid_argument("abstract: unknown target class");
        models.push_back(t.model);
    }
    AbstractEnsembles abs;
    abs.space = FeatureSpace::build(models);
    for (std::size_t m = 0; m < targets.size(); ++m) {
        AbstractModel am;
        am.model = targets[m].model;
        am.target_class = targets[m].target_class;
        const auto& to_global = abs.space.to_global[m];
        am.trees.resize(am.model->num_classes());
        for (std::size_t c = 0; c < am.model->num_classes(); ++c)
            for (const auto& tree : am.model->trees[c])
                am.trees[c].push_back(truncate_tree(
                    tree, static_cast<int>(c) == am.target_class, depth, to_global));
        abs.models.push_back(std::move(am));
    }
    return abs;
}

namespace {

// leaf of an abstract tree together with its path constraints
struct AbstractLeaf {
    int node = -1;
    double value = 0.0;
    // (global feature, threshold, goes_left)
    std::vector<std::tuple<int, double, bool>> path;
};

struct FlatTree {
    int model = -1;
    int cls = -1;
    double min_leaf = 0.0;  // over all leaves, ignoring the box
    double max_leaf = 0.0;
    std::vector<AbstractLeaf> leaves;
};

void collect_abstract_leaves(const AbstractTree& at, int node,
                             std::vector<std::tuple<int, double, bool>>& path,
                             std::vector<AbstractLeaf>& out) {
    const AbstractNode& n = at.nodes[node];
    if (n.is_leaf) {
        out.push_back({node, n.value, path});
        return;
    }
    path.emplace_back(n.feature, n.threshold, true);
    collect_abstract_leaves(at, n.left, path, out);
    path.back() = {n.feature, n.threshold, false};
    collect_abstract_leaves(at, n.right, path, out);
    path.pop_back();
}

bool leaf_compatible(const AbstractLeaf& leaf, const Box& box) {
    Box b = box;
    for (const auto& [feature, threshold, left] : leaf.path) {
        const bool ok = left ? b.clip_left(feature, threshold) : b.clip_right(feature, threshold);
        if (!ok) return false;
    }
    return true;
}

// extrema over leaves still compatible with the box
bool box_extrema(const FlatTree& ft, const Box& box, double& mn, double& mx) {
    bool any = false;
    mn = std::numeric_limits<double>::infinity();
    mx = -std::numeric_limits<double>::infinity();
    for (const auto& leaf : ft.leaves) {
        if (!leaf_compatible(leaf, box)) continue;
        any = true;
        mn = std::min(mn, leaf.value);
        mx = std::max(mx, leaf.value);
    }
    return any;
}

struct SearchContext {
    const AbstractEnsembles* abs = nullptr;
    std::vector<FlatTree> flat;
    // per (model, class): partial sum of chosen leaf values
    std::vector<std::vector<double>> partial;
    std::vector<int> selection;
    FeasibilityResult result;
};

// prune iff, per model, even the optimistic target total cannot beat some
// competitor's pessimistic total under the lowest-index tie-break
bool bound_prunes(SearchContext& ctx, std::size_t next_tree, const Box& box) {
    const auto& models = ctx.abs->models;
    std::vector<std::vector<double>> opt(models.size()), pess(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
        opt[m] = ctx.partial[m];
        pess[m] = ctx.partial[m];
    }
    for (std::size_t i = next_tree; i < ctx.flat.size(); ++i) {
        const FlatTree& ft = ctx.flat[i];
        double mn, mx;
        if (!box_extrema(ft, box, mn, mx)) return true;  // some tree has no compatible leaf
        const bool is_target = ft.cls == models[ft.model].target_class;
        opt[ft.model][ft.cls] += is_target ? mx : mn;
        pess[ft.model][ft.cls] += is_target ? mx : mn;
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
        const int target = models[m].target_class;
        for (std::size_t c = 0; c < opt[m].size(); ++c) {
            if (static_cast<int>(c) == target) continue;
            const double diff = opt[m][target] - pess[m][c];
            if (target < static_cast<int>(c) ? diff < 0.0 : diff <= 0.0) return true;
        }
    }
    return false;
}

bool dfs(SearchContext& ctx, std::size_t tree_idx, const Box& box) {
    if (tree_idx == ctx.flat.size()) {
        // full selection: accept iff each model's target strictly attains the
        // argmax under the lowest-index tie-break
        for (std::size_t m = 0; m < ctx.abs->models.size(); ++m)
            if (argmax_lowest_index(ctx.partial[m]) != ctx.abs->models[m].target_class)
                return false;
        ctx.result.sat = true;
        ctx.result.witness.point = box.midpoint();
        ctx.result.witness.leaf_selection = ctx.selection;
        ctx.result.witness.box = box;
        return true;
    }
    if (bound_prunes(ctx, tree_idx, box)) return false;
    const FlatTree& ft = ctx.flat[tree_idx];
    for (const auto& leaf : ft.leaves) {
        Box next = box;
        bool ok = true;
        for (const auto& [feature, threshold, left] : leaf.path) {
            ok = left ? next.clip_left(feature, threshold) : next.clip_right(feature, threshold);
            if (!ok) break;
        }
        if (!ok) continue;
        ctx.partial[ft.model][ft.cls] += leaf.value;
        ctx.selection.push_back(leaf.node);
        if (dfs(ctx, tree_idx + 1, next)) return true;
        ctx.selection.pop_back();
        ctx.partial[ft.model][ft.cls] -= leaf.value;
    }
    return false;
}

}  // namespace

FeasibilityResult feasibility(const AbstractEnsembles& abs) {
    SearchContext ctx;
    ctx.abs = &abs;
    for (std::size_t m = 0; m < abs.models.size(); ++m) {
        ctx.partial.emplace_back(abs.models[m].model->num_classes(), 0.0);
        for (std::size_t c = 0; c < abs.models[m].trees.size(); ++c)
            for (const auto& at : abs.models[m].trees[c]) {
                FlatTree ft;
                ft.model = static_cast<int>(m);
                ft.cls = static_cast<int>(c);
                std::vector<std::tuple<int, double, bool>> path;
                collect_abstract_leaves(at, 0, path, ft.leaves);
                ft.min_leaf = std::numeric_limits<double>::infinity();
                ft.max_leaf = -std::numeric_limits<double>::infinity();
                for (const auto& leaf : ft.leaves) {
                    ft.min_leaf = std::min(ft.min_leaf, leaf.value);
                    ft.max_leaf = std::max(ft.max_leaf, leaf.value);
                }
                ctx.flat.push_back(std::move(ft));
            }
    }
    Box box = Box::full(abs.space);
    dfs(ctx, 0, box);
    return ctx.result;
}

WitnessCheck check_witness(const std::vector<ModelTarget>& targets, const FeatureSpace& space,
                           const std::vector<double>& point) {
    WitnessCheck out;
    for (std::size_t m = 0; m < targets.size(); ++m) {
        const auto local = space.project(static_cast<int>(m), point);
        const int cls = predict(*targets[m].model, local).class_index;
        if (cls != targets[m].target_class) {
            out.pass = false;
            out.failing_model = static_cast<int>(m);
            out.actual_class = cls;
            return out;
        }
    }
    out.pass = true;
    return out;
}

void refine(AbstractEnsembles& abs, const Witness& witness) {
    bool expanded = false;
    for (std::size_t m = 0; m < abs.models.size(); ++m) {
        const auto local = abs.space.project(static_cast<int>(m), witness.point);
        for (std::size_t c = 0; c < abs.models[m].trees.size(); ++c) {
            for (auto& at : abs.models[m].trees[c]) {
                const double full_value = at.original->evaluate(local);
                const int leaf = at.route(witness.point);
                if (at.nodes[leaf].value == full_value) continue;
                if (!at.nodes[leaf].is_abstract)
                    throw std::logic_error("refine: concrete leaf disagrees with full tree");
                // expand this abstract leaf by one level
                const TreeNode& orig = at.original->nodes[at.nodes[leaf].orig_node];
                const auto& to_global = abs.space.to_global[m];
                auto make_child = [&](int orig_child) {
                    AbstractNode an;
                    an.orig_node = orig_child;
                    const TreeNode& oc = at.original->nodes[orig_child];
                    if (oc.is_leaf) {
                        an.is_leaf = true;
                        an.value = oc.value;
                    } else {
                        an.is_leaf = true;
                        an.is_abstract = true;
                        an.value = pessimistic_value(*at.original, orig_child, at.maximize);
                    }
                    at.nodes.push_back(an);
                    return static_cast<int>(at.nodes.size() - 1);
                };
                const int l = make_child(orig.left);
                const int r = make_child(orig.right);
                at.nodes[leaf].is_leaf = false;
                at.nodes[leaf].is_abstract = false;
                at.nodes[leaf].feature = to_global[orig.feature];
                at.nodes[leaf].threshold = orig.threshold;
                at.nodes[leaf].left = l;
                at.nodes[leaf].right = r;
                expanded = true;
            }
        }
    }
    if (!expanded)
        throw std::logic_error("refine: witness is consistent with the abstraction");
}

FindResult find_features(const std::vector<ModelTarget>& targets, int initial_depth,
                         int max_rounds) {
    AbstractEnsembles abs = abstract(targets, initial_depth);
    FindResult out;
    out.space = abs.space;
    out.refinement_rounds = 0;
    while (true) {
        FeasibilityResult feas = feasibility(abs);
        if (!feas.sat) {
            out.status = FindStatus::ProvenUnsat;
            out.pruned_at_exit = abs.total_pruned();
            return out;
        }
        const WitnessCheck check = check_witness(targets, abs.space, feas.witness.point);
        if (check.pass) {
            out.status = FindStatus::Point;
            out.point = feas.witness.point;
            for (std::size_t m = 0; m < targets.size(); ++m) {
                const auto local = abs.space.project(static_cast<int>(m), feas.witness.point);
                out.verified_classes.push_back(predict(*targets[m].model, local).class_index);
            }
            out.pruned_at_exit = abs.total_pruned();
            return out;
        }
        if (out.refinement_rounds >= max_rounds) {
            out.status = FindStatus::BudgetExhausted;
            out.pruned_at_exit = abs.total_pruned();
            return out;
        }
        refine(abs, feas.witness);
        out.refinement_rounds += 1;
    }
}

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
};

// midpoint split between distinct adjacent values on the widest-spread feature
std::optional<SplitChoice> choose_split(const std::vector<std::vector<double>>& pts,
                                        const std::vector<int>& idx) {
    SplitChoice best;
    double best_spread = 0.0;
    const std::size_t arity = pts[idx[0]].size();
    for (std::size_t f = 0; f < arity; ++f) {
        double lo = pts[idx[0]][f], hi = lo;
        for (int i : idx) {
            lo = std::min(lo, pts[i][f]);
            hi = std::max(hi, pts[i][f]);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            std::vector<double> vals;
            for (int i : idx) vals.push_back(pts[i][f]);
            std::sort(vals.begin(), vals.end());
            // split between the two middle distinct values
            const double mid = lo + (hi - lo) / 2.0;
            double below = lo, above = hi;
            for (double v : vals) {
                if (v <= mid) below = std::max(below, v);
                else above = std::min(above, v);
            }
            if (below == above) continue;
            best.feature = static_cast<int>(f);
            best.threshold = below + (above - below) / 2.0;
        }
    }
    if (best.feature < 0) return std::nullopt;
    return best;
}

}  // namespace

Ensemble memorizing_ensemble(const LabeledDataset& dataset,
                             const std::vector<std::string>& feature_names,
                             std::vector<std::pair<double, double>> feature_bounds) {
    if (dataset.features.empty())
        throw std::invalid_argument("memorizing_ensemble: empty dataset");
    if (feature_names.size() != dataset.features[0].size())
        throw std::invalid_argument("memorizing_ensemble: feature name arity mismatch");
    if (feature_bounds.empty()) feature_bounds = bounds_from_data(dataset.features);

    // one shared partition structure; per-class copies score 1 at leaves of
    // that class and 0 elsewhere
    struct PNode {
        bool is_leaf;
        int label;
        int feature;
        double threshold;
        int left, right;
    };
    std::vector<PNode> shape;
    std::function<int(std::vector<int>)> build = [&](std::vector<int> idx) -> int {
        bool uniform = true;
        for (int i : idx)
            if (dataset.labels[i] != dataset.labels[idx[0]]) uniform = false;
        const int me = static_cast<int>(shape.size());
        shape.push_back({});
        if (uniform) {
            shape[me] = {true, dataset.labels[idx[0]], -1, 0.0, -1, -1};
            return me;
        }
        auto split = choose_split(dataset.features, idx);
        if (!split)
            throw std::invalid_argument(
                "memorizing_ensemble: duplicate feature vectors carry conflicting labels");
        std::vector<int> left, right;
        for (int i : idx)
            (dataset.features[i][split->feature] <= split->threshold ? left : right).push_back(i);
        shape[me] = {false, -1, split->feature, split->threshold, -1, -1};
        const int l = build(std::move(left));
        const int r = build(std::move(right));
        shape[me].left = l;
        shape[me].right = r;
        return me;
    };
    std::vector<int> all(dataset.features.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    build(std::move(all));

    Ensemble out;
    out.feature_names = feature_names;
    out.feature_bounds = std::move(feature_bounds);
    for (int c = 0; c < dataset.num_classes; ++c) {
        out.classes.push_back(std::to_string(c));
        DecisionTree tree;
        for (const auto& p : shape) {
            TreeNode n;
            if (p.is_leaf) {
                n.is_leaf = true;
                n.value = p.label == c ? 1.0 : 0.0;
            } else {
                n.is_leaf = false;
                n.feature = p.feature;
                n.threshold = p.threshold;
                n.left = p.left;
                n.right = p.right;
            }
            tree.nodes.push_back(n);
        }
        out.trees.push_back({std::move(tree)});
    }
    out.validate();
    return out;
}

}  // namespace packgap
