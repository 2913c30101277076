#include <doctest.h>

#include <functional>

#include "fixtures.hpp"
#include "packgap/lgbm_encoder.hpp"
#include "packgap/rng.hpp"

using namespace packgap;

TEST_CASE("encode: single leaf-only tree forces its one activation") {
    Ensemble m;
    m.feature_names = {"f1"};
    m.classes = {"only"};
    m.feature_bounds = {{0.0, 1.0}};
    DecisionTree t;
    TreeNode leaf;
    leaf.is_leaf = true;
    leaf.value = 0.5;
    t.nodes = {leaf};
    m.trees = {{t}};

    const LgbmConstraintBundle b = encode(m);
    CHECK(b.leaf_vars[0][0].size() == 1);
    CHECK(b.system.family_counts().at("one_leaf") == 1);
    CHECK(verify_inference(b, m, {0.3}).empty());
}

TEST_CASE("encode: family counts match per-family closed forms") {
    const Ensemble m = fixtures::fig_model();
    const LgbmConstraintBundle b = encode(m);
    const auto counts = b.system.family_counts();

    int internal_nodes = 0, trees = 0;
    for (const auto& group : m.trees)
        for (const auto& t : group) {
            trees += 1;
            internal_nodes += t.internal_count();
        }
    const int classes = static_cast<int>(m.num_classes());
    CHECK(counts.at("one_leaf") == trees);
    CHECK(counts.at("leaf_left") == internal_nodes);
    CHECK(counts.at("leaf_right") == internal_nodes);
    CHECK(counts.at("class_score_def") == classes);
    CHECK(counts.at("argmax") == classes * (classes - 1));
    CHECK(counts.at("one_class") == 1);
}

TEST_CASE("encode: a two-class model has exactly two argmax rows") {
    const Ensemble m = fixtures::step_model(0.5, true);
    const LgbmConstraintBundle b = encode(m);
    CHECK(b.system.family_counts().at("argmax") == 2);
}

TEST_CASE("verify_inference passes on random inputs across fixtures") {
    Rng rng(31);
    std::vector<Ensemble> models;
    models.push_back(fixtures::fig_model());
    models.push_back(fixtures::step_model(0.42, true));
    for (const Ensemble& m : models) {
        const LgbmConstraintBundle b = encode(m);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> x;
            for (std::size_t k = 0; k < m.num_features(); ++k)
                x.push_back(rng.next_real(m.feature_bounds[k].first, m.feature_bounds[k].second));
            const auto violations = verify_inference(b, m, x);
            if (!violations.empty()) {
                CAPTURE(violations[0].constraint);
                CAPTURE(violations[0].residual);
            }
            CHECK(violations.empty());
        }
    }
}

TEST_CASE("corrupted substitutions violate the right families") {
    const Ensemble m = fixtures::fig_model();
    const LgbmConstraintBundle b = encode(m);
    const std::vector<double> x{0.2, 0.2, 0.2};

    // baseline values via the verifier's own construction
    std::vector<double> values(b.system.variables().size(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) values[b.feature_vars[k]] = x[k];
    const Prediction pred = predict(m, x);
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
        values[b.class_indicator_vars[c]] = c == static_cast<std::size_t>(pred.class_index);
        values[b.class_score_vars[c]] = pred.raw_scores[c];
        for (std::size_t t = 0; t < m.trees[c].size(); ++t) {
            const int leaf = m.trees[c][t].route(x);
            const auto& leaves = b.leaf_nodes[c][t];
            const auto it = std::find(leaves.begin(), leaves.end(), leaf);
            values[b.leaf_vars[c][t][it - leaves.begin()]] = 1.0;
        }
    }
    REQUIRE(b.system.check(values).empty());

    SUBCASE("activating two leaves breaks the per-tree equality") {
        auto bad = values;
        for (int v : b.leaf_vars[0][0])
            bad[v] = 1.0;  // every leaf of class 0's tree active
        bool one_leaf = false;
        for (const auto& viol : b.system.check(bad))
            if (viol.family == "one_leaf") one_leaf = true;
        CHECK(one_leaf);
    }

    SUBCASE("indicating a non-max class breaks an argmax row") {
        auto bad = values;
        for (std::size_t c = 0; c < m.num_classes(); ++c)
            bad[b.class_indicator_vars[c]] = c == 2;  // true argmax is class 1
        bool argmax = false;
        for (const auto& viol : b.system.check(bad))
            if (viol.family == "argmax") argmax = true;
        CHECK(argmax);
    }
}

TEST_CASE("exhaustive assignment check: satisfying assignments agree with inference") {
    // two classes, one depth-1 tree each: 4 leaves + 2 indicators = 64 combos
    const Ensemble m = fixtures::step_model(0.5, true);
    const LgbmConstraintBundle b = encode(m);
    Rng rng(53);
    for (int trial = 0; trial < 50; ++trial) {
        const double xv = rng.next_real();
        const Prediction pred = predict(m, {xv});
        const double separation =
            std::abs(pred.raw_scores[0] - pred.raw_scores[1]);
        if (separation <= 1e-6) continue;

        int satisfying = 0;
        // enumerate every binary assignment of activations and indicators;
        // scores follow from the activations
        std::vector<int> act_vars;
        for (const auto& per_class : b.leaf_vars)
            for (const auto& per_tree : per_class)
                for (int v : per_tree) act_vars.push_back(v);
        const int bits = static_cast<int>(act_vars.size() + 2);
        for (int mask = 0; mask < (1 << bits); ++mask) {
            std::vector<double> values(b.system.variables().size(), 0.0);
            values[b.feature_vars[0]] = xv;
            for (std::size_t a = 0; a < act_vars.size(); ++a)
                values[act_vars[a]] = (mask >> a) & 1;
            values[b.class_indicator_vars[0]] = (mask >> act_vars.size()) & 1;
            values[b.class_indicator_vars[1]] = (mask >> (act_vars.size() + 1)) & 1;
            for (std::size_t c = 0; c < 2; ++c) {
                double score = 0.0;
                for (std::size_t t = 0; t < b.leaf_vars[c].size(); ++t)
                    for (std::size_t l = 0; l < b.leaf_vars[c][t].size(); ++l)
                        score += values[b.leaf_vars[c][t][l]] *
                                 m.trees[c][t].nodes[b.leaf_nodes[c][t][l]].value;
                values[b.class_score_vars[c]] = score;
            }
            if (!b.system.check(values).empty()) continue;
            satisfying += 1;
            int chosen = values[b.class_indicator_vars[0]] > 0.5 ? 0 : 1;
            CHECK(chosen == pred.class_index);
        }
        CHECK(satisfying >= 1);
    }
}

TEST_CASE("encoding size grows linearly in the tree count") {
    auto chain_model = [](int trees) {
        Ensemble m;
        m.feature_names = {"f1"};
        m.classes = {"only"};
        m.feature_bounds = {{0.0, 1.0}};
        std::vector<DecisionTree> group;
        for (int t = 0; t < trees; ++t) {
            DecisionTree tree;
            TreeNode root;
            root.is_leaf = false;
            root.feature = 0;
            root.threshold = 0.25 + 0.5 * (t % 2);
            root.left = 1;
            root.right = 2;
            TreeNode l, r;
            l.is_leaf = r.is_leaf = true;
            l.value = 0.1;
            r.value = 0.9;
            tree.nodes = {root, l, r};
            group.push_back(tree);
        }
        m.trees = {group};
        return m;
    };
    for (int trees : {2, 30, 250}) {
        const LgbmConstraintBundle b = encode(chain_model(trees));
        const auto counts = b.system.family_counts();
        CHECK(counts.at("one_leaf") == trees);
        CHECK(counts.at("leaf_left") == trees);   // one internal node per tree
        CHECK(counts.at("leaf_right") == trees);
        CHECK(counts.at("class_score_def") == 1);
        // 2 activations per tree + 1 feature + 1 indicator + 1 score
        CHECK(b.system.variables().size() == static_cast<std::size_t>(2 * trees + 3));
    }
}

TEST_CASE("encode rejects unbounded features") {
    Ensemble m = fixtures::step_model(0.5, true);
    m.feature_bounds[0] = {0.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(encode(m), std::invalid_argument);
}
