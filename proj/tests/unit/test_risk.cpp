#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "packgap/risk.hpp"
#include "packgap/rng.hpp"

using namespace packgap;

namespace {

Region box_region(const std::vector<std::pair<double, double>>& iv,
                  const std::vector<std::string>& names,
                  const std::vector<std::pair<double, double>>& bounds) {
    Region r;
    r.box.iv = iv;
    r.feature_names = names;
    r.space_bounds = bounds;
    return r;
}

}  // namespace

TEST_CASE("region_of: leaf-only trees span the full domain") {
    Ensemble m;
    m.feature_names = {"f1", "f2"};
    m.classes = {"only"};
    m.feature_bounds = {{0.0, 1.0}, {-2.0, 2.0}};
    DecisionTree t;
    TreeNode n;
    n.is_leaf = true;
    n.value = 1.0;
    t.nodes = {n};
    m.trees = {{t}};
    const Region r = region_of({&m}, {0.5, 0.0});
    CHECK(r.box.iv[0].first == 0.0);
    CHECK(r.box.iv[0].second >= 1.0);
    CHECK(r.box.iv[1].first == -2.0);
    CHECK(r.box.iv[1].second >= 2.0);
}

TEST_CASE("region_of: figure model point routes into the all-below-threshold box") {
    const Ensemble m = fixtures::fig_model();
    const Region r = region_of({&m}, {0.2, 0.2, 0.2});
    for (int f = 0; f < 3; ++f) {
        CHECK(r.box.iv[f].first == 0.0);
        CHECK(r.box.iv[f].second >= 0.5);
        CHECK(r.box.iv[f].second <= 0.5 + 1e-12);
    }
    CHECK_THROWS_AS(region_of({&m}, {1.5, 0.2, 0.2}), std::invalid_argument);
}

TEST_CASE("region_of: two points of one region produce equal regions") {
    const Ensemble m = fixtures::fig_model();
    const Region a = region_of({&m}, {0.2, 0.2, 0.2});
    const Region b = region_of({&m}, {0.45, 0.31, 0.07});
    CHECK(a.box.iv == b.box.iv);
}

TEST_CASE("prediction constancy inside sampled regions") {
    const Ensemble m = fixtures::fig_model();
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> p{rng.next_real(), rng.next_real(), rng.next_real()};
        const Region r = region_of({&m}, p);
        const int cls = predict(m, p).class_index;
        for (int s = 0; s < 10; ++s) {
            std::vector<double> q(3);
            for (int f = 0; f < 3; ++f)
                q[f] = rng.next_real(r.box.iv[f].first,
                                     std::min(r.box.iv[f].second, m.feature_bounds[f].second));
            CHECK(predict(m, q).class_index == cls);
        }
    }
}

TEST_CASE("merge: single region at threshold 1 reproduces the region") {
    const std::vector<std::string> names{"f1", "f2"};
    const std::vector<std::pair<double, double>> bounds{{0.0, 1.0}, {0.0, 1.0}};
    const Region r = box_region({{0.2, 0.6}, {0.1, 0.5}}, names, bounds);
    const RiskSurface s = merge({r}, 1);
    // kept cells exactly tile [0.2,0.6) x [0.1,0.5)
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < s.breakpoints[0].size(); ++i)
        for (std::size_t j = 0; j + 1 < s.breakpoints[1].size(); ++j)
            if (s.kept({i, j}))
                area += (s.breakpoints[0][i + 1] - s.breakpoints[0][i]) *
                        (s.breakpoints[1][j + 1] - s.breakpoints[1][j]);
    CHECK(area == doctest::Approx(0.4 * 0.4));

    const RiskSurface none = merge({r}, 2);
    bool any = false;
    for (std::size_t i = 0; i + 1 < none.breakpoints[0].size(); ++i)
        for (std::size_t j = 0; j + 1 < none.breakpoints[1].size(); ++j)
            if (none.kept({i, j})) any = true;
    CHECK(!any);

    CHECK_THROWS_AS(merge({}, 1), std::invalid_argument);
}

TEST_CASE("merge: two disjoint regions at threshold 2 give an empty surface") {
    const std::vector<std::string> names{"f1"};
    const std::vector<std::pair<double, double>> bounds{{0.0, 1.0}};
    const Region a = box_region({{0.0, 0.3}}, names, bounds);
    const Region b = box_region({{0.6, 1.0}}, names, bounds);
    const RiskSurface s = merge({a, b}, 2);
    for (std::size_t i = 0; i + 1 < s.breakpoints[0].size(); ++i) CHECK(!s.kept({i}));
}

TEST_CASE("merge agrees cell-for-cell with brute-force containment counting") {
    const std::vector<std::string> names{"f1", "f2"};
    const std::vector<std::pair<double, double>> bounds{{0.0, 1.0}, {0.0, 1.0}};
    Rng rng(97);
    std::vector<Region> regions;
    for (int i = 0; i < 100; ++i) {
        std::vector<std::pair<double, double>> iv(2);
        for (int f = 0; f < 2; ++f) {
            double lo = rng.next_real();
            double hi = rng.next_real();
            if (lo > hi) std::swap(lo, hi);
            if (lo == hi) hi = lo + 0.01;
            iv[f] = {lo, hi};
        }
        regions.push_back(box_region(iv, names, bounds));
    }
    for (int threshold : {1, 5, 50}) {
        const RiskSurface s = merge(regions, threshold);
        for (std::size_t i = 0; i + 1 < s.breakpoints[0].size(); ++i) {
            for (std::size_t j = 0; j + 1 < s.breakpoints[1].size(); ++j) {
                // midpoint containment count, computed directly
                const double x = (s.breakpoints[0][i] + s.breakpoints[0][i + 1]) / 2.0;
                const double y = (s.breakpoints[1][j] + s.breakpoints[1][j + 1]) / 2.0;
                int direct = 0;
                for (const auto& r : regions)
                    if (x >= r.box.iv[0].first && x < r.box.iv[0].second &&
                        y >= r.box.iv[1].first && y < r.box.iv[1].second)
                        direct += 1;
                CHECK(s.score_at({i, j}) == direct);
                CHECK(s.kept({i, j}) == (direct >= threshold));
            }
        }
    }
}

TEST_CASE("raising the threshold never adds cells") {
    const std::vector<std::string> names{"f1"};
    const std::vector<std::pair<double, double>> bounds{{0.0, 1.0}};
    std::vector<Region> regions;
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        double lo = rng.next_real(0.0, 0.8);
        regions.push_back(box_region({{lo, lo + 0.2}}, names, bounds));
    }
    const RiskSurface lo_t = merge(regions, 2);
    const RiskSurface hi_t = merge(regions, 4);
    for (std::size_t i = 0; i + 1 < lo_t.breakpoints[0].size(); ++i)
        if (hi_t.kept({i})) CHECK(lo_t.kept({i}));
}

TEST_CASE("feature_coverage and the actionability flag") {
    const std::vector<std::string> names{"f1", "f2"};
    const std::vector<std::pair<double, double>> bounds{{0.0, 1.0}, {0.0, 1.0}};

    // half the f1 range, full f2 range
    const Region r = box_region({{0.25, 0.75}, {0.0, std::nextafter(1.0, 2.0)}}, names, bounds);
    const RiskSurface s = merge({r}, 1);
    const FeatureCoverage half = feature_coverage(s, 0);
    CHECK(half.fraction == doctest::Approx(0.5));
    CHECK(half.actionable);
    const FeatureCoverage full = feature_coverage(s, 1);
    CHECK(full.fraction == doctest::Approx(1.0));
    CHECK(!full.actionable);

    // empty surface: coverage zero, still actionable
    const RiskSurface empty = merge({r}, 5);
    CHECK(feature_coverage(empty, 0).fraction == 0.0);
    CHECK(feature_coverage(empty, 0).actionable);

    const std::string csv = surface_to_csv(s);
    CHECK(csv.find("feature,lo,hi,score") == 0);
    CHECK(csv.find("f1,") != std::string::npos);
    const std::string summary = coverage_summary_json(s);
    CHECK(summary.find("\"coverage\"") != std::string::npos);
}
