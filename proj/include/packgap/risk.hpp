#pragma once

#include <string>
#include <vector>

#include "packgap/cegar.hpp"
#include "packgap/models.hpp"

namespace packgap {

// Equivalence class of inputs around a point: every model routes every tree
// identically inside it, so predictions are constant.
struct Region {
    Box box;
    std::vector<std::pair<double, double>> space_bounds;  // enclosing feature space
    std::vector<std::string> feature_names;
};

// Tightest per-feature [lo, hi) implied by every threshold test on the paths
// the point routes through, across all models.
Region region_of(const std::vector<const Ensemble*>& models, const std::vector<double>& point);
Region region_of(const FeatureSpace& space, const std::vector<const Ensemble*>& models,
                 const std::vector<double>& point);

// Breakpoint grid over all region edges; each cell scores the number of input
// regions containing it, and cells below the threshold are dropped.
struct RiskSurface {
    std::vector<std::string> feature_names;
    std::vector<std::pair<double, double>> space_bounds;
    std::vector<std::vector<double>> breakpoints;  // per feature, ascending
    std::vector<int> cell_scores;                  // row-major over interval indices
    std::vector<std::size_t> strides;
    int threshold = 1;

    std::size_t cell_count() const;
    int score_at(const std::vector<std::size_t>& cell_index) const;
    bool kept(const std::vector<std::size_t>& cell_index) const;
};

RiskSurface merge(const std::vector<Region>& regions, int threshold);

struct FeatureCoverage {
    double fraction = 0.0;     // projection length of kept cells / bound span
    bool actionable = true;    // false when coverage >= 0.999 (max-entropy feature)
};

FeatureCoverage feature_coverage(const RiskSurface& surface, int feature);

// feature, lo, hi, score rows for external plotting
std::string surface_to_csv(const RiskSurface& surface);
std::string coverage_summary_json(const RiskSurface& surface);

}  // namespace packgap
