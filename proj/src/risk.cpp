#include "packgap/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace packgap {

Region region_of(const FeatureSpace& space, const std::vector<const Ensemble*>& models,
                 const std::vector<double>& point) {
    Box box = Box::full(space);
    if (!box.contains(point))
        throw std::invalid_argument("region_of: point outside the feature bounds");
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto local = space.project(static_cast<int>(m), point);
        const auto& to_global = space.to_global[m];
        for (const auto& group : models[m]->trees)
            for (const auto& tree : group) {
                int node = 0;
                while (!tree.nodes[node].is_leaf) {
                    const TreeNode& n = tree.nodes[node];
                    const int g = to_global[n.feature];
                    if (local[n.feature] <= n.threshold) {
                        box.clip_left(g, n.threshold);
                        node = n.left;
                    } else {
                        box.clip_right(g, n.threshold);
                        node = n.right;
                    }
                }
            }
    }
    Region r;
    r.box = std::move(box);
    r.space_bounds = space.bounds;
    r.feature_names = space.names;
    return r;
}

Region region_of(const std::vector<const Ensemble*>& models, const std::vector<double>& point) {
    return region_of(FeatureSpace::build(models), models, point);
}

std::size_t RiskSurface::cell_count() const { return cell_scores.size(); }

int RiskSurface::score_at(const std::vector<std::size_t>& cell_index) const {
    std::size_t flat = 0;
    for (std::size_t f = 0; f < cell_index.size(); ++f) flat += cell_index[f] * strides[f];
    return cell_scores[flat];
}

bool RiskSurface::kept(const std::vector<std::size_t>& cell_index) const {
    return score_at(cell_index) >= threshold;
}

RiskSurface merge(const std::vector<Region>& regions, int threshold) {
    if (regions.empty()) throw std::invalid_argument("merge: empty region list");
    const auto& names = regions.front().feature_names;
    const auto& bounds = regions.front().space_bounds;
    for (const auto& r : regions)
        if (r.feature_names != names || r.space_bounds != bounds)
            throw std::invalid_argument("merge: regions over different feature spaces");

    const std::size_t dims = names.size();
    RiskSurface s;
    s.feature_names = names;
    s.space_bounds = bounds;
    s.threshold = threshold;
    s.breakpoints.resize(dims);
    for (std::size_t f = 0; f < dims; ++f) {
        std::vector<double>& bp = s.breakpoints[f];
        bp.push_back(bounds[f].first);
        bp.push_back(std::nextafter(bounds[f].second, std::numeric_limits<double>::infinity()));
        for (const auto& r : regions) {
            bp.push_back(r.box.iv[f].first);
            bp.push_back(r.box.iv[f].second);
        }
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    }

    s.strides.assign(dims, 1);
    std::size_t total = 1;
    for (std::size_t f = dims; f-- > 0;) {
        s.strides[f] = total;
        total *= s.breakpoints[f].size() - 1;
    }
    s.cell_scores.assign(total, 0);

    // per region, the covered cells form an index hyper-rectangle because
    // every region edge is a breakpoint
    for (const auto& r : regions) {
        std::vector<std::size_t> lo(dims), hi(dims);
        bool empty = false;
        for (std::size_t f = 0; f < dims; ++f) {
            const auto& bp = s.breakpoints[f];
            lo[f] = std::lower_bound(bp.begin(), bp.end(), r.box.iv[f].first) - bp.begin();
            hi[f] = std::lower_bound(bp.begin(), bp.end(), r.box.iv[f].second) - bp.begin();
            if (lo[f] >= hi[f]) empty = true;
        }
        if (empty) continue;
        std::vector<std::size_t> idx = lo;
        while (true) {
            std::size_t flat = 0;
            for (std::size_t f = 0; f < dims; ++f) flat += idx[f] * s.strides[f];
            s.cell_scores[flat] += 1;
            std::size_t f = dims;
            while (f-- > 0) {
                if (++idx[f] < hi[f]) break;
                idx[f] = lo[f];
                if (f == 0) goto region_done;
            }
        }
    region_done:;
    }
    return s;
}

namespace {

// walk all cells, invoking fn with the cell index
template <typename Fn>
void for_each_cell(const RiskSurface& s, Fn&& fn) {
    const std::size_t dims = s.breakpoints.size();
    std::vector<std::size_t> idx(dims, 0);
    for (std::size_t f = 0; f < dims; ++f)
        if (s.breakpoints[f].size() < 2) return;
    while (true) {
        fn(idx);
        std::size_t f = dims;
        while (f-- > 0) {
            if (++idx[f] < s.breakpoints[f].size() - 1) break;
            idx[f] = 0;
            if (f == 0) return;
        }
    }
}

}  // namespace

FeatureCoverage feature_coverage(const RiskSurface& surface, int feature) {
    const auto& bp = surface.breakpoints[feature];
    std::vector<char> covered(bp.size() - 1, 0);
    for_each_cell(surface, [&](const std::vector<std::size_t>& idx) {
        if (surface.kept(idx)) covered[idx[feature]] = 1;
    });
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
        if (covered[i]) length += bp[i + 1] - bp[i];
    const double span = surface.space_bounds[feature].second - surface.space_bounds[feature].first;
    FeatureCoverage out;
    out.fraction = std::min(1.0, length / span);
    out.actionable = out.fraction < 0.999;
    return out;
}

std::string surface_to_csv(const RiskSurface& surface) {
    std::ostringstream ss;
    ss << "feature,lo,hi,score\n";
    ss.precision(12);
    const std::size_t dims = surface.breakpoints.size();
    for (std::size_t f = 0; f < dims; ++f) {
        const auto& bp = surface.breakpoints[f];
        std::vector<int> best(bp.size() - 1, -1);
        for_each_cell(surface, [&](const std::vector<std::size_t>& idx) {
            if (surface.kept(idx))
                best[idx[f]] = std::max(best[idx[f]], surface.score_at(idx));
        });
        for (std::size_t i = 0; i + 1 < bp.size(); ++i)
            if (best[i] >= 0)
                ss << surface.feature_names[f] << "," << bp[i] << "," << bp[i + 1] << ","
                   << best[i] << "\n";
    }
    return ss.str();
}

std::string coverage_summary_json(const RiskSurface& surface) {
    nlohmann::json o = nlohmann::json::array();
    for (std::size_t f = 0; f < surface.breakpoints.size(); ++f) {
        const FeatureCoverage c = feature_coverage(surface, static_cast<int>(f));
        o.push_back({{"feature", surface.feature_names[f]},
                     {"coverage", c.fraction},
                     {"actionable", c.actionable}});
    }
    return o.dump(2) + "\n";
}

}  // namespace packgap
