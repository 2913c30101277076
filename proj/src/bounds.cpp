#include "packgap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "packgap/rng.hpp"

namespace packgap {

using nlohmann::json;

int min_sequence_length(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("min_sequence_length: rule undefined for p in {0, 1}");
    const int a = static_cast<int>(std::ceil(5.0 / p));
    const int b = static_cast<int>(std::ceil(5.0 / (1.0 - p)));
    return std::max(a, b);
}

CountBound count_bounds(double p, int n, double z, const std::string& property_id) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("count_bounds: p must be in (0, 1)");
    if (z < 0.0) throw std::invalid_argument("count_bounds: z must be non-negative");
    if (n < min_sequence_length(p))
        throw std::invalid_argument(
            "count_bounds: N violates the rule of thumb Np >= 5 and N(1-p) >= 5");
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CountBound b;
    b.property_id = property_id;
    b.n = n;
    b.p = p;
    b.z = z;
    b.lower = std::max(0, static_cast<int>(std::ceil(n * (p - z * sigma))));
    b.upper = std::min(n, static_cast<int>(std::floor(n * (p + z * sigma))));
    if (b.lower > b.upper) {
        // degenerate z: collapse to the rounded expectation
        b.lower = b.upper = static_cast<int>(std::llround(n * p));
    }
    return b;
}

std::vector<CountBound> partition_bounds(const CountBound& bound,
                                         const std::vector<int>& partition_sizes,
                                         std::uint64_t rng_seed, int trials) {
    const int total = std::accumulate(partition_sizes.begin(), partition_sizes.end(), 0);
    if (total != bound.n)
        throw std::invalid_argument("partition_bounds: partition sizes must sum to N");
    if (trials < 1) throw std::invalid_argument("partition_bounds: trials must be >= 1");

    const std::size_t k = partition_sizes.size();
    if (k == 1) return {bound};  // a single partition carries the global constraint itself

    std::vector<int> lo(k, INT32_MAX), hi(k, 0);
    Rng rng(rng_seed);
    for (int t = 0; t < trials; ++t) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(t));
        for (std::size_t g = 0; g < k; ++g) {
            int count = 0;
            for (int i = 0; i < partition_sizes[g]; ++i)
                count += stream.next_bernoulli(bound.p) ? 1 : 0;
            lo[g] = std::min(lo[g], count);
            hi[g] = std::max(hi[g], count);
        }
    }

    // tighten against the global bound: each partition must leave the others
    // enough room for the total to stay inside [lower, upper]
    long sum_lo = std::accumulate(lo.begin(), lo.end(), 0L);
    long sum_hi = std::accumulate(hi.begin(), hi.end(), 0L);
    std::vector<CountBound> out(k);
    for (std::size_t g = 0; g < k; ++g) {
        CountBound b;
        b.property_id = bound.property_id;
        b.n = partition_sizes[g];
        b.p = bound.p;
        b.z = bound.z;
        b.lower = std::max<long>(lo[g], bound.lower - (sum_hi - hi[g]));
        b.upper = std::min<long>(hi[g], bound.upper - (sum_lo - lo[g]));
        if (b.lower > b.upper)
            throw std::invalid_argument(
                "partition_bounds: infeasible intersection; partition sizes too small for the "
                "confidence level");
        out[g] = b;
    }
    if (std::accumulate(out.begin(), out.end(), 0L,
                        [](long acc, const CountBound& b) { return acc + b.lower; }) >
            bound.upper ||
        std::accumulate(out.begin(), out.end(), 0L,
                        [](long acc, const CountBound& b) { return acc + b.upper; }) <
            bound.lower)
        throw std::invalid_argument("partition_bounds: infeasible intersection with global bound");
    return out;
}

double monte_carlo_coverage(double p, int n, const CountBound& bound, int trials,
                            std::uint64_t rng_seed) {
    if (trials < 1) throw std::invalid_argument("monte_carlo_coverage: trials must be >= 1");
    Rng rng(rng_seed);
    int inside = 0;
    for (int t = 0; t < trials; ++t) {
        int count = 0;
        for (int i = 0; i < n; ++i) count += rng.next_bernoulli(p) ? 1 : 0;
        inside += bound.contains(count) ? 1 : 0;
    }
    return static_cast<double>(inside) / static_cast<double>(trials);
}

void DistributionProfile::validate() const {
    auto check_sum = [](double sum, const std::string& what) {
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("profile: " + what + " does not sum to 1");
    };
    for (const auto& [model, cells] : joint_cells) {
        double s = 0.0;
        for (const auto& [cell, prob] : cells) s += prob;
        check_sum(s, "joint cells of " + model);
    }
    for (const auto& [model, mix] : label_mix) {
        double s = 0.0;
        for (const auto& [label, prob] : mix) s += prob;
        check_sum(s, "label mix of " + model);
    }
    if (!vm_type_mix.empty()) {
        double s = 0.0;
        for (const auto& [type, prob] : vm_type_mix) s += prob;
        check_sum(s, "vm type mix");
    }
    if (!arrival_rate.empty())
        check_sum(std::accumulate(arrival_rate.begin(), arrival_rate.end(), 0.0), "arrival rate");
}

std::string DistributionProfile::to_json() const {
    json o;
    json jc = json::object();
    for (const auto& [model, cells] : joint_cells) {
        json rows = json::array();
        for (const auto& [cell, prob] : cells)
            rows.push_back({{"label", cell.first}, {"pred", cell.second}, {"prob", prob}});
        jc[model] = rows;
    }
    o["joint_cells"] = jc;
    json lm = json::object();
    for (const auto& [model, mix] : label_mix) {
        json rows = json::array();
        for (const auto& [label, prob] : mix) rows.push_back({{"label", label}, {"prob", prob}});
        lm[model] = rows;
    }
    o["label_mix"] = lm;
    json tm = json::array();
    for (const auto& [type, prob] : vm_type_mix)
        tm.push_back({{"req_cpu", type.first}, {"req_mem", type.second}, {"prob", prob}});
    o["vm_type_mix"] = tm;
    o["arrival_rate"] = arrival_rate;
    return o.dump(2) + "\n";
}

DistributionProfile DistributionProfile::from_json(const std::string& text) {
    json o = json::parse(text);
    DistributionProfile p;
    for (auto it = o.at("joint_cells").begin(); it != o.at("joint_cells").end(); ++it)
        for (const auto& row : it.value())
            p.joint_cells[it.key()][{row.at("label").get<int>(), row.at("pred").get<int>()}] =
                row.at("prob").get<double>();
    for (auto it = o.at("label_mix").begin(); it != o.at("label_mix").end(); ++it)
        for (const auto& row : it.value())
            p.label_mix[it.key()][row.at("label").get<int>()] = row.at("prob").get<double>();
    for (const auto& row : o.at("vm_type_mix"))
        p.vm_type_mix[{row.at("req_cpu").get<int>(), row.at("req_mem").get<int>()}] =
            row.at("prob").get<double>();
    p.arrival_rate = o.at("arrival_rate").get<std::vector<double>>();
    p.validate();
    return p;
}

DistributionProfile DistributionProfile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void DistributionProfile::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write profile file: " + path);
    out << to_json();
}

}  // namespace packgap
