#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace packgap {

// Integer interval [lower, upper] on how many of N sequence elements satisfy
// a property with target fraction p, valid with high probability.
struct CountBound {
    std::string property_id;
    int n = 0;
    int lower = 0;
    int upper = 0;
    double p = 0.0;
    double z = 3.89;  // two-sided normal quantile used to widen the interval

    bool contains(int count) const { return count >= lower && count <= upper; }
};

// Smallest N with N*p >= 5 and N*(1-p) >= 5.
int min_sequence_length(double p);

// sigma_p = sqrt(p(1-p)/N); [max(0, ceil(N(p - z sigma))), min(N, floor(N(p + z sigma)))].
// With z = 3.89 the count falls inside with ~99.99% probability.
CountBound count_bounds(double p, int n, double z = 3.89,
                        const std::string& property_id = "");

// Frequentist per-partition bounds: samples per-element Bernoulli(p)
// assignments `trials` times and returns [min, max] observed per partition,
// tightened so any in-bound assignment can still sum into the global bound.
std::vector<CountBound> partition_bounds(const CountBound& bound,
                                         const std::vector<int>& partition_sizes,
                                         std::uint64_t rng_seed, int trials = 10000);

// Fraction of Binomial(N, p) draws landing inside [bound.lower, bound.upper].
double monte_carlo_coverage(double p, int n, const CountBound& bound, int trials,
                            std::uint64_t rng_seed = 12345);

// Empirical per-property distributions measured from sample data; every
// categorical group sums to 1 within 1e-9.
struct DistributionProfile {
    // model -> (label, prediction) -> probability
    std::map<std::string, std::map<std::pair<int, int>, double>> joint_cells;
    std::map<std::string, std::map<int, double>> label_mix;  // model -> label -> prob
    // (req_cpu, req_mem) -> probability
    std::map<std::pair<int, int>, double> vm_type_mix;
    // fraction of arrivals per equal window of the horizon
    std::vector<double> arrival_rate;

    void validate() const;
    std::string to_json() const;
    static DistributionProfile from_json(const std::string& text);
    static DistributionProfile load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace packgap
