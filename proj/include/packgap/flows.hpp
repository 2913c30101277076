#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "packgap/bounds.hpp"

namespace packgap {

using Rational = boost::multiprecision::cpp_rational;

// Exact rational from a decimal literal like "0.70" or "-1/3".
Rational rational_from_decimal(const std::string& text);
// Shortest round-trip decimal of the double, read back exactly.
Rational rational_from_double(double v);
std::string rational_to_string(const Rational& r);

// Joint outcome of two binary models relative to the ground truth:
// offsets in {0, +1, -1} (correct / over / under), with the relative
// difference r = m2 - m1. Seven sign combinations are feasible.
struct FlowPath {
    int m1 = 0;
    int m2 = 0;
    int r = 0;
};

inline constexpr int kNumFlowPaths = 7;
const std::array<FlowPath, kNumFlowPaths>& flow_paths();

// offset order inside each layer: 0, +1, -1
inline constexpr int kOffsets[3] = {0, +1, -1};
int offset_index(int offset);

// Per-node fractions; each layer must sum to exactly 1.
struct CapacityProfile {
    std::array<Rational, 3> m1{};
    std::array<Rational, 3> m2{};
    std::array<Rational, 3> r{};

    void validate() const;
    std::string to_json() const;
    static CapacityProfile from_json(const std::string& text);
    static CapacityProfile load(const std::string& path);
};

struct FlowSolution {
    std::array<Rational, kNumFlowPaths> path_flows{};
    std::string to_json() const;
};

// Farkas-style refutation: multipliers y with y^T A <= 0 per path column and
// y^T capacities > 0, so no nonnegative flow assignment can meet every node.
struct InfeasibilityCertificate {
    std::vector<Rational> row_multipliers;  // one per node equation, layer-major
    std::string detail;
    std::string to_json() const;
};

struct FlowResult {
    bool feasible = false;
    FlowSolution solution;
    InfeasibilityCertificate certificate;
};

// Exact rational phase-1 simplex over {P >= 0, sum of paths through node =
// C(node)}. Returns a feasible point or an infeasibility certificate.
FlowResult solve_flows(const CapacityProfile& profile);

// Independent re-check of a certificate against the profile's equations.
bool certificate_refutes(const CapacityProfile& profile,
                         const InfeasibilityCertificate& certificate);

// Residuals of the node equations at a given flow assignment (all zero for a
// valid FlowSolution).
std::vector<Rational> node_residuals(const CapacityProfile& profile, const FlowSolution& sol);

// Per-VM joint-outcome assignment realizing the flow fractions on a sequence
// of N VMs: path counts are round(N*P) by largest remainder and sum to N.
struct FlowConstraints {
    std::vector<int> path_per_vm;
    std::array<int, kNumFlowPaths> path_counts{};
    std::vector<CountBound> bounds;  // equality count bound per path
};

FlowConstraints flows_to_constraints(const FlowSolution& sol, int n, std::uint64_t rng_seed);

}  // namespace packgap
