#include "packgap/flows.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "packgap/rng.hpp"

namespace packgap {

using nlohmann::json;
using BigInt = boost::multiprecision::cpp_int;

Rational rational_from_decimal(const std::string& text) {
    std::string s = text;
    bool neg = false;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        neg = s[0] == '-';
        s = s.substr(1);
    }
    if (auto slash = s.find('/'); slash != std::string::npos) {
        Rational r(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
        return neg ? -r : r;
    }
    auto dot = s.find('.');
    std::string digits = s;
    std::size_t frac_len = 0;
    if (dot != std::string::npos) {
        frac_len = s.size() - dot - 1;
        digits = s.substr(0, dot) + s.substr(dot + 1);
    }
    if (digits.empty()) throw std::invalid_argument("not a decimal: " + text);
    if (digits.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("not a decimal: " + text);
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    BigInt num(digits);
    BigInt den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    Rational r(num, den);
    return neg ? -r : r;
}

Rational rational_from_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::invalid_argument("cannot format double");
    std::string s(buf, ptr);
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        // scientific form: mantissa * 10^exp
        Rational mant = rational_from_decimal(s.substr(0, e));
        int exp = std::stoi(s.substr(e + 1));
        Rational pow10 = 1;
        for (int i = 0; i < std::abs(exp); ++i) pow10 *= 10;
        return exp >= 0 ? Rational(mant * pow10) : Rational(mant / pow10);
    }
    return rational_from_decimal(s);
}

std::string rational_to_string(const Rational& r) {
    std::ostringstream ss;
    ss << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1)
        ss << "/" << boost::multiprecision::denominator(r);
    return ss.str();
}

const std::array<FlowPath, kNumFlowPaths>& flow_paths() {
    // an overprediction by one model forbids a simultaneous underprediction
    // by the other on the same VM, so only these sign combinations exist
    static const std::array<FlowPath, kNumFlowPaths> paths = {{
        {0, 0, 0},
        {0, +1, +1},
        {0, -1, -1},
        {+1, 0, -1},
        {+1, +1, 0},
        {-1, 0, +1},
        {-1, -1, 0},
    }};
    return paths;
}

int offset_index(int offset) {
    switch (offset) {
        case 0: return 0;
        case +1: return 1;
        case -1: return 2;
    }
    throw std::invalid_argument("offset must be 0, +1 or -1");
}

void CapacityProfile::validate() const {
    auto check = [](const std::array<Rational, 3>& layer, const char* name) {
        Rational sum = layer[0] + layer[1] + layer[2];
        if (sum != 1)
            throw std::invalid_argument(std::string("profile: layer ") + name +
                                        " capacities do not sum to 1");
        for (const auto& c : layer)
            if (c < 0 || c > 1)
                throw std::invalid_argument(std::string("profile: layer ") + name +
                                            " capacity outside [0, 1]");
    };
    check(m1, "m1");
    check(m2, "m2");
    check(r, "r");
}

static std::array<Rational, 3> layer_from_json(const json& arr) {
    std::array<Rational, 3> out;
    for (int i = 0; i < 3; ++i) {
        const auto& v = arr.at(i);
        out[i] = v.is_string() ? rational_from_decimal(v.get<std::string>())
                               : rational_from_double(v.get<double>());
    }
    return out;
}

CapacityProfile CapacityProfile::from_json(const std::string& text) {
    json o = json::parse(text);
    CapacityProfile p;
    p.m1 = layer_from_json(o.at("m1"));
    p.m2 = layer_from_json(o.at("m2"));
    p.r = layer_from_json(o.at("r"));
    p.validate();
    return p;
}

CapacityProfile CapacityProfile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open capacity profile: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

static json layer_to_json(const std::array<Rational, 3>& layer) {
    json arr = json::array();
    for (const auto& c : layer) arr.push_back(rational_to_string(c));
    return arr;
}

std::string CapacityProfile::to_json() const {
    json o;
    o["m1"] = layer_to_json(m1);
    o["m2"] = layer_to_json(m2);
    o["r"] = layer_to_json(r);
    return o.dump(2) + "\n";
}

std::string FlowSolution::to_json() const {
    json arr = json::array();
    const auto& paths = flow_paths();
    for (int j = 0; j < kNumFlowPaths; ++j) {
        json o;
        o["m1_offset"] = paths[j].m1;
        o["m2_offset"] = paths[j].m2;
        o["r"] = paths[j].r;
        o["flow"] = rational_to_string(path_flows[j]);
        o["numerator"] = boost::multiprecision::numerator(path_flows[j]).str();
        o["denominator"] = boost::multiprecision::denominator(path_flows[j]).str();
        arr.push_back(o);
    }
    json out;
    out["paths"] = arr;
    return out.dump(2) + "\n";
}

std::string InfeasibilityCertificate::to_json() const {
    json o;
    json mult = json::array();
    for (const auto& y : row_multipliers) mult.push_back(rational_to_string(y));
    o["row_multipliers"] = mult;
    o["detail"] = detail;
    return o.dump(2) + "\n";
}

namespace {

constexpr int kNumNodes = 9;  // 3 layers x 3 offsets, layer-major

// node index for (layer, offset): layer 0 = m1, 1 = m2, 2 = r
int node_index(int layer, int offset) { return layer * 3 + offset_index(offset); }

// A[node][path] = 1 iff the path passes through the node
std::array<std::array<int, kNumFlowPaths>, kNumNodes> incidence() {
    std::array<std::array<int, kNumFlowPaths>, kNumNodes> a{};
    const auto& paths = flow_paths();
    for (int j = 0; j < kNumFlowPaths; ++j) {
        a[node_index(0, paths[j].m1)][j] = 1;
        a[node_index(1, paths[j].m2)][j] = 1;
        a[node_index(2, paths[j].r)][j] = 1;
    }
    return a;
}

std::array<Rational, kNumNodes> capacities(const CapacityProfile& p) {
    std::array<Rational, kNumNodes> b;
    for (int k = 0; k < 3; ++k) {
        b[node_index(0, kOffsets[k])] = p.m1[k];
        b[node_index(1, kOffsets[k])] = p.m2[k];
        b[node_index(2, kOffsets[k])] = p.r[k];
    }
    return b;
}

}  // namespace

std::vector<Rational> node_residuals(const CapacityProfile& profile, const FlowSolution& sol) {
    const auto a = incidence();
    const auto b = capacities(profile);
    std::vector<Rational> res(kNumNodes, 0);
    for (int i = 0; i < kNumNodes; ++i) {
        Rational lhs = 0;
        for (int j = 0; j < kNumFlowPaths; ++j)
            if (a[i][j]) lhs += sol.path_flows[j];
        res[i] = lhs - b[i];
    }
    return res;
}

FlowResult solve_flows(const CapacityProfile& profile) {
    profile.validate();
    const auto a = incidence();
    const auto b = capacities(profile);

    // phase-1 simplex tableau: structural columns, artificial columns, rhs.
    // Artificial basis; minimize the sum of artificials with Bland's rule.
    constexpr int m = kNumNodes, n = kNumFlowPaths;
    std::vector<std::vector<Rational>> t(m, std::vector<Rational>(n + m + 1, 0));
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t[i][j] = a[i][j];
        t[i][n + i] = 1;
        t[i][n + m] = b[i];
        basis[i] = n + i;
    }

    auto reduced_cost = [&](int col) {
        // cost 0 on structural, 1 on artificial; rc = c_col - sum over rows
        // with artificial basis of the tableau entry
        Rational rc = col >= n ? 1 : 0;
        for (int i = 0; i < m; ++i)
            if (basis[i] >= n) rc -= t[i][col];
        return rc;
    };

    while (true) {
        int enter = -1;
        for (int j = 0; j < n; ++j) {  // artificials never re-enter
            if (reduced_cost(j) < 0) {
                enter = j;
                break;  // Bland: lowest index
            }
        }
        if (enter < 0) break;
        int leave = -1;
        Rational best_ratio = 0;
        for (int i = 0; i < m; ++i) {
            if (t[i][enter] <= 0) continue;
            Rational ratio = t[i][n + m] / t[i][enter];
            if (leave < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave < 0)
            throw std::logic_error("solve_flows: unbounded phase-1 (cannot happen)");
        // pivot
        const Rational piv = t[leave][enter];
        for (auto& v : t[leave]) v /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave || t[i][enter] == 0) continue;
            const Rational factor = t[i][enter];
            for (int c = 0; c <= n + m; ++c) t[i][c] -= factor * t[leave][c];
        }
        basis[leave] = enter;
    }

    Rational objective = 0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n) objective += t[i][n + m];

    FlowResult result;
    if (objective == 0) {
        result.feasible = true;
        for (int i = 0; i < m; ++i)
            if (basis[i] < n) result.solution.path_flows[basis[i]] = t[i][n + m];
        return result;
    }

    // infeasible: extract y = c_B B^{-1} from the artificial columns
    result.feasible = false;
    result.certificate.row_multipliers.assign(kNumNodes, 0);
    for (int col = 0; col < m; ++col) {
        Rational y = 0;
        for (int i = 0; i < m; ++i)
            if (basis[i] >= n) y += t[i][n + col];
        result.certificate.row_multipliers[col] = y;
    }
    result.certificate.detail =
        "no nonnegative path flows satisfy the node-capacity equations; combining the "
        "equations with the given multipliers yields a positive total on the right-hand "
        "side but a nonpositive coefficient for every path";
    if (!certificate_refutes(profile, result.certificate))
        throw std::logic_error("solve_flows: extracted certificate failed its own re-check");
    return result;
}

bool certificate_refutes(const CapacityProfile& profile,
                         const InfeasibilityCertificate& certificate) {
    if (certificate.row_multipliers.size() != kNumNodes) return false;
    const auto a = incidence();
    const auto b = capacities(profile);
    Rational rhs = 0;
    for (int i = 0; i < kNumNodes; ++i) rhs += certificate.row_multipliers[i] * b[i];
    if (rhs <= 0) return false;
    for (int j = 0; j < kNumFlowPaths; ++j) {
        Rational col = 0;
        for (int i = 0; i < kNumNodes; ++i)
            if (a[i][j]) col += certificate.row_multipliers[i];
        if (col > 0) return false;
    }
    return true;
}

FlowConstraints flows_to_constraints(const FlowSolution& sol, int n, std::uint64_t rng_seed) {
    if (n < 1) throw std::invalid_argument("flows_to_constraints: N must be >= 1");
    Rational total = 0;
    for (const auto& f : sol.path_flows) {
        if (f < 0) throw std::invalid_argument("flows_to_constraints: negative flow");
        total += f;
    }
    if (total != 1) throw std::invalid_argument("flows_to_constraints: flows must sum to 1");

    FlowConstraints out;
    // largest-remainder rounding of N * P so counts sum to N
    std::array<Rational, kNumFlowPaths> exact;
    int assigned = 0;
    for (int j = 0; j < kNumFlowPaths; ++j) {
        exact[j] = sol.path_flows[j] * n;
        BigInt fl = boost::multiprecision::numerator(exact[j]) /
                    boost::multiprecision::denominator(exact[j]);
        out.path_counts[j] = static_cast<int>(fl);
        assigned += out.path_counts[j];
    }
    std::vector<int> order(kNumFlowPaths);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        const Rational rx = exact[x] - out.path_counts[x];
        const Rational ry = exact[y] - out.path_counts[y];
        return rx > ry;  // largest remainder first; stable sort keeps lower index on ties
    });
    for (int k = 0; k < n - assigned; ++k) out.path_counts[order[k % kNumFlowPaths]] += 1;

    for (int j = 0; j < kNumFlowPaths; ++j)
        if (sol.path_flows[j] > 0 && out.path_counts[j] == 0)
            throw std::invalid_argument(
                "flows_to_constraints: N too small for the smallest nonzero path fraction");

    // deal the path tags to VM positions, seeded
    for (int j = 0; j < kNumFlowPaths; ++j)
        for (int c = 0; c < out.path_counts[j]; ++c) out.path_per_vm.push_back(j);
    Rng rng(rng_seed);
    rng.shuffle(out.path_per_vm);

    for (int j = 0; j < kNumFlowPaths; ++j) {
        CountBound b;
        b.property_id = "flow_path_" + std::to_string(j);
        b.n = n;
        b.lower = b.upper = out.path_counts[j];
        b.p = exact[j].convert_to<double>() / n;
        b.z = 0.0;
        out.bounds.push_back(b);
    }
    return out;
}

}  // namespace packgap
