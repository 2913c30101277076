#include "packgap/workload.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace packgap {

using nlohmann::json;

void VmRequest::validate(int lifetime_threshold_epochs) const {
    if (req_cpu <= 0 || req_mem <= 0)
        throw std::invalid_argument("vm " + id + ": requested sizes must be positive");
    if (arrival < 0)
        throw std::invalid_argument("vm " + id + ": arrival must be non-negative");
    if (true_mem_decile < 1 || true_mem_decile > 10)
        throw std::invalid_argument("vm " + id + ": memory decile out of 1..10");
    if (true_lifetime_epochs <= 0)
        throw std::invalid_argument("vm " + id + ": lifetime must be positive");
    const int expect = true_lifetime_epochs >= lifetime_threshold_epochs ? 1 : 0;
    if (true_lifetime_label != expect)
        throw std::invalid_argument("vm " + id + ": lifetime label inconsistent with threshold");
}

ClusterState ClusterState::empty(std::vector<Server> servers, int horizon) {
    ClusterState st;
    st.horizon = horizon;
    for (const auto& s : servers) st.add_server(s);
    return st;
}

void ClusterState::add_server(const Server& s) {
    servers.push_back(s);
    reserved.emplace_back(horizon, std::vector<double>(kDims, 0.0));
    actual.emplace_back(horizon, std::vector<double>(kDims, 0.0));
    vm_count.emplace_back(horizon, 0);
}

void ClusterState::record(const std::string& vm_id, int server, int start, int end,
                          const std::vector<double>& reserved_sizes,
                          const std::vector<double>& actual_sizes) {
    if (assignments.count(vm_id))
        throw std::logic_error("vm " + vm_id + " recorded twice");
    assignments[vm_id] = VmAssignment{server, start, end};
    const int hi = std::min(end, horizon);
    for (int t = start; t < hi; ++t) {
        for (int d = 0; d < kDims; ++d) {
            reserved[server][t][d] += reserved_sizes[d];
            actual[server][t][d] += actual_sizes[d];
        }
        vm_count[server][t] += 1;
    }
}

std::vector<int> over_utilized_servers(const ClusterState& state) {
    std::vector<int> counts(state.horizon, 0);
    for (std::size_t j = 0; j < state.servers.size(); ++j) {
        for (int t = 0; t < state.horizon; ++t) {
            if (state.vm_count[j][t] == 0) continue;
            for (int d = 0; d < kDims; ++d) {
                if (state.actual[j][t][d] > state.servers[j].capacity[d] + 1e-12) {
                    counts[t] += 1;
                    break;
                }
            }
        }
    }
    return counts;
}

double risk_of_migration(const std::vector<int>& per_epoch_counts,
                         std::optional<double> normalizer) {
    if (per_epoch_counts.empty())
        throw std::invalid_argument("risk_of_migration: horizon must be >= 1");
    double mean = std::accumulate(per_epoch_counts.begin(), per_epoch_counts.end(), 0.0) /
                  static_cast<double>(per_epoch_counts.size());
    if (normalizer) {
        if (*normalizer == 0.0) throw std::invalid_argument("risk_of_migration: normalizer is zero");
        mean /= *normalizer;
    }
    return mean;
}

std::vector<int> excess_servers(const MetricsReport& system, const MetricsReport& baseline) {
    if (system.horizon_epochs != baseline.horizon_epochs)
        throw std::invalid_argument("excess_servers: horizon mismatch");
    std::vector<int> out(system.servers_used_per_epoch.size());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = system.servers_used_per_epoch[t] - baseline.servers_used_per_epoch[t];
    return out;
}

MetricsReport metrics_from_state(const ClusterState& state) {
    MetricsReport r;
    r.horizon_epochs = state.horizon;
    r.over_utilized_per_epoch = over_utilized_servers(state);
    r.risk_of_migration = state.horizon > 0 ? risk_of_migration(r.over_utilized_per_epoch) : 0.0;
    r.servers_used_per_epoch.assign(state.horizon, 0);
    for (std::size_t j = 0; j < state.servers.size(); ++j)
        for (int t = 0; t < state.horizon; ++t)
            if (state.vm_count[j][t] > 0) r.servers_used_per_epoch[t] += 1;
    return r;
}

static json vm_to_json(const VmRequest& vm) {
    json o;
    o["id"] = vm.id;
    o["req_cpu"] = vm.req_cpu;
    o["req_mem"] = vm.req_mem;
    o["arrival"] = vm.arrival;
    o["true_cpu_label"] = vm.true_cpu_label;
    o["true_mem_decile"] = vm.true_mem_decile;
    o["true_lifetime_epochs"] = vm.true_lifetime_epochs;
    o["true_lifetime_label"] = vm.true_lifetime_label;
    if (vm.features) o["features"] = *vm.features;
    return o;
}

static VmRequest vm_from_json(const json& o) {
    VmRequest vm;
    vm.id = o.at("id").get<std::string>();
    vm.req_cpu = o.at("req_cpu").get<int>();
    vm.req_mem = o.at("req_mem").get<int>();
    vm.arrival = o.at("arrival").get<int>();
    vm.true_cpu_label = o.at("true_cpu_label").get<int>();
    vm.true_mem_decile = o.at("true_mem_decile").get<int>();
    vm.true_lifetime_epochs = o.at("true_lifetime_epochs").get<int>();
    vm.true_lifetime_label = o.at("true_lifetime_label").get<int>();
    if (o.contains("features")) vm.features = o.at("features").get<std::vector<double>>();
    return vm;
}

std::vector<VmRequest> parse_workload(const std::string& json_text, int lifetime_threshold_epochs) {
    json arr = json::parse(json_text);
    if (!arr.is_array()) throw std::invalid_argument("workload: expected a JSON array");
    std::vector<VmRequest> vms;
    vms.reserve(arr.size());
    for (const auto& o : arr) vms.push_back(vm_from_json(o));
    for (const auto& vm : vms) vm.validate(lifetime_threshold_epochs);
    auto by_arrival_id = [](const VmRequest& a, const VmRequest& b) {
        return std::tie(a.arrival, a.id) < std::tie(b.arrival, b.id);
    };
    if (!std::is_sorted(vms.begin(), vms.end(), by_arrival_id))
        throw std::invalid_argument("workload: records must be ordered by (arrival, id)");
    return vms;
}

std::vector<VmRequest> load_workload(const std::string& path, int lifetime_threshold_epochs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open workload file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_workload(ss.str(), lifetime_threshold_epochs);
}

std::string workload_to_json(const std::vector<VmRequest>& vms) {
    json arr = json::array();
    for (const auto& vm : vms) arr.push_back(vm_to_json(vm));
    return arr.dump(2) + "\n";
}

void save_workload(const std::vector<VmRequest>& vms, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write workload file: " + path);
    out << workload_to_json(vms);
}

}  // namespace packgap
