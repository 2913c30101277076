#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace packgap {

// Resource dimensions tracked by the allocator.
enum class Dim : int { Cpu = 0, Mem = 1 };
inline constexpr int kDims = 2;

// One VM request with its ground-truth behavior. Labels:
//   true_cpu_label      1 iff the VM uses more than the oversubscription
//                       fraction (65%) of its requested CPU
//   true_mem_decile     used memory = decile/10 of the request, in 1..10
//   true_lifetime_label 1 iff lifetime_epochs >= the configured threshold
struct VmRequest {
    std::string id;
    int req_cpu = 1;    // cores
    int req_mem = 1;    // GB
    int arrival = 0;    // epoch index
    int true_cpu_label = 0;
    int true_mem_decile = 10;
    int true_lifetime_epochs = 1;
    int true_lifetime_label = 0;
    std::optional<std::vector<double>> features;

    void validate(int lifetime_threshold_epochs) const;
};

struct Server {
    std::string id;
    std::vector<double> capacity;  // indexed by Dim

    double cap(Dim d) const { return capacity[static_cast<int>(d)]; }
};

struct VmAssignment {
    int server = -1;     // index into ClusterState::servers
    int start_epoch = 0; // inclusive
    int end_epoch = 0;   // exclusive
};

// Completed placement: per (server, epoch, dim) reserved and actual totals.
// Immutable value object once a simulation finishes.
struct ClusterState {
    std::vector<Server> servers;
    int horizon = 0;

    // occupancy[server][epoch][dim]
    std::vector<std::vector<std::vector<double>>> reserved;
    std::vector<std::vector<std::vector<double>>> actual;
    // vm_count[server][epoch]
    std::vector<std::vector<int>> vm_count;

    std::map<std::string, VmAssignment> assignments;

    static ClusterState empty(std::vector<Server> servers, int horizon);

    void add_server(const Server& s);
    // Records a VM on `server` for epochs [start, end) clipped to the horizon.
    void record(const std::string& vm_id, int server, int start, int end,
                const std::vector<double>& reserved_sizes,
                const std::vector<double>& actual_sizes);

    double reserved_at(int server, int epoch, Dim d) const {
        return reserved[server][epoch][static_cast<int>(d)];
    }
    double actual_at(int server, int epoch, Dim d) const {
        return actual[server][epoch][static_cast<int>(d)];
    }
};

struct MetricsReport {
    std::vector<int> over_utilized_per_epoch;
    double risk_of_migration = 0.0;  // mean of over_utilized_per_epoch
    std::vector<int> servers_used_per_epoch;
    std::vector<int> excess_servers_per_epoch;  // filled by excess_servers()
    int horizon_epochs = 0;
};

// Per-epoch count of servers whose actual usage exceeds capacity in any
// dimension. Servers hosting zero VMs are never counted.
std::vector<int> over_utilized_servers(const ClusterState& state);

// Mean per-epoch count, divided by `normalizer` when given.
double risk_of_migration(const std::vector<int>& per_epoch_counts,
                         std::optional<double> normalizer = std::nullopt);

// Elementwise servers_used difference (system - baseline); horizons must match.
std::vector<int> excess_servers(const MetricsReport& system, const MetricsReport& baseline);

MetricsReport metrics_from_state(const ClusterState& state);

// Workload file: JSON array of VmRequest records ordered by (arrival, id).
std::vector<VmRequest> load_workload(const std::string& path, int lifetime_threshold_epochs = 6);
std::vector<VmRequest> parse_workload(const std::string& json_text, int lifetime_threshold_epochs = 6);
std::string workload_to_json(const std::vector<VmRequest>& vms);
void save_workload(const std::vector<VmRequest>& vms, const std::string& path);

}  // namespace packgap
