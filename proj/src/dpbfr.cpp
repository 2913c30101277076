#include "packgap/dpbfr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "packgap/rng.hpp"

namespace packgap {

using nlohmann::json;

void AllocatorConfig::validate() const {
    if (!(oversub_fraction > 0.0 && oversub_fraction <= 1.0))
        throw std::invalid_argument("config: oversub_fraction must be in (0, 1]");
    if (short_buckets < 1 || long_buckets < 1)
        throw std::invalid_argument("config: bucket counts must be >= 1");
    if (pool_mode == PoolMode::Fixed && pool_size < 1)
        throw std::invalid_argument("config: fixed pool needs at least one server");
    if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
    if (server_cpu <= 0.0 || server_mem <= 0.0)
        throw std::invalid_argument("config: server capacities must be positive");
    if (lifetime_threshold_epochs < 1)
        throw std::invalid_argument("config: lifetime threshold must be >= 1");
}

std::vector<Server> AllocatorConfig::make_servers() const {
    std::vector<Server> servers;
    const int n = pool_mode == PoolMode::Fixed ? pool_size : 0;
    for (int j = 0; j < n; ++j)
        servers.push_back(Server{"s" + std::to_string(j), {server_cpu, server_mem}});
    return servers;
}

std::vector<std::size_t> Scenario::processing_order() const {
    std::vector<std::size_t> order(vms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
        return std::tie(vms[a].vm.arrival, vms[a].vm.id) <
               std::tie(vms[b].vm.arrival, vms[b].vm.id);
    });
    return order;
}

std::vector<double> reserved_sizes(const VmRequest& vm, const VmPredictions& preds,
                                   const AllocatorConfig& cfg) {
    std::vector<double> y(kDims, 0.0);
    y[0] = preds.cpu ? static_cast<double>(vm.req_cpu)
                     : cfg.oversub_fraction * static_cast<double>(vm.req_cpu);
    if (preds.mem_decile) {
        if (*preds.mem_decile < 1 || *preds.mem_decile > 10)
            throw std::invalid_argument("reserved_sizes: memory decile out of 1..10");
        y[1] = static_cast<double>(*preds.mem_decile) / 10.0 * static_cast<double>(vm.req_mem);
    } else {
        y[1] = static_cast<double>(vm.req_mem);
    }
    return y;
}

std::vector<double> actual_sizes(const VmRequest& vm, const AllocatorConfig& cfg) {
    std::vector<double> a(kDims, 0.0);
    a[0] = vm.true_cpu_label ? static_cast<double>(vm.req_cpu)
                             : cfg.oversub_fraction * static_cast<double>(vm.req_cpu);
    a[1] = static_cast<double>(vm.true_mem_decile) / 10.0 * static_cast<double>(vm.req_mem);
    return a;
}

static double aggregate_score(const std::vector<double>& per_dim, ScoreAggregation agg) {
    if (agg == ScoreAggregation::Max) return *std::max_element(per_dim.begin(), per_dim.end());
    double s = 0.0;
    for (double v : per_dim) s += v;
    return s / static_cast<double>(per_dim.size());
}

double best_fit_score(const std::vector<double>& residual, const std::vector<double>& reserved,
                      const std::vector<double>& capacity, const AllocatorConfig& cfg) {
    std::vector<double> per_dim(kDims, 0.0);
    for (int d = 0; d < kDims; ++d) {
        if (residual[d] < reserved[d] - 1e-12)
            throw std::logic_error("best_fit_score: VM does not fit; consult fits() first");
        per_dim[d] = (residual[d] - reserved[d]) / capacity[d];
    }
    return aggregate_score(per_dim, cfg.score_aggregation);
}

int bucket(double score, int lifetime_pred, const AllocatorConfig& cfg) {
    const int k = cfg.buckets_for(lifetime_pred);
    const double clamped = std::min(1.0, std::max(0.0, score));
    return std::min(k - 1, static_cast<int>(std::floor(clamped * k)));
}

std::vector<int> selection_scan_order(const AllocatorConfig& cfg, int processed_index,
                                      int num_servers) {
    std::vector<int> order;
    order.reserve(num_servers);
    if (num_servers == 0) return order;
    if (cfg.selection_mode == SelectionMode::RoundRobin) {
        const int start = processed_index % num_servers;
        for (int j = 0; j < num_servers; ++j) order.push_back((start + j) % num_servers);
    } else {
        auto perm = Rng(cfg.selection_seed).fork(static_cast<std::uint64_t>(processed_index))
                        .permutation(static_cast<std::size_t>(num_servers));
        for (auto p : perm) order.push_back(static_cast<int>(p));
    }
    return order;
}

// Raw score formula value; may be negative for servers the VM does not fit.
static double score_formula(const ClusterState& state, int j, int epoch,
                            const std::vector<double>& reserved, const AllocatorConfig& cfg) {
    std::vector<double> per_dim(kDims, 0.0);
    for (int d = 0; d < kDims; ++d) {
        const double cap = state.servers[j].capacity[d];
        per_dim[d] = (cap - state.reserved[j][epoch][d] - reserved[d]) / cap;
    }
    return aggregate_score(per_dim, cfg.score_aggregation);
}

static VmPlacement place_one(ClusterState& state, const ScenarioVm& sv, int processed_index,
                             const AllocatorConfig& cfg) {
    const VmRequest& vm = sv.vm;
    if (vm.arrival >= cfg.horizon)
        throw std::invalid_argument("vm " + vm.id + " arrives after the horizon");

    VmPlacement pl;
    pl.vm_id = vm.id;
    pl.processing_index = processed_index;
    pl.reserved = reserved_sizes(vm, sv.preds, cfg);

    auto evaluate_servers = [&]() {
        const int n = static_cast<int>(state.servers.size());
        pl.fitting_servers.clear();
        pl.score_per_server.assign(n, 0.0);
        pl.bucket_per_server.assign(n, 0);
        for (int j = 0; j < n; ++j) {
            bool fits = true;
            for (int d = 0; d < kDims; ++d) {
                const double residual =
                    state.servers[j].capacity[d] - state.reserved[j][vm.arrival][d];
                if (residual < pl.reserved[d]) fits = false;
            }
            pl.score_per_server[j] = score_formula(state, j, vm.arrival, pl.reserved, cfg);
            if (fits) {
                pl.fitting_servers.push_back(j);
                pl.bucket_per_server[j] = bucket(pl.score_per_server[j], sv.preds.lifetime, cfg);
            } else {
                const double clamped = std::min(1.0, std::max(0.0, pl.score_per_server[j]));
                pl.bucket_per_server[j] = bucket(clamped, sv.preds.lifetime, cfg);
            }
        }
    };

    evaluate_servers();
    if (pl.fitting_servers.empty() && cfg.pool_mode == PoolMode::Unbounded) {
        Server fresh{"s" + std::to_string(state.servers.size()), {cfg.server_cpu, cfg.server_mem}};
        state.add_server(fresh);
        evaluate_servers();
    }

    if (pl.fitting_servers.empty()) {
        pl.rejected = true;
        pl.scan_order = selection_scan_order(cfg, processed_index,
                                             static_cast<int>(state.servers.size()));
        return pl;
    }

    pl.min_bucket = pl.bucket_per_server[pl.fitting_servers.front()];
    for (int j : pl.fitting_servers) pl.min_bucket = std::min(pl.min_bucket, pl.bucket_per_server[j]);
    for (int j : pl.fitting_servers)
        if (pl.bucket_per_server[j] == pl.min_bucket) pl.candidate_set.push_back(j);

    pl.scan_order =
        selection_scan_order(cfg, processed_index, static_cast<int>(state.servers.size()));
    for (int j : pl.scan_order) {
        if (std::find(pl.candidate_set.begin(), pl.candidate_set.end(), j) !=
            pl.candidate_set.end()) {
            pl.chosen_server = j;
            break;
        }
    }

    state.record(vm.id, pl.chosen_server, vm.arrival, vm.arrival + vm.true_lifetime_epochs,
                 pl.reserved, actual_sizes(vm, cfg));
    return pl;
}

SimulationResult simulate(const Scenario& scenario, const AllocatorConfig& cfg,
                          std::vector<Server> servers) {
    cfg.validate();
    ClusterState state = ClusterState::empty(std::move(servers), cfg.horizon);
    PlacementTrace trace;
    const auto order = scenario.processing_order();
    for (std::size_t k = 0; k < order.size(); ++k) {
        VmPlacement pl = place_one(state, scenario.vms[order[k]], static_cast<int>(k), cfg);
        if (pl.rejected) trace.rejection_count += 1;
        trace.placements.push_back(std::move(pl));
    }
    trace.final_state = std::move(state);

    SimulationResult result;
    result.metrics = metrics_from_state(trace.final_state);
    result.trace = std::move(trace);
    return result;
}

SimulationResult simulate(const Scenario& scenario, const AllocatorConfig& cfg) {
    return simulate(scenario, cfg, cfg.make_servers());
}

namespace {

std::string vn(const char* stem, std::initializer_list<int> idx) {
    std::string s = stem;
    for (int i : idx) {
        s += "_";
        s += std::to_string(i);
    }
    return s;
}

}  // namespace

DpbfrEncoding encode_constraints(const Scenario& scenario, const AllocatorConfig& cfg,
                                 std::vector<Server> servers) {
    cfg.validate();
    if (cfg.pool_mode == PoolMode::Unbounded)
        throw std::invalid_argument(
            "encode_constraints: unbounded pool cannot be encoded; use a fixed pool");

    DpbfrEncoding enc;
    enc.order = scenario.processing_order();
    enc.num_vms = static_cast<int>(enc.order.size());
    enc.num_servers = static_cast<int>(servers.size());
    enc.horizon = cfg.horizon;
    enc.servers = servers;

    const int N = enc.num_vms, J = enc.num_servers, T = enc.horizon;
    ConstraintSystem& cs = enc.system;

    double cap_sum = 0.0;
    for (const auto& s : servers)
        for (int d = 0; d < kDims; ++d) cap_sum += s.capacity[d];
    const int max_buckets = std::max(cfg.short_buckets, cfg.long_buckets);
    cs.big_m = cap_sum + 1.0;
    cs.epsilon = 1.0 / (2.0 * static_cast<double>(max_buckets));
    cs.mu = cs.epsilon * 1e-6 * static_cast<double>(max_buckets);
    const double M = cs.big_m, eps = cs.epsilon;

    for (int i = 0; i < N; ++i) {
        const ScenarioVm& sv = scenario.vms[enc.order[i]];
        if (sv.vm.arrival >= T)
            throw std::invalid_argument("encode_constraints: vm arrives after the horizon");
        enc.arrivals.push_back(sv.vm.arrival);
        enc.clipped_lifetime.push_back(std::min(sv.vm.true_lifetime_epochs, T - sv.vm.arrival));
        enc.reserved.push_back(reserved_sizes(sv.vm, sv.preds, cfg));
        enc.bucket_counts.push_back(cfg.buckets_for(sv.preds.lifetime));
        enc.scan_orders.push_back(selection_scan_order(cfg, i, J));
    }

    // variables
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < J; ++j)
            for (int t = 0; t < T; ++t) cs.add_variable(vn("al", {i, j, t}), VarKind::Binary);
        for (int j = 0; j < J; ++j)
            for (int t = 0; t < T; ++t)
                for (int d = 0; d < kDims; ++d)
                    cs.add_variable(vn("x", {i, j, t, d}), VarKind::Real, 0.0, M);
        for (int j = 0; j < J; ++j)
            for (int d = 0; d < kDims; ++d) cs.add_variable(vn("r", {i, j, d}), VarKind::Real);
        for (int j = 0; j < J; ++j) cs.add_variable(vn("rmin", {i, j}), VarKind::Real);
        for (int j = 0; j < J; ++j) cs.add_variable(vn("f", {i, j}), VarKind::Binary);
        for (int j = 0; j < J; ++j) cs.add_variable(vn("s", {i, j}), VarKind::Real);
        for (int j = 0; j < J; ++j)
            cs.add_variable(vn("b", {i, j}), VarKind::Integer, 0.0,
                            static_cast<double>(enc.bucket_counts[i] - 1));
        cs.add_variable(vn("z", {i}), VarKind::Integer, 0.0,
                        static_cast<double>(enc.bucket_counts[i] - 1));
        for (int j = 0; j < J; ++j) cs.add_variable(vn("cand", {i, j}), VarKind::Binary);
    }

    auto al = [&](int i, int j, int t) { return cs.var_index(vn("al", {i, j, t})); };
    auto xv = [&](int i, int j, int t, int d) { return cs.var_index(vn("x", {i, j, t, d})); };
    auto rv = [&](int i, int j, int d) { return cs.var_index(vn("r", {i, j, d})); };
    auto rmin = [&](int i, int j) { return cs.var_index(vn("rmin", {i, j})); };
    auto fv = [&](int i, int j) { return cs.var_index(vn("f", {i, j})); };
    auto sv_ = [&](int i, int j) { return cs.var_index(vn("s", {i, j})); };
    auto bv = [&](int i, int j) { return cs.var_index(vn("b", {i, j})); };
    auto zv = [&](int i) { return cs.var_index(vn("z", {i})); };
    auto cv = [&](int i, int j) { return cs.var_index(vn("cand", {i, j})); };

    for (int i = 0; i < N; ++i) {
        const int a = enc.arrivals[i];
        const int life = enc.clipped_lifetime[i];
        const int K = enc.bucket_counts[i];

        // no VM is assigned before its arrival
        for (int j = 0; j < J; ++j)
            for (int t = 0; t < a; ++t)
                cs.add_constraint("arrival_zero", vn("arr0", {i, j, t}),
                                  {{1.0, al(i, j, t)}}, Rel::Eq, 0.0);

        // placed on exactly one server at arrival
        {
            std::vector<LinTerm> terms;
            for (int j = 0; j < J; ++j) terms.push_back({1.0, al(i, j, a)});
            cs.add_constraint("initial_placement", vn("init", {i}), std::move(terms), Rel::Eq, 1.0);
        }

        // once a VM leaves a server it cannot return
        for (int j = 0; j < J; ++j)
            for (int t = a; t + 1 < T; ++t)
                cs.add_constraint("continuity", vn("cont", {i, j, t}),
                                  {{1.0, al(i, j, t + 1)}, {-1.0, al(i, j, t)}}, Rel::Le, 0.0);

        // stays allocated for its (horizon-clipped) lifetime
        {
            std::vector<LinTerm> terms;
            for (int j = 0; j < J; ++j)
                for (int t = a; t < T; ++t) terms.push_back({1.0, al(i, j, t)});
            cs.add_constraint("lifetime", vn("life", {i}), std::move(terms), Rel::Eq,
                              static_cast<double>(life));
        }

        // occupancy linking
        for (int j = 0; j < J; ++j)
            for (int t = 0; t < T; ++t)
                for (int d = 0; d < kDims; ++d)
                    cs.add_constraint("occupancy_link", vn("xlink", {i, j, t, d}),
                                      {{1.0, xv(i, j, t, d)}, {-M, al(i, j, t)}}, Rel::Le, 0.0);
        for (int t = 0; t < T; ++t)
            for (int d = 0; d < kDims; ++d) {
                std::vector<LinTerm> ub, lb;
                for (int j = 0; j < J; ++j) ub.push_back({1.0, xv(i, j, t, d)});
                lb = ub;
                cs.add_constraint("occupancy_total_ub", vn("xub", {i, t, d}), std::move(ub),
                                  Rel::Le, enc.reserved[i][d]);
                for (int j = 0; j < J; ++j) lb.push_back({-M, al(i, j, t)});
                cs.add_constraint("occupancy_total_lb", vn("xlb", {i, t, d}), std::move(lb),
                                  Rel::Ge, enc.reserved[i][d] - M);
            }

        // residual capacity at arrival, from VMs processed earlier
        for (int j = 0; j < J; ++j)
            for (int d = 0; d < kDims; ++d) {
                std::vector<LinTerm> terms{{1.0, rv(i, j, d)}};
                for (int u = 0; u < i; ++u) terms.push_back({1.0, xv(u, j, a, d)});
                cs.add_constraint("residual_def", vn("rdef", {i, j, d}), std::move(terms), Rel::Eq,
                                  enc.servers[j].capacity[d] - enc.reserved[i][d]);
            }

        // fit indicator sandwich on the minimum residual
        for (int j = 0; j < J; ++j) {
            for (int d = 0; d < kDims; ++d)
                cs.add_constraint("residual_min", vn("rmin", {i, j, d}),
                                  {{1.0, rmin(i, j)}, {-1.0, rv(i, j, d)}}, Rel::Le, 0.0);
            cs.add_constraint("fit_lb", vn("fitlb", {i, j}),
                              {{M, fv(i, j)}, {-1.0, rmin(i, j)}}, Rel::Ge, 0.0);
            cs.add_constraint("fit_ub", vn("fitub", {i, j}),
                              {{M, fv(i, j)}, {-1.0, rmin(i, j)}}, Rel::Le, M);
        }

        // best-fit score
        for (int j = 0; j < J; ++j) {
            if (cfg.score_aggregation == ScoreAggregation::Mean) {
                std::vector<LinTerm> terms{{1.0, sv_(i, j)}};
                for (int d = 0; d < kDims; ++d)
                    terms.push_back({-1.0 / (kDims * enc.servers[j].capacity[d]), rv(i, j, d)});
                cs.add_constraint("score_def", vn("sdef", {i, j}), std::move(terms), Rel::Eq, 0.0);
            } else {
                for (int d = 0; d < kDims; ++d)
                    cs.add_constraint("score_max_lb", vn("smax", {i, j, d}),
                                      {{1.0, sv_(i, j)},
                                       {-1.0 / enc.servers[j].capacity[d], rv(i, j, d)}},
                                      Rel::Ge, 0.0);
            }
        }

        // bucket edges (active only for fitting servers)
        const double invK = 1.0 / static_cast<double>(K);
        for (int j = 0; j < J; ++j) {
            cs.add_constraint("bucket_lo", vn("blo", {i, j}),
                              {{1.0, sv_(i, j)}, {-invK, bv(i, j)}, {-M, fv(i, j)}}, Rel::Ge, -M);
            cs.add_constraint("bucket_hi", vn("bhi", {i, j}),
                              {{1.0, sv_(i, j)}, {-invK, bv(i, j)}, {M, fv(i, j)}}, Rel::Le,
                              invK + M);
        }

        // z_i lower-bounds every fitting server's bucket
        for (int j = 0; j < J; ++j)
            cs.add_constraint("min_bucket", vn("zmin", {i, j}),
                              {{1.0, zv(i)}, {-1.0, bv(i, j)}, {M, fv(i, j)}}, Rel::Le, M);

        // candidates: fitting servers whose bucket equals z_i
        for (int j = 0; j < J; ++j) {
            cs.add_constraint("candidate_fit", vn("cfit", {i, j}),
                              {{1.0, cv(i, j)}, {-1.0, fv(i, j)}}, Rel::Le, 0.0);
            cs.add_constraint("candidate_ub", vn("cub", {i, j}),
                              {{1.0, cv(i, j)}, {-eps, zv(i)}, {eps, bv(i, j)}}, Rel::Le, 1.0);
            cs.add_constraint("candidate_lb", vn("clb", {i, j}),
                              {{1.0, cv(i, j)}, {-M, fv(i, j)}, {-eps, zv(i)}, {eps, bv(i, j)}},
                              Rel::Ge, eps - M);
        }

        // the first eligible candidate in the scan order is selected
        const auto& scan = enc.scan_orders[i];
        for (int q = 1; q <= J; ++q) {
            const int s = scan[q - 1];
            std::vector<LinTerm> terms{{static_cast<double>(q), al(i, s, a)}, {-1.0, cv(i, s)}};
            for (int k = 0; k < q - 1; ++k) terms.push_back({1.0, cv(i, scan[k])});
            cs.add_constraint("selection", vn("sel", {i, q}), std::move(terms), Rel::Le,
                              static_cast<double>(q - 1));
        }

        // reserved capacity is never exceeded
        (void)life;
    }

    for (int j = 0; j < J; ++j)
        for (int t = 0; t < T; ++t)
            for (int d = 0; d < kDims; ++d) {
                std::vector<LinTerm> terms;
                for (int i = 0; i < N; ++i) terms.push_back({1.0, xv(i, j, t, d)});
                cs.add_constraint("reserved_capacity", vn("cap", {j, t, d}), std::move(terms),
                                  Rel::Le, enc.servers[j].capacity[d]);
            }

    return enc;
}

DpbfrEncoding encode_constraints(const Scenario& scenario, const AllocatorConfig& cfg) {
    return encode_constraints(scenario, cfg, cfg.make_servers());
}

std::vector<ConstraintViolation> verify_trace(const DpbfrEncoding& enc,
                                              const PlacementTrace& trace,
                                              const AllocatorConfig& cfg, double tol) {
    const int N = enc.num_vms, J = enc.num_servers, T = enc.horizon;
    if (static_cast<int>(trace.placements.size()) != N)
        throw std::invalid_argument("verify_trace: trace does not match the encoding");

    const ConstraintSystem& cs = enc.system;
    std::vector<double> values(cs.variables().size(), 0.0);
    auto set = [&](const std::string& name, double v) { values[cs.var_index(name)] = v; };

    // occupancy from the trace's recorded assignments
    for (int i = 0; i < N; ++i) {
        const VmPlacement& pl = trace.placements[i];
        auto it = trace.final_state.assignments.find(pl.vm_id);
        if (it == trace.final_state.assignments.end()) continue;  // rejected
        const VmAssignment& asg = it->second;
        const int start = std::max(0, asg.start_epoch);
        const int stop = std::min(asg.end_epoch, T);
        for (int t = start; t < stop; ++t) {
            set(vn("al", {i, asg.server, t}), 1.0);
            for (int d = 0; d < kDims; ++d)
                set(vn("x", {i, asg.server, t, d}), enc.reserved[i][d]);
        }
    }

    // derived quantities recomputed from the substituted occupancy
    for (int i = 0; i < N; ++i) {
        const VmPlacement& pl = trace.placements[i];
        const int a = enc.arrivals[i];
        const int K = enc.bucket_counts[i];
        for (int j = 0; j < J; ++j) {
            double used[kDims] = {0.0, 0.0};
            for (int u = 0; u < i; ++u)
                for (int d = 0; d < kDims; ++d)
                    used[d] += values[cs.var_index(vn("x", {u, j, a, d}))];
            double rm = 0.0;
            double per_dim[kDims];
            for (int d = 0; d < kDims; ++d) {
                const double r = enc.servers[j].capacity[d] - enc.reserved[i][d] - used[d];
                set(vn("r", {i, j, d}), r);
                per_dim[d] = r / enc.servers[j].capacity[d];
                rm = d == 0 ? r : std::min(rm, r);
            }
            set(vn("rmin", {i, j}), rm);

            double score = 0.0;
            if (cfg.score_aggregation == ScoreAggregation::Mean) {
                for (int d = 0; d < kDims; ++d) score += per_dim[d] / kDims;
            } else {
                score = std::max(per_dim[0], per_dim[1]);
            }
            set(vn("s", {i, j}), score);

            const bool fits = std::find(pl.fitting_servers.begin(), pl.fitting_servers.end(),
                                        j) != pl.fitting_servers.end();
            set(vn("f", {i, j}), fits ? 1.0 : 0.0);
            int b;
            if (fits) {
                b = pl.bucket_per_server[j];
            } else {
                const double clamped = std::min(1.0, std::max(0.0, score));
                b = std::min(K - 1, static_cast<int>(std::floor(clamped * K)));
            }
            set(vn("b", {i, j}), static_cast<double>(b));
            const bool cand = std::find(pl.candidate_set.begin(), pl.candidate_set.end(), j) !=
                              pl.candidate_set.end();
            set(vn("cand", {i, j}), cand ? 1.0 : 0.0);
        }
        set(vn("z", {i}), static_cast<double>(pl.min_bucket));
    }

    (void)T;
    return cs.check(values, tol);
}

std::string trace_to_json(const PlacementTrace& trace) {
    json out;
    json placements = json::array();
    for (const auto& pl : trace.placements) {
        json o;
        o["vm"] = pl.vm_id;
        o["server"] = pl.chosen_server;
        o["rejected"] = pl.rejected;
        o["candidates"] = pl.candidate_set;
        o["min_bucket"] = pl.min_bucket;
        o["scores"] = pl.score_per_server;
        placements.push_back(o);
    }
    out["placements"] = placements;
    out["rejections"] = trace.rejection_count;
    json assigns = json::object();
    for (const auto& [id, a] : trace.final_state.assignments)
        assigns[id] = {{"server", a.server}, {"start", a.start_epoch}, {"end", a.end_epoch}};
    out["assignments"] = assigns;
    return out.dump(2) + "\n";
}

}  // namespace packgap
