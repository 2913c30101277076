#include "packgap/query.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "packgap/cegar.hpp"
#include "packgap/flows.hpp"
#include "packgap/risk.hpp"
#include "packgap/rng.hpp"

namespace packgap {

using nlohmann::json;

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream ss;
    ss << std::hex << h;
    return ss.str();
}

namespace {

QueryKind kind_from_string(const std::string& s) {
    if (s == "Q1") return QueryKind::Q1Gap;
    if (s == "Q2") return QueryKind::Q2Ablation;
    if (s == "Q3") return QueryKind::Q3Drift;
    if (s == "Q4") return QueryKind::Q4RiskSurface;
    if (s == "Q5") return QueryKind::Q5Hypothetical;
    throw std::invalid_argument("config: query must be one of Q1..Q5");
}

std::string kind_to_string(QueryKind k) {
    switch (k) {
        case QueryKind::Q1Gap: return "Q1";
        case QueryKind::Q2Ablation: return "Q2";
        case QueryKind::Q3Drift: return "Q3";
        case QueryKind::Q4RiskSurface: return "Q4";
        case QueryKind::Q5Hypothetical: return "Q5";
    }
    return "?";
}

json allocator_to_json(const AllocatorConfig& a) {
    json o;
    o["oversub_fraction"] = a.oversub_fraction;
    o["short_buckets"] = a.short_buckets;
    o["long_buckets"] = a.long_buckets;
    o["selection_mode"] =
        a.selection_mode == SelectionMode::RoundRobin ? "round_robin" : "seeded_random";
    o["pool_mode"] = a.pool_mode == PoolMode::Fixed ? "fixed" : "unbounded";
    o["pool_size"] = a.pool_size;
    o["server_cpu"] = a.server_cpu;
    o["server_mem"] = a.server_mem;
    o["lifetime_threshold_epochs"] = a.lifetime_threshold_epochs;
    o["score_aggregation"] = a.score_aggregation == ScoreAggregation::Mean ? "mean" : "max";
    o["horizon"] = a.horizon;
    o["selection_seed"] = a.selection_seed;
    return o;
}

AllocatorConfig allocator_from_json(const json& o) {
    AllocatorConfig a;
    if (o.contains("oversub_fraction")) a.oversub_fraction = o.at("oversub_fraction").get<double>();
    if (o.contains("short_buckets")) a.short_buckets = o.at("short_buckets").get<int>();
    if (o.contains("long_buckets")) a.long_buckets = o.at("long_buckets").get<int>();
    if (o.contains("selection_mode")) {
        const std::string m = o.at("selection_mode").get<std::string>();
        if (m == "round_robin") a.selection_mode = SelectionMode::RoundRobin;
        else if (m == "seeded_random") a.selection_mode = SelectionMode::SeededRandom;
        else throw std::invalid_argument("config: unknown selection_mode " + m);
    }
    if (o.contains("pool_mode")) {
        const std::string m = o.at("pool_mode").get<std::string>();
        if (m == "fixed") a.pool_mode = PoolMode::Fixed;
        else if (m == "unbounded") a.pool_mode = PoolMode::Unbounded;
        else throw std::invalid_argument("config: unknown pool_mode " + m);
    }
    if (o.contains("pool_size")) a.pool_size = o.at("pool_size").get<int>();
    if (o.contains("server_cpu")) a.server_cpu = o.at("server_cpu").get<double>();
    if (o.contains("server_mem")) a.server_mem = o.at("server_mem").get<double>();
    if (o.contains("lifetime_threshold_epochs"))
        a.lifetime_threshold_epochs = o.at("lifetime_threshold_epochs").get<int>();
    if (o.contains("score_aggregation")) {
        const std::string m = o.at("score_aggregation").get<std::string>();
        if (m == "mean") a.score_aggregation = ScoreAggregation::Mean;
        else if (m == "max") a.score_aggregation = ScoreAggregation::Max;
        else throw std::invalid_argument("config: unknown score_aggregation " + m);
    }
    if (o.contains("horizon")) a.horizon = o.at("horizon").get<int>();
    if (o.contains("selection_seed")) a.selection_seed = o.at("selection_seed").get<std::uint64_t>();
    return a;
}

}  // namespace

QueryConfig QueryConfig::from_json(const std::string& text) {
    json o = json::parse(text);
    QueryConfig c;
    c.query = kind_from_string(o.at("query").get<std::string>());
    if (o.contains("metric")) c.metric = o.at("metric").get<std::string>();
    if (c.metric != "risk_of_migration" && c.metric != "servers_used")
        throw std::invalid_argument("config: metric must be risk_of_migration or servers_used");
    if (o.contains("n")) c.n = o.at("n").get<int>();
    if (o.contains("horizon")) c.horizon = o.at("horizon").get<int>();
    if (o.contains("iterations")) c.iterations = o.at("iterations").get<long>();
    if (o.contains("seed")) c.seed = o.at("seed").get<std::uint64_t>();
    if (o.contains("z")) c.z = o.at("z").get<double>();
    if (o.contains("plan_schedule")) c.plan_schedule = o.at("plan_schedule").get<std::vector<int>>();
    if (o.contains("allocator")) c.allocator = allocator_from_json(o.at("allocator"));
    c.allocator.horizon = c.horizon;
    if (o.contains("short_epochs")) c.short_epochs = o.at("short_epochs").get<int>();
    if (o.contains("long_epochs")) c.long_epochs = o.at("long_epochs").get<int>();
    if (o.contains("workload")) c.workload_path = o.at("workload").get<std::string>();
    if (o.contains("profile")) c.profile_path = o.at("profile").get<std::string>();
    if (o.contains("cpu_model")) c.cpu_model_path = o.at("cpu_model").get<std::string>();
    if (o.contains("cpu_accuracy")) c.cpu_accuracy = o.at("cpu_accuracy").get<double>();
    if (o.contains("lifetime_accuracy"))
        c.lifetime_accuracy = o.at("lifetime_accuracy").get<double>();
    if (o.contains("drift_p")) c.drift_p = o.at("drift_p").get<double>();
    if (o.contains("capacity_profile"))
        c.capacity_profile_path = o.at("capacity_profile").get<std::string>();
    if (o.contains("risk_threshold")) c.risk_threshold = o.at("risk_threshold").get<int>();
    if (o.contains("cegar_initial_depth"))
        c.cegar_initial_depth = o.at("cegar_initial_depth").get<int>();
    if (o.contains("cegar_max_rounds")) c.cegar_max_rounds = o.at("cegar_max_rounds").get<int>();
    if (o.contains("out_dir")) c.out_dir = o.at("out_dir").get<std::string>();
    return c;
}

QueryConfig QueryConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string QueryConfig::canonical_json() const {
    json o;
    o["query"] = kind_to_string(query);
    o["metric"] = metric;
    o["n"] = n;
    o["horizon"] = horizon;
    o["iterations"] = iterations;
    o["seed"] = seed;
    o["z"] = z;
    o["plan_schedule"] = plan_schedule;
    o["allocator"] = allocator_to_json(allocator);
    o["short_epochs"] = short_epochs;
    o["long_epochs"] = long_epochs;
    o["workload"] = workload_path;
    o["profile"] = profile_path;
    o["cpu_model"] = cpu_model_path;
    o["cpu_accuracy"] = cpu_accuracy;
    o["lifetime_accuracy"] = lifetime_accuracy;
    o["drift_p"] = drift_p;
    o["capacity_profile"] = capacity_profile_path;
    o["risk_threshold"] = risk_threshold;
    o["cegar_initial_depth"] = cegar_initial_depth;
    o["cegar_max_rounds"] = cegar_max_rounds;
    return o.dump();  // nlohmann objects serialize with sorted keys
}

std::string QueryConfig::config_hash() const { return fnv1a_hex(canonical_json()); }

std::vector<VmRequest> gen_workload(const WorkloadGenParams& params) {
    if (!(params.short_epochs < params.lifetime_threshold &&
          params.lifetime_threshold <= params.long_epochs))
        throw std::invalid_argument("gen_workload: lifetime threshold must separate the epochs");
    Rng rng(params.seed);
    std::vector<VmRequest> vms;
    for (int i = 0; i < params.n; ++i) {
        VmRequest vm;
        std::ostringstream id;
        id << "vm" << std::setw(4) << std::setfill('0') << i;
        vm.id = id.str();
        const auto& type = params.vm_types[rng.next_below(params.vm_types.size())];
        vm.req_cpu = type.first;
        vm.req_mem = type.second;
        vm.arrival = static_cast<int>(rng.next_below(std::max(1, params.horizon / 2)));
        vm.true_cpu_label = rng.next_bernoulli(params.p_cpu_label1) ? 1 : 0;
        vm.true_mem_decile = static_cast<int>(rng.next_below(10)) + 1;
        vm.true_lifetime_label = rng.next_bernoulli(params.p_lifetime_label1) ? 1 : 0;
        vm.true_lifetime_epochs =
            vm.true_lifetime_label ? params.long_epochs : params.short_epochs;
        if (params.feature_dim > 0) {
            std::vector<double> f(params.feature_dim);
            for (auto& v : f) v = rng.next_real();
            vm.features = std::move(f);
        }
        vms.push_back(std::move(vm));
    }
    std::sort(vms.begin(), vms.end(), [](const VmRequest& a, const VmRequest& b) {
        return std::tie(a.arrival, a.id) < std::tie(b.arrival, b.id);
    });
    for (const auto& vm : vms) vm.validate(params.lifetime_threshold);
    return vms;
}

Ensemble gen_random_model(std::uint64_t seed, const std::vector<std::string>& feature_names,
                          const std::vector<std::pair<double, double>>& bounds,
                          int trees_per_class, int depth) {
    Rng rng(seed);
    Ensemble m;
    m.feature_names = feature_names;
    m.feature_bounds = bounds;
    m.classes = {"0", "1"};
    for (int c = 0; c < 2; ++c) {
        std::vector<DecisionTree> group;
        for (int t = 0; t < trees_per_class; ++t) {
            DecisionTree tree;
            std::function<int(int)> build = [&](int level) -> int {
                const int idx = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({});
                if (level >= depth) {
                    tree.nodes[idx].is_leaf = true;
                    tree.nodes[idx].value = rng.next_real();
                    return idx;
                }
                const int f = static_cast<int>(rng.next_below(feature_names.size()));
                tree.nodes[idx].is_leaf = false;
                tree.nodes[idx].feature = f;
                tree.nodes[idx].threshold =
                    rng.next_real(bounds[f].first + 0.1 * (bounds[f].second - bounds[f].first),
                                  bounds[f].second - 0.1 * (bounds[f].second - bounds[f].first));
                const int l = build(level + 1);
                const int r = build(level + 1);
                tree.nodes[idx].left = l;
                tree.nodes[idx].right = r;
                return idx;
            };
            build(0);
            group.push_back(std::move(tree));
        }
        m.trees.push_back(std::move(group));
    }
    m.validate();
    return m;
}

DistributionProfile estimate_profile(const std::vector<VmRequest>& vms, const Ensemble* cpu_model,
                                     double synth_cpu_accuracy, double synth_lifetime_accuracy,
                                     int arrival_windows, int horizon) {
    if (vms.empty()) throw std::invalid_argument("estimate_profile: empty workload");
    DistributionProfile p;
    const double n = static_cast<double>(vms.size());

    double cpu1 = 0.0, life1 = 0.0;
    for (const auto& vm : vms) {
        cpu1 += vm.true_cpu_label;
        life1 += vm.true_lifetime_label;
        p.vm_type_mix[{vm.req_cpu, vm.req_mem}] += 1.0 / n;
    }
    p.label_mix["cpu"][0] = 1.0 - cpu1 / n;
    p.label_mix["cpu"][1] = cpu1 / n;
    p.label_mix["lifetime"][0] = 1.0 - life1 / n;
    p.label_mix["lifetime"][1] = life1 / n;

    const bool measurable = cpu_model && std::all_of(vms.begin(), vms.end(), [&](const auto& vm) {
        return vm.features && vm.features->size() == cpu_model->num_features();
    });
    if (measurable) {
        for (const auto& vm : vms) {
            const int pred = predict(*cpu_model, *vm.features).class_index;
            p.joint_cells["cpu"][{vm.true_cpu_label, pred}] += 1.0 / n;
        }
    } else if (synth_cpu_accuracy > 0.0 && synth_cpu_accuracy < 1.0) {
        for (int l = 0; l < 2; ++l) {
            const double pl = p.label_mix["cpu"][l];
            p.joint_cells["cpu"][{l, l}] = pl * synth_cpu_accuracy;
            p.joint_cells["cpu"][{l, 1 - l}] = pl * (1.0 - synth_cpu_accuracy);
        }
    }
    if (synth_lifetime_accuracy > 0.0 && synth_lifetime_accuracy < 1.0) {
        for (int l = 0; l < 2; ++l) {
            const double pl = p.label_mix["lifetime"][l];
            p.joint_cells["lifetime"][{l, l}] = pl * synth_lifetime_accuracy;
            p.joint_cells["lifetime"][{l, 1 - l}] = pl * (1.0 - synth_lifetime_accuracy);
        }
    }

    p.arrival_rate.assign(arrival_windows, 0.0);
    for (const auto& vm : vms) {
        int w = arrival_windows * vm.arrival / std::max(1, horizon);
        w = std::min(w, arrival_windows - 1);
        p.arrival_rate[w] += 1.0 / n;
    }
    p.validate();
    return p;
}

namespace {

double joint_accuracy(const DistributionProfile& profile, const std::string& model) {
    auto it = profile.joint_cells.find(model);
    if (it == profile.joint_cells.end()) return -1.0;
    double acc = 0.0;
    for (const auto& [cell, prob] : it->second)
        if (cell.first == cell.second) acc += prob;
    return acc;
}

}  // namespace

SearchInputs build_search_inputs(const QueryConfig& config, const std::vector<VmRequest>& vms,
                                 const DistributionProfile& profile) {
    if (static_cast<int>(vms.size()) < config.n)
        throw std::invalid_argument("build_search_inputs: workload smaller than N");
    SearchInputs in;
    in.tpl.cfg = config.allocator;
    in.tpl.cfg.horizon = config.horizon;
    in.tpl.metric = config.metric == "servers_used" ? GapMetric::MeanServersUsed
                                                    : GapMetric::RiskOfMigration;
    in.tpl.short_epochs = config.short_epochs;
    in.tpl.long_epochs = config.long_epochs;
    in.tpl.labels_free = true;
    in.tpl.arrivals_free = true;
    in.tpl.cpu = ModelFreedom::Free;
    const double life_acc = joint_accuracy(profile, "lifetime");
    in.tpl.lifetime = life_acc > 0.0 ? ModelFreedom::Free : ModelFreedom::Pinned;
    in.tpl.memory = ModelFreedom::Pinned;

    for (int i = 0; i < config.n; ++i) {
        ScenarioVm sv;
        sv.vm = vms[i];
        sv.preds.cpu = sv.vm.true_cpu_label;
        sv.preds.lifetime = sv.vm.true_lifetime_label;
        in.tpl.base.vms.push_back(std::move(sv));
    }

    auto add_bound = [&](ScenarioProperty prop, double p) {
        if (!(p > 0.0 && p < 1.0)) return;
        ScenarioConstraint sc;
        sc.property = prop;
        sc.bound = count_bounds(p, config.n, config.z, prop.id());
        in.constraints.push_back(sc);
    };

    const double cpu_acc = joint_accuracy(profile, "cpu");
    if (cpu_acc > 0.0) add_bound({ScenarioProperty::Kind::CpuCorrect, 0, 0}, cpu_acc);
    if (auto it = profile.label_mix.find("cpu"); it != profile.label_mix.end())
        add_bound({ScenarioProperty::Kind::CpuLabel, 1, 0}, it->second.count(1) ? it->second.at(1) : 0.0);
    if (life_acc > 0.0) {
        add_bound({ScenarioProperty::Kind::LifetimeCorrect, 0, 0}, life_acc);
        if (auto it = profile.label_mix.find("lifetime"); it != profile.label_mix.end())
            add_bound({ScenarioProperty::Kind::LifetimeLabel, 1, 0},
                      it->second.count(1) ? it->second.at(1) : 0.0);
    }
    return in;
}

namespace {

std::string trace_csv(const std::vector<GapTracePoint>& trace) {
    std::ostringstream ss;
    ss << "iteration,gap\n";
    ss.precision(12);
    for (const auto& p : trace) ss << p.iteration << "," << p.gap << "\n";
    return ss.str();
}

SearchResult run_search(const SearchInputs& in, const QueryConfig& config) {
    SearchBudget budget;
    budget.iterations = config.iterations;
    budget.seed = config.seed;
    if (config.plan_schedule.empty()) return anneal_search(in.tpl, in.constraints, budget);
    const PartitionPlan plan = make_partition_plan(in.constraints, config.n,
                                                   config.plan_schedule, config.seed);
    return partitioned_search(in.tpl, plan, in.constraints, budget);
}

json metrics_to_json(const MetricsReport& m) {
    json o;
    o["over_utilized_per_epoch"] = m.over_utilized_per_epoch;
    o["risk_of_migration"] = m.risk_of_migration;
    o["servers_used_per_epoch"] = m.servers_used_per_epoch;
    o["horizon_epochs"] = m.horizon_epochs;
    return o;
}

struct LoadedInputs {
    std::vector<VmRequest> vms;
    DistributionProfile profile;
    std::optional<Ensemble> cpu_model;
};

LoadedInputs load_inputs(const QueryConfig& config) {
    LoadedInputs li;
    if (!config.workload_path.empty()) {
        li.vms = load_workload(config.workload_path, config.allocator.lifetime_threshold_epochs);
    } else {
        WorkloadGenParams gp;
        gp.n = config.n;
        gp.horizon = config.horizon;
        gp.seed = config.seed;
        gp.short_epochs = config.short_epochs;
        gp.long_epochs = config.long_epochs;
        gp.lifetime_threshold = config.allocator.lifetime_threshold_epochs;
        li.vms = gen_workload(gp);
    }
    if (!config.cpu_model_path.empty()) li.cpu_model = load_model(config.cpu_model_path);
    if (!config.profile_path.empty()) {
        li.profile = DistributionProfile::load(config.profile_path);
    } else {
        li.profile = estimate_profile(li.vms, li.cpu_model ? &*li.cpu_model : nullptr,
                                      config.cpu_accuracy, config.lifetime_accuracy, 6,
                                      config.horizon);
    }
    return li;
}

void add_common_outputs(ReportBundle& bundle, const QueryConfig& config, const SearchResult& res,
                        const SearchTemplate& tpl) {
    bundle.files["best_scenario.json"] = scenario_to_json(res.scenario);
    bundle.files["gap_trace.csv"] = trace_csv(res.trace);

    const SimulationResult system = simulate(res.scenario, tpl.cfg);
    const SimulationResult baseline =
        simulate(res.scenario.with_ground_truth_predictions(), tpl.cfg);
    MetricsReport sys_m = system.metrics;
    MetricsReport base_m = baseline.metrics;
    sys_m.excess_servers_per_epoch = excess_servers(sys_m, base_m);

    json report;
    report["query"] = kind_to_string(config.query);
    report["config_hash"] = config.config_hash();
    report["seed"] = config.seed;
    report["gap"] = res.gap;
    report["metric"] = config.metric;
    report["evaluations"] = res.evaluations;
    report["system_metrics"] = metrics_to_json(sys_m);
    report["baseline_metrics"] = metrics_to_json(base_m);
    report["excess_servers_per_epoch"] = sys_m.excess_servers_per_epoch;
    report["system_rejections"] = system.trace.rejection_count;
    report["baseline_rejections"] = baseline.trace.rejection_count;
    bundle.files["report.json"] = report.dump(2) + "\n";
    bundle.summary = "gap=" + std::to_string(res.gap);
    if (system.trace.rejection_count || baseline.trace.rejection_count)
        bundle.summary += " (rejections: system " +
                          std::to_string(system.trace.rejection_count) + ", baseline " +
                          std::to_string(baseline.trace.rejection_count) +
                          "; consider a larger pool)";
}

ReportBundle run_q1(const QueryConfig& config, const LoadedInputs& li) {
    ReportBundle bundle;
    const SearchInputs in = build_search_inputs(config, li.vms, li.profile);
    const SearchResult res = run_search(in, config);
    add_common_outputs(bundle, config, res, in.tpl);
    return bundle;
}

ReportBundle run_q2(const QueryConfig& config, const LoadedInputs& li) {
    ReportBundle bundle;
    const SearchInputs in = build_search_inputs(config, li.vms, li.profile);
    SearchBudget budget;
    budget.iterations = config.iterations;
    budget.seed = config.seed;

    const bool lifetime_present = in.tpl.lifetime == ModelFreedom::Free;
    json ablations = json::object();
    SearchResult best_overall;
    best_overall.gap = -1e300;

    struct Case {
        std::string name;
        bool cpu, life, mem;
    };
    std::vector<Case> cases = {{"all", true, lifetime_present, false},
                               {"cpu_only", true, false, false},
                               {"none", false, false, false}};
    if (lifetime_present) cases.push_back({"lifetime_only", false, true, false});

    for (const auto& c : cases) {
        const SearchResult r =
            ablation_search(in.tpl, in.constraints, budget, c.cpu, c.life, c.mem);
        ablations[c.name] = r.gap;
        if (r.gap > best_overall.gap) best_overall = r;
    }
    add_common_outputs(bundle, config, best_overall, in.tpl);
    bundle.files["ablation.json"] = ablations.dump(2) + "\n";
    return bundle;
}

ReportBundle run_q3(const QueryConfig& config, const LoadedInputs& li) {
    ReportBundle bundle;
    // no-drift arm
    const SearchInputs in0 = build_search_inputs(config, li.vms, li.profile);
    const SearchResult r0 = run_search(in0, config);

    // drift arm: perturb the cpu ground-truth labels, rebuild the reference
    // map and re-estimate the enforced distributions
    LabeledDataset ds;
    for (const auto& vm : li.vms) ds.labels.push_back(vm.true_cpu_label);
    ds.features.resize(li.vms.size());
    for (std::size_t i = 0; i < li.vms.size(); ++i)
        if (li.vms[i].features) ds.features[i] = *li.vms[i].features;
    ds.num_classes = 2;
    const LabeledDataset drifted = perturb_labels(ds, config.drift_p, config.seed);

    std::vector<VmRequest> drifted_vms = li.vms;
    for (std::size_t i = 0; i < drifted_vms.size(); ++i)
        drifted_vms[i].true_cpu_label = drifted.labels[i];
    const bool featureful = std::all_of(drifted_vms.begin(), drifted_vms.end(),
                                        [](const auto& vm) { return vm.features.has_value(); });
    double reference_accuracy = -1.0;
    if (featureful && !drifted_vms.empty() && !drifted.features[0].empty()) {
        const ReferenceModel ref = build_reference_model(drifted);
        int hits = 0;
        for (std::size_t i = 0; i < drifted.features.size(); ++i)
            hits += ref.predict(drifted.features[i]) == drifted.labels[i] ? 1 : 0;
        reference_accuracy = static_cast<double>(hits) / drifted.features.size();
    }
    const DistributionProfile drift_profile =
        estimate_profile(drifted_vms, li.cpu_model ? &*li.cpu_model : nullptr,
                         config.cpu_accuracy, config.lifetime_accuracy, 6, config.horizon);
    const SearchInputs in1 = build_search_inputs(config, drifted_vms, drift_profile);
    const SearchResult r1 = run_search(in1, config);

    add_common_outputs(bundle, config, r1, in1.tpl);
    json drift;
    drift["p"] = config.drift_p;
    drift["no_drift_gap"] = r0.gap;
    drift["drift_gap"] = r1.gap;
    drift["reference_model_accuracy"] = reference_accuracy;
    bundle.files["drift.json"] = drift.dump(2) + "\n";
    bundle.summary = "no_drift=" + std::to_string(r0.gap) + " drift=" + std::to_string(r1.gap);
    return bundle;
}

ReportBundle run_q4(const QueryConfig& config, const LoadedInputs& li) {
    ReportBundle bundle;
    if (!li.cpu_model)
        throw std::invalid_argument("Q4 requires cpu_model");
    for (const auto& vm : li.vms)
        if (!vm.features || vm.features->size() != li.cpu_model->num_features())
            throw std::invalid_argument("Q4 requires a featureful workload matching the model");

    const SearchInputs in = build_search_inputs(config, li.vms, li.profile);
    const SearchResult res = run_search(in, config);
    add_common_outputs(bundle, config, res, in.tpl);

    // phase 2: map each VM's (prediction, label) pair back to feature space;
    // the memorizing reference ensemble carries the ground-truth side
    LabeledDataset ds;
    for (const auto& vm : li.vms) {
        ds.features.push_back(*vm.features);
        ds.labels.push_back(vm.true_cpu_label);
    }
    ds.num_classes = 2;
    const Ensemble reference =
        memorizing_ensemble(ds, li.cpu_model->feature_names, li.cpu_model->feature_bounds);

    std::map<std::pair<int, int>, FindResult> combo_results;
    bool exhausted = false;
    for (const auto& sv : res.scenario.vms) {
        const std::pair<int, int> combo{sv.preds.cpu, sv.vm.true_cpu_label};
        if (combo_results.count(combo)) continue;
        const std::vector<ModelTarget> targets = {{&*li.cpu_model, combo.first},
                                                  {&reference, combo.second}};
        combo_results[combo] =
            find_features(targets, config.cegar_initial_depth, config.cegar_max_rounds);
        if (combo_results[combo].status == FindStatus::BudgetExhausted) exhausted = true;
    }

    const std::vector<const Ensemble*> model_set = {&*li.cpu_model, &reference};
    const FeatureSpace space = FeatureSpace::build(model_set);
    std::vector<Region> regions;
    json points = json::array();
    for (const auto& sv : res.scenario.vms) {
        const std::pair<int, int> combo{sv.preds.cpu, sv.vm.true_cpu_label};
        const FindResult& fr = combo_results.at(combo);
        json o;
        o["vm"] = sv.vm.id;
        o["pred"] = combo.first;
        o["label"] = combo.second;
        if (fr.status == FindStatus::Point) {
            o["status"] = "point";
            o["point"] = fr.point;
            regions.push_back(region_of(space, model_set, fr.point));
        } else {
            o["status"] = fr.status == FindStatus::ProvenUnsat ? "unsat" : "budget_exhausted";
        }
        points.push_back(o);
    }
    bundle.files["feature_points.json"] = points.dump(2) + "\n";
    if (!regions.empty()) {
        const RiskSurface surface = merge(regions, config.risk_threshold);
        bundle.files["risk_surface.csv"] = surface_to_csv(surface);
        bundle.files["risk_summary.json"] = coverage_summary_json(surface);
    }
    if (exhausted) bundle.exit_code = 4;
    return bundle;
}

ReportBundle run_q5(const QueryConfig& config, const LoadedInputs& li) {
    ReportBundle bundle;
    if (config.capacity_profile_path.empty())
        throw std::invalid_argument("Q5 requires capacity_profile");
    const CapacityProfile cap = CapacityProfile::load(config.capacity_profile_path);
    const FlowResult flows = solve_flows(cap);
    if (!flows.feasible) {
        bundle.files["flow_infeasible.json"] = flows.certificate.to_json();
        json report;
        report["query"] = "Q5";
        report["config_hash"] = config.config_hash();
        report["seed"] = config.seed;
        report["feasible"] = false;
        bundle.files["report.json"] = report.dump(2) + "\n";
        bundle.exit_code = 3;
        bundle.summary = "hypothetical-model targets are jointly infeasible";
        return bundle;
    }
    bundle.files["flow_solution.json"] = flows.solution.to_json();

    const FlowConstraints fc = flows_to_constraints(flows.solution, config.n, config.seed);
    SearchInputs in = build_search_inputs(config, li.vms, li.profile);
    // joint-outcome pins replace the cpu accuracy/label bounds
    std::vector<ScenarioConstraint> kept;
    for (const auto& c : in.constraints) {
        const auto k = c.property.kind;
        if (k == ScenarioProperty::Kind::CpuCorrect || k == ScenarioProperty::Kind::CpuCell ||
            k == ScenarioProperty::Kind::CpuLabel)
            continue;
        kept.push_back(c);
    }
    in.constraints = std::move(kept);
    in.tpl.flow_pins.clear();
    const auto& paths = flow_paths();
    for (int i = 0; i < config.n; ++i) {
        const FlowPath& path = paths[fc.path_per_vm[i]];
        FlowPin pin;
        pin.current_offset = path.m1;
        pin.pred_offset = path.m2;
        if (path.m2 == +1 || path.m1 == +1) pin.forced_cpu_label = 0;
        else if (path.m2 == -1 || path.m1 == -1) pin.forced_cpu_label = 1;
        in.tpl.flow_pins.push_back(pin);
    }
    const SearchResult res = run_search(in, config);
    add_common_outputs(bundle, config, res, in.tpl);
    return bundle;
}

}  // namespace

ReportBundle run_query(const QueryConfig& config) {
    const LoadedInputs li = load_inputs(config);
    switch (config.query) {
        case QueryKind::Q1Gap: return run_q1(config, li);
        case QueryKind::Q2Ablation: return run_q2(config, li);
        case QueryKind::Q3Drift: return run_q3(config, li);
        case QueryKind::Q4RiskSurface: return run_q4(config, li);
        case QueryKind::Q5Hypothetical: return run_q5(config, li);
    }
    throw std::logic_error("run_query: unreachable");
}

std::vector<std::string> validate_query(const QueryConfig& config) {
    std::vector<std::string> diags;
    auto file_ok = [&](const std::string& path, const std::string& what) {
        if (path.empty()) return false;
        if (!std::filesystem::exists(path)) {
            diags.push_back(what + " not found: " + path);
            return false;
        }
        return true;
    };

    if (config.n < 1) diags.push_back("n must be >= 1");
    if (config.horizon < 1) diags.push_back("horizon must be >= 1");
    try {
        config.allocator.validate();
    } catch (const std::exception& e) {
        diags.push_back(e.what());
    }

    LoadedInputs li;
    bool have_inputs = false;
    try {
        QueryConfig probe = config;
        if (!config.workload_path.empty() && !file_ok(config.workload_path, "workload"))
            probe.workload_path.clear();
        if (!config.cpu_model_path.empty() && !file_ok(config.cpu_model_path, "cpu_model"))
            probe.cpu_model_path.clear();
        if (!config.profile_path.empty() && !file_ok(config.profile_path, "profile"))
            probe.profile_path.clear();
        li = load_inputs(probe);
        have_inputs = true;
    } catch (const std::exception& e) {
        diags.push_back(e.what());
    }

    if (have_inputs) {
        if (static_cast<int>(li.vms.size()) < config.n)
            diags.push_back("workload has fewer than n VMs");
        // the enforced fractions must be statistically meaningful at this N
        const double cpu_acc = joint_accuracy(li.profile, "cpu");
        for (auto [p, what] :
             std::initializer_list<std::pair<double, std::string>>{{cpu_acc, "cpu accuracy"}}) {
            if (!(p > 0.0 && p < 1.0)) continue;
            try {
                count_bounds(p, config.n, config.z);
            } catch (const std::exception& e) {
                diags.push_back(what + ": " + e.what());
            }
        }
        if (!config.plan_schedule.empty() && static_cast<int>(li.vms.size()) >= config.n) {
            try {
                const SearchInputs in = build_search_inputs(config, li.vms, li.profile);
                make_partition_plan(in.constraints, config.n, config.plan_schedule, config.seed,
                                    2000);
            } catch (const std::exception& e) {
                diags.push_back(std::string("partition plan: ") + e.what());
            }
        }
    }

    if (config.query == QueryKind::Q4RiskSurface && config.cpu_model_path.empty())
        diags.push_back("Q4 requires cpu_model");
    if (config.query == QueryKind::Q5Hypothetical) {
        if (!file_ok(config.capacity_profile_path, "capacity_profile")) {
            if (config.capacity_profile_path.empty())
                diags.push_back("Q5 requires capacity_profile");
        } else {
            try {
                CapacityProfile::load(config.capacity_profile_path);
            } catch (const std::exception& e) {
                diags.push_back(e.what());
            }
        }
    }
    if (config.query == QueryKind::Q3Drift &&
        !(config.drift_p >= 0.0 && config.drift_p <= 1.0))
        diags.push_back("drift_p must be in [0, 1]");
    return diags;
}

void write_bundle(const ReportBundle& bundle, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, content] : bundle.files) {
        const std::string path = out_dir + "/" + name;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << content;
    }
}

}  // namespace packgap
