#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "packgap/bounds.hpp"
#include "packgap/cegar.hpp"
#include "packgap/dpbfr.hpp"
#include "packgap/flows.hpp"
#include "packgap/lgbm_encoder.hpp"
#include "packgap/models.hpp"
#include "packgap/query.hpp"
#include "packgap/risk.hpp"
#include "packgap/search.hpp"
#include "packgap/workload.hpp"

namespace py = pybind11;
using namespace packgap;

namespace {

Scenario scenario_from_workload(const std::vector<VmRequest>& vms, bool predict_truth) {
    Scenario s;
    for (const auto& vm : vms) {
        ScenarioVm sv;
        sv.vm = vm;
        if (predict_truth) {
            sv.preds.cpu = vm.true_cpu_label;
            sv.preds.lifetime = vm.true_lifetime_label;
        }
        s.vms.push_back(std::move(sv));
    }
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "adversarial performance analysis for prediction-driven VM allocation";

    py::class_<VmRequest>(m, "VmRequest")
        .def(py::init<>())
        .def_readwrite("id", &VmRequest::id)
        .def_readwrite("req_cpu", &VmRequest::req_cpu)
        .def_readwrite("req_mem", &VmRequest::req_mem)
        .def_readwrite("arrival", &VmRequest::arrival)
        .def_readwrite("true_cpu_label", &VmRequest::true_cpu_label)
        .def_readwrite("true_mem_decile", &VmRequest::true_mem_decile)
        .def_readwrite("true_lifetime_epochs", &VmRequest::true_lifetime_epochs)
        .def_readwrite("true_lifetime_label", &VmRequest::true_lifetime_label)
        .def_readwrite("features", &VmRequest::features);

    py::class_<VmPredictions>(m, "VmPredictions")
        .def(py::init<>())
        .def_readwrite("cpu", &VmPredictions::cpu)
        .def_readwrite("mem_decile", &VmPredictions::mem_decile)
        .def_readwrite("lifetime", &VmPredictions::lifetime);

    py::class_<ScenarioVm>(m, "ScenarioVm")
        .def(py::init<>())
        .def_readwrite("vm", &ScenarioVm::vm)
        .def_readwrite("preds", &ScenarioVm::preds);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("vms", &Scenario::vms)
        .def("with_ground_truth_predictions", &Scenario::with_ground_truth_predictions);

    py::enum_<SelectionMode>(m, "SelectionMode")
        .value("ROUND_ROBIN", SelectionMode::RoundRobin)
        .value("SEEDED_RANDOM", SelectionMode::SeededRandom);
    py::enum_<PoolMode>(m, "PoolMode")
        .value("FIXED", PoolMode::Fixed)
        .value("UNBOUNDED", PoolMode::Unbounded);
    py::enum_<ScoreAggregation>(m, "ScoreAggregation")
        .value("MEAN", ScoreAggregation::Mean)
        .value("MAX", ScoreAggregation::Max);

    py::class_<AllocatorConfig>(m, "AllocatorConfig")
        .def(py::init<>())
        .def_readwrite("oversub_fraction", &AllocatorConfig::oversub_fraction)
        .def_readwrite("short_buckets", &AllocatorConfig::short_buckets)
        .def_readwrite("long_buckets", &AllocatorConfig::long_buckets)
        .def_readwrite("selection_mode", &AllocatorConfig::selection_mode)
        .def_readwrite("pool_mode", &AllocatorConfig::pool_mode)
        .def_readwrite("pool_size", &AllocatorConfig::pool_size)
        .def_readwrite("server_cpu", &AllocatorConfig::server_cpu)
        .def_readwrite("server_mem", &AllocatorConfig::server_mem)
        .def_readwrite("lifetime_threshold_epochs", &AllocatorConfig::lifetime_threshold_epochs)
        .def_readwrite("score_aggregation", &AllocatorConfig::score_aggregation)
        .def_readwrite("horizon", &AllocatorConfig::horizon)
        .def_readwrite("selection_seed", &AllocatorConfig::selection_seed);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("over_utilized_per_epoch", &MetricsReport::over_utilized_per_epoch)
        .def_readonly("risk_of_migration", &MetricsReport::risk_of_migration)
        .def_readonly("servers_used_per_epoch", &MetricsReport::servers_used_per_epoch)
        .def_readonly("horizon_epochs", &MetricsReport::horizon_epochs);

    py::class_<VmPlacement>(m, "VmPlacement")
        .def_readonly("vm_id", &VmPlacement::vm_id)
        .def_readonly("chosen_server", &VmPlacement::chosen_server)
        .def_readonly("rejected", &VmPlacement::rejected)
        .def_readonly("candidate_set", &VmPlacement::candidate_set)
        .def_readonly("min_bucket", &VmPlacement::min_bucket);

    py::class_<PlacementTrace>(m, "PlacementTrace")
        .def_readonly("placements", &PlacementTrace::placements)
        .def_readonly("rejection_count", &PlacementTrace::rejection_count);

    py::class_<SimulationResult>(m, "SimulationResult")
        .def_readonly("trace", &SimulationResult::trace)
        .def_readonly("metrics", &SimulationResult::metrics);

    m.def("simulate",
          py::overload_cast<const Scenario&, const AllocatorConfig&>(&simulate),
          py::arg("scenario"), py::arg("config"));
    m.def("scenario_from_workload", &scenario_from_workload, py::arg("vms"),
          py::arg("predict_truth") = true);
    m.def("load_workload", &load_workload, py::arg("path"),
          py::arg("lifetime_threshold_epochs") = 6);
    m.def("save_workload", &save_workload);
    m.def("risk_of_migration", &risk_of_migration, py::arg("per_epoch_counts"),
          py::arg("normalizer") = std::nullopt);

    // models
    py::class_<Prediction>(m, "Prediction")
        .def_readonly("class_index", &Prediction::class_index)
        .def_readonly("raw_scores", &Prediction::raw_scores);
    py::class_<Ensemble>(m, "Ensemble")
        .def_readonly("feature_names", &Ensemble::feature_names)
        .def_readonly("classes", &Ensemble::classes)
        .def_readonly("feature_bounds", &Ensemble::feature_bounds);
    m.def("load_model", &load_model);
    m.def("save_model", &save_model);
    m.def("class_scores", &class_scores);
    m.def("predict", [](const Ensemble& model, const std::vector<double>& x) {
        return packgap::predict(model, x);
    });

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def(py::init<>())
        .def_readwrite("features", &LabeledDataset::features)
        .def_readwrite("labels", &LabeledDataset::labels)
        .def_readwrite("num_classes", &LabeledDataset::num_classes);
    py::class_<ReferenceModel>(m, "ReferenceModel")
        .def("predict", &ReferenceModel::predict)
        .def("size", &ReferenceModel::size);
    m.def("build_reference_model", &build_reference_model);
    m.def("perturb_labels", &perturb_labels);

    // finite-sample bounds
    py::class_<CountBound>(m, "CountBound")
        .def_readonly("n", &CountBound::n)
        .def_readonly("lower", &CountBound::lower)
        .def_readonly("upper", &CountBound::upper)
        .def_readonly("p", &CountBound::p)
        .def_readonly("z", &CountBound::z)
        .def("contains", &CountBound::contains);
    m.def("min_sequence_length", &min_sequence_length);
    m.def("count_bounds", &count_bounds, py::arg("p"), py::arg("n"), py::arg("z") = 3.89,
          py::arg("property_id") = "");
    m.def("partition_bounds", &partition_bounds, py::arg("bound"), py::arg("partition_sizes"),
          py::arg("rng_seed"), py::arg("trials") = 10000);
    m.def("monte_carlo_coverage", &monte_carlo_coverage, py::arg("p"), py::arg("n"),
          py::arg("bound"), py::arg("trials"), py::arg("rng_seed") = 12345);

    // flows
    m.def("solve_flows_json", [](const std::string& profile_json) {
        const CapacityProfile profile = CapacityProfile::from_json(profile_json);
        const FlowResult r = solve_flows(profile);
        return py::make_tuple(r.feasible,
                              r.feasible ? r.solution.to_json() : r.certificate.to_json());
    });
    m.def("flow_path_counts", [](const std::string& profile_json, int n, std::uint64_t seed) {
        const CapacityProfile profile = CapacityProfile::from_json(profile_json);
        const FlowResult r = solve_flows(profile);
        if (!r.feasible) throw std::invalid_argument("profile infeasible");
        const FlowConstraints fc = flows_to_constraints(r.solution, n, seed);
        return fc.path_counts;
    });

    // encoders
    m.def("encode_allocator_lp", [](const Scenario& s, const AllocatorConfig& cfg) {
        return encode_constraints(s, cfg).system.to_lp_format("allocator feasibility");
    });
    m.def("verify_allocator_trace", [](const Scenario& s, const AllocatorConfig& cfg) {
        const auto enc = encode_constraints(s, cfg);
        const auto sim = simulate(s, cfg);
        const auto violations = verify_trace(enc, sim.trace, cfg);
        std::vector<std::string> out;
        for (const auto& v : violations) out.push_back(v.constraint);
        return out;
    });
    m.def("encode_model_lp", [](const Ensemble& model) {
        return encode(model).system.to_lp_format("ensemble inference");
    });
    m.def("verify_model_inference", [](const Ensemble& model, const std::vector<double>& x) {
        const auto bundle = encode(model);
        const auto violations = verify_inference(bundle, model, x);
        std::vector<std::string> out;
        for (const auto& v : violations) out.push_back(v.constraint);
        return out;
    });

    // cegar + risk
    py::enum_<FindStatus>(m, "FindStatus")
        .value("POINT", FindStatus::Point)
        .value("PROVEN_UNSAT", FindStatus::ProvenUnsat)
        .value("BUDGET_EXHAUSTED", FindStatus::BudgetExhausted);
    m.def("find_features",
          [](const std::vector<std::pair<const Ensemble*, int>>& targets, int depth,
             int max_rounds) {
              std::vector<ModelTarget> ts;
              for (const auto& [model, cls] : targets) ts.push_back({model, cls});
              const FindResult r = find_features(ts, depth, max_rounds);
              return py::make_tuple(r.status, r.point, r.verified_classes);
          },
          py::arg("targets"), py::arg("initial_depth") = 1, py::arg("max_rounds") = 64);
    m.def("region_box", [](const Ensemble& model, const std::vector<double>& point) {
        const Region r = region_of({&model}, point);
        return r.box.iv;
    });

    // search
    py::enum_<GapMetric>(m, "GapMetric")
        .value("RISK_OF_MIGRATION", GapMetric::RiskOfMigration)
        .value("MEAN_SERVERS_USED", GapMetric::MeanServersUsed);
    py::enum_<ModelFreedom>(m, "ModelFreedom")
        .value("PINNED", ModelFreedom::Pinned)
        .value("FREE", ModelFreedom::Free);
    py::class_<SearchTemplate>(m, "SearchTemplate")
        .def(py::init<>())
        .def_readwrite("base", &SearchTemplate::base)
        .def_readwrite("cfg", &SearchTemplate::cfg)
        .def_readwrite("metric", &SearchTemplate::metric)
        .def_readwrite("labels_free", &SearchTemplate::labels_free)
        .def_readwrite("lifetime_labels_free", &SearchTemplate::lifetime_labels_free)
        .def_readwrite("arrivals_free", &SearchTemplate::arrivals_free)
        .def_readwrite("cpu", &SearchTemplate::cpu)
        .def_readwrite("lifetime", &SearchTemplate::lifetime)
        .def_readwrite("memory", &SearchTemplate::memory)
        .def_readwrite("short_epochs", &SearchTemplate::short_epochs)
        .def_readwrite("long_epochs", &SearchTemplate::long_epochs);
    py::class_<ScenarioProperty> prop(m, "ScenarioProperty");
    py::enum_<ScenarioProperty::Kind>(prop, "Kind")
        .value("CPU_CORRECT", ScenarioProperty::Kind::CpuCorrect)
        .value("CPU_CELL", ScenarioProperty::Kind::CpuCell)
        .value("CPU_LABEL", ScenarioProperty::Kind::CpuLabel)
        .value("LIFETIME_CORRECT", ScenarioProperty::Kind::LifetimeCorrect)
        .value("LIFETIME_CELL", ScenarioProperty::Kind::LifetimeCell)
        .value("LIFETIME_LABEL", ScenarioProperty::Kind::LifetimeLabel)
        .value("MEM_CORRECT", ScenarioProperty::Kind::MemCorrect);
    prop.def(py::init<>())
        .def_readwrite("kind", &ScenarioProperty::kind)
        .def_readwrite("label", &ScenarioProperty::label)
        .def_readwrite("pred", &ScenarioProperty::pred);
    py::class_<ScenarioConstraint>(m, "ScenarioConstraint")
        .def(py::init<>())
        .def_readwrite("property", &ScenarioConstraint::property)
        .def_readwrite("bound", &ScenarioConstraint::bound)
        .def_readwrite("begin", &ScenarioConstraint::begin)
        .def_readwrite("end", &ScenarioConstraint::end);
    py::class_<SearchBudget>(m, "SearchBudget")
        .def(py::init<>())
        .def_readwrite("iterations", &SearchBudget::iterations)
        .def_readwrite("seed", &SearchBudget::seed);
    py::class_<GapTracePoint>(m, "GapTracePoint")
        .def_readonly("iteration", &GapTracePoint::iteration)
        .def_readonly("gap", &GapTracePoint::gap);
    py::class_<SearchResult>(m, "SearchResult")
        .def_readonly("scenario", &SearchResult::scenario)
        .def_readonly("gap", &SearchResult::gap)
        .def_readonly("trace", &SearchResult::trace)
        .def_readonly("evaluations", &SearchResult::evaluations);
    m.def("gap", &gap);
    m.def("gap_unchecked", &gap_unchecked);
    m.def("exhaustive_search", &exhaustive_search, py::arg("template"), py::arg("constraints"),
          py::arg("space_cap") = 1000000L);
    m.def("anneal_search", &anneal_search);
    m.def("random_search", &random_search);
    m.def("make_partition_plan", &make_partition_plan, py::arg("global_constraints"),
          py::arg("n"), py::arg("schedule"), py::arg("seed"), py::arg("trials") = 10000);
    py::class_<PartitionPlan>(m, "PartitionPlan").def_readonly("schedule", &PartitionPlan::schedule);
    m.def("partitioned_search", &partitioned_search);
    m.def("scenario_to_json", &scenario_to_json);
    m.def("scenario_from_json", &scenario_from_json);

    // query runner
    m.def("run_query_json", [](const std::string& config_json) {
        const QueryConfig config = QueryConfig::from_json(config_json);
        const ReportBundle bundle = run_query(config);
        return py::make_tuple(bundle.exit_code, bundle.files);
    });
    m.def("validate_query_json", [](const std::string& config_json) {
        return validate_query(QueryConfig::from_json(config_json));
    });
    m.def("gen_workload_json", [](int n, int horizon, std::uint64_t seed, int feature_dim) {
        WorkloadGenParams p;
        p.n = n;
        p.horizon = horizon;
        p.seed = seed;
        p.feature_dim = feature_dim;
        return workload_to_json(gen_workload(p));
    }, py::arg("n"), py::arg("horizon") = 36, py::arg("seed") = 1, py::arg("feature_dim") = 3);
}
