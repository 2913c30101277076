#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "packgap/dpbfr.hpp"
#include "packgap/flows.hpp"
#include "packgap/lgbm_encoder.hpp"
#include "packgap/query.hpp"
#include "packgap/search.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBudget = 4;

void add_allocator_flags(CLI::App* cmd, packgap::AllocatorConfig& cfg, std::string& selection,
                         std::string& pool, std::string& aggregation) {
    cmd->add_option("--oversub", cfg.oversub_fraction, "oversubscription fraction");
    cmd->add_option("--short-buckets", cfg.short_buckets, "buckets for short-lived VMs");
    cmd->add_option("--long-buckets", cfg.long_buckets, "buckets for long-lived VMs");
    cmd->add_option("--selection", selection, "round_robin | seeded_random");
    cmd->add_option("--pool", pool, "fixed | unbounded");
    cmd->add_option("--pool-size", cfg.pool_size, "fixed pool server count");
    cmd->add_option("--server-cpu", cfg.server_cpu, "server CPU capacity (cores)");
    cmd->add_option("--server-mem", cfg.server_mem, "server memory capacity (GB)");
    cmd->add_option("--lifetime-threshold", cfg.lifetime_threshold_epochs,
                    "long-lived threshold in epochs");
    cmd->add_option("--aggregation", aggregation, "score aggregation: mean | max");
    cmd->add_option("--horizon", cfg.horizon, "epochs simulated");
    cmd->add_option("--selection-seed", cfg.selection_seed, "seed for seeded_random selection");
}

void apply_allocator_strings(packgap::AllocatorConfig& cfg, const std::string& selection,
                             const std::string& pool, const std::string& aggregation) {
    using namespace packgap;
    if (selection == "round_robin") cfg.selection_mode = SelectionMode::RoundRobin;
    else if (selection == "seeded_random") cfg.selection_mode = SelectionMode::SeededRandom;
    else if (!selection.empty()) throw CLI::ValidationError("unknown --selection " + selection);
    if (pool == "fixed") cfg.pool_mode = PoolMode::Fixed;
    else if (pool == "unbounded") cfg.pool_mode = PoolMode::Unbounded;
    else if (!pool.empty()) throw CLI::ValidationError("unknown --pool " + pool);
    if (aggregation == "mean") cfg.score_aggregation = ScoreAggregation::Mean;
    else if (aggregation == "max") cfg.score_aggregation = ScoreAggregation::Max;
    else if (!aggregation.empty())
        throw CLI::ValidationError("unknown --aggregation " + aggregation);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace packgap;
    CLI::App app{"adversarial performance analyzer for prediction-driven VM allocation"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a query described by a JSON config");
    std::string run_config;
    std::string run_out;
    run->add_option("--config", run_config, "query config JSON")->required();
    run->add_option("--out", run_out, "output directory override");

    // validate
    auto* validate = app.add_subcommand("validate", "dry-run checks of a query config");
    std::string val_config;
    validate->add_option("--config", val_config, "query config JSON")->required();

    // gen-workload
    auto* gen = app.add_subcommand("gen-workload", "generate a synthetic workload");
    WorkloadGenParams gp;
    std::string gen_out = "workload.json";
    std::string gen_profile_out, gen_model_out;
    double gen_cpu_acc = 0.7, gen_life_acc = -1.0;
    gen->add_option("--out", gen_out, "workload JSON path");
    gen->add_option("--n", gp.n, "number of VMs");
    gen->add_option("--horizon", gp.horizon, "epoch horizon");
    gen->add_option("--seed", gp.seed, "rng seed");
    gen->add_option("--p-cpu", gp.p_cpu_label1, "fraction of high-CPU VMs");
    gen->add_option("--p-lifetime", gp.p_lifetime_label1, "fraction of long-lived VMs");
    gen->add_option("--short-epochs", gp.short_epochs, "short-lived lifetime");
    gen->add_option("--long-epochs", gp.long_epochs, "long-lived lifetime");
    gen->add_option("--lifetime-threshold", gp.lifetime_threshold, "long-lived threshold");
    gen->add_option("--feature-dim", gp.feature_dim, "features per VM (0 = none)");
    gen->add_option("--profile-out", gen_profile_out, "also write the measured profile");
    gen->add_option("--model-out", gen_model_out, "also write a seeded stand-in CPU model");
    gen->add_option("--cpu-accuracy", gen_cpu_acc, "synthesized cpu joint-cell accuracy");
    gen->add_option("--lifetime-accuracy", gen_life_acc, "synthesized lifetime accuracy");

    // encode
    auto* encode_cmd = app.add_subcommand("encode", "emit constraint files");
    std::string enc_kind = "dpbfr";
    std::string enc_workload, enc_scenario, enc_model, enc_out = "constraints.lp";
    AllocatorConfig enc_cfg;
    std::string enc_sel, enc_pool, enc_agg;
    encode_cmd->add_option("--kind", enc_kind, "dpbfr | lgbm");
    encode_cmd->add_option("--workload", enc_workload, "workload JSON (predictions = labels)");
    encode_cmd->add_option("--scenario", enc_scenario, "scenario JSON from a run");
    encode_cmd->add_option("--model", enc_model, "model JSON (lgbm kind)");
    encode_cmd->add_option("--out", enc_out, "output LP path");
    add_allocator_flags(encode_cmd, enc_cfg, enc_sel, enc_pool, enc_agg);

    // flows
    auto* flows_cmd = app.add_subcommand("flows", "hypothetical-model flow LP only");
    std::string flows_profile, flows_out = "flows.json";
    flows_cmd->add_option("--profile", flows_profile, "capacity profile JSON")->required();
    flows_cmd->add_option("--out", flows_out, "solution / certificate JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            QueryConfig config = QueryConfig::load(run_config);
            if (!run_out.empty()) config.out_dir = run_out;
            const auto diags = validate_query(config);
            if (!diags.empty()) {
                for (const auto& d : diags) std::cerr << "config error: " << d << "\n";
                return kExitConfig;
            }
            const ReportBundle bundle = run_query(config);
            write_bundle(bundle, config.out_dir);
            std::cout << bundle.summary << "\n";
            return bundle.exit_code;
        }

        if (validate->parsed()) {
            const QueryConfig config = QueryConfig::load(val_config);
            const auto diags = validate_query(config);
            if (diags.empty()) {
                std::cout << "ok\n";
                return kExitOk;
            }
            for (const auto& d : diags) std::cout << d << "\n";
            return kExitConfig;
        }

        if (gen->parsed()) {
            const auto vms = gen_workload(gp);
            save_workload(vms, gen_out);
            std::optional<Ensemble> model;
            if (!gen_model_out.empty()) {
                if (gp.feature_dim < 1)
                    throw CLI::ValidationError("--model-out needs --feature-dim >= 1");
                std::vector<std::string> names;
                std::vector<std::pair<double, double>> bounds;
                for (int k = 0; k < gp.feature_dim; ++k) {
                    names.push_back("f" + std::to_string(k + 1));
                    bounds.push_back({0.0, 1.0});
                }
                model = gen_random_model(gp.seed, names, bounds);
                save_model(*model, gen_model_out);
            }
            if (!gen_profile_out.empty()) {
                const auto profile = estimate_profile(vms, model ? &*model : nullptr, gen_cpu_acc,
                                                      gen_life_acc, 6, gp.horizon);
                profile.save(gen_profile_out);
            }
            std::cout << "wrote " << vms.size() << " VMs to " << gen_out << "\n";
            return kExitOk;
        }

        if (encode_cmd->parsed()) {
            apply_allocator_strings(enc_cfg, enc_sel, enc_pool, enc_agg);
            std::ofstream out(enc_out);
            if (!out) throw std::runtime_error("cannot write " + enc_out);
            if (enc_kind == "lgbm") {
                if (enc_model.empty()) throw CLI::ValidationError("lgbm encode needs --model");
                const Ensemble model = load_model(enc_model);
                const LgbmConstraintBundle bundle = encode(model);
                out << bundle.system.to_lp_format("ensemble argmax + leaf activation encoding");
            } else if (enc_kind == "dpbfr") {
                Scenario scenario;
                if (!enc_scenario.empty()) {
                    std::ifstream in(enc_scenario);
                    if (!in) throw std::runtime_error("cannot open " + enc_scenario);
                    std::stringstream ss;
                    ss << in.rdbuf();
                    scenario = scenario_from_json(ss.str());
                } else if (!enc_workload.empty()) {
                    for (auto& vm : load_workload(enc_workload, enc_cfg.lifetime_threshold_epochs)) {
                        ScenarioVm sv;
                        sv.preds.cpu = vm.true_cpu_label;
                        sv.preds.lifetime = vm.true_lifetime_label;
                        sv.vm = std::move(vm);
                        scenario.vms.push_back(std::move(sv));
                    }
                } else {
                    throw CLI::ValidationError("dpbfr encode needs --workload or --scenario");
                }
                const DpbfrEncoding enc = encode_constraints(scenario, enc_cfg);
                out << enc.system.to_lp_format("allocator placement feasibility encoding");
            } else {
                throw CLI::ValidationError("unknown --kind " + enc_kind);
            }
            std::cout << "wrote " << enc_out << "\n";
            return kExitOk;
        }

        if (flows_cmd->parsed()) {
            const CapacityProfile profile = CapacityProfile::load(flows_profile);
            const FlowResult result = solve_flows(profile);
            std::ofstream out(flows_out);
            if (!out) throw std::runtime_error("cannot write " + flows_out);
            if (result.feasible) {
                out << result.solution.to_json();
                std::cout << "feasible\n";
                return kExitOk;
            }
            out << result.certificate.to_json();
            std::cout << "infeasible\n";
            return kExitInfeasible;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        const std::string what = e.what();
        if (what.find("infeasible") != std::string::npos) return kExitInfeasible;
        if (what.find("budget") != std::string::npos) return kExitBudget;
        return kExitConfig;
    }
    return kExitOk;
}
