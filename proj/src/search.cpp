#include "packgap/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace packgap {

using nlohmann::json;

void SearchTemplate::validate() const {
    cfg.validate();
    if (!(short_epochs < cfg.lifetime_threshold_epochs &&
          cfg.lifetime_threshold_epochs <= long_epochs))
        throw std::invalid_argument(
            "template: need short_epochs < lifetime threshold <= long_epochs");
    if (!flow_pins.empty() && flow_pins.size() != base.vms.size())
        throw std::invalid_argument("template: flow pins must cover every VM");
    for (const auto& sv : base.vms) sv.vm.validate(cfg.lifetime_threshold_epochs);
}

bool ScenarioProperty::matches(const ScenarioVm& sv) const {
    switch (kind) {
        case Kind::CpuCorrect: return sv.preds.cpu == sv.vm.true_cpu_label;
        case Kind::CpuCell: return sv.vm.true_cpu_label == label && sv.preds.cpu == pred;
        case Kind::CpuLabel: return sv.vm.true_cpu_label == label;
        case Kind::LifetimeCorrect: return sv.preds.lifetime == sv.vm.true_lifetime_label;
        case Kind::LifetimeCell:
            return sv.vm.true_lifetime_label == label && sv.preds.lifetime == pred;
        case Kind::LifetimeLabel: return sv.vm.true_lifetime_label == label;
        case Kind::MemCorrect:
            return sv.preds.mem_decile && *sv.preds.mem_decile == sv.vm.true_mem_decile;
    }
    return false;
}

std::string ScenarioProperty::id() const {
    switch (kind) {
        case Kind::CpuCorrect: return "cpu_correct";
        case Kind::CpuCell:
            return "cpu_cell_" + std::to_string(label) + "_" + std::to_string(pred);
        case Kind::CpuLabel: return "cpu_label_" + std::to_string(label);
        case Kind::LifetimeCorrect: return "lifetime_correct";
        case Kind::LifetimeCell:
            return "lifetime_cell_" + std::to_string(label) + "_" + std::to_string(pred);
        case Kind::LifetimeLabel: return "lifetime_label_" + std::to_string(label);
        case Kind::MemCorrect: return "mem_correct";
    }
    return "?";
}

int count_property(const Scenario& s, const ScenarioProperty& p, int begin, int end) {
    if (end < 0) end = static_cast<int>(s.vms.size());
    int c = 0;
    for (int i = begin; i < end; ++i) c += p.matches(s.vms[i]) ? 1 : 0;
    return c;
}

std::vector<std::string> check_constraints(const Scenario& s, const SearchTemplate& tpl,
                                           const std::vector<ScenarioConstraint>& constraints) {
    std::vector<std::string> out;
    for (const auto& c : constraints) {
        const int count = count_property(s, c.property, c.begin, c.end);
        if (count < c.bound.lower || count > c.bound.upper)
            out.push_back(c.property.id() + "[" + std::to_string(c.begin) + "," +
                          (c.end < 0 ? "N" : std::to_string(c.end)) + ")=" +
                          std::to_string(count) + " outside [" + std::to_string(c.bound.lower) +
                          "," + std::to_string(c.bound.upper) + "]");
    }
    for (std::size_t i = 0; i < tpl.flow_pins.size(); ++i) {
        const FlowPin& pin = tpl.flow_pins[i];
        const ScenarioVm& sv = s.vms[i];
        if (pin.forced_cpu_label && sv.vm.true_cpu_label != *pin.forced_cpu_label)
            out.push_back("flow_pin_label_vm" + std::to_string(i));
        if (sv.preds.cpu != sv.vm.true_cpu_label + pin.pred_offset)
            out.push_back("flow_pin_pred_vm" + std::to_string(i));
    }
    return out;
}

namespace {

double metric_value(const MetricsReport& m, GapMetric metric) {
    if (metric == GapMetric::RiskOfMigration) return m.risk_of_migration;
    double sum = 0.0;
    for (int v : m.servers_used_per_epoch) sum += v;
    return m.servers_used_per_epoch.empty()
               ? 0.0
               : sum / static_cast<double>(m.servers_used_per_epoch.size());
}

// gap over the first `prefix` VMs in list order (the carried-forward state of
// earlier partitions is implied by re-simulating the prefix)
double prefix_gap(const Scenario& s, const SearchTemplate& tpl, int prefix) {
    Scenario head;
    head.vms.assign(s.vms.begin(), s.vms.begin() + prefix);
    const SimulationResult system = simulate(head, tpl.cfg);
    const SimulationResult baseline = simulate(head.with_ground_truth_predictions(), tpl.cfg);
    return metric_value(system.metrics, tpl.metric) - metric_value(baseline.metrics, tpl.metric);
}

}  // namespace

double gap_unchecked(const Scenario& s, const SearchTemplate& tpl) {
    if (s.vms.empty()) return 0.0;
    const SimulationResult system = simulate(s, tpl.cfg);
    const SimulationResult baseline = simulate(s.with_ground_truth_predictions(), tpl.cfg);
    return metric_value(system.metrics, tpl.metric) - metric_value(baseline.metrics, tpl.metric);
}

double gap(const Scenario& s, const SearchTemplate& tpl,
           const std::vector<ScenarioConstraint>& constraints) {
    const auto violations = check_constraints(s, tpl, constraints);
    if (!violations.empty()) {
        std::string msg = "gap: scenario violates constraints:";
        for (const auto& v : violations) msg += " " + v;
        throw std::invalid_argument(msg);
    }
    return gap_unchecked(s, tpl);
}

namespace {

using Cell = std::pair<int, int>;  // (label, pred)

std::vector<Cell> cpu_options(const SearchTemplate& tpl, int i) {
    const ScenarioVm& sv = tpl.base.vms[i];
    if (!tpl.flow_pins.empty()) {
        const FlowPin& pin = tpl.flow_pins[i];
        if (pin.forced_cpu_label)
            return {{*pin.forced_cpu_label, *pin.forced_cpu_label + pin.pred_offset}};
        if (!tpl.labels_free) return {{sv.vm.true_cpu_label, sv.vm.true_cpu_label}};
        return {{0, 0}, {1, 1}};  // agreement path: prediction follows the label
    }
    std::vector<int> labels = tpl.labels_free ? std::vector<int>{0, 1}
                                              : std::vector<int>{sv.vm.true_cpu_label};
    std::vector<Cell> out;
    for (int l : labels) {
        if (tpl.cpu == ModelFreedom::Free) {
            out.push_back({l, 0});
            out.push_back({l, 1});
        } else {
            out.push_back({l, l});
        }
    }
    return out;
}

std::vector<Cell> lifetime_options(const SearchTemplate& tpl, int i) {
    const ScenarioVm& sv = tpl.base.vms[i];
    const bool free_labels = tpl.labels_free && tpl.lifetime_labels_free;
    std::vector<int> labels = free_labels ? std::vector<int>{0, 1}
                                          : std::vector<int>{sv.vm.true_lifetime_label};
    std::vector<Cell> out;
    for (int l : labels) {
        if (tpl.lifetime == ModelFreedom::Free) {
            out.push_back({l, 0});
            out.push_back({l, 1});
        } else {
            out.push_back({l, l});
        }
    }
    return out;
}

bool memory_in_play(const SearchTemplate& tpl, int i) {
    return tpl.base.vms[i].preds.mem_decile.has_value();
}

std::vector<Cell> memory_options(const SearchTemplate& tpl, int i) {
    const ScenarioVm& sv = tpl.base.vms[i];
    if (!memory_in_play(tpl, i)) return {{sv.vm.true_mem_decile, 0}};  // pred unused
    std::vector<int> labels;
    if (tpl.labels_free)
        for (int d = 1; d <= 10; ++d) labels.push_back(d);
    else
        labels.push_back(sv.vm.true_mem_decile);
    std::vector<Cell> out;
    for (int l : labels) {
        if (tpl.memory == ModelFreedom::Free) {
            for (int d = 1; d <= 10; ++d) out.push_back({l, d});
        } else {
            out.push_back({l, l});
        }
    }
    return out;
}

void apply_cpu(ScenarioVm& sv, Cell c) {
    sv.vm.true_cpu_label = c.first;
    sv.preds.cpu = c.second;
}

void apply_lifetime(ScenarioVm& sv, Cell c, const SearchTemplate& tpl) {
    sv.vm.true_lifetime_label = c.first;
    sv.vm.true_lifetime_epochs = c.first ? tpl.long_epochs : tpl.short_epochs;
    sv.preds.lifetime = c.second;
}

void apply_memory(ScenarioVm& sv, Cell c, const SearchTemplate& tpl, int i) {
    if (!memory_in_play(tpl, i)) return;
    sv.vm.true_mem_decile = c.first;
    sv.preds.mem_decile = c.second;
}

Cell current_cpu(const ScenarioVm& sv) { return {sv.vm.true_cpu_label, sv.preds.cpu}; }
Cell current_lifetime(const ScenarioVm& sv) {
    return {sv.vm.true_lifetime_label, sv.preds.lifetime};
}
Cell current_memory(const ScenarioVm& sv) {
    return {sv.vm.true_mem_decile, sv.preds.mem_decile ? *sv.preds.mem_decile : 0};
}

// incremental count bookkeeping over an active constraint list
struct Tracker {
    const std::vector<ScenarioConstraint>* cons = nullptr;
    std::vector<int> counts;

    void init(const Scenario& s, const std::vector<ScenarioConstraint>& constraints) {
        cons = &constraints;
        counts.clear();
        for (const auto& c : constraints)
            counts.push_back(count_property(s, c.property, c.begin, c.end));
    }

    bool in_range(const ScenarioConstraint& c, int i, int n) const {
        const int end = c.end < 0 ? n : c.end;
        return i >= c.begin && i < end;
    }

    // whether replacing position i with next keeps every bound satisfied
    bool flip_feasible(const Scenario& s, int i, const ScenarioVm& next) const {
        for (std::size_t k = 0; k < cons->size(); ++k) {
            const auto& c = (*cons)[k];
            if (!in_range(c, i, static_cast<int>(s.vms.size()))) continue;
            const int delta = (c.property.matches(next) ? 1 : 0) -
                              (c.property.matches(s.vms[i]) ? 1 : 0);
            const int count = counts[k] + delta;
            if (count < c.bound.lower || count > c.bound.upper) return false;
        }
        return true;
    }

    void apply_flip(const Scenario& s, int i, const ScenarioVm& next) {
        for (std::size_t k = 0; k < cons->size(); ++k) {
            const auto& c = (*cons)[k];
            if (!in_range(c, i, static_cast<int>(s.vms.size()))) continue;
            counts[k] += (c.property.matches(next) ? 1 : 0) -
                         (c.property.matches(s.vms[i]) ? 1 : 0);
        }
    }
};

bool cell_feasible_count_ok(const CountBound& b, int count) {
    return count >= b.lower && count <= b.upper;
}

// uniform draw over each VM's allowed cells; the repair pass then pulls the
// counts into their bounds
Scenario sample_assignment(const SearchTemplate& tpl, Rng& rng) {
    Scenario s = tpl.base;
    for (int i = 0; i < static_cast<int>(s.vms.size()); ++i) {
        const auto co = cpu_options(tpl, i);
        apply_cpu(s.vms[i], co[rng.next_below(co.size())]);
        const auto lo = lifetime_options(tpl, i);
        apply_lifetime(s.vms[i], lo[rng.next_below(lo.size())], tpl);
        const auto mo = memory_options(tpl, i);
        apply_memory(s.vms[i], mo[rng.next_below(mo.size())], tpl, i);
    }
    return s;
}

}  // namespace

Scenario make_feasible(const SearchTemplate& tpl,
                       const std::vector<ScenarioConstraint>& constraints, Rng& rng,
                       std::optional<Scenario> start) {
    Scenario s = start ? std::move(*start) : tpl.base;
    const int n = static_cast<int>(s.vms.size());

    // canonicalize pinned models: predictions follow the ground truth
    for (int i = 0; i < n; ++i) {
        ScenarioVm& sv = s.vms[i];
        if (!tpl.flow_pins.empty()) {
            const FlowPin& pin = tpl.flow_pins[i];
            if (pin.forced_cpu_label) sv.vm.true_cpu_label = *pin.forced_cpu_label;
            sv.preds.cpu = sv.vm.true_cpu_label + pin.pred_offset;
        } else if (tpl.cpu == ModelFreedom::Pinned) {
            sv.preds.cpu = sv.vm.true_cpu_label;
        }
        if (tpl.lifetime == ModelFreedom::Pinned) sv.preds.lifetime = sv.vm.true_lifetime_label;
        if (tpl.memory == ModelFreedom::Pinned && sv.preds.mem_decile)
            sv.preds.mem_decile = sv.vm.true_mem_decile;
    }

    auto counts = [&](const ScenarioConstraint& c) {
        return count_property(s, c.property, c.begin, c.end);
    };

    const long max_steps = 100 + 20L * n * static_cast<long>(constraints.size() + 1);
    for (long step = 0; step < max_steps; ++step) {
        int violated = -1;
        int need = 0;  // +1 raise count, -1 lower count
        for (std::size_t k = 0; k < constraints.size(); ++k) {
            const int c = counts(constraints[k]);
            if (c < constraints[k].bound.lower) {
                violated = static_cast<int>(k);
                need = +1;
                break;
            }
            if (c > constraints[k].bound.upper) {
                violated = static_cast<int>(k);
                need = -1;
                break;
            }
        }
        if (violated < 0) return s;

        const ScenarioConstraint& vc = constraints[violated];
        const int end = vc.end < 0 ? n : vc.end;
        // candidate flips that move the violated count the right way; prefer
        // ones that leave every satisfied bound satisfied
        struct Candidate {
            int vm;
            ScenarioVm next;
            bool clean;
        };
        std::vector<Candidate> cands;
        for (int i = vc.begin; i < end; ++i) {
            const bool now = vc.property.matches(s.vms[i]);
            if ((need > 0 && now) || (need < 0 && !now)) continue;
            auto consider = [&](const ScenarioVm& next) {
                if (vc.property.matches(next) == now) return;
                bool clean = true;
                for (std::size_t k = 0; k < constraints.size(); ++k) {
                    if (static_cast<int>(k) == violated) continue;
                    const auto& c = constraints[k];
                    const int ce = c.end < 0 ? n : c.end;
                    if (i < c.begin || i >= ce) continue;
                    const int delta = (c.property.matches(next) ? 1 : 0) -
                                      (c.property.matches(s.vms[i]) ? 1 : 0);
                    const int cnt = counts(c) + delta;
                    if (!cell_feasible_count_ok(c.bound, cnt)) clean = false;
                }
                cands.push_back({i, next, clean});
            };
            for (Cell c : cpu_options(tpl, i)) {
                ScenarioVm next = s.vms[i];
                apply_cpu(next, c);
                consider(next);
            }
            for (Cell c : lifetime_options(tpl, i)) {
                ScenarioVm next = s.vms[i];
                apply_lifetime(next, c, tpl);
                consider(next);
            }
            for (Cell c : memory_options(tpl, i)) {
                ScenarioVm next = s.vms[i];
                apply_memory(next, c, tpl, i);
                consider(next);
            }
        }
        if (cands.empty())
            throw std::runtime_error("make_feasible: no feasible point after bounded repair (" +
                                     vc.property.id() + " unreachable)");
        std::vector<std::size_t> clean_idx;
        for (std::size_t k = 0; k < cands.size(); ++k)
            if (cands[k].clean) clean_idx.push_back(k);
        const std::size_t pick = clean_idx.empty()
                                     ? rng.next_below(cands.size())
                                     : clean_idx[rng.next_below(clean_idx.size())];
        s.vms[cands[pick].vm] = cands[pick].next;
    }
    throw std::runtime_error("make_feasible: no feasible point after bounded repair attempts");
}

long exhaustive_space_size(const SearchTemplate& tpl, long cap) {
    long space = 1;
    for (int i = 0; i < static_cast<int>(tpl.base.vms.size()); ++i) {
        const long per = static_cast<long>(cpu_options(tpl, i).size()) *
                         static_cast<long>(lifetime_options(tpl, i).size()) *
                         static_cast<long>(memory_options(tpl, i).size());
        if (space > cap / std::max(per, 1L) + 1) return cap + 1;
        space *= per;
        if (space > cap) return space;
    }
    return space;
}

SearchResult exhaustive_search(const SearchTemplate& tpl,
                               const std::vector<ScenarioConstraint>& constraints,
                               long space_cap) {
    tpl.validate();
    const int n = static_cast<int>(tpl.base.vms.size());
    const long space = exhaustive_space_size(tpl, space_cap);
    if (space > space_cap)
        throw std::invalid_argument("exhaustive_search: assignment space of " +
                                    std::to_string(space) + " exceeds the cap of " +
                                    std::to_string(space_cap));

    std::vector<std::vector<Cell>> cpu(n), life(n), mem(n);
    for (int i = 0; i < n; ++i) {
        cpu[i] = cpu_options(tpl, i);
        life[i] = lifetime_options(tpl, i);
        mem[i] = memory_options(tpl, i);
    }

    SearchResult best;
    best.gap = -std::numeric_limits<double>::infinity();
    Scenario s = tpl.base;
    std::vector<std::size_t> odo(3 * n, 0);
    long visited = 0;
    while (true) {
        for (int i = 0; i < n; ++i) {
            apply_cpu(s.vms[i], cpu[i][odo[3 * i]]);
            apply_lifetime(s.vms[i], life[i][odo[3 * i + 1]], tpl);
            apply_memory(s.vms[i], mem[i][odo[3 * i + 2]], tpl, i);
        }
        visited += 1;
        if (check_constraints(s, tpl, constraints).empty()) {
            const double g = gap_unchecked(s, tpl);
            if (g > best.gap) {
                best.gap = g;
                best.scenario = s;
                best.trace.push_back({visited, g});
            }
        }
        // odometer
        std::size_t pos = odo.size();
        bool done = true;
        while (pos-- > 0) {
            const int i = static_cast<int>(pos / 3);
            const std::size_t radix = pos % 3 == 0   ? cpu[i].size()
                                      : pos % 3 == 1 ? life[i].size()
                                                     : mem[i].size();
            if (++odo[pos] < radix) {
                done = false;
                break;
            }
            odo[pos] = 0;
        }
        if (done || n == 0) break;
    }
    best.evaluations = visited;
    if (best.gap == -std::numeric_limits<double>::infinity()) {
        if (n == 0) {
            best.gap = 0.0;
            best.scenario = tpl.base;
            return best;
        }
        throw std::runtime_error("exhaustive_search: no assignment satisfies the constraints");
    }
    return best;
}

namespace {

enum class MoveKind { CpuSwap, CpuFlip, LifeSwap, LifeFlip, MemFlip, ArrSwap };

struct MoveSet {
    std::vector<MoveKind> kinds;
};

MoveSet enabled_moves(const SearchTemplate& tpl, int range_size) {
    MoveSet ms;
    const bool cpu_varies = tpl.cpu == ModelFreedom::Free || tpl.labels_free;
    if (cpu_varies) {
        ms.kinds.push_back(MoveKind::CpuFlip);
        if (range_size >= 2 && tpl.flow_pins.empty()) ms.kinds.push_back(MoveKind::CpuSwap);
    }
    if (tpl.lifetime == ModelFreedom::Free || (tpl.labels_free && tpl.lifetime_labels_free)) {
        ms.kinds.push_back(MoveKind::LifeFlip);
        if (range_size >= 2) ms.kinds.push_back(MoveKind::LifeSwap);
    }
    if (tpl.memory == ModelFreedom::Free || tpl.labels_free)
        ms.kinds.push_back(MoveKind::MemFlip);
    if (tpl.arrivals_free && range_size >= 2) ms.kinds.push_back(MoveKind::ArrSwap);
    return ms;
}

struct Undo {
    int i = -1, j = -1;
    ScenarioVm saved_i, saved_j;
};

// proposes and applies one feasibility-preserving move; returns false when the
// proposal was inapplicable or would leave the bounds
bool propose(Scenario& s, const SearchTemplate& tpl, Tracker& tracker, const MoveSet& ms,
             int begin, int end, Rng& rng, Undo& undo) {
    if (ms.kinds.empty() || end - begin < 1) return false;
    const MoveKind kind = ms.kinds[rng.next_below(ms.kinds.size())];
    const int n = end - begin;
    const int i = begin + static_cast<int>(rng.next_below(n));

    auto do_flip = [&](auto&& options, auto&& current, auto&& apply) {
        auto opts = options(i);
        if (opts.size() < 2) return false;
        const Cell cur = current(s.vms[i]);
        Cell next = cur;
        for (int attempt = 0; attempt < 8 && next == cur; ++attempt)
            next = opts[rng.next_below(opts.size())];
        if (next == cur) return false;
        ScenarioVm cand = s.vms[i];
        apply(cand, next);
        if (!tracker.flip_feasible(s, i, cand)) return false;
        undo = {i, -1, s.vms[i], {}};
        tracker.apply_flip(s, i, cand);
        s.vms[i] = cand;
        return true;
    };

    auto do_swap = [&](auto&& swap_fields) {
        if (n < 2) return false;
        int j = begin + static_cast<int>(rng.next_below(n));
        if (j == i) j = begin + (j - begin + 1) % n;
        undo = {i, j, s.vms[i], s.vms[j]};
        swap_fields(s.vms[i], s.vms[j]);
        return true;
    };

    switch (kind) {
        case MoveKind::CpuFlip:
            return do_flip([&](int v) { return cpu_options(tpl, v); }, current_cpu,
                           [&](ScenarioVm& sv, Cell c) { apply_cpu(sv, c); });
        case MoveKind::LifeFlip:
            return do_flip([&](int v) { return lifetime_options(tpl, v); }, current_lifetime,
                           [&](ScenarioVm& sv, Cell c) { apply_lifetime(sv, c, tpl); });
        case MoveKind::MemFlip: {
            if (!memory_in_play(tpl, i)) return false;
            return do_flip([&](int v) { return memory_options(tpl, v); }, current_memory,
                           [&](ScenarioVm& sv, Cell c) { apply_memory(sv, c, tpl, i); });
        }
        case MoveKind::CpuSwap:
            return do_swap([](ScenarioVm& a, ScenarioVm& b) {
                std::swap(a.vm.true_cpu_label, b.vm.true_cpu_label);
                std::swap(a.preds.cpu, b.preds.cpu);
            });
        case MoveKind::LifeSwap:
            return do_swap([](ScenarioVm& a, ScenarioVm& b) {
                std::swap(a.vm.true_lifetime_label, b.vm.true_lifetime_label);
                std::swap(a.vm.true_lifetime_epochs, b.vm.true_lifetime_epochs);
                std::swap(a.preds.lifetime, b.preds.lifetime);
            });
        case MoveKind::ArrSwap:
            return do_swap(
                [](ScenarioVm& a, ScenarioVm& b) { std::swap(a.vm.arrival, b.vm.arrival); });
    }
    return false;
}

void revert(Scenario& s, Tracker& tracker, const Undo& undo) {
    if (undo.j >= 0) {
        s.vms[undo.i] = undo.saved_i;
        s.vms[undo.j] = undo.saved_j;
        return;  // swaps never change counts
    }
    tracker.apply_flip(s, undo.i, undo.saved_i);
    s.vms[undo.i] = undo.saved_i;
}

struct AnnealCore {
    SearchResult result;
    long evaluations = 0;
};

// anneals cur in place over [begin, end) against `objective`, tracking the
// incumbent; cur finishes as the incumbent scenario
template <typename Objective>
AnnealCore anneal_core(Scenario& cur, const SearchTemplate& tpl,
                       const std::vector<ScenarioConstraint>& constraints, int begin, int end,
                       const SearchBudget& budget, Rng& rng, Objective&& objective,
                       long trace_offset) {
    AnnealCore core;
    Tracker tracker;
    tracker.init(cur, constraints);
    const MoveSet ms = enabled_moves(tpl, end - begin);

    double cur_gap = objective(cur);
    core.evaluations = 1;
    core.result.scenario = cur;
    core.result.gap = cur_gap;
    core.result.trace.push_back({trace_offset, cur_gap});

    // temperature from the gap spread over random feasible neighbors
    double t = budget.initial_temperature;
    if (t < 0.0) {
        std::vector<double> samples;
        for (int k = 0; k < 100; ++k) {
            Undo undo;
            if (!propose(cur, tpl, tracker, ms, begin, end, rng, undo)) continue;
            samples.push_back(objective(cur));
            core.evaluations += 1;
            revert(cur, tracker, undo);
        }
        if (samples.size() >= 2) {
            double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                          static_cast<double>(samples.size());
            double var = 0.0;
            for (double v : samples) var += (v - mean) * (v - mean);
            var /= static_cast<double>(samples.size() - 1);
            t = std::sqrt(var);
        }
        if (!(t > 0.0)) t = 1.0;
    }

    // geometric cooling sized to the budget: ~300 decay steps per run, so the
    // walk ends cold regardless of the iteration count
    const long decay_every = std::max<long>(1, budget.iterations / 300);
    long proposals = 0;
    for (long iter = 1; iter <= budget.iterations; ++iter) {
        Undo undo;
        proposals += 1;
        if (proposals % decay_every == 0) t *= 0.98;
        if (!propose(cur, tpl, tracker, ms, begin, end, rng, undo)) continue;
        const double g = objective(cur);
        core.evaluations += 1;
        const double delta = g - cur_gap;
        const bool accept = delta >= 0.0 || rng.next_real() < std::exp(delta / std::max(t, 1e-12));
        if (!accept) {
            revert(cur, tracker, undo);
            continue;
        }
        cur_gap = g;
        if (g > core.result.gap) {
            core.result.gap = g;
            core.result.scenario = cur;
            core.result.trace.push_back({trace_offset + iter, g});
        }
    }
    cur = core.result.scenario;
    return core;
}

}  // namespace

SearchResult anneal_search(const SearchTemplate& tpl,
                           const std::vector<ScenarioConstraint>& constraints,
                           const SearchBudget& budget) {
    tpl.validate();
    const int restarts = std::max(1, budget.restarts);
    SearchResult merged;
    merged.gap = -std::numeric_limits<double>::infinity();
    long iter_base = 0;
    for (int r = 0; r < restarts; ++r) {
        Rng rng = Rng(budget.seed).fork(static_cast<std::uint64_t>(r));
        SearchBudget piece = budget;
        piece.iterations = budget.iterations / restarts;
        Scenario cur = make_feasible(tpl, constraints, rng, sample_assignment(tpl, rng));
        const int n = static_cast<int>(cur.vms.size());
        AnnealCore core =
            anneal_core(cur, tpl, constraints, 0, n, piece, rng,
                        [&](const Scenario& s) { return gap_unchecked(s, tpl); }, iter_base);
        merged.evaluations += core.evaluations;
        for (const auto& p : core.result.trace)
            if (p.gap > merged.gap) {
                merged.gap = p.gap;
                merged.trace.push_back(p);
            }
        if (core.result.gap >= merged.gap) {
            merged.gap = core.result.gap;
            merged.scenario = core.result.scenario;
        }
        iter_base += piece.iterations;
    }
    return merged;
}

SearchResult random_search(const SearchTemplate& tpl,
                           const std::vector<ScenarioConstraint>& constraints,
                           const SearchBudget& budget) {
    tpl.validate();
    Rng rng(budget.seed);
    SearchResult best;
    best.gap = -std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(tpl.base.vms.size());
    for (long iter = 0; iter < budget.iterations; ++iter) {
        Scenario s = sample_assignment(tpl, rng);
        try {
            s = make_feasible(tpl, constraints, rng, std::move(s));
        } catch (const std::runtime_error&) {
            continue;
        }
        const double g = gap_unchecked(s, tpl);
        best.evaluations += 1;
        if (g > best.gap) {
            best.gap = g;
            best.scenario = s;
            best.trace.push_back({iter, g});
        }
    }
    if (best.gap == -std::numeric_limits<double>::infinity())
        throw std::runtime_error("random_search: no feasible sample found");
    return best;
}

PartitionPlan make_partition_plan(const std::vector<ScenarioConstraint>& global, int n,
                                  std::vector<int> schedule, std::uint64_t seed, int trials) {
    if (schedule.empty()) schedule = {1};
    PartitionPlan plan;
    plan.schedule = schedule;
    std::uint64_t stream = 0;
    for (int k : schedule) {
        if (k < 1 || k > n)
            throw std::invalid_argument("make_partition_plan: bad partition count");
        PartitionStage stage;
        std::vector<int> sizes(k, n / k);
        for (int r = 0; r < n % k; ++r) sizes[r] += 1;
        int pos = 0;
        for (int p = 0; p < k; ++p) {
            stage.ranges.emplace_back(pos, pos + sizes[p]);
            pos += sizes[p];
        }
        for (const auto& gc : global) {
            if (gc.begin != 0 || gc.end != -1)
                throw std::invalid_argument(
                    "make_partition_plan: global constraints must cover the whole sequence");
            const auto parts =
                partition_bounds(gc.bound, sizes, Rng(seed).fork(stream++).seed(), trials);
            for (int p = 0; p < k; ++p) {
                ScenarioConstraint sc;
                sc.property = gc.property;
                sc.bound = parts[p];
                sc.begin = stage.ranges[p].first;
                sc.end = stage.ranges[p].second;
                stage.constraints.push_back(sc);
            }
        }
        plan.stages.push_back(std::move(stage));
    }
    return plan;
}

namespace {

SearchResult partitioned_search_once(const SearchTemplate& tpl, const PartitionPlan& plan,
                                     const std::vector<ScenarioConstraint>& global,
                                     const SearchBudget& budget, long iter_base);

}  // namespace

SearchResult partitioned_search(const SearchTemplate& tpl, const PartitionPlan& plan,
                                const std::vector<ScenarioConstraint>& global,
                                const SearchBudget& budget) {
    const int restarts = std::max(1, budget.restarts);
    if (restarts == 1) return partitioned_search_once(tpl, plan, global, budget, 0);
    SearchResult merged;
    merged.gap = -std::numeric_limits<double>::infinity();
    long iter_base = 0;
    for (int r = 0; r < restarts; ++r) {
        SearchBudget piece = budget;
        piece.iterations = budget.iterations / restarts;
        piece.seed = Rng(budget.seed).fork(static_cast<std::uint64_t>(r)).seed();
        piece.restarts = 1;
        const SearchResult run = partitioned_search_once(tpl, plan, global, piece, iter_base);
        merged.evaluations += run.evaluations;
        for (const auto& p : run.trace)
            if (p.gap > merged.gap) {
                merged.gap = p.gap;
                merged.trace.push_back(p);
            }
        if (run.gap >= merged.gap) {
            merged.gap = run.gap;
            merged.scenario = run.scenario;
        }
        iter_base += piece.iterations;
    }
    return merged;
}

namespace {

SearchResult partitioned_search_once(const SearchTemplate& tpl, const PartitionPlan& plan,
                                     const std::vector<ScenarioConstraint>& global,
                                     const SearchBudget& budget, long iter_base_start) {
    tpl.validate();
    // canonical arrival order so partition ranges are arrival windows
    SearchTemplate sorted_tpl = tpl;
    {
        const auto order = tpl.base.processing_order();
        Scenario sorted;
        for (auto idx : order) sorted.vms.push_back(tpl.base.vms[idx]);
        sorted_tpl.base = std::move(sorted);
        if (!tpl.flow_pins.empty()) {
            std::vector<FlowPin> pins(order.size());
            for (std::size_t k = 0; k < order.size(); ++k) pins[k] = tpl.flow_pins[order[k]];
            sorted_tpl.flow_pins = std::move(pins);
        }
    }
    const int n = static_cast<int>(sorted_tpl.base.vms.size());

    Rng rng(budget.seed);
    Scenario cur = make_feasible(sorted_tpl, global, rng, sample_assignment(sorted_tpl, rng));

    SearchResult incumbent;
    incumbent.scenario = cur;
    incumbent.gap = gap_unchecked(cur, sorted_tpl);
    incumbent.trace.push_back({iter_base_start, incumbent.gap});
    incumbent.evaluations = 1;

    // fine stages optimize small subproblems cheaply and give the best warm
    // starts; budget scales with the partition count
    double weight_total = 0.0;
    for (int k : plan.schedule) weight_total += std::max(1, k);
    long iter_base = iter_base_start;

    for (std::size_t si = 0; si < plan.stages.size(); ++si) {
        const PartitionStage& stage = plan.stages[si];
        const long stage_budget = std::max<long>(
            1, static_cast<long>(budget.iterations * std::max(1, plan.schedule[si]) /
                                 weight_total));
        // moves must respect this stage's narrower per-partition bounds
        try {
            cur = make_feasible(sorted_tpl, stage.constraints, rng, cur);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("partitioned_search: stage " + std::to_string(si) +
                                     " infeasible: " + e.what());
        }
        const long part_budget =
            std::max<long>(1, stage_budget / static_cast<long>(stage.ranges.size()));
        for (std::size_t p = 0; p < stage.ranges.size(); ++p) {
            const auto [begin, end] = stage.ranges[p];
            SearchBudget pb = budget;
            pb.iterations = part_budget;
            AnnealCore core =
                anneal_core(cur, sorted_tpl, stage.constraints, begin, end, pb, rng,
                            [&](const Scenario& s) { return prefix_gap(s, sorted_tpl, end); },
                            iter_base);
            incumbent.evaluations += core.evaluations;
            iter_base += part_budget;
        }
        // the stage's concatenated incumbent, restored to global feasibility
        Scenario cat = cur;
        bool ok = true;
        try {
            cat = make_feasible(sorted_tpl, global, rng, cat);
        } catch (const std::runtime_error&) {
            ok = false;
        }
        if (ok) {
            const double g = gap_unchecked(cat, sorted_tpl);
            incumbent.evaluations += 1;
            if (g > incumbent.gap) {
                incumbent.gap = g;
                incumbent.scenario = cat;
            }
            cur = std::move(cat);  // warm start for the next (coarser) stage
        }
        incumbent.trace.push_back({iter_base, incumbent.gap});
    }
    return incumbent;
}

}  // namespace

SearchResult ablation_search(SearchTemplate tpl,
                             const std::vector<ScenarioConstraint>& constraints,
                             const SearchBudget& budget, bool cpu_free, bool lifetime_free,
                             bool memory_free) {
    tpl.cpu = cpu_free ? ModelFreedom::Free : ModelFreedom::Pinned;
    tpl.lifetime = lifetime_free ? ModelFreedom::Free : ModelFreedom::Pinned;
    tpl.memory = memory_free ? ModelFreedom::Free : ModelFreedom::Pinned;
    return anneal_search(tpl, constraints, budget);
}

std::string scenario_to_json(const Scenario& s) {
    json arr = json::array();
    for (const auto& sv : s.vms) {
        json o;
        o["id"] = sv.vm.id;
        o["req_cpu"] = sv.vm.req_cpu;
        o["req_mem"] = sv.vm.req_mem;
        o["arrival"] = sv.vm.arrival;
        o["true_cpu_label"] = sv.vm.true_cpu_label;
        o["true_mem_decile"] = sv.vm.true_mem_decile;
        o["true_lifetime_epochs"] = sv.vm.true_lifetime_epochs;
        o["true_lifetime_label"] = sv.vm.true_lifetime_label;
        if (sv.vm.features) o["features"] = *sv.vm.features;
        json p;
        p["cpu"] = sv.preds.cpu;
        if (sv.preds.mem_decile) p["mem_decile"] = *sv.preds.mem_decile;
        p["lifetime"] = sv.preds.lifetime;
        o["preds"] = p;
        arr.push_back(o);
    }
    return arr.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
    json arr = json::parse(text);
    Scenario s;
    for (const auto& o : arr) {
        ScenarioVm sv;
        sv.vm.id = o.at("id").get<std::string>();
        sv.vm.req_cpu = o.at("req_cpu").get<int>();
        sv.vm.req_mem = o.at("req_mem").get<int>();
        sv.vm.arrival = o.at("arrival").get<int>();
        sv.vm.true_cpu_label = o.at("true_cpu_label").get<int>();
        sv.vm.true_mem_decile = o.at("true_mem_decile").get<int>();
        sv.vm.true_lifetime_epochs = o.at("true_lifetime_epochs").get<int>();
        sv.vm.true_lifetime_label = o.at("true_lifetime_label").get<int>();
        if (o.contains("features")) sv.vm.features = o.at("features").get<std::vector<double>>();
        const auto& p = o.at("preds");
        sv.preds.cpu = p.at("cpu").get<int>();
        if (p.contains("mem_decile")) sv.preds.mem_decile = p.at("mem_decile").get<int>();
        sv.preds.lifetime = p.at("lifetime").get<int>();
        s.vms.push_back(std::move(sv));
    }
    return s;
}

}  // namespace packgap
