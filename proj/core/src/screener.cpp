#include "dsa/screener.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "dsa/error.hpp"

namespace dsa {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string file_stem_for(const std::string& id) {
    std::string out = id;
    for (char& ch : out)
        if (ch == ':' || ch == '/' || ch == '\\') ch = '_';
    return out;
}

}  // namespace

std::string to_string(CaseStatus s) {
    switch (s) {
        case CaseStatus::secure: return "secure";
        case CaseStatus::insecure: return "insecure";
        case CaseStatus::failed: return "failed";
    }
    return "?";
}

CaseStatus parse_case_status(const std::string& s) {
    if (s == "secure") return CaseStatus::secure;
    if (s == "insecure") return CaseStatus::insecure;
    if (s == "failed") return CaseStatus::failed;
    throw ParseError("unknown case status '" + s + "'");
}

std::vector<Contingency> build_contingency_set(const Snapshot& snap, const ContingencyRules& rules) {
    std::vector<Contingency> out;
    if (rules.include_branches) {
        for (const auto& br : snap.branches) {
            if (!br.in_service) continue;
            Contingency c{"line:" + br.id, ContingencyKind::line_trip, {br.id},
                          "trip branch " + br.id + " (" + br.from_bus + "-" + br.to_bus + ")"};
            if (rules.line_fault_clearing_s) {
                c.fault_bus = br.from_bus;
                c.clearing_time_s = *rules.line_fault_clearing_s;
            }
            out.push_back(std::move(c));
        }
    }
    if (rules.include_machines) {
        for (const auto& g : snap.machines) {
            if (!g.online) continue;
            out.push_back({"gen:" + g.id, ContingencyKind::gen_trip, {g.id},
                           "trip machine " + g.id + " at " + g.bus});
        }
    }
    if (rules.include_ibr) {
        for (const auto& u : snap.ibr_units) {
            if (!u.online || std::abs(u.p) < rules.ibr_mw_floor) continue;
            if (u.kind == IbrKind::hvdc)
                out.push_back({"hvdc:" + u.id, ContingencyKind::hvdc_trip, {u.id}, "trip interconnector " + u.id});
            else
                out.push_back({"ibr:" + u.id, ContingencyKind::ibr_trip, {u.id},
                               "trip " + to_string(u.kind) + " unit " + u.id});
        }
    }
    for (const auto& s : rules.splits) {
        out.push_back({"split:" + s.id, ContingencyKind::system_split, s.branches,
                       s.description.empty() ? "system split " + s.id : s.description});
    }
    std::sort(out.begin(), out.end(), [](const Contingency& a, const Contingency& b) { return a.id < b.id; });
    return out;
}

Totals tally(const std::vector<CaseResult>& cases) {
    Totals t;
    t.cases = static_cast<int>(cases.size());
    for (const auto& c : cases) {
        switch (c.status) {
            case CaseStatus::secure: ++t.secure; break;
            case CaseStatus::insecure: ++t.insecure; break;
            case CaseStatus::failed: ++t.failed; break;
        }
    }
    return t;
}

CaseResult screen_case(const DynamicModel& model, const Contingency& c, const ScreenOptions& opts) {
    const auto t0 = Clock::now();
    CaseResult r;
    r.contingency_id = c.id;
    r.kind = c.kind;
    r.description = c.description;
    try {
        const Snapshot& base = model.snapshot();
        MetricComponents parts;

        Snapshot post = apply_contingency(with_solution_voltages(base, model.base_flow()), c);
        SolveOptions pf_opts = opts.power_flow;
        pf_opts.flat_start = false;
        pf_opts.allow_deenergized = true;
        const auto pf = solve(post, pf_opts);
        if (pf.converged) {
            auto va = assess_voltage(post, pf, opts.voltage);
            parts.voltage_secure = va.secure;
            parts.voltage_violations = std::move(va.violations);
        } else {
            parts.voltage_secure = false;
            parts.voltage_violations.push_back({"power_flow", ViolationKind::no_solution, pf.max_mismatch, pf_opts.tol});
        }

        SimConfig freq_cfg = opts.sim;
        freq_cfg.network_model = NetworkModel::coi_uniform;
        const auto resp = model.simulate(c, freq_cfg);
        const auto f = frequency_components(resp, opts.limits);
        parts.rocof = f.rocof;
        parts.extremes = f.extremes;

        if (opts.angle_screening && model.angle_model_ready()) {
            SimConfig ang_cfg = opts.sim;
            ang_cfg.network_model = NetworkModel::dc_network;
            const auto ang = model.simulate(c, ang_cfg);
            try {
                parts.angle_margin = angle_margin(ang, opts.limits.angle_threshold);
            } catch (const SingleMachineError&) {
                parts.angle_margin.reset();
            }
        }

        if (!opts.dump_traces_dir.empty()) {
            std::ofstream out(std::filesystem::path(opts.dump_traces_dir) / (file_stem_for(c.id) + ".csv"));
            if (!out) throw StorageError("cannot write trace for " + c.id);
            write_trace_csv(resp, out);
        }

        r.metrics = classify(parts, opts.limits);
        r.status = r.metrics.binding.empty() ? CaseStatus::secure : CaseStatus::insecure;
    } catch (const std::exception& e) {
        r.metrics = SecurityMetrics{};
        r.status = CaseStatus::failed;
        r.failure_reason = e.what();
        if (r.failure_reason.empty()) r.failure_reason = "unknown failure";
    }
    r.wall_time_s = seconds_since(t0);
    return r;
}

CycleReport screen(const Snapshot& snap, const std::vector<Contingency>& set, const ScreenOptions& opts) {
    const auto t0 = Clock::now();
    opts.limits.validate(snap.nominal_hz);
    opts.sim.validate();
    if (opts.workers < 1) throw ConfigError("workers must be at least 1");
    if (!opts.dump_traces_dir.empty()) std::filesystem::create_directories(opts.dump_traces_dir);

    CycleReport report;
    report.snapshot_ts = snap.timestamp;
    report.system_metrics = system_metrics(snap);
    report.limits = opts.limits;
    report.budget_s = opts.budget_s;

    std::shared_ptr<const DynamicModel> model;
    try {
        model = DynamicModel::prepare(snap, opts.power_flow);
    } catch (const InitError& e) {
        throw BasecaseInsecureError(std::string("base case: ") + e.what());
    }
    const auto base_va = assess_voltage(snap, model->base_flow(), opts.voltage);
    if (!base_va.secure) {
        std::string msg = "base case violates voltage/thermal criteria:";
        for (const auto& v : base_va.violations)
            msg += " " + v.element + " " + to_string(v.kind) + " " + std::to_string(v.value) + " (limit " +
                   std::to_string(v.limit) + ")";
        throw BasecaseInsecureError(msg);
    }

    // Every case writes only its own slot, so the merged vector does not
    // depend on which worker ran what or in which order.
    std::vector<CaseResult> results(set.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < set.size(); i = next++) results[i] = screen_case(*model, set[i], opts);
    };
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(opts.workers), set.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }

    std::sort(results.begin(), results.end(),
              [](const CaseResult& a, const CaseResult& b) { return a.contingency_id < b.contingency_id; });
    report.cases = std::move(results);
    report.totals = tally(report.cases);
    report.wall_time_s = seconds_since(t0);
    report.over_budget = report.wall_time_s > opts.budget_s;
    return report;
}

double severity(const CaseResult& c, const SecurityLimits& limits, const SeverityNorms& norms, Binding* worst) {
    const auto& m = c.metrics;
    double best = 0.0;
    Binding which = Binding::voltage;
    bool any = false;
    auto consider = [&](Binding b, double v) {
        if (!any || v > best) {
            best = v;
            which = b;
            any = true;
        }
    };
    for (Binding b : m.binding.items()) {
        switch (b) {
            case Binding::rocof_plus: consider(b, (m.rocof_max - limits.rocof_limit) / norms.rocof_hz_s); break;
            case Binding::rocof_minus: consider(b, (-limits.rocof_limit - m.rocof_min) / norms.rocof_hz_s); break;
            case Binding::nadir: consider(b, (limits.nadir_limit - m.nadir) / norms.frequency_hz); break;
            case Binding::zenith: consider(b, (m.zenith - limits.zenith_limit) / norms.frequency_hz); break;
            case Binding::rotor_angle: consider(b, -m.angle_margin.value_or(0.0) / norms.angle_margin); break;
            case Binding::voltage: {
                double v = 0.0;
                for (const auto& viol : m.voltage_violations) {
                    switch (viol.kind) {
                        case ViolationKind::over_voltage:
                            v = std::max(v, (viol.value - viol.limit) / norms.voltage_pu);
                            break;
                        case ViolationKind::under_voltage:
                            v = std::max(v, (viol.limit - viol.value) / norms.voltage_pu);
                            break;
                        case ViolationKind::thermal:
                            if (viol.limit > 0)
                                v = std::max(v, 100.0 * (viol.value - viol.limit) / viol.limit / norms.thermal_pct);
                            break;
                        case ViolationKind::no_solution: v = std::max(v, 1.0); break;
                    }
                }
                consider(b, v);
                break;
            }
        }
    }
    if (worst) *worst = which;
    return best;
}

std::vector<RankedCase> rank_insecure(const CycleReport& report, const SeverityNorms& norms) {
    std::vector<RankedCase> out;
    for (const auto& c : report.cases) {
        if (c.status != CaseStatus::insecure) continue;
        RankedCase r;
        r.contingency_id = c.contingency_id;
        r.severity = severity(c, report.limits, norms, &r.worst);
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const RankedCase& a, const RankedCase& b) {
        if (a.severity != b.severity) return a.severity > b.severity;
        return a.contingency_id < b.contingency_id;
    });
    return out;
}

}  // namespace dsa
