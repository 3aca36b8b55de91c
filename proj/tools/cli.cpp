#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dsa/analytics.hpp"
#include "dsa/archive.hpp"
#include "dsa/config.hpp"
#include "dsa/error.hpp"
#include "dsa/http_api.hpp"
#include "dsa/report_io.hpp"
#include "dsa/service.hpp"
#include "dsa/snapshot_io.hpp"

namespace dsa::cli {

namespace {

namespace fs = std::filesystem;

const char* kExitCodes =
    "Exit codes:\n"
    "  0   success (screen: every case secure)\n"
    "  1   invalid input (validation findings printed)\n"
    "  2   configuration or I/O error\n"
    "  3   base case insecure\n"
    "  4   empty analysis window\n"
    "  5   degenerate correlation (flag constant over the window)\n"
    "  10  screen: at least one insecure contingency\n";

struct EngineArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string profile;
    int workers = 0;
    std::string dump_traces;
};

EngineConfig load_engine(const EngineArgs& a) {
    nlohmann::json doc = nlohmann::json::object();
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) throw ConfigError("cannot open config file " + a.config_path);
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("config file " + a.config_path + ": " + e.what());
        }
    }
    apply_overrides(doc, a.overrides);
    EngineConfig cfg = config_from_json(doc);
    if (!a.profile.empty()) cfg.policy_profile = a.profile;
    if (a.workers > 0) cfg.workers = a.workers;
    if (!a.dump_traces.empty()) cfg.dump_traces_dir = a.dump_traces;
    try {
        cfg.validate();
    } catch (const UnknownProfileError& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

void add_engine_flags(CLI::App* cmd, EngineArgs& a) {
    cmd->add_option("--config", a.config_path, "Engine config file (JSON)");
    cmd->add_option("--workers", a.workers, "Screening worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--policy-profile", a.profile, "Policy profile name or year (2023, 2030, ...)");
    cmd->add_option("--limits-override", a.overrides,
                    "key=value config override; bare keys address the limits block (rocof_limit=0.95)");
}

Snapshot read_snapshot(const std::string& path, bool lenient, std::ostream& err) {
    if (!fs::exists(path)) throw StorageError("cannot open " + path + ": no such file");
    std::vector<std::string> warnings;
    LoadOptions opts;
    opts.lenient = lenient;
    opts.warnings = &warnings;
    Snapshot s = load_snapshot_file(path, opts);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    return s;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void print_policy(const PolicyReport& p, std::ostream& out) {
    out << "policy (profile " << p.profile << "): " << (p.compliant ? "compliant" : "NON-COMPLIANT") << "\n";
    for (const auto& c : p.constraints) {
        out << "  " << c.name << std::string(c.name.size() < 16 ? 16 - c.name.size() : 1, ' ');
        if (!c.evaluated) {
            out << "not evaluated";
            if (!c.note.empty()) out << " (" << c.note << ")";
            out << "\n";
            continue;
        }
        out << fmt("%12.2f", c.value) << "  limit " << fmt("%10.2f", c.limit) << "  "
            << (c.compliant ? "ok" : "VIOLATED") << "\n";
    }
}

void print_cycle(const CycleReport& r, std::ostream& out) {
    out << "cycle " << r.snapshot_ts << ": " << r.totals.cases << " cases, " << r.totals.secure << " secure, "
        << r.totals.insecure << " insecure, " << r.totals.failed << " failed (wall " << fmt("%.2f", r.wall_time_s)
        << " s, budget " << fmt("%.0f", r.budget_s) << " s" << (r.over_budget ? ", OVER BUDGET" : "") << ")\n";
    out << "system: inertia " << fmt("%.0f", r.system_metrics.inertia_mws) << " MWs, demand "
        << fmt("%.1f", r.system_metrics.demand_mw) << " MW, wind " << fmt("%.1f", r.system_metrics.wind_mw)
        << " MW, SNSP " << fmt("%.2f", r.system_metrics.snsp_pct) << "%, MUON " << r.system_metrics.muon_count
        << "\n\n";
    CaseArchive one;
    one.append(r);
    print_summary(summarize(one), out);
    out << "\n";
    print_policy(r.policy, out);
    const auto ranked = rank_insecure(r);
    if (!ranked.empty()) {
        out << "\ninsecure cases, most severe first:\n";
        for (const auto& k : ranked) {
            const auto& c = *std::find_if(r.cases.begin(), r.cases.end(),
                                          [&](const CaseResult& x) { return x.contingency_id == k.contingency_id; });
            out << "  " << k.contingency_id << "  severity " << fmt("%.3f", k.severity) << "  [";
            bool first = true;
            for (Binding b : c.metrics.binding.items()) {
                out << (first ? "" : ",") << display_name(b);
                first = false;
            }
            out << "]  rocof " << fmt("%+.3f", c.metrics.rocof_min) << "/" << fmt("%+.3f", c.metrics.rocof_max)
                << " Hz/s  nadir " << fmt("%.3f", c.metrics.nadir) << "  zenith " << fmt("%.3f", c.metrics.zenith);
            if (c.metrics.angle_margin) out << "  margin " << fmt("%.3f", *c.metrics.angle_margin);
            out << "\n";
        }
    }
    for (const auto& c : r.cases)
        if (c.status == CaseStatus::failed) out << "  failed: " << c.contingency_id << ": " << c.failure_reason << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw StorageError("cannot write " + path);
    out << text << "\n";
    if (!out) throw StorageError("write failed for " + path);
}

ArchiveStore open_existing_archive(const std::string& path) {
    if (!fs::is_directory(path)) throw StorageError("archive " + path + " does not exist");
    return ArchiveStore(path);
}

TimeWindow window_from(const std::optional<std::int64_t>& from, const std::optional<std::int64_t>& to) {
    return {from, to};
}

Granularity granularity_from(const std::string& g) {
    if (g == "case") return Granularity::case_level;
    if (g == "cycle") return Granularity::cycle_level;
    throw ConfigError("--granularity must be 'case' or 'cycle'");
}

// Maps an exception escaping a command onto the exit-code taxonomy.
int report_error(std::ostream& err) {
    try {
        throw;
    } catch (const ValidationError& e) {
        err << "invalid: " << e.what() << "\n";
        return kInvalid;
    } catch (const ParseError& e) {
        err << "invalid: " << e.what() << "\n";
        return kInvalid;
    } catch (const LimitError& e) {
        err << "invalid: " << e.what() << "\n";
        return kInvalid;
    } catch (const BasecaseInsecureError& e) {
        err << "base case insecure: " << e.what() << "\n";
        return kBasecaseInsecure;
    } catch (const EmptyWindowError& e) {
        err << "empty window: " << e.what() << "\n";
        return kEmptyWindow;
    } catch (const DegenerateError& e) {
        err << "degenerate: " << e.what() << "\n";
        return kDegenerate;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigOrIo;
    } catch (const StorageError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kConfigOrIo;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kConfigOrIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kConfigOrIo;
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"dsa: dynamic security assessment engine for low-inertia grids", "dsa"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    bool lenient = false;
    app.add_flag("--lenient", lenient, "Warn instead of failing on unknown snapshot keys");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Validate a snapshot document");
    std::string validate_path;
    validate_cmd->add_option("snapshot", validate_path, "Snapshot JSON file")->required();

    // screen
    auto* screen_cmd = app.add_subcommand("screen", "Run one assessment cycle offline");
    EngineArgs screen_args;
    std::string screen_snapshot, screen_output;
    bool normalize = false;
    screen_cmd->add_option("snapshot", screen_snapshot, "Snapshot JSON file")->required();
    screen_cmd->add_option("-o,--output", screen_output, "CycleReport output path (default cycle_<ts>.json)");
    screen_cmd->add_option("--dump-traces", screen_args.dump_traces, "Directory for per-case frequency traces (CSV)");
    screen_cmd->add_flag("--normalize-output", normalize, "Zero timing fields in the written report");
    add_engine_flags(screen_cmd, screen_args);

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Archive analytics");
    analyze_cmd->require_subcommand(1);
    std::string archive_path;
    std::optional<std::int64_t> from, to;
    std::string granularity = "case";
    bool as_json = false;
    auto add_window = [&](CLI::App* c) {
        c->add_option("archive", archive_path, "Archive directory")->required();
        c->add_option("--from", from, "Window start, UTC seconds (inclusive)");
        c->add_option("--to", to, "Window end, UTC seconds (inclusive)");
    };
    auto* summary_cmd = analyze_cmd->add_subcommand("summary", "Binding-constraint summary table");
    add_window(summary_cmd);
    summary_cmd->add_option("--granularity", granularity, "case or cycle")->check(CLI::IsMember({"case", "cycle"}));
    summary_cmd->add_flag("--json", as_json, "Emit JSON instead of a table");

    auto* correlate_cmd = analyze_cmd->add_subcommand("correlate", "Point-biserial correlation");
    add_window(correlate_cmd);
    std::string var, flag;
    correlate_cmd->add_option("--var", var, "inertia, demand or wind")->required();
    correlate_cmd->add_option("--flag", flag, "rocof_plus, rocof_minus, nadir, zenith, rotor_angle, voltage")->required();
    correlate_cmd->add_option("--granularity", granularity, "case or cycle")->check(CLI::IsMember({"case", "cycle"}));

    auto* scatter_cmd = analyze_cmd->add_subcommand("scatter", "Scatter dataset export (CSV)");
    add_window(scatter_cmd);
    std::string x_var, y_var, scatter_out;
    scatter_cmd->add_option("--x", x_var, "inertia, demand or wind")->required();
    scatter_cmd->add_option("--y", y_var, "inertia, demand or wind")->required();
    scatter_cmd->add_option("--flag", flag, "Constraint flag")->required();
    scatter_cmd->add_option("-o,--output", scatter_out, "CSV path (default stdout)");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the cycle service and HTTP API");
    EngineArgs serve_args;
    double poll_s = 1.0;
    add_engine_flags(serve_cmd, serve_args);
    serve_cmd->add_option("--poll", poll_s, "Inbox poll interval, seconds")->check(CLI::PositiveNumber);

    // replay
    auto* replay_cmd = app.add_subcommand("replay", "Re-assess archived snapshots and compare with their reports");
    EngineArgs replay_args;
    bool strict = false;
    add_window(replay_cmd);
    add_engine_flags(replay_cmd, replay_args);
    replay_cmd->add_flag("--strict", strict, "Exit 1 when any replayed cycle differs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kConfigOrIo;
    }

    try {
        if (*validate_cmd) {
            Snapshot s;
            try {
                s = read_snapshot(validate_path, lenient, err);
            } catch (const ValidationError& e) {
                out << "INVALID " << e.element() << ": " << e.what() << "\n";
                return kInvalid;
            } catch (const ParseError& e) {
                out << "INVALID: " << e.what() << "\n";
                return kInvalid;
            }
            out << "OK " << s.buses.size() << " buses, " << s.branches.size() << " branches, " << s.machines.size()
                << " machines, " << s.ibr_units.size() << " IBR units, " << s.loads.size() << " loads\n";
            return kOk;
        }

        if (*screen_cmd) {
            const EngineConfig cfg = load_engine(screen_args);
            const Snapshot snap = read_snapshot(screen_snapshot, lenient, err);
            const PolicyLimits policy = cfg.policy_limits();
            CycleReport report;
            try {
                report = assess(snap, cfg, policy);
            } catch (const BasecaseInsecureError& e) {
                err << "base case insecure: " << e.what() << "\n";
                return kBasecaseInsecure;
            }
            const std::string path =
                screen_output.empty() ? "cycle_" + std::to_string(report.snapshot_ts) + ".json" : screen_output;
            ReportJsonOptions jo;
            jo.normalize_timing = normalize;
            write_text(path, serialize(report, jo));
            print_cycle(report, out);
            out << "\nreport written to " << path << "\n";
            return report.totals.insecure > 0 ? kInsecure : kOk;
        }

        if (*analyze_cmd) {
            const ArchiveStore store = open_existing_archive(archive_path);
            const CaseArchive records = store.records();
            const TimeWindow w = window_from(from, to);
            if (*summary_cmd) {
                const auto t = summarize(records, w, granularity_from(granularity));
                if (as_json)
                    out << to_json(t).dump(2) << "\n";
                else
                    print_summary(t, out);
                return kOk;
            }
            if (*correlate_cmd) {
                const auto c =
                    correlate(records, parse_variable(var), parse_binding(flag), w, granularity_from(granularity));
                out << "correlate " << to_string(c.variable) << " vs " << token(c.flag) << ": r_pb = "
                    << fmt("%+.4f", c.coefficient) << "\n"
                    << "  mean " << to_string(c.variable) << " when secure   " << fmt("%.2f", c.mean_secure) << " "
                    << unit_of(c.variable) << " (n=" << c.n_secure << ")\n"
                    << "  mean " << to_string(c.variable) << " when insecure " << fmt("%.2f", c.mean_insecure) << " "
                    << unit_of(c.variable) << " (n=" << c.n_insecure << ")\n";
                return kOk;
            }
            if (*scatter_cmd) {
                const auto s = scatter_export(records, parse_variable(x_var), parse_variable(y_var),
                                              parse_binding(flag), w);
                std::ostringstream csv;
                write_scatter_csv(s, csv);
                if (scatter_out.empty()) {
                    out << csv.str();
                } else {
                    std::string text = csv.str();
                    if (!text.empty() && text.back() == '\n') text.pop_back();
                    write_text(scatter_out, text);
                    out << s.rows.size() << " rows written to " << scatter_out << "\n";
                }
                return kOk;
            }
        }

        if (*serve_cmd) {
            EngineConfig cfg;
            try {
                cfg = load_engine(serve_args);
            } catch (const Error& e) {
                err << "config error: " << e.what() << "\n";
                return kConfigOrIo;
            }
            return serve(cfg, err, poll_s);
        }

        if (*replay_cmd) {
            const EngineConfig cfg = load_engine(replay_args);
            const ArchiveStore store = open_existing_archive(archive_path);
            const TimeWindow w = window_from(from, to);
            const PolicyLimits policy = cfg.policy_limits();
            int same = 0, differ = 0, missing = 0;
            for (std::int64_t ts : store.timestamps()) {
                if (!w.contains(ts)) continue;
                const auto snap = store.load_snapshot(ts);
                const auto stored = store.load(ts);
                if (!snap || !stored) {
                    out << ts << "  no snapshot archived, skipped\n";
                    ++missing;
                    continue;
                }
                CycleReport fresh;
                try {
                    fresh = assess(*snap, cfg, policy);
                } catch (const BasecaseInsecureError& e) {
                    fresh = failed_cycle(*snap, cfg, policy, e.what());
                }
                ReportJsonOptions jo;
                jo.normalize_timing = true;
                CycleReport old = *stored;
                fresh.budget_s = old.budget_s;
                fresh.over_budget = old.over_budget;
                if (serialize(fresh, jo) == serialize(old, jo)) {
                    out << ts << "  identical\n";
                    ++same;
                } else {
                    out << ts << "  differs: status " << old.status << " -> " << fresh.status << ", insecure "
                        << old.totals.insecure << " -> " << fresh.totals.insecure << "\n";
                    ++differ;
                }
            }
            out << "replayed " << same + differ << " cycle(s): " << same << " identical, " << differ << " differ, "
                << missing << " skipped\n";
            return strict && differ > 0 ? kInvalid : kOk;
        }
    } catch (...) {
        return report_error(err);
    }
    return kOk;
}

}  // namespace dsa::cli
