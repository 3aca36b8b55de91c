#include "dsa/service.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "dsa/error.hpp"
#include "dsa/report_io.hpp"
#include "dsa/snapshot_io.hpp"

namespace dsa {

namespace fs = std::filesystem;

namespace {

void move_into(const fs::path& file, const fs::path& dir, const std::string& reason = {}) {
    fs::create_directories(dir);
    fs::path dest = dir / file.filename();
    for (int n = 1; fs::exists(dest); ++n) dest = dir / (file.stem().string() + "." + std::to_string(n) + ".json");
    fs::rename(file, dest);
    if (!reason.empty()) {
        std::ofstream out(dest.string() + ".reason");
        out << reason << "\n";
    }
}

}  // namespace

CycleReport assess(const Snapshot& snap, const EngineConfig& cfg, const PolicyLimits& policy) {
    const auto set = build_contingency_set(snap, cfg.contingencies);
    CycleReport report = screen(snap, set, cfg.screen_options());
    report.policy = check(report.system_metrics, policy, &report);
    return report;
}

CycleReport failed_cycle(const Snapshot& snap, const EngineConfig& cfg, const PolicyLimits& policy,
                         const std::string& diagnosis) {
    CycleReport r;
    r.snapshot_ts = snap.timestamp;
    r.status = "failed";
    r.diagnosis = diagnosis;
    try {
        r.system_metrics = system_metrics(snap);
    } catch (const DegenerateError&) {
    }
    r.policy = check(r.system_metrics, policy, nullptr);
    r.limits = cfg.limits;
    r.budget_s = cfg.budget_s;
    return r;
}

CycleReport run_cycle(const Snapshot& snap, const EngineConfig& cfg, ArchiveStore& archive) {
    const PolicyLimits policy = cfg.policy_limits();
    CycleReport report;
    try {
        report = assess(snap, cfg, policy);
    } catch (const BasecaseInsecureError& e) {
        archive.persist(failed_cycle(snap, cfg, policy, e.what()), &snap);
        throw;
    }
    archive.persist(report, &snap);
    return report;
}

WhatIfRequest whatif_request_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("what-if request must be a JSON object");
    WhatIfRequest req;
    for (const auto& [k, v] : j.items()) {
        if (k == "base_ts") {
            if (!v.is_number_integer()) throw ParseError("base_ts must be an integer timestamp");
            req.base_ts = v.get<std::int64_t>();
        } else if (k == "snapshot") {
            req.inline_snapshot = snapshot_from_json(v);
        } else if (k == "modifications") {
            req.modifications = modifications_from_json(v);
        } else if (k == "policy_profile") {
            if (!v.is_string()) throw ParseError("policy_profile must be a string");
            req.policy_profile = v.get<std::string>();
        } else if (k == "limits_override") {
            if (!v.is_array()) throw ParseError("limits_override must be an array of key=value strings");
            for (const auto& o : v) req.limit_overrides.push_back(o.get<std::string>());
        } else {
            throw ParseError("unknown what-if key '" + k + "'");
        }
    }
    if (req.base_ts && req.inline_snapshot) throw ParseError("give either base_ts or snapshot, not both");
    return req;
}

CycleReport what_if(const WhatIfRequest& req, const EngineConfig& cfg, const ArchiveStore* archive) {
    Snapshot base;
    if (req.inline_snapshot) {
        base = *req.inline_snapshot;
    } else {
        if (!archive) throw UnknownElementError("no archive to resolve the base snapshot from");
        const auto ts = req.base_ts ? req.base_ts : archive->latest_ts();
        if (!ts) throw UnknownElementError("archive is empty; no base snapshot");
        auto snap = archive->load_snapshot(*ts);
        if (!snap) throw UnknownElementError("no archived snapshot at timestamp " + std::to_string(*ts));
        base = std::move(*snap);
    }

    EngineConfig local = cfg;
    if (req.policy_profile) local.policy_profile = *req.policy_profile;
    if (!req.limit_overrides.empty()) {
        nlohmann::json doc;
        doc["limits"] = nlohmann::json::parse(to_json(local.limits).dump());
        apply_overrides(doc, req.limit_overrides);
        for (const auto& [k, v] : doc.items())
            if (k != "limits") throw ConfigError("what-if overrides may only change limits, not '" + k + "'");
        local.limits = security_limits_from_json(doc["limits"]);
    }
    local.validate();

    const Snapshot modified = apply_modifications(base, req.modifications);
    CycleReport report = assess(modified, local, local.policy_limits());
    report.ephemeral = true;
    Provenance prov;
    prov.base_ts = base.timestamp;
    prov.modifications = req.modifications;
    prov.policy_profile = req.policy_profile;
    report.provenance = prov;
    return report;
}

CycleService::CycleService(EngineConfig cfg)
    : cfg_(std::move(cfg)),
      archive_(std::make_unique<ArchiveStore>(cfg_.archive_path)),
      inbox_(cfg_.inbox_path),
      whatif_slots_(cfg_.max_concurrent_whatifs) {
    std::error_code ec;
    fs::create_directories(inbox_, ec);
    if (ec) throw StorageError("cannot create inbox " + inbox_.string() + ": " + ec.message());
}

std::optional<fs::path> CycleService::next_inbox_snapshot() {
    struct Pending {
        fs::path path;
        std::int64_t ts;
    };
    std::vector<Pending> pending;
    const auto latest = archive_->latest_ts();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(inbox_))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            const Snapshot s = load_snapshot_file(f.string());
            if (latest && s.timestamp <= *latest) {
                move_into(f, inbox_ / "rejected",
                          "timestamp " + std::to_string(s.timestamp) + " is not newer than the latest cycle " +
                              std::to_string(*latest));
                continue;
            }
            pending.push_back({f, s.timestamp});
        } catch (const Error& e) {
            move_into(f, inbox_ / "rejected", e.what());
        }
    }
    if (pending.empty()) return std::nullopt;
    auto newest = std::max_element(pending.begin(), pending.end(),
                                   [](const Pending& a, const Pending& b) { return a.ts < b.ts; });
    for (auto it = pending.begin(); it != pending.end(); ++it)
        if (it != newest) move_into(it->path, inbox_ / "superseded", "superseded by " + newest->path.filename().string());
    return newest->path;
}

std::optional<CycleReport> CycleService::poll_once() {
    const auto path = next_inbox_snapshot();
    if (!path) return std::nullopt;
    Snapshot snap;
    try {
        snap = load_snapshot_file(path->string());
    } catch (const Error& e) {
        move_into(*path, inbox_ / "rejected", e.what());
        return std::nullopt;
    }
    try {
        CycleReport r = run_cycle(snap, cfg_, *archive_);
        move_into(*path, inbox_ / "processed");
        ++processed_;
        return r;
    } catch (const BasecaseInsecureError& e) {
        set_error(e.what());
        move_into(*path, inbox_ / "processed");
        ++processed_;
        return archive_->load(snap.timestamp);
    } catch (const StorageError& e) {
        set_error(e.what());
        return std::nullopt;
    } catch (const Error& e) {
        set_error(e.what());
        move_into(*path, inbox_ / "rejected", e.what());
        return std::nullopt;
    }
}

void CycleService::run(std::stop_token stop, double poll_s) {
    using namespace std::chrono;
    const auto period = duration_cast<milliseconds>(duration<double>(poll_s));
    while (!stop.stop_requested()) {
        try {
            poll_once();
        } catch (const std::exception& e) {
            set_error(e.what());
        }
        const auto until = steady_clock::now() + period;
        while (!stop.stop_requested() && steady_clock::now() < until) std::this_thread::sleep_for(milliseconds(20));
    }
}

CycleReport CycleService::what_if(const WhatIfRequest& req) {
    if (!whatif_slots_.try_acquire())
        throw BusyError("too many concurrent what-if requests (limit " + std::to_string(cfg_.max_concurrent_whatifs) +
                        ")");
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{whatif_slots_};
    return dsa::what_if(req, cfg_, archive_.get());
}

std::string CycleService::last_error() const {
    std::lock_guard lock(err_mu_);
    return last_error_;
}

void CycleService::set_error(std::string e) {
    std::lock_guard lock(err_mu_);
    last_error_ = std::move(e);
}

}  // namespace dsa
