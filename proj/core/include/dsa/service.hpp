#pragma once

// Cycle orchestration: snapshot -> system metrics -> contingency set ->
// screening -> policy -> archive, plus ephemeral what-if assessments and the
// inbox discipline used by the long-running service.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stop_token>
#include <string>
#include <vector>

#include "dsa/archive.hpp"
#include "dsa/config.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/screener.hpp"

namespace dsa {

/// Screens a snapshot and evaluates policy on the result; nothing is
/// persisted.  Throws BasecaseInsecureError.
CycleReport assess(const Snapshot& snap, const EngineConfig& cfg, const PolicyLimits& policy);

/// The record kept for a cycle whose base case could not be assessed.
CycleReport failed_cycle(const Snapshot& snap, const EngineConfig& cfg, const PolicyLimits& policy,
                         const std::string& diagnosis);

/// assess() then persist.  A base case failure is persisted as a failed
/// cycle record before BasecaseInsecureError propagates.  Storage errors
/// propagate with nothing committed.
CycleReport run_cycle(const Snapshot& snap, const EngineConfig& cfg, ArchiveStore& archive);

struct WhatIfRequest {
    std::optional<std::int64_t> base_ts;
    std::optional<Snapshot> inline_snapshot;
    std::vector<Modification> modifications;
    std::optional<std::string> policy_profile;
    std::vector<std::string> limit_overrides;  // key=value, as on the CLI
};

/// Parses {"base_ts": n | "snapshot": {...}, "modifications": [...],
/// "policy_profile": "...", "limits_override": ["k=v", ...]}.
WhatIfRequest whatif_request_from_json(const nlohmann::json& j);

/// Full assessment of the modified snapshot, tagged ephemeral with
/// provenance.  Never writes to the archive.  Throws UnknownElementError when
/// the base timestamp is not archived, LimitError for bad modifications,
/// BasecaseInsecureError from the pipeline.
CycleReport what_if(const WhatIfRequest& req, const EngineConfig& cfg, const ArchiveStore* archive);

/// Long-running service state shared by the orchestration loop and the HTTP
/// layer.
class CycleService {
public:
    explicit CycleService(EngineConfig cfg);

    const EngineConfig& config() const { return cfg_; }
    ArchiveStore& archive() { return *archive_; }
    const ArchiveStore& archive() const { return *archive_; }

    /// Picks the newest pending inbox snapshot.  Older pending ones move to
    /// superseded/, unreadable or stale ones to rejected/ (with a .reason
    /// file).  The chosen file stays in place until processed.
    std::optional<std::filesystem::path> next_inbox_snapshot();

    /// Processes at most one inbox snapshot; returns its report (a failed
    /// cycle record when the base case was insecure).
    std::optional<CycleReport> poll_once();

    /// Polls the inbox every `poll_s` seconds until stop is requested.  An
    /// in-flight cycle always completes and is persisted first.
    void run(std::stop_token stop, double poll_s = 1.0);

    /// Bounded: throws BusyError when max_concurrent_whatifs are running.
    CycleReport what_if(const WhatIfRequest& req);

    int cycles_processed() const { return processed_.load(); }
    std::string last_error() const;

private:
    void set_error(std::string e);

    EngineConfig cfg_;
    std::unique_ptr<ArchiveStore> archive_;
    std::filesystem::path inbox_;
    std::counting_semaphore<1024> whatif_slots_;
    std::atomic<int> processed_{0};
    mutable std::mutex err_mu_;
    std::string last_error_;
};

}  // namespace dsa
