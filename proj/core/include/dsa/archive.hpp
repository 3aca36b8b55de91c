#pragma once

// On-disk cycle archive: one JSON document per cycle under cycles/, the
// snapshot it assessed under snapshots/, and a compact index.  Every file is
// written to a temporary name, flushed and renamed, so readers and crash
// recovery only ever see whole documents.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dsa/analytics.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/screener.hpp"

namespace dsa {

class ArchiveStore {
public:
    /// Creates the layout if needed and recovers from an interrupted write:
    /// stray temporary files are removed and the index is rebuilt from the
    /// committed cycle documents.  Throws StorageError.
    explicit ArchiveStore(std::filesystem::path root);

    /// Persists a cycle and (optionally) its snapshot.  Throws
    /// PreconditionError for a non-increasing timestamp or an ephemeral
    /// report, StorageError on I/O failure (nothing is committed then).
    void persist(const CycleReport& report, const Snapshot* snap = nullptr);

    std::optional<CycleReport> load(std::int64_t ts) const;
    std::optional<CycleReport> latest() const;
    std::optional<Snapshot> load_snapshot(std::int64_t ts) const;
    std::vector<std::int64_t> timestamps() const;
    std::optional<std::int64_t> latest_ts() const;

    /// Compact analytics view of every committed cycle.
    CaseArchive records() const;

    /// FNV-1a digest over every file name and byte under the root.
    std::string content_hash() const;

    const std::filesystem::path& root() const { return root_; }

    /// Test hook called at named points of persist(): "snapshot_written",
    /// "report_partial" (half the report bytes are on disk under the
    /// temporary name), "report_committed", "index_written".
    using FaultHook = std::function<void(std::string_view stage)>;
    static void set_fault_hook(FaultHook hook);

private:
    std::filesystem::path cycle_path(std::int64_t ts) const;
    std::filesystem::path snapshot_path(std::int64_t ts) const;
    void recover();
    void write_index() const;

    std::filesystem::path root_;
    mutable std::shared_mutex mu_;
    std::vector<std::int64_t> ts_;
    CaseArchive records_;
};

/// Writes `data` to `path` via a flushed temporary file and rename.
void atomic_write(const std::filesystem::path& path, std::string_view data,
                  const std::function<void(std::string_view)>& hook = {}, std::string_view partial_stage = {});

}  // namespace dsa
