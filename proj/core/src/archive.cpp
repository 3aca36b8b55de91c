#include "dsa/archive.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "dsa/error.hpp"
#include "dsa/report_io.hpp"
#include "dsa/snapshot_io.hpp"

namespace dsa {

namespace fs = std::filesystem;

namespace {

std::mutex g_hook_mu;
ArchiveStore::FaultHook g_hook;

void fire(std::string_view stage) {
    ArchiveStore::FaultHook hook;
    {
        std::lock_guard lock(g_hook_mu);
        hook = g_hook;
    }
    if (hook) hook(stage);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StorageError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_all(int fd, const char* data, std::size_t n, const fs::path& p) {
    while (n > 0) {
        const ssize_t w = ::write(fd, data, n);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw StorageError("write failed for " + p.string() + ": " + std::strerror(errno));
        }
        data += w;
        n -= static_cast<std::size_t>(w);
    }
}

void sync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

bool parse_ts(const std::string& stem, std::int64_t& out) {
    if (stem.empty()) return false;
    std::size_t i = stem[0] == '-' ? 1 : 0;
    if (i == stem.size()) return false;
    for (std::size_t k = i; k < stem.size(); ++k)
        if (stem[k] < '0' || stem[k] > '9') return false;
    out = std::stoll(stem);
    return true;
}

}  // namespace

void atomic_write(const fs::path& path, std::string_view data, const std::function<void(std::string_view)>& hook,
                  std::string_view partial_stage) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw StorageError("cannot create " + tmp.string() + ": " + std::strerror(errno));
    try {
        if (hook && !partial_stage.empty()) {
            const std::size_t half = data.size() / 2;
            write_all(fd, data.data(), half, tmp);
            hook(partial_stage);
            write_all(fd, data.data() + half, data.size() - half, tmp);
        } else {
            write_all(fd, data.data(), data.size(), tmp);
        }
        if (::fsync(fd) != 0) throw StorageError("fsync failed for " + tmp.string());
    } catch (...) {
        ::close(fd);
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
    ::close(fd);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StorageError("cannot rename into " + path.string());
    }
    sync_dir(path.parent_path());
}

void ArchiveStore::set_fault_hook(FaultHook hook) {
    std::lock_guard lock(g_hook_mu);
    g_hook = std::move(hook);
}

ArchiveStore::ArchiveStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "cycles", ec);
    if (!ec) fs::create_directories(root_ / "snapshots", ec);
    if (ec) throw StorageError("cannot create archive at " + root_.string() + ": " + ec.message());
    recover();
}

fs::path ArchiveStore::cycle_path(std::int64_t ts) const { return root_ / "cycles" / (std::to_string(ts) + ".json"); }

fs::path ArchiveStore::snapshot_path(std::int64_t ts) const {
    return root_ / "snapshots" / (std::to_string(ts) + ".json");
}

void ArchiveStore::recover() {
    std::vector<std::int64_t> found;
    for (const auto* sub : {"cycles", "snapshots", ""}) {
        for (const auto& e : fs::directory_iterator(root_ / sub)) {
            if (e.is_regular_file() && e.path().extension() == ".tmp") fs::remove(e.path());
        }
    }
    for (const auto& e : fs::directory_iterator(root_ / "cycles")) {
        std::int64_t ts = 0;
        if (e.is_regular_file() && e.path().extension() == ".json" && parse_ts(e.path().stem().string(), ts))
            found.push_back(ts);
    }
    std::sort(found.begin(), found.end());
    ts_.clear();
    records_ = CaseArchive{};
    for (std::int64_t ts : found) {
        try {
            records_.append(to_record(parse_cycle_report(read_file(cycle_path(ts)))));
            ts_.push_back(ts);
        } catch (const Error& e) {
            throw StorageError("archive document " + cycle_path(ts).string() + " is unreadable: " + e.what());
        }
    }
    write_index();
}

void ArchiveStore::write_index() const {
    std::string text;
    for (std::int64_t ts : ts_) text += std::to_string(ts) + "\n";
    atomic_write(root_ / "index", text);
}

void ArchiveStore::persist(const CycleReport& report, const Snapshot* snap) {
    if (report.ephemeral) throw PreconditionError("ephemeral reports are never archived");
    std::unique_lock lock(mu_);
    if (!ts_.empty() && report.snapshot_ts <= ts_.back())
        throw PreconditionError("cycle timestamp " + std::to_string(report.snapshot_ts) +
                                " does not follow the latest archived " + std::to_string(ts_.back()));
    if (snap) {
        atomic_write(snapshot_path(report.snapshot_ts), serialize(*snap));
        fire("snapshot_written");
    }
    std::function<void(std::string_view)> hook = [](std::string_view s) { fire(s); };
    const std::string doc = serialize(report);
    atomic_write(cycle_path(report.snapshot_ts), doc, hook, "report_partial");
    fire("report_committed");
    ts_.push_back(report.snapshot_ts);
    records_.append(report);
    write_index();
    fire("index_written");
}

std::optional<CycleReport> ArchiveStore::load(std::int64_t ts) const {
    {
        std::shared_lock lock(mu_);
        if (!std::binary_search(ts_.begin(), ts_.end(), ts)) return std::nullopt;
    }
    return parse_cycle_report(read_file(cycle_path(ts)));
}

std::optional<CycleReport> ArchiveStore::latest() const {
    const auto ts = latest_ts();
    if (!ts) return std::nullopt;
    return load(*ts);
}

std::optional<Snapshot> ArchiveStore::load_snapshot(std::int64_t ts) const {
    const auto p = snapshot_path(ts);
    if (!fs::exists(p)) return std::nullopt;
    return load_snapshot_file(p.string());
}

std::vector<std::int64_t> ArchiveStore::timestamps() const {
    std::shared_lock lock(mu_);
    return ts_;
}

std::optional<std::int64_t> ArchiveStore::latest_ts() const {
    std::shared_lock lock(mu_);
    if (ts_.empty()) return std::nullopt;
    return ts_.back();
}

CaseArchive ArchiveStore::records() const {
    std::shared_lock lock(mu_);
    return records_;
}

std::string ArchiveStore::content_hash() const {
    std::shared_lock lock(mu_);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root_))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& f : files) {
        mix(fs::relative(f, root_).string());
        mix(std::string_view("\0", 1));
        mix(read_file(f));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dsa
