#pragma once

// Operational policy constraints evaluated on a snapshot's system metrics:
// SNSP ceiling, RoCoF limit, inertia floor, minimum units online (MUON).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsa/netmodel.hpp"

namespace dsa {

struct CycleReport;

enum class MuonMode { system, per_region };

struct PolicyLimits {
    std::string profile = "2023";
    double snsp_max_pct = 75.0;
    double rocof_limit_hz_s = 1.0;
    double inertia_floor_mws = 23000.0;
    int muon_min = 7;
    MuonMode muon_mode = MuonMode::system;
    std::map<Region, int> muon_min_by_region;  // used in per_region mode

    void validate() const;
    bool operator==(const PolicyLimits&) const = default;
};

struct ConstraintStatus {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool compliant = true;
    bool evaluated = true;
    /// Distance to the limit in the compliant direction (negative when violated).
    double headroom = 0.0;
    std::string note = {};

    bool operator==(const ConstraintStatus&) const = default;
};

struct PolicyReport {
    std::string profile;
    std::vector<ConstraintStatus> constraints;  // snsp, rocof, inertia, muon, system_strength
    bool compliant = true;

    const ConstraintStatus& at(const std::string& name) const;
    bool operator==(const PolicyReport&) const = default;
};

/// Built-in profiles "2023" and "2030" plus any user-supplied ones.
class PolicyCatalog {
public:
    PolicyCatalog();
    void add(PolicyLimits limits);
    /// Accepts a profile name or a year.  Throws UnknownProfileError.
    PolicyLimits load_profile(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, PolicyLimits> profiles_;
};

PolicyLimits load_profile(const std::string& name);

/// RoCoF compliance comes from `latest` (any case whose windowed RoCoF
/// magnitude exceeds the operational limit); without a report it is not
/// evaluated.
PolicyReport check(const SystemMetrics& metrics, const PolicyLimits& limits, const CycleReport* latest = nullptr);

}  // namespace dsa
