#include "dsa/policy.hpp"

#include <cmath>

#include "dsa/error.hpp"
#include "dsa/screener.hpp"

namespace dsa {

void PolicyLimits::validate() const {
    if (!(snsp_max_pct > 0) || !(rocof_limit_hz_s > 0) || !(inertia_floor_mws > 0) || muon_min <= 0)
        throw ConfigError("policy profile " + profile + ": all limits must be positive");
    if (muon_mode == MuonMode::per_region && muon_min_by_region.empty())
        throw ConfigError("policy profile " + profile + ": per_region MUON mode needs muon_min_by_region");
}

const ConstraintStatus& PolicyReport::at(const std::string& name) const {
    for (const auto& c : constraints)
        if (c.name == name) return c;
    throw UnknownElementError("no policy constraint named " + name);
}

PolicyCatalog::PolicyCatalog() {
    PolicyLimits y2023;
    y2023.profile = "2023";
    y2023.snsp_max_pct = 75.0;
    y2023.rocof_limit_hz_s = 1.0;
    y2023.inertia_floor_mws = 23000.0;
    y2023.muon_min = 7;
    profiles_[y2023.profile] = y2023;

    PolicyLimits y2030;
    y2030.profile = "2030";
    y2030.snsp_max_pct = 95.0;
    y2030.rocof_limit_hz_s = 1.0;
    y2030.inertia_floor_mws = 20000.0;
    y2030.muon_min = 3;
    profiles_[y2030.profile] = y2030;
}

void PolicyCatalog::add(PolicyLimits limits) {
    limits.validate();
    profiles_[limits.profile] = std::move(limits);
}

PolicyLimits PolicyCatalog::load_profile(const std::string& name) const {
    auto it = profiles_.find(name);
    if (it == profiles_.end()) throw UnknownProfileError("unknown policy profile '" + name + "'");
    return it->second;
}

std::vector<std::string> PolicyCatalog::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : profiles_) out.push_back(k);
    return out;
}

PolicyLimits load_profile(const std::string& name) { return PolicyCatalog{}.load_profile(name); }

PolicyReport check(const SystemMetrics& metrics, const PolicyLimits& limits, const CycleReport* latest) {
    PolicyReport r;
    r.profile = limits.profile;

    ConstraintStatus snsp{"snsp", metrics.snsp_pct, limits.snsp_max_pct, metrics.snsp_pct <= limits.snsp_max_pct};
    snsp.headroom = limits.snsp_max_pct - metrics.snsp_pct;
    if (metrics.snsp_exceeds_100) snsp.note = "SNSP above 100%: exports exceed demand";
    r.constraints.push_back(snsp);

    ConstraintStatus rocof{"rocof", 0.0, limits.rocof_limit_hz_s, true};
    if (latest) {
        double worst = 0.0;
        for (const auto& c : latest->cases) {
            if (c.status == CaseStatus::failed) continue;
            worst = std::max({worst, std::abs(c.metrics.rocof_max), std::abs(c.metrics.rocof_min)});
        }
        rocof.value = worst;
        rocof.compliant = worst <= limits.rocof_limit_hz_s;
        rocof.headroom = limits.rocof_limit_hz_s - worst;
    } else {
        rocof.evaluated = false;
        rocof.note = "no contingency results supplied";
    }
    r.constraints.push_back(rocof);

    ConstraintStatus inertia{"inertia", metrics.inertia_mws, limits.inertia_floor_mws,
                             metrics.inertia_mws >= limits.inertia_floor_mws};
    inertia.headroom = metrics.inertia_mws - limits.inertia_floor_mws;
    r.constraints.push_back(inertia);

    if (limits.muon_mode == MuonMode::system) {
        ConstraintStatus muon{"muon", static_cast<double>(metrics.muon_count), static_cast<double>(limits.muon_min),
                              metrics.muon_count >= limits.muon_min};
        muon.headroom = metrics.muon_count - limits.muon_min;
        r.constraints.push_back(muon);
    } else {
        for (const auto& [region, min] : limits.muon_min_by_region) {
            auto it = metrics.muon_by_region.find(region);
            const int count = it == metrics.muon_by_region.end() ? 0 : it->second;
            ConstraintStatus muon{"muon_" + to_string(region), static_cast<double>(count), static_cast<double>(min),
                                  count >= min};
            muon.headroom = count - min;
            r.constraints.push_back(muon);
        }
    }

    ConstraintStatus strength{"system_strength", 0.0, 0.0, true};
    strength.evaluated = false;
    strength.note = "reserved; metric not yet defined";
    r.constraints.push_back(strength);

    for (const auto& c : r.constraints)
        if (c.evaluated && !c.compliant) r.compliant = false;
    return r;
}

}  // namespace dsa
