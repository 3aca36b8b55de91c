#pragma once

// Engine configuration file (JSON).  Every block is optional; absent keys take
// the documented defaults and unknown keys are rejected.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsa/criteria.hpp"
#include "dsa/dynsim.hpp"
#include "dsa/policy.hpp"
#include "dsa/powerflow.hpp"
#include "dsa/screener.hpp"

namespace dsa {

struct EngineConfig {
    double cycle_period_s = 300.0;
    double budget_s = 300.0;
    int workers = 1;
    SecurityLimits limits;
    VoltageCriteria voltage;
    SimConfig sim;
    bool angle_screening = true;
    SolveOptions power_flow;
    ContingencyRules contingencies;
    SeverityNorms severity;

    std::string policy_profile = "2023";
    MuonMode muon_mode = MuonMode::system;
    std::map<Region, int> muon_min_by_region;
    PolicyCatalog catalog;

    std::string archive_path = "archive";
    std::string inbox_path = "inbox";
    std::string listen = "127.0.0.1:8080";
    int max_concurrent_whatifs = 2;
    std::string dump_traces_dir;

    /// Profile limits with the configured MUON mode applied.
    /// Throws UnknownProfileError.
    PolicyLimits policy_limits() const;
    ScreenOptions screen_options() const;
    /// Throws ConfigError naming the violated invariant.
    void validate() const;
};

/// Throws ConfigError (malformed document, unknown key, bad value).
EngineConfig config_from_json(const nlohmann::json& doc);
EngineConfig load_config_file(const std::string& path);

/// Applies `key=value` overrides to a config document before parsing.
/// Dotted keys address nested blocks ("simulation.dt=0.002"); a bare key is
/// looked up in the `limits` block ("rocof_limit=0.95").  Values are parsed
/// as JSON when possible, otherwise taken as strings.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// "host:port" split; throws ConfigError.
std::pair<std::string, int> parse_listen(const std::string& listen);

}  // namespace dsa
