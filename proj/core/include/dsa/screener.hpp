#pragma once

// Contingency set construction and parallel N-1 screening of one snapshot.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsa/contingency.hpp"
#include "dsa/criteria.hpp"
#include "dsa/dynsim.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/policy.hpp"
#include "dsa/powerflow.hpp"

namespace dsa {

struct SplitDefinition {
    std::string id;
    std::vector<std::string> branches;
    std::string description;

    bool operator==(const SplitDefinition&) const = default;
};

struct ContingencyRules {
    bool include_branches = true;
    bool include_machines = true;
    bool include_ibr = true;
    /// IBR and HVDC units with |p| below this are not screened.
    double ibr_mw_floor = 0.0;
    std::vector<SplitDefinition> splits;
    /// When set, every branch outage is preceded by a bolted fault at its
    /// from-bus cleared after this many seconds.
    std::optional<double> line_fault_clearing_s;

    bool operator==(const ContingencyRules&) const = default;
};

/// One contingency per in-service branch, online machine and online IBR at
/// or above the floor, plus the declared splits; sorted by id.
std::vector<Contingency> build_contingency_set(const Snapshot& snap, const ContingencyRules& rules);

enum class CaseStatus { secure, insecure, failed };

struct CaseResult {
    std::string contingency_id;
    ContingencyKind kind = ContingencyKind::gen_trip;
    std::string description;
    SecurityMetrics metrics;
    double wall_time_s = 0.0;
    CaseStatus status = CaseStatus::secure;
    std::string failure_reason;
};

struct Totals {
    int cases = 0;
    int secure = 0;
    int insecure = 0;
    int failed = 0;

    bool operator==(const Totals&) const = default;
};

struct Provenance {
    std::optional<std::int64_t> base_ts;
    std::vector<Modification> modifications;
    std::optional<std::string> policy_profile;
};

struct CycleReport {
    std::int64_t snapshot_ts = 0;
    SystemMetrics system_metrics;
    PolicyReport policy;
    SecurityLimits limits;
    std::vector<CaseResult> cases;
    Totals totals;
    double wall_time_s = 0.0;
    double budget_s = 0.0;
    bool over_budget = false;
    /// "complete", or "failed" for a cycle whose base case could not be assessed.
    std::string status = "complete";
    std::string diagnosis;
    bool ephemeral = false;
    std::optional<Provenance> provenance;
};

struct ScreenOptions {
    SecurityLimits limits;
    VoltageCriteria voltage;
    SimConfig sim;
    /// Also run the angle-coupled model for the rotor-angle margin.
    bool angle_screening = true;
    double budget_s = 300.0;
    int workers = 1;
    SolveOptions power_flow;
    /// Directory for per-case frequency trace CSVs; empty disables dumping.
    std::string dump_traces_dir;
};

/// Screens every contingency; the merged report is independent of worker
/// count and completion order.  Throws BasecaseInsecureError when the base
/// case fails its own power flow or voltage assessment.
CycleReport screen(const Snapshot& snap, const std::vector<Contingency>& set, const ScreenOptions& opts);

/// Runs one case against a prepared model.  Never throws: failures become
/// a `failed` CaseResult.
CaseResult screen_case(const DynamicModel& model, const Contingency& c, const ScreenOptions& opts);

Totals tally(const std::vector<CaseResult>& cases);

/// Normalization constants for severity ranking; each criterion's
/// exceedance is divided by its constant.
struct SeverityNorms {
    double rocof_hz_s = 0.9;
    double frequency_hz = 1.0;
    double angle_margin = 1.0;
    double voltage_pu = 0.1;
    double thermal_pct = 100.0;

    bool operator==(const SeverityNorms&) const = default;
};

struct RankedCase {
    std::string contingency_id;
    double severity = 0.0;
    Binding worst = Binding::voltage;
};

double severity(const CaseResult& c, const SecurityLimits& limits, const SeverityNorms& norms, Binding* worst = nullptr);

/// Insecure cases, most severe first, ties by contingency id.
std::vector<RankedCase> rank_insecure(const CycleReport& report, const SeverityNorms& norms = {});

std::string to_string(CaseStatus s);
CaseStatus parse_case_status(const std::string& s);

}  // namespace dsa
