#pragma once

// AC power flow (full Newton-Raphson, polar form) and quasi-steady-state
// voltage / thermal assessment.

#include <map>
#include <string>
#include <vector>

#include "dsa/netmodel.hpp"

namespace dsa {

struct SolveOptions {
    double tol = 1e-8;  // pu power mismatch
    int max_iter = 20;
    /// Start every bus from 1.0 pu / 0 rad (PV and slack keep their setpoint
    /// magnitude) instead of the voltages carried by the snapshot.
    bool flat_start = false;
    /// Islands without any online machine are de-energized instead of
    /// raising IslandError.  Used for post-contingency solves.
    bool allow_deenergized = false;
};

struct BranchFlow {
    double p_from = 0.0;  // MW into the branch at from_bus
    double q_from = 0.0;
    double p_to = 0.0;  // MW into the branch at to_bus
    double q_to = 0.0;
    double loading_pct = 0.0;
};

struct PowerFlowSolution {
    std::vector<double> v_mag;  // per bus, pu
    std::vector<double> v_ang;  // per bus, rad
    std::vector<bool> energized;
    std::vector<BranchFlow> flows;  // per branch; zero when out of service
    std::vector<double> machine_p;  // per machine MW, slack share included
    std::vector<int> slack_buses;   // one per energized island
    double slack_injection_mw = 0.0;
    double losses_mw = 0.0;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;  // pu
    std::vector<double> mismatch_history;
    std::string diagnostic;
};

/// Solves the AC power flow.  Non-convergence is reported through
/// `converged = false`; SingularJacobianError and IslandError are thrown.
PowerFlowSolution solve(const Snapshot& snap, const SolveOptions& opts = {});

/// Convenience overload with the two most common knobs.
PowerFlowSolution solve(const Snapshot& snap, double tol, int max_iter);

/// Returns a copy of `snap` whose bus voltages are the solution's.
Snapshot with_solution_voltages(const Snapshot& snap, const PowerFlowSolution& sol);

struct VoltageRange {
    double v_min = 0.90;
    double v_max = 1.10;
};

struct VoltageCriteria {
    /// Keyed by nominal kV; buses whose level is absent use `fallback`.
    std::map<double, VoltageRange> ranges;
    VoltageRange fallback;
    double thermal_pct = 100.0;

    const VoltageRange& range_for(double nominal_kv) const;
};

/// `no_solution` marks a post-contingency power flow that did not converge.
enum class ViolationKind { over_voltage, under_voltage, thermal, no_solution };

struct Violation {
    std::string element;
    ViolationKind kind = ViolationKind::over_voltage;
    double value = 0.0;  // pu for voltage, MVA for thermal
    double limit = 0.0;

    bool operator==(const Violation&) const = default;
};

struct VoltageAssessment {
    std::vector<Violation> violations;
    bool secure = true;
};

/// Throws NotConvergedError when `sol` did not converge.
VoltageAssessment assess_voltage(const Snapshot& snap, const PowerFlowSolution& sol,
                                 const VoltageCriteria& criteria);

std::string to_string(ViolationKind k);
ViolationKind parse_violation_kind(const std::string& s);

}  // namespace dsa
