#pragma once

// RMS time-domain simulation of a contingency: swing equations, first-order
// governors with droop, frequency-dependent loads.
//
// Two electrical couplings are available.  `coi_uniform` integrates one
// frequency per electrical island (fast, used for the frequency criteria).
// `dc_network` Kron-reduces a lossless unit-voltage network onto the machine
// internal nodes and couples machines through k_ij * sin(delta_i - delta_j),
// which allows inter-machine swings and pole slipping.

#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dsa/contingency.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/powerflow.hpp"

namespace dsa {

enum class Integrator { trapezoidal, rk4 };
enum class NetworkModel { coi_uniform, dc_network };

struct SimConfig {
    double dt = 0.005;
    double t_end = 10.0;
    double event_time = 1.0;
    Integrator integrator = Integrator::trapezoidal;
    NetworkModel network_model = NetworkModel::coi_uniform;
    /// false freezes every governor at its initial output.
    bool governors = true;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct DynamicResponse {
    std::vector<double> t;
    std::vector<std::string> machine_ids;
    std::vector<double> machine_ek;  // MWs, kinetic energy of each machine
    // [machine][step]
    std::vector<std::vector<double>> delta;  // rad
    std::vector<std::vector<double>> freq;   // Hz
    std::vector<std::vector<double>> pmech;  // MW
    std::vector<double> f_coi;               // Hz, over machines online at each step
    std::vector<bool> online_after;          // machine still online after the event
    std::vector<int> trip_step;              // first offline step, -1 if never tripped
    /// Machines grouped by electrical island once the event has settled.
    std::vector<std::vector<int>> islands;
    double nominal_hz = 50.0;
    double event_time = 0.0;
    int event_step = 0;
    bool has_event = false;
    NetworkModel network_model = NetworkModel::coi_uniform;
    std::vector<std::string> events;
};

/// Initial conditions (power flow, machine outputs, pre-event reduced
/// network) for one snapshot.  Immutable and shareable between threads;
/// every contingency of a cycle starts from the same prepared model.
class DynamicModel {
public:
    /// Throws InitError when the base power flow does not converge.
    static std::shared_ptr<const DynamicModel> prepare(const Snapshot& snap, const SolveOptions& pf = {});

    DynamicResponse simulate(const std::optional<Contingency>& c, const SimConfig& cfg) const;

    const Snapshot& snapshot() const { return snap_; }
    const PowerFlowSolution& base_flow() const { return pf_; }
    /// False when the dc_network initial angles could not be found; the
    /// reason is in angle_model_error().
    bool angle_model_ready() const;
    const std::string& angle_model_error() const;

    struct Impl;
    DynamicModel(Snapshot snap, PowerFlowSolution pf);
    ~DynamicModel();

private:
    Snapshot snap_;
    PowerFlowSolution pf_;
    std::unique_ptr<Impl> impl_;
};

DynamicResponse simulate(const Snapshot& snap, const std::optional<Contingency>& c, const SimConfig& cfg);

/// Inertia-weighted mean frequency over `machines` (indices into the
/// response), counting only machines online at each step.
/// Throws NoMachinesError when the set is empty or never online.
std::vector<double> coi_frequency(const DynamicResponse& resp, std::span<const int> machines);

/// CSV dump: header `t,f_coi,f_<id>...,delta_<id>...`, one row per step.
void write_trace_csv(const DynamicResponse& resp, std::ostream& out);

std::string to_string(Integrator i);
std::string to_string(NetworkModel m);

}  // namespace dsa
