#pragma once

// Network and snapshot data model plus system-wide metrics.
//
// A Snapshot is a plain value: once load_snapshot() (or validate()) accepts it
// nothing in the engine mutates it.  Operations that change the grid, such as
// apply_modifications() or apply_contingency(), return a fresh copy.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsa {

enum class BusKind { slack, pv, pq };
enum class Region { IE, NI };
enum class IbrKind { wind, solar, hvdc };

struct Bus {
    std::string id;
    double nominal_kv = 0.0;
    BusKind kind = BusKind::pq;
    double v_mag = 1.0;  // pu
    double v_ang = 0.0;  // rad
    Region region = Region::IE;

    bool operator==(const Bus&) const = default;
};

struct Branch {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    double r = 0.0;        // pu
    double x = 0.0;        // pu
    double b_shunt = 0.0;  // pu, total line charging
    double mva_rating = 0.0;
    bool in_service = true;

    bool operator==(const Branch&) const = default;
};

struct SyncMachine {
    std::string id;
    std::string bus;
    double s_rated = 0.0;  // MVA
    double h = 0.0;        // s, machine base
    double d = 0.0;        // pu damping, machine base
    double p_set = 0.0;    // MW
    double q_set = 0.0;    // MVAr
    double p_max = 0.0;
    double p_min = 0.0;
    double droop_r = 0.05;
    double t_gov = 0.5;        // s
    double xd_prime = 0.3;     // pu transient reactance, machine base
    bool online = true;
    bool is_large_unit = false;

    double kinetic_energy_mws() const { return h * s_rated; }
    bool operator==(const SyncMachine&) const = default;
};

struct IbrUnit {
    std::string id;
    std::string bus;
    IbrKind kind = IbrKind::wind;
    double p = 0.0;  // MW; hvdc negative = export
    double q = 0.0;
    bool online = true;

    bool operator==(const IbrUnit&) const = default;
};

struct Load {
    std::string id;
    std::string bus;
    double p = 0.0;
    double q = 0.0;
    double freq_sensitivity = 0.0;  // fraction of p per Hz

    bool operator==(const Load&) const = default;
};

struct Snapshot {
    std::int64_t timestamp = 0;  // UTC seconds
    double base_mva = 100.0;
    double nominal_hz = 50.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<SyncMachine> machines;
    std::vector<IbrUnit> ibr_units;
    std::vector<Load> loads;

    bool operator==(const Snapshot&) const = default;

    // Index lookups; -1 when absent.  Linear scans, networks are desk-sized.
    int bus_index(const std::string& id) const;
    int branch_index(const std::string& id) const;
    int machine_index(const std::string& id) const;
    int ibr_index(const std::string& id) const;
};

struct SystemMetrics {
    double inertia_mws = 0.0;
    double demand_mw = 0.0;
    double wind_mw = 0.0;
    double solar_mw = 0.0;
    double snsp_pct = 0.0;
    int muon_count = 0;
    std::map<Region, int> muon_by_region;
    double net_interchange_mw = 0.0;  // positive = net import
    bool snsp_exceeds_100 = false;

    bool operator==(const SystemMetrics&) const = default;
};

/// Checks every invariant of a snapshot; throws ValidationError naming the
/// first offending element.
void validate(const Snapshot& snap);

/// Connected components of buses over in-service branches, as bus indices.
std::vector<std::vector<int>> islands(const Snapshot& snap);

/// Throws DegenerateError when demand plus exports is zero.
SystemMetrics system_metrics(const Snapshot& snap);

enum class ModAction { set_p, commit, decommit };

struct Modification {
    std::string element;  // machine or IBR id
    ModAction action = ModAction::set_p;
    std::optional<double> mw;  // required for set_p, optional for commit

    bool operator==(const Modification&) const = default;
};

/// Returns a modified copy.  Throws UnknownElementError or LimitError.
Snapshot apply_modifications(const Snapshot& snap, const std::vector<Modification>& mods);

std::string to_string(BusKind k);
std::string to_string(Region r);
std::string to_string(IbrKind k);
std::string to_string(ModAction a);

}  // namespace dsa
