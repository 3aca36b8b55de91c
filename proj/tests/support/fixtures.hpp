#pragma once

// Snapshot builders and small helpers shared by the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dsa/analytics.hpp"
#include "dsa/config.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/screener.hpp"

namespace fx {

using namespace dsa;

Bus bus(const std::string& id, BusKind kind, double v = 1.0, double kv = 220.0, Region region = Region::IE);
Branch line(const std::string& id, const std::string& from, const std::string& to, double x, double rating = 1000.0,
            double r = 0.0, double b = 0.0);
SyncMachine machine(const std::string& id, const std::string& at, double s, double h, double p, double p_max);
IbrUnit ibr(const std::string& id, const std::string& at, IbrKind kind, double p);
Load load(const std::string& id, const std::string& at, double p, double q = 0.0, double fs = 0.0);

/// Slack B1 (1.0 pu) feeding a load at B2 over one x = 0.1 line, 100 MVA base.
/// With `pv_receiving` B2 holds 1.0 pu through a zero-output machine.
Snapshot two_bus(double load_mw, bool pv_receiving = false);

/// Same as two_bus() plus one wind unit at B2 (one line, one machine, one IBR).
Snapshot two_bus_with_ibr();

/// Chain B1 - B2 - B3, every bus held at 1.0 pu, lossless lines x12, x23.
struct ChainCase {
    double x12 = 0.08;
    double x23 = 0.12;
    double gen2_mw = 40.0;
    double load2_mw = 90.0;
    double load3_mw = 60.0;
};
Snapshot three_bus_chain(const ChainCase& c);

/// Ten machines, 2300 MWs each (23000 MWs in total), on a five-bus ring with
/// a 700 MW HVDC import (id "HVDC1").  Loads are frequency-insensitive and
/// damping is zero so the initial RoCoF is exactly the swing-law value.
Snapshot ten_machine(double import_mw = 700.0);

/// The 10-machine fixture with load relief and damping for convergence runs.
Snapshot ten_machine_damped();

/// Ten machines where only G01 can raise output (all others are pinned at
/// p_set), for the governor comparison.
Snapshot ten_machine_one_governor();

/// One machine (G1 at B1) against a large machine (G2 at B2) over two
/// parallel lines; see SmibParams for the numbers.
struct SmibParams {
    double s1 = 500.0, h1 = 3.0, p1 = 400.0;
    double s2 = 5000.0, h2 = 5.0;
    double load = 1000.0;
    double x_line = 0.1;  // each of L1, L2
    double xd = 0.3;      // both machines, own base
    double base = 100.0;
};
Snapshot smib(const SmibParams& p = {});

/// Fault at B1 cleared by opening L1 after `clearing_s`.
Contingency smib_fault(double clearing_s);

/// Seven machines on a meshed 4-bus grid where tripping G_BIG gives a
/// windowed RoCoF of about -0.95 Hz/s and every other case is secure
/// (governors enabled).
Snapshot rocof_minus_case();

/// An exporting system whose HVDC export loss (740 MW) exceeds +0.9 Hz/s
/// with governors enabled.  Six large units online (one short of the 2023
/// MUON minimum) and an offline large unit "G_SPARE" (500 MVA, H = 6 s) that
/// can be committed.
Snapshot export_loss_case();

/// SNSP 78 %: secure, compliant in 2030, non-compliant in 2023.
Snapshot snsp78_case();

/// Inertia 22000 MWs, below the 2023 floor, otherwise secure.
Snapshot inertia22000_case();

/// Engine configuration used with the fixtures: frequency model only unless
/// `angle` is set, governors frozen unless `governors` is set.
EngineConfig config_for_tests(bool angle = false, bool governors = false);

std::filesystem::path fixture_dir();
Snapshot load_fixture(const std::string& name);

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, const std::string& text);
std::string read_file(const std::filesystem::path& p);

/// A complete report with one case per entry of `bindings` (empty set =
/// secure) and the given system metrics.
CycleReport planted_report(std::int64_t ts, const SystemMetrics& m, const std::vector<BindingSet>& bindings);

SystemMetrics metrics(double inertia, double demand, double wind);

}  // namespace fx
