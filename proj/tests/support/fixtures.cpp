#include "fixtures.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dsa/policy.hpp"
#include "dsa/snapshot_io.hpp"

namespace fx {

Bus bus(const std::string& id, BusKind kind, double v, double kv, Region region) {
    Bus b;
    b.id = id;
    b.kind = kind;
    b.v_mag = v;
    b.nominal_kv = kv;
    b.region = region;
    return b;
}

Branch line(const std::string& id, const std::string& from, const std::string& to, double x, double rating, double r,
            double b) {
    Branch br;
    br.id = id;
    br.from_bus = from;
    br.to_bus = to;
    br.x = x;
    br.r = r;
    br.b_shunt = b;
    br.mva_rating = rating;
    return br;
}

SyncMachine machine(const std::string& id, const std::string& at, double s, double h, double p, double p_max) {
    SyncMachine g;
    g.id = id;
    g.bus = at;
    g.s_rated = s;
    g.h = h;
    g.p_set = p;
    g.p_max = p_max;
    g.p_min = 0.0;
    return g;
}

IbrUnit ibr(const std::string& id, const std::string& at, IbrKind kind, double p) {
    IbrUnit u;
    u.id = id;
    u.bus = at;
    u.kind = kind;
    u.p = p;
    return u;
}

Load load(const std::string& id, const std::string& at, double p, double q, double fs) {
    Load l;
    l.id = id;
    l.bus = at;
    l.p = p;
    l.q = q;
    l.freq_sensitivity = fs;
    return l;
}

Snapshot two_bus(double load_mw, bool pv_receiving) {
    Snapshot s;
    s.timestamp = 1000;
    s.buses = {bus("B1", BusKind::slack), bus("B2", pv_receiving ? BusKind::pv : BusKind::pq)};
    s.branches = {line("L1", "B1", "B2", 0.1)};
    s.machines = {machine("G1", "B1", 1000.0, 5.0, load_mw, std::max(2.0 * load_mw, 100.0))};
    if (pv_receiving) s.machines.push_back(machine("G2", "B2", 100.0, 2.0, 0.0, 100.0));
    s.loads = {load("D2", "B2", load_mw)};
    return s;
}

Snapshot two_bus_with_ibr() {
    Snapshot s = two_bus(100.0);
    s.ibr_units = {ibr("W2", "B2", IbrKind::wind, 20.0)};
    s.machines[0].p_set = 80.0;
    return s;
}

Snapshot three_bus_chain(const ChainCase& c) {
    Snapshot s;
    s.timestamp = 1000;
    s.buses = {bus("B1", BusKind::slack), bus("B2", BusKind::pv), bus("B3", BusKind::pv)};
    s.branches = {line("L12", "B1", "B2", c.x12), line("L23", "B2", "B3", c.x23)};
    const double g1 = c.load2_mw + c.load3_mw - c.gen2_mw;
    s.machines = {machine("G1", "B1", 1000.0, 5.0, g1, 1000.0), machine("G2", "B2", 500.0, 5.0, c.gen2_mw, 500.0),
                  machine("G3", "B3", 100.0, 5.0, 0.0, 100.0)};
    s.loads = {load("D2", "B2", c.load2_mw), load("D3", "B3", c.load3_mw)};
    return s;
}

namespace {

Snapshot ring5(double import_mw, double fs, double d) {
    Snapshot s;
    s.timestamp = 2000;
    for (int i = 1; i <= 5; ++i)
        s.buses.push_back(bus("R" + std::to_string(i), i == 1 ? BusKind::slack : BusKind::pv));
    for (int i = 1; i <= 5; ++i)
        s.branches.push_back(line("RL" + std::to_string(i), "R" + std::to_string(i),
                                  "R" + std::to_string(i % 5 + 1), 0.05, 2000.0));
    for (int i = 1; i <= 10; ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "G%02d", i);
        auto g = machine(id, "R" + std::to_string((i - 1) / 2 + 1), 575.0, 4.0, 230.0, 500.0);
        g.p_min = 50.0;
        g.d = d;
        s.machines.push_back(g);
    }
    s.ibr_units = {ibr("HVDC1", "R3", IbrKind::hvdc, import_mw)};
    const double per_bus = (10 * 230.0 + import_mw) / 5.0;
    for (int i = 1; i <= 5; ++i) s.loads.push_back(load("D" + std::to_string(i), "R" + std::to_string(i), per_bus, 0.0, fs));
    return s;
}

// Four buses (ring plus one diagonal); machines, IBR and load are spread
// round-robin.  N1 is the slack and always receives the first machine.
Snapshot mesh4(std::vector<SyncMachine> machines, std::vector<IbrUnit> units, double demand, double fs,
               std::int64_t ts) {
    Snapshot s;
    s.timestamp = ts;
    for (int i = 1; i <= 4; ++i) s.buses.push_back(bus("N" + std::to_string(i), i == 1 ? BusKind::slack : BusKind::pv));
    s.branches = {line("M12", "N1", "N2", 0.02, 4000.0), line("M23", "N2", "N3", 0.02, 4000.0),
                  line("M34", "N3", "N4", 0.02, 4000.0), line("M41", "N4", "N1", 0.02, 4000.0),
                  line("M13", "N1", "N3", 0.03, 4000.0)};
    int k = 0;
    for (auto& g : machines) {
        if (g.bus.empty()) g.bus = "N" + std::to_string(k % 4 + 1);
        ++k;
        s.machines.push_back(g);
    }
    k = 0;
    for (auto& u : units) {
        if (u.bus.empty()) u.bus = "N" + std::to_string(k % 4 + 1);
        ++k;
        s.ibr_units.push_back(u);
    }
    for (int i = 1; i <= 4; ++i) s.loads.push_back(load("D" + std::to_string(i), "N" + std::to_string(i), demand / 4.0, 0.0, fs));
    return s;
}

SyncMachine unit(const std::string& id, double s, double h, double p, bool large = true) {
    auto g = machine(id, "", s, h, p, 0.95 * s);
    g.p_min = 0.1 * s;
    g.is_large_unit = large;
    return g;
}

}  // namespace

Snapshot ten_machine(double import_mw) { return ring5(import_mw, 0.0, 0.0); }

Snapshot ten_machine_damped() { return ring5(700.0, 0.02, 1.0); }

Snapshot ten_machine_one_governor() {
    Snapshot s = ring5(700.0, 0.0, 0.0);
    for (std::size_t i = 1; i < s.machines.size(); ++i) {
        s.machines[i].p_min = s.machines[i].p_set;
        s.machines[i].p_max = s.machines[i].p_set;
    }
    return s;
}

Snapshot smib(const SmibParams& p) {
    Snapshot s;
    s.timestamp = 3000;
    s.base_mva = p.base;
    s.buses = {bus("B1", BusKind::pv), bus("B2", BusKind::slack)};
    s.branches = {line("L1", "B1", "B2", p.x_line, 2000.0), line("L2", "B1", "B2", p.x_line, 2000.0)};
    auto g1 = machine("G1", "B1", p.s1, p.h1, p.p1, p.s1);
    auto g2 = machine("G2", "B2", p.s2, p.h2, p.load - p.p1, p.s2);
    g1.xd_prime = p.xd;
    g2.xd_prime = p.xd;
    s.machines = {g1, g2};
    s.loads = {load("D2", "B2", p.load)};
    return s;
}

Contingency smib_fault(double clearing_s) {
    Contingency c;
    c.id = "line:L1";
    c.kind = ContingencyKind::line_trip;
    c.elements = {"L1"};
    c.description = "fault at B1 cleared by opening L1";
    c.fault_bus = "B1";
    c.clearing_time_s = clearing_s;
    return c;
}

Snapshot rocof_minus_case() {
    auto big = unit("G_BIG", 1200.0, 4.0, 887.0);
    big.bus = "N2";
    std::vector<SyncMachine> g;
    for (int i = 1; i <= 6; ++i) {
        auto u = unit("G" + std::to_string(i), 700.0, 5.0, 300.0);
        u.droop_r = 0.03;
        u.t_gov = 1.5;
        g.push_back(u);
        if (i == 1) g.push_back(big);
    }
    std::vector<IbrUnit> w;
    for (int i = 1; i <= 4; ++i) w.push_back(ibr("W" + std::to_string(i), "", IbrKind::wind, 250.0));
    return mesh4(g, w, 887.0 + 6 * 300.0 + 1000.0, 0.01, 4000);
}

Snapshot export_loss_case() {
    std::vector<SyncMachine> g;
    for (int i = 1; i <= 6; ++i) {
        auto u = unit("G" + std::to_string(i), 750.0, 4.0, 450.0);
        u.droop_r = 0.025;
        u.t_gov = 2.0;
        g.push_back(u);
    }
    auto spare = unit("G_SPARE", 500.0, 6.0, 0.0);
    spare.online = false;
    spare.p_min = 0.0;
    spare.bus = "N2";
    g.push_back(spare);
    std::vector<IbrUnit> w;
    for (int i = 1; i <= 4; ++i) w.push_back(ibr("W" + std::to_string(i), "", IbrKind::wind, 300.0));
    w.push_back(ibr("HVDC_EXP", "N3", IbrKind::hvdc, -740.0));
    return mesh4(g, w, 6 * 450.0 + 1200.0 - 740.0, 0.01, 5000);
}

Snapshot snsp78_case() {
    std::vector<SyncMachine> g;
    for (int i = 1; i <= 8; ++i) g.push_back(unit("G" + std::to_string(i), 500.0, 6.0, 137.5));
    std::vector<IbrUnit> w;
    for (int i = 1; i <= 13; ++i) w.push_back(ibr("W" + std::to_string(i), "", IbrKind::wind, 300.0));
    return mesh4(g, w, 5000.0, 0.01, 6000);
}

Snapshot inertia22000_case() {
    std::vector<SyncMachine> g;
    for (int i = 1; i <= 11; ++i) g.push_back(unit("G" + std::to_string(i), 500.0, 4.0, 250.0));
    std::vector<IbrUnit> w;
    for (int i = 1; i <= 4; ++i) w.push_back(ibr("W" + std::to_string(i), "", IbrKind::wind, 200.0));
    return mesh4(g, w, 11 * 250.0 + 800.0, 0.01, 7000);
}

EngineConfig config_for_tests(bool angle, bool governors) {
    EngineConfig cfg;
    cfg.angle_screening = angle;
    cfg.sim.governors = governors;
    cfg.workers = 1;
    return cfg;
}

std::filesystem::path fixture_dir() { return DSA_FIXTURE_DIR; }

Snapshot load_fixture(const std::string& name) { return load_snapshot_file((fixture_dir() / name).string()); }

TempDir::TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "dsa_test_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CycleReport planted_report(std::int64_t ts, const SystemMetrics& m, const std::vector<BindingSet>& bindings) {
    CycleReport r;
    r.snapshot_ts = ts;
    r.system_metrics = m;
    r.policy = check(m, load_profile("2023"));
    r.budget_s = 300.0;
    for (std::size_t i = 0; i < bindings.size(); ++i) {
        CaseResult c;
        char id[32];
        std::snprintf(id, sizeof id, "case:%04zu", i);
        c.contingency_id = id;
        c.description = "planted";
        c.metrics.binding = bindings[i];
        c.status = bindings[i].empty() ? CaseStatus::secure : CaseStatus::insecure;
        r.cases.push_back(c);
    }
    r.totals = tally(r.cases);
    return r;
}

SystemMetrics metrics(double inertia, double demand, double wind) {
    SystemMetrics m;
    m.inertia_mws = inertia;
    m.demand_mw = demand;
    m.wind_mw = wind;
    m.snsp_pct = 100.0 * wind / demand;
    m.muon_count = 8;
    return m;
}

}  // namespace fx
