// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dsa/analytics.hpp"
#include "dsa/archive.hpp"
#include "dsa/criteria.hpp"
#include "dsa/dynsim.hpp"
#include "dsa/error.hpp"
#include "dsa/http_api.hpp"
#include "dsa/policy.hpp"
#include "dsa/powerflow.hpp"
#include "dsa/report_io.hpp"
#include "dsa/screener.hpp"
#include "dsa/service.hpp"
#include "dsa/snapshot_io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dsa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects sub-checks; the first few failures go into the detail line.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (ok) return;
        ++failed_;
        if (failed_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    void note(const std::string& s) { info_ += (info_.empty() ? "" : ", ") + s; }
    Outcome outcome() const {
        Outcome o;
        o.pass = failed_ == 0;
        o.detail = info_;
        if (failed_ > 0)
            o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(failed_) + "/" + std::to_string(total_) +
                        " checks failed: " + notes_;
        else
            o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(total_) + " checks";
        return o;
    }

private:
    int total_ = 0;
    int failed_ = 0;
    std::string notes_;
    std::string info_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome initial_rocof_law() {
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    SimConfig cfg;
    cfg.governors = false;
    cfg.t_end = 10.0;
    const Snapshot s = fx::ten_machine();
    const auto r = simulate(s, Contingency{"hvdc:HVDC1", ContingencyKind::hvdc_trip, {"HVDC1"}}, cfg);
    const double runtime = seconds_since(t0);

    double ek = 0.0;
    for (const auto& g : s.machines)
        if (g.online) ek += g.h * g.s_rated;
    const double expected = oracle::initial_rocof(700.0, ek);
    const int e = r.event_step;
    const double initial = (r.f_coi[e + 1] - r.f_coi[e]) / cfg.dt;
    c.expect(ek == 23000.0, "fixture kinetic energy is " + fmt("%.1f", ek));
    c.expect(std::abs(expected - (-0.7609)) < 5e-5, "oracle gives " + fmt("%.5f", expected));
    c.expect(std::abs(initial - expected) <= 0.02 * std::abs(expected), "simulated " + fmt("%.5f", initial));
    c.expect(runtime < 5.0, "runtime " + fmt("%.2f s", runtime));
    c.note("df/dt " + fmt("%.5f", initial) + " vs " + fmt("%.5f", expected) + " Hz/s, runtime " + fmt("%.3f s", runtime));
    return c.outcome();
}

// Every hand-built dynamic fixture with its full contingency set.
struct DynamicFixture {
    std::string name;
    Snapshot snap;
    NetworkModel model;
};

std::vector<DynamicFixture> dynamic_fixtures() {
    return {{"ten_machine", fx::ten_machine(), NetworkModel::coi_uniform},
            {"ten_machine_damped", fx::ten_machine_damped(), NetworkModel::coi_uniform},
            {"ten_machine_one_governor", fx::ten_machine_one_governor(), NetworkModel::coi_uniform},
            {"ten_machine(dc)", fx::ten_machine(), NetworkModel::dc_network},
            {"rocof_minus", fx::rocof_minus_case(), NetworkModel::coi_uniform},
            {"export_loss", fx::export_loss_case(), NetworkModel::coi_uniform},
            {"export_loss(dc)", fx::export_loss_case(), NetworkModel::dc_network},
            {"snsp78", fx::snsp78_case(), NetworkModel::coi_uniform},
            {"inertia22000", fx::inertia22000_case(), NetworkModel::coi_uniform},
            {"smib(dc)", fx::smib(), NetworkModel::dc_network}};
}

Outcome integrator_convergence() {
    Checks c;
    const SecurityLimits limits;
    double worst_nadir = 0.0, worst_rocof = 0.0, worst_trap_rk4 = 0.0;
    int cases = 0;
    for (const auto& fxt : dynamic_fixtures()) {
        const auto model = DynamicModel::prepare(fxt.snap);
        for (const auto& k : build_contingency_set(fxt.snap, {})) {
            SimConfig cfg;
            cfg.network_model = fxt.model;
            cfg.t_end = 15.0;
            DynamicResponse a;
            try {
                a = model->simulate(k, cfg);
            } catch (const Error&) {
                continue;  // e.g. losing the only machine of an island
            }
            SimConfig half = cfg;
            half.dt = cfg.dt / 2.0;
            SimConfig rk = cfg;
            rk.integrator = Integrator::rk4;
            const auto b = model->simulate(k, half);
            const auto r = model->simulate(k, rk);
            const auto pa = frequency_components(a, limits);
            const auto pb = frequency_components(b, limits);
            const auto pr = frequency_components(r, limits);

            const std::string where = fxt.name + " " + k.id;
            const double dev_a = 50.0 - pa.extremes.nadir, dev_b = 50.0 - pb.extremes.nadir;
            // Cases without a dip (pure over-frequency) have no nadir to converge.
            if (dev_a > 1e-3) {
                const double rel = std::abs(dev_a - dev_b) / dev_a;
                worst_nadir = std::max(worst_nadir, rel);
                c.expect(rel < 1e-3, where + " nadir deviation changes " + fmt("%.4f%%", 100 * rel));
            }
            auto extreme = [](const MetricComponents& p) {
                return std::abs(p.rocof.rocof_max) > std::abs(p.rocof.rocof_min) ? p.rocof.rocof_max : p.rocof.rocof_min;
            };
            const double ra = extreme(pa), rb = extreme(pb);
            if (std::abs(ra) > 1e-3) {
                const double rel = std::abs(ra - rb) / std::abs(ra);
                worst_rocof = std::max(worst_rocof, rel);
                c.expect(rel < 1e-3, where + " RoCoF changes " + fmt("%.4f%%", 100 * rel));
            }
            const double d = std::abs(pa.extremes.nadir - pr.extremes.nadir);
            worst_trap_rk4 = std::max(worst_trap_rk4, d);
            c.expect(d < 1e-3, where + " trapezoidal vs rk4 nadir " + fmt("%.2e Hz", d));
            ++cases;
        }
    }
    c.expect(cases > 50, "only " + std::to_string(cases) + " cases simulated");
    c.note(std::to_string(cases) + " cases; worst dt/2 change nadir " + fmt("%.4f%%", 100 * worst_nadir) + ", RoCoF " +
           fmt("%.4f%%", 100 * worst_rocof) + "; trap vs rk4 " + fmt("%.2e Hz", worst_trap_rk4));
    return c.outcome();
}

Outcome classification_exactness() {
    Checks c;
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto nominal = [] {
        MetricComponents m;
        m.extremes = {50.0, 50.0};
        return m;
    };
    long generated = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        // Table thresholds on the first trial, random admissible ones after.
        SecurityLimits lim;
        if (trial > 0) {
            lim.rocof_limit = 0.1 + 2.0 * u(rng);
            lim.nadir_limit = 47.0 + 2.9 * u(rng);
            lim.zenith_limit = 50.1 + 2.9 * u(rng);
        }
        // Secure background values for the criteria not under test.
        auto background = [&] {
            MetricComponents m = nominal();
            m.rocof.rocof_max = lim.rocof_limit * u(rng);
            m.rocof.rocof_min = -lim.rocof_limit * u(rng);
            m.extremes.nadir = 50.0 - (50.0 - lim.nadir_limit) * u(rng);
            m.extremes.zenith = 50.0 + (lim.zenith_limit - 50.0) * u(rng);
            return m;
        };
        struct Edge {
            Binding flag;
            std::function<void(MetricComponents&, double)> set;
            double limit;
            double beyond;
        };
        const Edge edges[] = {
            {Binding::rocof_plus, [](MetricComponents& m, double v) { m.rocof.rocof_max = v; }, lim.rocof_limit,
             std::nextafter(lim.rocof_limit, 1e9)},
            {Binding::rocof_minus, [](MetricComponents& m, double v) { m.rocof.rocof_min = v; }, -lim.rocof_limit,
             std::nextafter(-lim.rocof_limit, -1e9)},
            {Binding::zenith, [](MetricComponents& m, double v) { m.extremes.zenith = v; }, lim.zenith_limit,
             std::nextafter(lim.zenith_limit, 1e9)},
            {Binding::nadir, [](MetricComponents& m, double v) { m.extremes.nadir = v; }, lim.nadir_limit,
             std::nextafter(lim.nadir_limit, -1e9)},
        };
        for (const auto& e : edges) {
            MetricComponents at = background();
            e.set(at, e.limit);
            const auto s = classify(at, lim);
            c.expect(s.binding.empty(), display_name(e.flag) + " exactly at its limit binds");
            MetricComponents past = background();
            e.set(past, e.beyond);
            const auto b = classify(past, lim);
            c.expect(b.binding == BindingSet(static_cast<std::uint8_t>(e.flag)),
                     display_name(e.flag) + " one ulp beyond does not bind alone");
            generated += 2;
        }
    }
    c.note(std::to_string(generated) + " boundary cases");
    return c.outcome();
}

Outcome power_flow_oracle() {
    Checks c;
    // Two buses, receiving end held at 1.0 pu: sin(d) = P x.
    {
        const auto sol = solve(fx::two_bus(100.0, true));
        c.expect(sol.converged && std::abs(sol.v_ang[1] + std::asin(0.1)) < 1e-6, "2-bus PV angle");
    }
    // Two buses, unity power factor load: V2 = cos d, sin 2d = 2 P x.
    {
        const auto sol = solve(fx::two_bus(100.0, false));
        const double d = 0.5 * std::asin(0.2);
        c.expect(sol.converged && std::abs(sol.v_ang[1] + d) < 1e-6 && std::abs(sol.v_mag[1] - std::cos(d)) < 1e-6,
                 "2-bus PQ angle/magnitude");
    }
    // Three-bus chain with every magnitude held.
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        fx::ChainCase k;
        k.x12 = 0.05 + 0.1 * u(rng);
        k.x23 = 0.05 + 0.1 * u(rng);
        k.gen2_mw = 100.0 * u(rng);
        k.load2_mw = 150.0 * u(rng);
        k.load3_mw = 150.0 * u(rng);
        const auto sol = solve(fx::three_bus_chain(k));
        const double th2 = -std::asin((k.load2_mw + k.load3_mw - k.gen2_mw) / 100.0 * k.x12);
        const double th3 = th2 - std::asin(k.load3_mw / 100.0 * k.x23);
        c.expect(sol.converged && std::abs(sol.v_ang[1] - th2) < 1e-6 && std::abs(sol.v_ang[2] - th3) < 1e-6,
                 "3-bus chain trial " + std::to_string(t));
    }
    // Residual on every converged fixture, checked by an independent evaluation.
    double worst = 0.0;
    for (const auto& s : {fx::two_bus(100.0), fx::two_bus(100.0, true), fx::two_bus_with_ibr(),
                          fx::three_bus_chain({}), fx::ten_machine(), fx::ten_machine_damped(), fx::smib(),
                          fx::rocof_minus_case(), fx::export_loss_case(), fx::snsp78_case(), fx::inertia22000_case(),
                          fx::load_fixture("synthetic50.json")}) {
        const auto sol = solve(s);
        c.expect(sol.converged, "fixture did not converge");
        if (!sol.converged) continue;
        const double r = oracle::pf_residual(s, sol.v_mag, sol.v_ang);
        worst = std::max(worst, r);
        c.expect(r <= 1e-8, "residual " + fmt("%.2e", r));
    }
    // Beyond the static transfer limit (1000 MW held, 500 MW unity-pf PQ).
    for (double load : {1001.0, 1200.0, 2000.0, 5000.0}) {
        const auto sol = solve(fx::two_bus(load, true));
        c.expect(!sol.converged, "PV " + fmt("%.0f MW", load) + " reported converged");
    }
    for (double load : {501.0, 800.0, 2000.0}) {
        const auto sol = solve(fx::two_bus(load, false));
        c.expect(!sol.converged, "PQ " + fmt("%.0f MW", load) + " reported converged");
    }
    c.note("worst fixture residual " + fmt("%.1e pu", worst));
    return c.outcome();
}

Outcome rotor_angle_criterion() {
    Checks c;
    const fx::SmibParams p;
    const auto ea = oracle::smib_equal_area(p);
    const auto model = DynamicModel::prepare(fx::smib(p));
    c.expect(model->angle_model_ready(), "angle model not ready");
    SimConfig cfg;
    cfg.network_model = NetworkModel::dc_network;
    cfg.governors = false;
    cfg.dt = 0.001;
    cfg.t_end = 5.0;
    cfg.event_time = 0.5;
    const double below = angle_margin(model->simulate(fx::smib_fault(0.9 * ea.t_cc), cfg), 180.0);
    const double beyond = angle_margin(model->simulate(fx::smib_fault(1.1 * ea.t_cc), cfg), 180.0);
    c.expect(below > 0.0, "0.9 t_cc margin " + fmt("%.3f", below));
    c.expect(beyond < 0.0, "1.1 t_cc margin " + fmt("%.3f", beyond));
    c.note("t_cc " + fmt("%.4f s", ea.t_cc) + ", margin at 0.9 t_cc " + fmt("%+.3f", below) + ", at 1.1 t_cc " +
           fmt("%+.3f", beyond));
    return c.outcome();
}

Outcome screening_determinism_and_scale() {
    Checks c;
    const Snapshot s = fx::load_fixture("synthetic50.json");
    EngineConfig cfg;
    const auto set = build_contingency_set(s, cfg.contingencies);
    auto timed = [&](int workers, double& wall) {
        auto o = cfg.screen_options();
        o.workers = workers;
        const auto t0 = std::chrono::steady_clock::now();
        auto r = screen(s, set, o);
        wall = seconds_since(t0);
        return r;
    };
    double t1 = 0.0, t8 = 0.0;
    const auto r1 = timed(1, t1);
    const auto r8 = timed(8, t8);
    const bool same = serialize(r1, {true}) == serialize(r8, {true});
    c.expect(set.size() >= 780 && set.size() <= 820, std::to_string(set.size()) + " contingencies");
    c.expect(same, "1- and 8-worker reports differ");
    c.expect(t1 <= 60.0 && t8 <= 60.0, "wall time over 60 s");
    c.expect(t8 <= 0.3 * t1, "8-worker/1-worker ratio " + fmt("%.2f", t8 / t1) + " with " +
                                 std::to_string(std::thread::hardware_concurrency()) + " hardware thread(s)");
    c.note(std::to_string(set.size()) + " cases, " + std::to_string(r1.totals.insecure) + " insecure, 1 worker " +
           fmt("%.2f s", t1) + ", 8 workers " + fmt("%.2f s", t8) + (same ? ", reports identical" : ""));
    return c.outcome();
}

Outcome table_arithmetic() {
    Checks c;
    const long counts[] = {67, 160, 116, 49, 26};
    const Binding order[] = {Binding::rotor_angle, Binding::voltage, Binding::rocof_plus, Binding::zenith,
                             Binding::nadir};
    std::vector<BindingSet> all;
    for (int r = 0; r < 5; ++r)
        for (long k = 0; k < counts[r]; ++k) {
            BindingSet b;
            b.insert(order[r] == Binding::rocof_plus && k % 2 ? Binding::rocof_minus : order[r]);
            all.push_back(b);
        }
    all.resize(8594);
    std::mt19937 rng(8594);
    std::shuffle(all.begin(), all.end(), rng);
    CaseArchive a;
    for (int cyc = 0, at = 0; cyc < 11; ++cyc) {
        const int n = cyc < 3 ? 782 : 781;
        a.append(fx::planted_report(10000 + 300 * cyc, fx::metrics(25000, 4000, 1500),
                                    std::vector<BindingSet>(all.begin() + at, all.begin() + at + n)));
        at += n;
    }
    const auto t = summarize(a);
    const double pct[] = {0.78, 1.86, 1.35, 0.57, 0.30};
    const double comp[] = {16.03, 38.28, 27.75, 11.72, 6.22};
    c.expect(t.rows.size() == 5, "row count");
    for (std::size_t r = 0; r < t.rows.size() && r < 5; ++r) {
        c.expect(t.rows[r].total_binding_cases == counts[r], t.rows[r].constraint + " count");
        c.expect(t.rows[r].pct_of_all_cases == pct[r], t.rows[r].constraint + " pct " + fmt("%.2f", t.rows[r].pct_of_all_cases));
        c.expect(t.rows[r].comparative_pct == comp[r],
                 t.rows[r].constraint + " comparative " + fmt("%.2f", t.rows[r].comparative_pct));
    }
    c.expect(t.all_cases == 8594, "all cases");
    c.expect(t.insecure_cases == 418, "unique bindings");
    c.expect(t.insecure_pct == 4.86, "insecure pct " + fmt("%.2f", t.insecure_pct));
    std::string rows;
    for (const auto& r : t.rows) rows += (rows.empty() ? "" : " ") + fmt("%.2f", r.comparative_pct);
    c.note("comparative {" + rows + "}, insecure " + fmt("%.2f%%", t.insecure_pct) + " of " +
           std::to_string(t.all_cases));
    return c.outcome();
}

// Flags are drawn from a noisy stress score with the published dependence:
// RoCoF+ and Zenith rise with wind and fall with inertia and demand;
// RoCoF- and Nadir the reverse.
Outcome correlation_sign_recovery() {
    Checks c;
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    int good = 0;
    const int archives = 100;
    const Binding flags[] = {Binding::rocof_plus, Binding::zenith, Binding::rocof_minus, Binding::nadir};
    for (int k = 0; k < archives; ++k) {
        CaseArchive a;
        for (int cyc = 0; cyc < 120; ++cyc) {
            const double zi = u(rng), zd = u(rng), zw = u(rng);  // scaled to [0, 1]
            const auto m = fx::metrics(18000 + 14000 * zi, 2500 + 4000 * zd, 3000 * zw);
            const double high = zw - zi - zd, low = zd + zi - zw;
            std::vector<BindingSet> cases(20);
            for (auto& b : cases) {
                if (high + 0.6 * noise(rng) > 0.4) b.insert(Binding::rocof_plus);
                if (high + 0.6 * noise(rng) > 0.6) b.insert(Binding::zenith);
                if (low + 0.6 * noise(rng) > 1.4) b.insert(Binding::rocof_minus);
                if (low + 0.6 * noise(rng) > 1.6) b.insert(Binding::nadir);
            }
            a.append(fx::planted_report(1000 + cyc, m, cases));
        }
        bool ok = true;
        for (Binding f : flags) {
            const double sign = (f == Binding::rocof_plus || f == Binding::zenith) ? -1.0 : 1.0;
            for (auto v : {Variable::inertia, Variable::demand, Variable::wind}) {
                const double expected = v == Variable::wind ? -sign : sign;
                try {
                    const auto r = correlate(a, v, f);
                    if (!(r.coefficient * expected > 0.0)) ok = false;
                } catch (const DegenerateError&) {
                    ok = false;
                }
            }
        }
        good += ok;
    }
    c.expect(good >= 99, std::to_string(good) + "/100 archives");
    c.note(std::to_string(good) + "/" + std::to_string(archives) + " archives with all 12 signs correct");
    return c.outcome();
}

Outcome policy_profiles() {
    Checks c;
    const auto p23 = load_profile("2023");
    const auto p30 = load_profile("2030");
    auto base = [](double inertia, int muon, double snsp) {
        SystemMetrics m = fx::metrics(inertia, 1000.0, snsp * 10.0);
        m.snsp_pct = snsp;
        m.muon_count = muon;
        return m;
    };
    auto ok = [](const SystemMetrics& m, const PolicyLimits& p, const char* which) {
        return check(m, p).at(which).compliant;
    };
    const double up = 1e9, down = -1e9;
    // SNSP 75 -> 95.
    c.expect(ok(base(30000, 8, 75.0), p23, "snsp"), "SNSP 75 under 2023");
    c.expect(!ok(base(30000, 8, std::nextafter(75.0, up)), p23, "snsp"), "SNSP 75+ulp under 2023");
    c.expect(ok(base(30000, 8, std::nextafter(75.0, up)), p30, "snsp"), "SNSP 75+ulp under 2030");
    c.expect(ok(base(30000, 8, 95.0), p30, "snsp"), "SNSP 95 under 2030");
    c.expect(!ok(base(30000, 8, std::nextafter(95.0, up)), p30, "snsp"), "SNSP 95+ulp under 2030");
    // Inertia 23 -> 20 GWs.
    c.expect(ok(base(23000, 8, 50), p23, "inertia"), "23000 under 2023");
    c.expect(!ok(base(std::nextafter(23000.0, down), 8, 50), p23, "inertia"), "23000-ulp under 2023");
    c.expect(ok(base(std::nextafter(23000.0, down), 8, 50), p30, "inertia"), "23000-ulp under 2030");
    c.expect(ok(base(20000, 8, 50), p30, "inertia"), "20000 under 2030");
    c.expect(!ok(base(std::nextafter(20000.0, down), 8, 50), p30, "inertia"), "20000-ulp under 2030");
    // MUON 7 -> 3.
    c.expect(ok(base(30000, 7, 50), p23, "muon"), "MUON 7 under 2023");
    c.expect(!ok(base(30000, 6, 50), p23, "muon"), "MUON 6 under 2023");
    c.expect(ok(base(30000, 6, 50), p30, "muon"), "MUON 6 under 2030");
    c.expect(ok(base(30000, 3, 50), p30, "muon"), "MUON 3 under 2030");
    c.expect(!ok(base(30000, 2, 50), p30, "muon"), "MUON 2 under 2030");
    // Whole-report compliance on the fixtures.
    const auto m78 = system_metrics(fx::snsp78_case());
    c.expect(!check(m78, p23).compliant && check(m78, p30).compliant, "SNSP 78% fixture");
    const auto m22 = system_metrics(fx::inertia22000_case());
    c.expect(!check(m22, p23).compliant && check(m22, p30).compliant, "22000 MWs fixture");
    return c.outcome();
}

// --- service round trip -----------------------------------------------------

// Runs persist() in a child that dies at `stage`; returns the child's status.
int crash_during_persist(const fs::path& root, const CycleReport& report, const Snapshot& snap,
                         const std::string& stage) {
    const pid_t pid = fork();
    if (pid == 0) {
        ArchiveStore::set_fault_hook([stage](std::string_view s) {
            if (s == stage) _exit(42);
        });
        try {
            ArchiveStore store(root);
            store.persist(report, &snap);
        } catch (...) {
            _exit(1);
        }
        _exit(0);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void crash_injection(Checks& c) {
    const char* stages[] = {"snapshot_written", "report_partial", "report_committed", "index_written"};
    for (const char* stage : stages) {
        fx::TempDir dir;
        const auto root = dir / "archive";
        const EngineConfig cfg = fx::config_for_tests(false, true);
        Snapshot first = fx::inertia22000_case();
        first.timestamp = 100;
        Snapshot second = fx::export_loss_case();
        second.timestamp = 200;
        CycleReport done, pending;
        {
            ArchiveStore store(root);
            done = run_cycle(first, cfg, store);
            pending = assess(second, cfg, cfg.policy_limits());
        }
        const int code = crash_during_persist(root, pending, second, stage);
        c.expect(code == 42, std::string(stage) + ": child exited " + std::to_string(code));

        ArchiveStore recovered(root);
        bool torn = false;
        for (auto ts : recovered.timestamps()) {
            try {
                if (!recovered.load(ts)) torn = true;
            } catch (const Error&) {
                torn = true;
            }
        }
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.path().filename().string().find(".tmp") != std::string::npos) torn = true;
        c.expect(!torn, std::string(stage) + ": torn or temporary file after recovery");
        const auto latest = recovered.latest();
        c.expect(latest.has_value(), std::string(stage) + ": archive empty after recovery");
        if (!latest) continue;
        const bool committed = std::string(stage) == "report_committed" || std::string(stage) == "index_written";
        if (committed) {
            c.expect(latest->snapshot_ts == 200 && serialize(*latest) == serialize(pending),
                     std::string(stage) + ": committed report lost");
        } else {
            c.expect(latest->snapshot_ts == 100 && serialize(*latest) == serialize(done),
                     std::string(stage) + ": uncommitted report visible");
        }
        c.expect(recovered.records().size() == recovered.timestamps().size(),
                 std::string(stage) + ": index and documents disagree");
    }
}

Outcome service_round_trip() {
    Checks c;
    // Fork before any thread exists in this process.
    crash_injection(c);

    fx::TempDir dir;
    EngineConfig cfg;
    cfg.archive_path = (dir / "archive").string();
    cfg.inbox_path = (dir / "inbox").string();
    CycleService svc(cfg);
    HttpApi api(svc);
    const int port = api.bind("127.0.0.1", 0);
    std::thread http([&] { api.listen(); });
    api.wait_until_ready();
    std::jthread loop([&](std::stop_token st) { svc.run(st, 0.2); });

    Snapshot s = fx::load_fixture("synthetic50.json");
    s.timestamp = 1'700'000'000;
    const auto t0 = std::chrono::steady_clock::now();
    fx::write_file(dir / "inbox/snap.json", serialize(s));

    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(300, 0);
    double seen_after = -1.0;
    nlohmann::json latest;
    while (seconds_since(t0) < cfg.cycle_period_s) {
        const auto res = client.Get("/cycles/latest");
        if (res && res->status == 200) {
            latest = nlohmann::json::parse(res->body);
            if (latest["snapshot_ts"] == s.timestamp) {
                seen_after = seconds_since(t0);
                break;
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    c.expect(seen_after >= 0.0, "report not served within one cadence");
    if (seen_after >= 0.0) {
        const auto stored = svc.archive().load(s.timestamp);
        c.expect(stored && nlohmann::json::parse(serialize(*stored)) == latest, "served report differs from archive");
    }

    const auto hash = svc.archive().content_hash();
    const auto res = client.Post("/whatif", R"({"modifications": [{"element": "W002", "action": "set_p", "mw": 0}]})",
                                 "application/json");
    c.expect(res && res->status == 200, "what-if request failed" + (res ? ": " + res->body.substr(0, 120) : ""));
    if (res && res->status == 200) c.expect(nlohmann::json::parse(res->body)["ephemeral"] == true, "not ephemeral");
    c.expect(svc.archive().content_hash() == hash, "what-if changed the archive");

    loop.request_stop();
    loop.join();
    api.stop();
    http.join();
    c.note("inbox to API in " + fmt("%.2f s", seen_after) + " (cadence " + fmt("%.0f s", cfg.cycle_period_s) +
           "), archive hash unchanged by what-if, 4 crash stages recovered");
    return c.outcome();
}

}  // namespace

int main() {
    struct Criterion {
        int n;
        const char* title;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "Initial-RoCoF law", initial_rocof_law},
        {2, "Integrator convergence", integrator_convergence},
        {3, "Classification exactness", classification_exactness},
        {4, "Power flow oracle", power_flow_oracle},
        {5, "Rotor-angle criterion", rotor_angle_criterion},
        {6, "Screening determinism and scale", screening_determinism_and_scale},
        {7, "Summary table arithmetic", table_arithmetic},
        {8, "Correlation sign recovery", correlation_sign_recovery},
        {9, "Policy profiles", policy_profiles},
        {10, "Service round-trip", service_round_trip},
    };
    int failed = 0;
    for (const auto& k : criteria) {
        Outcome o;
        try {
            o = k.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %d. %s: %s\n", o.pass ? "PASS" : "FAIL", k.n, k.title, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
