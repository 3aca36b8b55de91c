#include "dsa/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "dsa/error.hpp"

namespace dsa {

namespace {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<double>;
using SpCMat = Eigen::SparseMatrix<cplx>;

struct BusSetup {
    std::vector<BusKind> kind;  // effective kind after island handling
    std::vector<bool> energized;
    std::vector<int> slack_buses;
};

BusSetup classify_buses(const Snapshot& snap, const SolveOptions& opts) {
    const std::size_t n = snap.buses.size();
    std::vector<double> machine_mva(n, 0.0);
    for (const auto& g : snap.machines)
        if (g.online) machine_mva[snap.bus_index(g.bus)] += g.s_rated;

    BusSetup s;
    s.kind.assign(n, BusKind::pq);
    s.energized.assign(n, true);
    for (const auto& island : islands(snap)) {
        int designated = -1;
        int elected = -1;
        bool any_injection = false;
        for (int b : island) {
            if (snap.buses[b].kind == BusKind::slack) designated = b;
            if (machine_mva[b] > 0 && (elected < 0 || machine_mva[b] > machine_mva[elected])) elected = b;
        }
        for (const auto& u : snap.ibr_units)
            if (u.online && u.p != 0.0 && std::find(island.begin(), island.end(), snap.bus_index(u.bus)) != island.end())
                any_injection = true;
        for (const auto& l : snap.loads)
            if ((l.p != 0.0 || l.q != 0.0) &&
                std::find(island.begin(), island.end(), snap.bus_index(l.bus)) != island.end())
                any_injection = true;

        int slack = -1;
        if (designated >= 0 && (machine_mva[designated] > 0 || elected < 0)) slack = designated;
        else if (elected >= 0) slack = elected;

        if (slack < 0) {
            if (opts.allow_deenergized) {
                for (int b : island) s.energized[b] = false;
                continue;
            }
            if (any_injection)
                throw IslandError("island containing bus " + snap.buses[island.front()].id +
                                  " has no slack bus and no online machine");
            // Passive island with nothing connected: pin its first bus.
            slack = island.front();
        }
        for (int b : island) {
            if (b == slack) s.kind[b] = BusKind::slack;
            else if (snap.buses[b].kind != BusKind::pq && machine_mva[b] > 0) s.kind[b] = BusKind::pv;
            else s.kind[b] = BusKind::pq;
        }
        s.slack_buses.push_back(slack);
    }
    return s;
}

SpCMat build_admittance(const Snapshot& snap) {
    const int n = static_cast<int>(snap.buses.size());
    std::vector<Eigen::Triplet<cplx>> t;
    for (const auto& br : snap.branches) {
        if (!br.in_service) continue;
        const int f = snap.bus_index(br.from_bus);
        const int to = snap.bus_index(br.to_bus);
        const cplx y = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, br.b_shunt / 2.0);
        t.emplace_back(f, f, y + ysh);
        t.emplace_back(to, to, y + ysh);
        t.emplace_back(f, to, -y);
        t.emplace_back(to, f, -y);
    }
    SpCMat y(n, n);
    y.setFromTriplets(t.begin(), t.end());
    y.makeCompressed();
    return y;
}

void injections(const SpCMat& y, const std::vector<double>& v, const std::vector<double>& th,
                std::vector<double>& p, std::vector<double>& q) {
    const int n = static_cast<int>(v.size());
    p.assign(n, 0.0);
    q.assign(n, 0.0);
    // Y is structurally symmetric; column k holds row k's neighbours.
    for (int k = 0; k < n; ++k) {
        for (SpCMat::InnerIterator it(y, k); it; ++it) {
            const int j = static_cast<int>(it.row());
            const double g = it.value().real();
            const double b = it.value().imag();
            const double d = th[k] - th[j];
            p[k] += v[k] * v[j] * (g * std::cos(d) + b * std::sin(d));
            q[k] += v[k] * v[j] * (g * std::sin(d) - b * std::cos(d));
        }
    }
}

}  // namespace

const VoltageRange& VoltageCriteria::range_for(double nominal_kv) const {
    auto it = ranges.find(nominal_kv);
    return it == ranges.end() ? fallback : it->second;
}

ViolationKind parse_violation_kind(const std::string& s) {
    for (auto k : {ViolationKind::over_voltage, ViolationKind::under_voltage, ViolationKind::thermal,
                   ViolationKind::no_solution})
        if (to_string(k) == s) return k;
    throw ParseError("unknown violation kind '" + s + "'");
}

std::string to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::over_voltage: return "over_voltage";
        case ViolationKind::under_voltage: return "under_voltage";
        case ViolationKind::thermal: return "thermal";
        case ViolationKind::no_solution: return "no_solution";
    }
    return "?";
}

PowerFlowSolution solve(const Snapshot& snap, double tol, int max_iter) {
    SolveOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return solve(snap, o);
}

PowerFlowSolution solve(const Snapshot& snap, const SolveOptions& opts) {
    const int n = static_cast<int>(snap.buses.size());
    const double base = snap.base_mva;
    const BusSetup setup = classify_buses(snap, opts);
    const SpCMat y = build_admittance(snap);

    std::vector<double> p_spec(n, 0.0), q_spec(n, 0.0);
    for (const auto& g : snap.machines) {
        if (!g.online) continue;
        const int b = snap.bus_index(g.bus);
        p_spec[b] += g.p_set / base;
        q_spec[b] += g.q_set / base;
    }
    for (const auto& u : snap.ibr_units) {
        if (!u.online) continue;
        const int b = snap.bus_index(u.bus);
        p_spec[b] += u.p / base;
        q_spec[b] += u.q / base;
    }
    for (const auto& l : snap.loads) {
        const int b = snap.bus_index(l.bus);
        p_spec[b] -= l.p / base;
        q_spec[b] -= l.q / base;
    }

    PowerFlowSolution sol;
    sol.energized = setup.energized;
    sol.slack_buses = setup.slack_buses;
    std::vector<double> v(n), th(n);
    for (int i = 0; i < n; ++i) {
        const auto& bus = snap.buses[i];
        const bool holds_mag = setup.kind[i] != BusKind::pq;
        v[i] = (opts.flat_start && !holds_mag) ? 1.0 : bus.v_mag;
        th[i] = opts.flat_start ? 0.0 : bus.v_ang;
        if (!setup.energized[i]) {
            v[i] = 0.0;
            th[i] = 0.0;
        }
    }

    // Unknown ordering: angles of energized non-slack buses, then magnitudes
    // of energized PQ buses.
    std::vector<int> ang_idx(n, -1), mag_idx(n, -1);
    int nu = 0;
    for (int i = 0; i < n; ++i)
        if (setup.energized[i] && setup.kind[i] != BusKind::slack) ang_idx[i] = nu++;
    for (int i = 0; i < n; ++i)
        if (setup.energized[i] && setup.kind[i] == BusKind::pq) mag_idx[i] = nu++;

    std::vector<double> p, q;
    Eigen::VectorXd f(nu);
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    bool pattern_ready = false;

    auto mismatch = [&]() {
        injections(y, v, th, p, q);
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            if (ang_idx[i] >= 0) {
                f[ang_idx[i]] = p[i] - p_spec[i];
                worst = std::max(worst, std::abs(f[ang_idx[i]]));
            }
            if (mag_idx[i] >= 0) {
                f[mag_idx[i]] = q[i] - q_spec[i];
                worst = std::max(worst, std::abs(f[mag_idx[i]]));
            }
        }
        if (!f.allFinite()) worst = std::numeric_limits<double>::infinity();
        return worst;
    };

    for (int it = 0;; ++it) {
        const double worst = mismatch();
        sol.mismatch_history.push_back(worst);
        sol.max_mismatch = worst;
        sol.iterations = it;
        if (!std::isfinite(worst)) {
            sol.diagnostic = "mismatch became non-finite at iteration " + std::to_string(it);
            break;
        }
        if (worst <= opts.tol) {
            sol.converged = true;
            break;
        }
        if (it >= opts.max_iter) {
            sol.diagnostic = "no convergence after " + std::to_string(it) + " iterations, max mismatch " +
                             std::to_string(worst) + " pu";
            break;
        }

        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(y.nonZeros()) * 4);
        for (int k = 0; k < n; ++k) {
            if (!setup.energized[k]) continue;
            for (SpCMat::InnerIterator e(y, k); e; ++e) {
                const int i = static_cast<int>(e.row());  // row i, neighbour k
                const double g = e.value().real();
                const double b = e.value().imag();
                const int ai = ang_idx[i], mi = mag_idx[i];
                const int ak = ang_idx[k], mk = mag_idx[k];
                if (ai < 0 && mi < 0) continue;
                if (i == k) {
                    if (ai >= 0) {
                        t.emplace_back(ai, ai, -q[i] - b * v[i] * v[i]);
                        if (mi >= 0) t.emplace_back(ai, mi, p[i] / v[i] + g * v[i]);
                    }
                    if (mi >= 0) {
                        t.emplace_back(mi, ai, p[i] - g * v[i] * v[i]);
                        t.emplace_back(mi, mi, q[i] / v[i] - b * v[i]);
                    }
                    continue;
                }
                const double d = th[i] - th[k];
                const double cs = std::cos(d), sn = std::sin(d);
                if (ai >= 0) {
                    if (ak >= 0) t.emplace_back(ai, ak, v[i] * v[k] * (g * sn - b * cs));
                    if (mk >= 0) t.emplace_back(ai, mk, v[i] * (g * cs + b * sn));
                }
                if (mi >= 0) {
                    if (ak >= 0) t.emplace_back(mi, ak, -v[i] * v[k] * (g * cs + b * sn));
                    if (mk >= 0) t.emplace_back(mi, mk, v[i] * (g * sn - b * cs));
                }
            }
        }
        SpMat jac(nu, nu);
        jac.setFromTriplets(t.begin(), t.end());
        jac.makeCompressed();
        if (!pattern_ready) {
            lu.analyzePattern(jac);
            pattern_ready = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success)
            throw SingularJacobianError(it, "singular Jacobian at iteration " + std::to_string(it));
        const Eigen::VectorXd dx = lu.solve(f);
        for (int i = 0; i < n; ++i) {
            if (ang_idx[i] >= 0) th[i] -= dx[ang_idx[i]];
            if (mag_idx[i] >= 0) v[i] -= dx[mag_idx[i]];
        }
        bool sane = true;
        for (int i = 0; i < n; ++i)
            if (setup.energized[i] && !(v[i] > 0.0 && std::isfinite(th[i]))) sane = false;
        if (!sane) {
            sol.mismatch_history.push_back(std::numeric_limits<double>::infinity());
            sol.max_mismatch = std::numeric_limits<double>::infinity();
            sol.iterations = it + 1;
            sol.diagnostic = "voltage magnitude collapsed at iteration " + std::to_string(it + 1);
            break;
        }
    }

    sol.v_mag = v;
    sol.v_ang = th;

    // Branch flows and losses.
    sol.flows.assign(snap.branches.size(), {});
    injections(y, v, th, p, q);
    for (std::size_t k = 0; k < snap.branches.size(); ++k) {
        const auto& br = snap.branches[k];
        if (!br.in_service) continue;
        const int a = snap.bus_index(br.from_bus);
        const int b = snap.bus_index(br.to_bus);
        if (!setup.energized[a]) continue;
        const cplx ys = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, br.b_shunt / 2.0);
        const cplx va = std::polar(v[a], th[a]);
        const cplx vb = std::polar(v[b], th[b]);
        const cplx ia = (va - vb) * ys + va * ysh;
        const cplx ib = (vb - va) * ys + vb * ysh;
        const cplx sa = va * std::conj(ia) * base;
        const cplx sb = vb * std::conj(ib) * base;
        auto& fl = sol.flows[k];
        fl.p_from = sa.real();
        fl.q_from = sa.imag();
        fl.p_to = sb.real();
        fl.q_to = sb.imag();
        fl.loading_pct = 100.0 * std::max(std::abs(sa), std::abs(sb)) / br.mva_rating;
        sol.losses_mw += fl.p_from + fl.p_to;
    }

    // Machine outputs: scheduled everywhere except slack buses, which pick up
    // the balance shared in proportion to rating.
    sol.machine_p.assign(snap.machines.size(), 0.0);
    for (std::size_t i = 0; i < snap.machines.size(); ++i)
        if (snap.machines[i].online) sol.machine_p[i] = snap.machines[i].p_set;
    for (int sb : setup.slack_buses) {
        const double inj_mw = p[sb] * base;
        sol.slack_injection_mw += inj_mw;
        double others = 0.0;  // everything at the bus except its machines
        for (const auto& u : snap.ibr_units)
            if (u.online && snap.bus_index(u.bus) == sb) others += u.p;
        for (const auto& l : snap.loads)
            if (snap.bus_index(l.bus) == sb) others -= l.p;
        const double machines_mw = inj_mw - others;
        double mva = 0.0;
        for (const auto& g : snap.machines)
            if (g.online && snap.bus_index(g.bus) == sb) mva += g.s_rated;
        if (mva <= 0.0) continue;
        for (std::size_t i = 0; i < snap.machines.size(); ++i) {
            const auto& g = snap.machines[i];
            if (g.online && snap.bus_index(g.bus) == sb) sol.machine_p[i] = machines_mw * g.s_rated / mva;
        }
    }
    return sol;
}

Snapshot with_solution_voltages(const Snapshot& snap, const PowerFlowSolution& sol) {
    Snapshot out = snap;
    for (std::size_t i = 0; i < out.buses.size(); ++i) {
        if (!sol.energized.empty() && !sol.energized[i]) continue;
        out.buses[i].v_mag = sol.v_mag[i];
        out.buses[i].v_ang = sol.v_ang[i];
    }
    return out;
}

VoltageAssessment assess_voltage(const Snapshot& snap, const PowerFlowSolution& sol,
                                 const VoltageCriteria& criteria) {
    if (!sol.converged) throw NotConvergedError("voltage assessment requires a converged power flow");
    VoltageAssessment a;
    for (std::size_t i = 0; i < snap.buses.size(); ++i) {
        if (!sol.energized.empty() && !sol.energized[i]) continue;
        const auto& bus = snap.buses[i];
        const auto& range = criteria.range_for(bus.nominal_kv);
        if (sol.v_mag[i] > range.v_max)
            a.violations.push_back({bus.id, ViolationKind::over_voltage, sol.v_mag[i], range.v_max});
        else if (sol.v_mag[i] < range.v_min)
            a.violations.push_back({bus.id, ViolationKind::under_voltage, sol.v_mag[i], range.v_min});
    }
    for (std::size_t k = 0; k < snap.branches.size(); ++k) {
        const auto& br = snap.branches[k];
        if (!br.in_service) continue;
        const double pct = sol.flows[k].loading_pct;
        if (pct > criteria.thermal_pct)
            a.violations.push_back({br.id, ViolationKind::thermal, pct * br.mva_rating / 100.0,
                                    criteria.thermal_pct * br.mva_rating / 100.0});
    }
    a.secure = a.violations.empty();
    return a;
}

}  // namespace dsa
