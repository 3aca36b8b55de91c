#include "dsa/dynsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "dsa/error.hpp"

namespace dsa {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Electrical configuration valid between two switching instants.
struct Segment {
    std::vector<int> active;               // machine indices
    std::vector<int> local;                // machine -> position in `active`, -1 if inactive
    std::vector<std::vector<int>> groups;  // machine indices per island
    std::vector<int> group_of;             // machine -> group, -1 if inactive

    // coi_uniform
    std::vector<double> pe_group;    // MW drawn from each island's machines
    std::vector<double> damp_group;  // MW/Hz of frequency-sensitive load

    // dc_network
    Eigen::MatrixXd k;          // MW, zero diagonal
    Eigen::VectorXd inj;        // MW, constant part of each machine's P_e
    Eigen::VectorXd load_damp;  // MW/Hz, load relief seen by each machine
};

struct UnionFind {
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
    std::vector<int> parent;
};

void finish_groups(Segment& seg, std::size_t n_machines, const std::vector<int>& root_of_machine) {
    seg.local.assign(n_machines, -1);
    seg.group_of.assign(n_machines, -1);
    std::vector<std::pair<int, int>> root_to_group;
    for (std::size_t l = 0; l < seg.active.size(); ++l) {
        const int i = seg.active[l];
        seg.local[i] = static_cast<int>(l);
        const int root = root_of_machine[i];
        auto it = std::find_if(root_to_group.begin(), root_to_group.end(),
                               [&](const auto& p) { return p.first == root; });
        int g;
        if (it == root_to_group.end()) {
            g = static_cast<int>(seg.groups.size());
            root_to_group.emplace_back(root, g);
            seg.groups.emplace_back();
        } else {
            g = it->second;
        }
        seg.groups[g].push_back(i);
        seg.group_of[i] = g;
    }
}

}  // namespace

struct DynamicModel::Impl {
    double f0 = 50.0;
    std::vector<int> bus;
    std::vector<double> ek, d_mw, s, droop, t_gov, xd, lo, hi, p0;
    std::vector<double> loss_load;  // MW per bus, half of each branch's base-case loss

    Segment coi_pre;
    bool dc_ready = false;
    std::string dc_error;
    Segment dc_pre;
    std::vector<double> delta0_dc, p0_dc;

    Segment build_coi(const Snapshot& base, const Snapshot& post, const PowerFlowSolution& pf) const;
    Segment build_dc(const Snapshot& topo, int fault_bus) const;
    void init_dc(const Snapshot& snap, const PowerFlowSolution& pf);
};

Segment DynamicModel::Impl::build_coi(const Snapshot& base, const Snapshot& post,
                                      const PowerFlowSolution& pf) const {
    const auto isl = islands(post);
    std::vector<int> island_of(post.buses.size(), -1);
    for (std::size_t k = 0; k < isl.size(); ++k)
        for (int b : isl[k]) island_of[b] = static_cast<int>(k);

    Segment seg;
    std::vector<int> root(post.machines.size(), -1);
    for (std::size_t i = 0; i < post.machines.size(); ++i) {
        if (!post.machines[i].online) continue;
        seg.active.push_back(static_cast<int>(i));
        root[i] = island_of[bus[i]];
    }
    finish_groups(seg, post.machines.size(), root);

    seg.pe_group.assign(seg.groups.size(), 0.0);
    seg.damp_group.assign(seg.groups.size(), 0.0);
    std::vector<int> group_of_island(isl.size(), -1);
    for (std::size_t g = 0; g < seg.groups.size(); ++g) group_of_island[island_of[bus[seg.groups[g].front()]]] = g;

    for (std::size_t i = 0; i < base.machines.size(); ++i) {
        if (!base.machines[i].online) continue;
        const int g = group_of_island[island_of[bus[i]]];
        if (g >= 0) seg.pe_group[g] += p0[i];
    }
    for (std::size_t k = 0; k < base.branches.size(); ++k) {
        if (!base.branches[k].in_service || post.branches[k].in_service) continue;
        const int a = island_of[base.bus_index(base.branches[k].from_bus)];
        const int b = island_of[base.bus_index(base.branches[k].to_bus)];
        if (a == b) continue;
        if (group_of_island[a] >= 0) seg.pe_group[group_of_island[a]] -= pf.flows[k].p_from;
        if (group_of_island[b] >= 0) seg.pe_group[group_of_island[b]] -= pf.flows[k].p_to;
    }
    for (std::size_t u = 0; u < base.ibr_units.size(); ++u) {
        if (!base.ibr_units[u].online || post.ibr_units[u].online) continue;
        const int g = group_of_island[island_of[base.bus_index(base.ibr_units[u].bus)]];
        if (g >= 0) seg.pe_group[g] += base.ibr_units[u].p;
    }
    for (const auto& l : post.loads) {
        const int g = group_of_island[island_of[post.bus_index(l.bus)]];
        if (g >= 0) seg.damp_group[g] += l.p * l.freq_sensitivity;
    }
    return seg;
}

Segment DynamicModel::Impl::build_dc(const Snapshot& topo, int fault_bus) const {
    const int nb = static_cast<int>(topo.buses.size());
    Segment seg;
    for (std::size_t i = 0; i < topo.machines.size(); ++i)
        if (topo.machines[i].online) seg.active.push_back(static_cast<int>(i));
    const int m = static_cast<int>(seg.active.size());

    // Bus components without the faulted bus; a component is kept when a
    // machine or the fault anchors it, otherwise its buses are dead.
    UnionFind uf(nb + m);
    std::vector<bool> anchored_bus(nb, false);
    std::vector<int> fb(topo.branches.size(), -1), tb(topo.branches.size(), -1);
    for (std::size_t k = 0; k < topo.branches.size(); ++k) {
        const auto& br = topo.branches[k];
        if (!br.in_service) continue;
        fb[k] = topo.bus_index(br.from_bus);
        tb[k] = topo.bus_index(br.to_bus);
        if (fb[k] == fault_bus) anchored_bus[tb[k]] = true;
        else if (tb[k] == fault_bus) anchored_bus[fb[k]] = true;
        else uf.unite(fb[k], tb[k]);
    }
    for (int l = 0; l < m; ++l) {
        const int b = bus[seg.active[l]];
        if (b == fault_bus) continue;
        anchored_bus[b] = true;
        uf.unite(nb + l, b);
    }
    std::vector<bool> root_anchored(nb + m, false);
    for (int b = 0; b < nb; ++b)
        if (anchored_bus[b] && b != fault_bus) root_anchored[uf.find(b)] = true;

    std::vector<int> e_idx(nb, -1);
    int ne = 0;
    for (int b = 0; b < nb; ++b)
        if (b != fault_bus && root_anchored[uf.find(b)]) e_idx[b] = ne++;

    Eigen::MatrixXd bee = Eigen::MatrixXd::Zero(ne, ne);
    Eigen::MatrixXd bge = Eigen::MatrixXd::Zero(m, ne);
    Eigen::VectorXd bgg = Eigen::VectorXd::Zero(m);
    const double base = topo.base_mva;
    for (std::size_t k = 0; k < topo.branches.size(); ++k) {
        if (fb[k] < 0) continue;
        const double y = base / topo.branches[k].x;
        const int a = e_idx[fb[k]], b = e_idx[tb[k]];
        if (a >= 0) bee(a, a) += y;
        if (b >= 0) bee(b, b) += y;
        if (a >= 0 && b >= 0) {
            bee(a, b) -= y;
            bee(b, a) -= y;
        }
    }
    for (int l = 0; l < m; ++l) {
        const int i = seg.active[l];
        const double y = s[i] / xd[i];
        bgg[l] += y;
        const int e = e_idx[bus[i]];
        if (e >= 0) {
            bee(e, e) += y;
            bge(l, e) -= y;
        }
    }

    // Net bus injection (MW, generation positive) of everything that is not a
    // synchronous machine.  Buses at zero voltage (faulted) draw nothing.
    Eigen::VectorXd p_bus = Eigen::VectorXd::Zero(ne);
    Eigen::VectorXd damp_bus = Eigen::VectorXd::Zero(ne);
    for (int b = 0; b < nb; ++b)
        if (e_idx[b] >= 0) p_bus[e_idx[b]] -= loss_load[b];
    for (const auto& u : topo.ibr_units) {
        const int e = e_idx[topo.bus_index(u.bus)];
        if (u.online && e >= 0) p_bus[e] += u.p;
    }
    for (const auto& ld : topo.loads) {
        const int e = e_idx[topo.bus_index(ld.bus)];
        if (e < 0) continue;
        p_bus[e] -= ld.p;
        damp_bus[e] += ld.p * ld.freq_sensitivity;
    }

    seg.k = Eigen::MatrixXd::Zero(m, m);
    seg.inj = Eigen::VectorXd::Zero(m);
    seg.load_damp = Eigen::VectorXd::Zero(m);
    if (ne > 0) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bee);
        const Eigen::MatrixXd x = lu.solve(bge.transpose());  // ne x m
        Eigen::MatrixXd bred = -bge * x;
        bred.diagonal() += bgg;
        seg.k = -bred;
        seg.k.diagonal().setZero();
        // Distribution factors: df = -bge * bee^-1, so inj = -df * p_bus.
        // bee is symmetric, hence df^T = -x.
        const Eigen::MatrixXd df_t = -x;
        seg.inj = -df_t.transpose() * p_bus;
        seg.load_damp = df_t.transpose() * damp_bus;
    }

    std::vector<int> root(topo.machines.size(), -1);
    for (int l = 0; l < m; ++l) {
        const int i = seg.active[l];
        root[i] = bus[i] == fault_bus ? nb + l : uf.find(nb + l);
    }
    finish_groups(seg, topo.machines.size(), root);
    return seg;
}

void DynamicModel::Impl::init_dc(const Snapshot& snap, const PowerFlowSolution& pf) {
    dc_pre = build_dc(snap, -1);
    const int m = static_cast<int>(dc_pre.active.size());
    p0_dc = p0;
    delta0_dc.assign(snap.machines.size(), 0.0);

    // Exact per-island balance: the reference machine (largest inertia) takes
    // whatever the lossless reduced network needs.
    std::vector<int> ref(dc_pre.groups.size());
    for (std::size_t g = 0; g < dc_pre.groups.size(); ++g) {
        const auto& grp = dc_pre.groups[g];
        int r = grp.front();
        for (int i : grp)
            if (ek[i] > ek[r]) r = i;
        ref[g] = r;
        double need = 0.0;
        for (int i : grp) need += dc_pre.inj[dc_pre.local[i]];
        double others = 0.0;
        for (int i : grp)
            if (i != r) others += p0_dc[i];
        p0_dc[r] = need - others;
    }

    Eigen::VectorXd d(m);
    for (int l = 0; l < m; ++l) {
        const int i = dc_pre.active[l];
        d[l] = pf.v_ang[bus[i]] + p0_dc[i] * xd[i] / s[i];
    }
    std::vector<bool> is_ref(m, false);
    for (int r : ref) is_ref[dc_pre.local[r]] = true;

    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd sn = d.array().sin(), cs = d.array().cos();
        Eigen::VectorXd ks = dc_pre.k * sn, kc = dc_pre.k * cs;
        Eigen::VectorXd fval(m);
        double worst = 0.0;
        for (int l = 0; l < m; ++l) {
            const double pe = dc_pre.inj[l] + sn[l] * kc[l] - cs[l] * ks[l];
            fval[l] = is_ref[l] ? 0.0 : pe - p0_dc[dc_pre.active[l]];
            worst = std::max(worst, std::abs(fval[l]));
        }
        if (!std::isfinite(worst)) break;
        if (worst < 1e-10) {
            for (int l = 0; l < m; ++l) delta0_dc[dc_pre.active[l]] = d[l];
            dc_ready = true;
            return;
        }
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
        for (int l = 0; l < m; ++l) {
            if (is_ref[l]) {
                jac(l, l) = 1.0;
                continue;
            }
            double diag = 0.0;
            for (int j = 0; j < m; ++j) {
                if (j == l) continue;
                const double c = dc_pre.k(l, j) * std::cos(d[l] - d[j]);
                jac(l, j) = -c;
                diag += c;
            }
            jac(l, l) = diag;
        }
        d -= jac.fullPivLu().solve(fval);
    }
    dc_error = "reduced-network initial angles did not converge (dispatch beyond static transfer limit)";
}

DynamicModel::DynamicModel(Snapshot snap, PowerFlowSolution pf)
    : snap_(std::move(snap)), pf_(std::move(pf)), impl_(std::make_unique<Impl>()) {}

DynamicModel::~DynamicModel() = default;

bool DynamicModel::angle_model_ready() const { return impl_->dc_ready; }
const std::string& DynamicModel::angle_model_error() const { return impl_->dc_error; }

std::shared_ptr<const DynamicModel> DynamicModel::prepare(const Snapshot& snap, const SolveOptions& pf_opts) {
    PowerFlowSolution pf;
    try {
        pf = solve(snap, pf_opts);
    } catch (const Error& e) {
        throw InitError(std::string("initial power flow failed: ") + e.what());
    }
    if (!pf.converged) throw InitError("initial power flow did not converge: " + pf.diagnostic);

    auto model = std::make_shared<DynamicModel>(snap, pf);
    auto& m = *model->impl_;
    m.f0 = snap.nominal_hz;
    const std::size_t n = snap.machines.size();
    m.bus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = snap.machines[i];
        m.bus[i] = snap.bus_index(g.bus);
        m.ek.push_back(g.kinetic_energy_mws());
        m.d_mw.push_back(g.d * g.s_rated / snap.nominal_hz);
        m.s.push_back(g.s_rated);
        m.droop.push_back(g.droop_r);
        m.t_gov.push_back(g.t_gov);
        m.xd.push_back(g.xd_prime);
        m.p0.push_back(pf.machine_p[i]);
        m.lo.push_back(std::min(g.p_min, pf.machine_p[i]));
        m.hi.push_back(std::max(g.p_max, pf.machine_p[i]));
    }
    m.loss_load.assign(snap.buses.size(), 0.0);
    for (std::size_t k = 0; k < snap.branches.size(); ++k) {
        if (!snap.branches[k].in_service) continue;
        const double loss = pf.flows[k].p_from + pf.flows[k].p_to;
        m.loss_load[snap.bus_index(snap.branches[k].from_bus)] += loss / 2.0;
        m.loss_load[snap.bus_index(snap.branches[k].to_bus)] += loss / 2.0;
    }
    m.coi_pre = m.build_coi(snap, snap, pf);
    m.init_dc(snap, pf);
    return model;
}

void SimConfig::validate() const {
    if (!(dt > 0.0 && dt <= 0.01)) throw ConfigError("simulation dt must lie in (0, 0.01] s");
    if (!(t_end > 0.0 && t_end <= 60.0)) throw ConfigError("simulation t_end must lie in (0, 60] s");
    if (!(event_time >= 0.0 && event_time < t_end)) throw ConfigError("event_time must lie in [0, t_end)");
}

DynamicResponse DynamicModel::simulate(const std::optional<Contingency>& c, const SimConfig& cfg) const {
    cfg.validate();
    const auto& m = *impl_;
    const bool dc = cfg.network_model == NetworkModel::dc_network;
    if (dc && !m.dc_ready) throw InitError(m.dc_error);

    const int steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
    const int k_event = static_cast<int>(std::llround(cfg.event_time / cfg.dt));
    int k_out = k_event;
    int fault_bus = -1;

    Snapshot post = snap_;
    Segment fault_seg, post_seg;
    if (c) {
        post = apply_contingency(snap_, *c);
        if (c->fault_bus) {
            fault_bus = snap_.bus_index(*c->fault_bus);
            k_out = k_event + static_cast<int>(std::llround(c->clearing_time_s / cfg.dt));
            if (dc) fault_seg = m.build_dc(snap_, fault_bus);
        }
        post_seg = dc ? m.build_dc(post, -1) : m.build_coi(snap_, post, pf_);
    }
    const Segment& pre_seg = dc ? m.dc_pre : m.coi_pre;
    auto segment_at = [&](int k) -> const Segment& {
        if (!c || k < k_event) return pre_seg;
        if (k < k_out) return dc ? fault_seg : pre_seg;
        return post_seg;
    };

    const std::size_t n = snap_.machines.size();
    const double f0 = m.f0;
    const double dt = cfg.dt;
    const std::vector<double>& p_init = dc ? m.p0_dc : m.p0;

    std::vector<double> delta(n, 0.0), freq(n, f0), pm(n, 0.0);
    std::vector<bool> on(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        on[i] = snap_.machines[i].online;
        delta[i] = dc ? m.delta0_dc[i] : pf_.v_ang[m.bus[i]];
        pm[i] = on[i] ? p_init[i] : 0.0;
    }

    auto governor_ref = [&](std::size_t i, double f) {
        const double ref = p_init[i] + (f0 - f) / (m.droop[i] * f0) * m.s[i];
        return std::clamp(ref, m.lo[i], m.hi[i]);
    };

    std::vector<double> acc(n, 0.0);
    Eigen::VectorXd sn, cs, ks, kc;
    std::vector<double> fgroup;
    auto accel = [&](const Segment& seg, const std::vector<double>& d, const std::vector<double>& f,
                     const std::vector<double>& p, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        if (!dc) {
            for (std::size_t g = 0; g < seg.groups.size(); ++g) {
                const auto& grp = seg.groups[g];
                double e = 0.0, pmech = 0.0, damp = seg.damp_group[g];
                for (int i : grp) {
                    e += m.ek[i];
                    pmech += p[i];
                    damp += m.d_mw[i];
                }
                const double fg = f[grp.front()];
                const double a = f0 / (2.0 * e) * (pmech - seg.pe_group[g] - damp * (fg - f0));
                for (int i : grp) out[i] = a;
            }
            return;
        }
        const int nm = static_cast<int>(seg.active.size());
        sn.resize(nm);
        cs.resize(nm);
        for (int l = 0; l < nm; ++l) {
            sn[l] = std::sin(d[seg.active[l]]);
            cs[l] = std::cos(d[seg.active[l]]);
        }
        ks.noalias() = seg.k * sn;
        kc.noalias() = seg.k * cs;
        fgroup.assign(seg.groups.size(), 0.0);
        for (std::size_t g = 0; g < seg.groups.size(); ++g) {
            double e = 0.0, ef = 0.0;
            for (int i : seg.groups[g]) {
                e += m.ek[i];
                ef += m.ek[i] * f[i];
            }
            fgroup[g] = ef / e;
        }
        for (int l = 0; l < nm; ++l) {
            const int i = seg.active[l];
            const double pe = seg.inj[l] + sn[l] * kc[l] - cs[l] * ks[l] +
                              seg.load_damp[l] * (fgroup[seg.group_of[i]] - f0);
            out[i] = f0 / (2.0 * m.ek[i]) * (p[i] - pe - m.d_mw[i] * (f[i] - f0));
        }
    };

    DynamicResponse resp;
    resp.nominal_hz = f0;
    resp.network_model = cfg.network_model;
    resp.event_time = k_event * dt;
    resp.event_step = k_event;
    resp.has_event = c.has_value();
    resp.t.reserve(steps + 1);
    resp.f_coi.reserve(steps + 1);
    resp.delta.assign(n, {});
    resp.freq.assign(n, {});
    resp.pmech.assign(n, {});
    resp.trip_step.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        resp.machine_ids.push_back(snap_.machines[i].id);
        resp.machine_ek.push_back(m.ek[i]);
        resp.delta[i].reserve(steps + 1);
        resp.freq[i].reserve(steps + 1);
        resp.pmech[i].reserve(steps + 1);
    }
    if (c) {
        resp.events.push_back("t=" + std::to_string(k_event * dt) + " s: " + c->id + " (" + to_string(c->kind) + ")");
        if (c->fault_bus)
            resp.events.push_back("t=" + std::to_string(k_out * dt) + " s: fault at " + *c->fault_bus +
                                  " cleared by outage");
    }

    std::vector<double> a0(n), a1(n), d1(n), f1(n), p1(n);
    std::vector<double> kd[4], kf[4], kp[4];
    for (auto* v : {kd, kf, kp})
        for (int s = 0; s < 4; ++s) v[s].assign(n, 0.0);

    for (int k = 0;; ++k) {
        if (c && k == k_out) {
            for (std::size_t i = 0; i < n; ++i)
                if (on[i] && !post.machines[i].online) {
                    on[i] = false;
                    resp.trip_step[i] = k;
                }
        }
        const double t = k * dt;
        resp.t.push_back(t);
        double e = 0.0, ef = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            resp.delta[i].push_back(delta[i]);
            resp.freq[i].push_back(freq[i]);
            resp.pmech[i].push_back(pm[i]);
            if (on[i]) {
                e += m.ek[i];
                ef += m.ek[i] * freq[i];
            }
        }
        resp.f_coi.push_back(e > 0.0 ? ef / e : f0);
        if (k == steps) break;

        const Segment& seg = segment_at(k);
        if (cfg.integrator == Integrator::trapezoidal) {
            accel(seg, delta, freq, pm, a0);
            for (std::size_t i = 0; i < n; ++i) {
                f1[i] = on[i] ? freq[i] + dt * a0[i] : freq[i];
                d1[i] = on[i] ? delta[i] + dt * kTwoPi * (freq[i] - f0) : delta[i];
                p1[i] = pm[i];
            }
            for (int iter = 0; iter < 50; ++iter) {
                accel(seg, d1, f1, p1, a1);
                double change = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!on[i]) continue;
                    const double fn = freq[i] + 0.5 * dt * (a0[i] + a1[i]);
                    const double dn = delta[i] + 0.5 * dt * kTwoPi * (freq[i] + fn - 2.0 * f0);
                    double pn = pm[i];
                    if (cfg.governors) {
                        const double a = dt / (2.0 * m.t_gov[i]);
                        pn = ((1.0 - a) * pm[i] + a * (governor_ref(i, freq[i]) + governor_ref(i, fn))) / (1.0 + a);
                        pn = std::clamp(pn, m.lo[i], m.hi[i]);
                    }
                    change = std::max({change, std::abs(fn - f1[i]), std::abs(dn - d1[i]),
                                       1e-3 * std::abs(pn - p1[i])});
                    f1[i] = fn;
                    d1[i] = dn;
                    p1[i] = pn;
                }
                if (change <= 1e-13) break;
            }
            delta.swap(d1);
            freq.swap(f1);
            pm.swap(p1);
        } else {
            auto deriv = [&](const std::vector<double>& d, const std::vector<double>& f, const std::vector<double>& p,
                             int s) {
                accel(seg, d, f, p, kf[s]);
                for (std::size_t i = 0; i < n; ++i) {
                    kd[s][i] = on[i] ? kTwoPi * (f[i] - f0) : 0.0;
                    kp[s][i] = (on[i] && cfg.governors) ? (governor_ref(i, f[i]) - p[i]) / m.t_gov[i] : 0.0;
                    if (!on[i]) kf[s][i] = 0.0;
                }
            };
            deriv(delta, freq, pm, 0);
            const double w[3] = {0.5, 0.5, 1.0};
            for (int s = 1; s < 4; ++s) {
                for (std::size_t i = 0; i < n; ++i) {
                    d1[i] = delta[i] + w[s - 1] * dt * kd[s - 1][i];
                    f1[i] = freq[i] + w[s - 1] * dt * kf[s - 1][i];
                    p1[i] = pm[i] + w[s - 1] * dt * kp[s - 1][i];
                }
                deriv(d1, f1, p1, s);
            }
            for (std::size_t i = 0; i < n; ++i) {
                delta[i] += dt / 6.0 * (kd[0][i] + 2.0 * kd[1][i] + 2.0 * kd[2][i] + kd[3][i]);
                freq[i] += dt / 6.0 * (kf[0][i] + 2.0 * kf[1][i] + 2.0 * kf[2][i] + kf[3][i]);
                pm[i] += dt / 6.0 * (kp[0][i] + 2.0 * kp[1][i] + 2.0 * kp[2][i] + kp[3][i]);
                pm[i] = std::clamp(pm[i], m.lo[i], m.hi[i]);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(delta[i]) || !std::isfinite(freq[i]) || !std::isfinite(pm[i]))
                throw NumericalError((k + 1) * dt, "non-finite state for machine " + snap_.machines[i].id +
                                                       " at t=" + std::to_string((k + 1) * dt) + " s");
    }

    const Segment& last = c ? post_seg : pre_seg;
    resp.islands = last.groups;
    resp.online_after.assign(n, false);
    for (int i : last.active) resp.online_after[i] = true;
    return resp;
}

DynamicResponse simulate(const Snapshot& snap, const std::optional<Contingency>& c, const SimConfig& cfg) {
    return DynamicModel::prepare(snap)->simulate(c, cfg);
}

std::vector<double> coi_frequency(const DynamicResponse& resp, std::span<const int> machines) {
    if (machines.empty()) throw NoMachinesError("centre-of-inertia frequency needs at least one machine");
    const std::size_t steps = resp.t.size();
    std::vector<double> out(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        double e = 0.0, ef = 0.0;
        for (int i : machines) {
            const int trip = resp.trip_step.empty() ? -1 : resp.trip_step[i];
            if (trip >= 0 && static_cast<int>(k) >= trip) continue;
            e += resp.machine_ek[i];
            ef += resp.machine_ek[i] * resp.freq[i][k];
        }
        if (e <= 0.0) throw NoMachinesError("no online machine in the requested set at t=" + std::to_string(resp.t[k]));
        out[k] = ef / e;
    }
    return out;
}

void write_trace_csv(const DynamicResponse& resp, std::ostream& out) {
    out << "t,f_coi";
    for (const auto& id : resp.machine_ids) out << ",f_" << id;
    for (const auto& id : resp.machine_ids) out << ",delta_" << id;
    out << '\n';
    out.precision(10);
    for (std::size_t k = 0; k < resp.t.size(); ++k) {
        out << resp.t[k] << ',' << resp.f_coi[k];
        for (const auto& f : resp.freq) out << ',' << f[k];
        for (const auto& d : resp.delta) out << ',' << d[k];
        out << '\n';
    }
}

std::string to_string(Integrator i) { return i == Integrator::trapezoidal ? "trapezoidal" : "rk4"; }
std::string to_string(NetworkModel m) { return m == NetworkModel::coi_uniform ? "coi_uniform" : "dc_network"; }

}  // namespace dsa
