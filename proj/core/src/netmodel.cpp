#include "dsa/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dsa/error.hpp"

namespace dsa {

namespace {

template <class T>
int find_by_id(const std::vector<T>& items, const std::string& id) {
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].id == id) return static_cast<int>(i);
    return -1;
}

void require(bool cond, const std::string& element, const std::string& msg) {
    if (!cond) throw ValidationError(element, element + ": " + msg);
}

}  // namespace

int Snapshot::bus_index(const std::string& id) const { return find_by_id(buses, id); }
int Snapshot::branch_index(const std::string& id) const { return find_by_id(branches, id); }
int Snapshot::machine_index(const std::string& id) const { return find_by_id(machines, id); }
int Snapshot::ibr_index(const std::string& id) const { return find_by_id(ibr_units, id); }

std::string to_string(BusKind k) {
    switch (k) {
        case BusKind::slack: return "slack";
        case BusKind::pv: return "PV";
        case BusKind::pq: return "PQ";
    }
    return "?";
}

std::string to_string(Region r) { return r == Region::IE ? "IE" : "NI"; }

std::string to_string(IbrKind k) {
    switch (k) {
        case IbrKind::wind: return "wind";
        case IbrKind::solar: return "solar";
        case IbrKind::hvdc: return "hvdc";
    }
    return "?";
}

std::string to_string(ModAction a) {
    switch (a) {
        case ModAction::set_p: return "set_p";
        case ModAction::commit: return "commit";
        case ModAction::decommit: return "decommit";
    }
    return "?";
}

std::vector<std::vector<int>> islands(const Snapshot& snap) {
    const int n = static_cast<int>(snap.buses.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& br : snap.branches) {
        if (!br.in_service) continue;
        const int a = snap.bus_index(br.from_bus);
        const int b = snap.bus_index(br.to_bus);
        if (a < 0 || b < 0) continue;
        parent[find(a)] = find(b);
    }
    // Components ordered by their lowest bus index so the result is stable.
    std::vector<int> slot(n, -1);
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<int>(out.size());
            out.emplace_back();
        }
        out[slot[root]].push_back(i);
    }
    return out;
}

void validate(const Snapshot& snap) {
    require(snap.base_mva > 0, "base_mva", "must be positive");
    require(snap.nominal_hz > 0, "nominal_hz", "must be positive");
    require(!snap.buses.empty(), "buses", "at least one bus required");

    std::set<std::string> ids;
    auto unique_id = [&](const std::string& id) {
        require(!id.empty(), "<empty id>", "element id must be nonempty");
        require(ids.insert(id).second, id, "duplicate element id");
    };
    auto bus_ref = [&](const std::string& owner, const std::string& bus) {
        if (snap.bus_index(bus) < 0)
            throw ValidationError(bus, owner + ": references unknown bus " + bus);
    };

    for (const auto& b : snap.buses) {
        unique_id(b.id);
        require(b.nominal_kv > 0, b.id, "nominal_kv must be positive");
        require(b.v_mag > 0, b.id, "v_mag must be positive");
        require(std::isfinite(b.v_ang), b.id, "v_ang must be finite");
    }
    for (const auto& br : snap.branches) {
        unique_id(br.id);
        bus_ref(br.id, br.from_bus);
        bus_ref(br.id, br.to_bus);
        require(br.from_bus != br.to_bus, br.id, "from_bus equals to_bus");
        require(br.x != 0.0 && std::isfinite(br.x), br.id, "x must be nonzero");
        require(br.mva_rating > 0, br.id, "mva_rating must be positive");
    }
    int online = 0;
    for (const auto& m : snap.machines) {
        unique_id(m.id);
        bus_ref(m.id, m.bus);
        require(m.h > 0, m.id, "h must be positive");
        require(m.s_rated > 0, m.id, "s_rated must be positive");
        require(m.d >= 0, m.id, "d must be nonnegative");
        require(m.droop_r > 0 && m.droop_r <= 1, m.id, "droop_r must lie in (0, 1]");
        require(m.t_gov > 0, m.id, "t_gov must be positive");
        require(m.xd_prime > 0, m.id, "xd_prime must be positive");
        require(m.p_min <= m.p_max, m.id, "p_min exceeds p_max");
        if (m.online) {
            require(m.p_min <= m.p_set && m.p_set <= m.p_max, m.id, "p_set outside [p_min, p_max]");
            ++online;
        }
    }
    require(online > 0, "machines", "at least one online synchronous machine required");
    for (const auto& u : snap.ibr_units) {
        unique_id(u.id);
        bus_ref(u.id, u.bus);
        if (u.kind != IbrKind::hvdc) require(u.p >= 0, u.id, "wind/solar output must be nonnegative");
    }
    for (const auto& l : snap.loads) {
        unique_id(l.id);
        bus_ref(l.id, l.bus);
        require(l.p >= 0, l.id, "load p must be nonnegative");
        require(l.freq_sensitivity >= 0, l.id, "freq_sensitivity must be nonnegative");
    }

    for (const auto& island : islands(snap)) {
        int slack = 0;
        for (int b : island)
            if (snap.buses[b].kind == BusKind::slack) ++slack;
        const auto& first = snap.buses[island.front()].id;
        require(slack == 1, first,
                "island containing " + first + " has " + std::to_string(slack) +
                    " slack buses (exactly one required)");
    }
}

SystemMetrics system_metrics(const Snapshot& snap) {
    SystemMetrics m;
    m.muon_by_region[Region::IE] = 0;
    m.muon_by_region[Region::NI] = 0;
    for (const auto& g : snap.machines) {
        if (!g.online) continue;
        m.inertia_mws += g.kinetic_energy_mws();
        if (g.is_large_unit) {
            ++m.muon_count;
            const int b = snap.bus_index(g.bus);
            if (b >= 0) ++m.muon_by_region[snap.buses[b].region];
        }
    }
    double imports = 0.0;
    double exports = 0.0;
    for (const auto& u : snap.ibr_units) {
        if (!u.online) continue;
        switch (u.kind) {
            case IbrKind::wind: m.wind_mw += u.p; break;
            case IbrKind::solar: m.solar_mw += u.p; break;
            case IbrKind::hvdc:
                if (u.p > 0) imports += u.p;
                else exports += -u.p;
                m.net_interchange_mw += u.p;
                break;
        }
    }
    for (const auto& l : snap.loads) m.demand_mw += l.p;

    const double denom = m.demand_mw + exports;
    if (denom <= 0.0) throw DegenerateError("SNSP undefined: demand plus exports is zero");
    m.snsp_pct = 100.0 * (m.wind_mw + m.solar_mw + imports) / denom;
    m.snsp_exceeds_100 = m.snsp_pct > 100.0;
    return m;
}

Snapshot apply_modifications(const Snapshot& snap, const std::vector<Modification>& mods) {
    Snapshot out = snap;
    for (const auto& mod : mods) {
        if (const int gi = out.machine_index(mod.element); gi >= 0) {
            auto& g = out.machines[gi];
            switch (mod.action) {
                case ModAction::set_p:
                    if (!mod.mw) throw LimitError(g.id + ": set_p requires mw");
                    g.p_set = *mod.mw;
                    break;
                case ModAction::commit:
                    g.online = true;
                    if (mod.mw) g.p_set = *mod.mw;
                    break;
                case ModAction::decommit:
                    g.online = false;
                    break;
            }
            if (g.online && (g.p_set < g.p_min || g.p_set > g.p_max))
                throw LimitError(g.id + ": setpoint " + std::to_string(g.p_set) + " MW outside [" +
                                 std::to_string(g.p_min) + ", " + std::to_string(g.p_max) + "]");
            continue;
        }
        if (const int ui = out.ibr_index(mod.element); ui >= 0) {
            auto& u = out.ibr_units[ui];
            switch (mod.action) {
                case ModAction::set_p:
                    if (!mod.mw) throw LimitError(u.id + ": set_p requires mw");
                    u.p = *mod.mw;
                    break;
                case ModAction::commit:
                    u.online = true;
                    if (mod.mw) u.p = *mod.mw;
                    break;
                case ModAction::decommit:
                    u.online = false;
                    break;
            }
            if (u.kind != IbrKind::hvdc && u.p < 0)
                throw LimitError(u.id + ": wind/solar output cannot be negative");
            continue;
        }
        throw UnknownElementError("unknown element " + mod.element);
    }
    return out;
}

}  // namespace dsa
