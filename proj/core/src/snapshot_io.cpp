#include "dsa/snapshot_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "dsa/error.hpp"

namespace dsa {

namespace {

using json = nlohmann::json;

// Reads fields out of one JSON object and tracks which keys were consumed so
// that leftovers can be rejected (strict) or reported (lenient).
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string where, const LoadOptions& opts)
        : obj_(obj), where_(std::move(where)), opts_(opts) {
        if (!obj_.is_object()) throw ParseError(where_ + ": expected an object");
    }

    ~ObjectReader() = default;

    template <class T>
    T required(const char* key) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) throw ParseError(where_ + ": missing required key '" + key + "'");
        return convert<T>(*it, key);
    }

    template <class T>
    T optional(const char* key, T fallback) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return fallback;
        return convert<T>(*it, key);
    }

    void finish() {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            bool known = false;
            for (const auto& k : seen_) known = known || k == it.key();
            if (known) continue;
            const std::string msg = where_ + ": unknown key '" + it.key() + "'";
            if (!opts_.lenient) throw ParseError(msg);
            if (opts_.warnings) opts_.warnings->push_back(msg);
        }
    }

private:
    template <class T>
    T convert(const json& v, const char* key) {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ParseError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ParseError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ParseError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ParseError("");
            }
            return v.get<T>();
        } catch (const std::exception&) {
            throw ParseError(where_ + ": key '" + key + "' has the wrong type");
        }
    }

    const json& obj_;
    std::string where_;
    const LoadOptions& opts_;
    std::vector<std::string> seen_;
};

BusKind parse_bus_kind(const std::string& s, const std::string& where) {
    if (s == "slack") return BusKind::slack;
    if (s == "PV" || s == "pv") return BusKind::pv;
    if (s == "PQ" || s == "pq") return BusKind::pq;
    throw ParseError(where + ": unknown bus kind '" + s + "'");
}

Region parse_region(const std::string& s, const std::string& where) {
    if (s == "IE") return Region::IE;
    if (s == "NI") return Region::NI;
    throw ParseError(where + ": unknown region '" + s + "'");
}

IbrKind parse_ibr_kind(const std::string& s, const std::string& where) {
    if (s == "wind") return IbrKind::wind;
    if (s == "solar") return IbrKind::solar;
    if (s == "hvdc") return IbrKind::hvdc;
    throw ParseError(where + ": unknown IBR kind '" + s + "'");
}

const json& array_at(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw ParseError(std::string("missing required key '") + key + "'");
    if (!it->is_array()) throw ParseError(std::string("key '") + key + "' must be an array");
    return *it;
}

std::string label(const char* section, std::size_t i, const json& item) {
    if (item.is_object()) {
        auto it = item.find("id");
        if (it != item.end() && it->is_string()) return it->get<std::string>();
    }
    return std::string(section) + "[" + std::to_string(i) + "]";
}

}  // namespace

Snapshot snapshot_from_json(const json& doc, const LoadOptions& opts) {
    Snapshot s;
    ObjectReader top(doc, "snapshot", opts);
    s.timestamp = top.required<std::int64_t>("timestamp");
    s.base_mva = top.required<double>("base_mva");
    s.nominal_hz = top.optional<double>("nominal_hz", 50.0);

    const auto& buses = array_at(doc, "buses");
    top.required<json>("buses");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto where = label("buses", i, buses[i]);
        ObjectReader r(buses[i], where, opts);
        Bus b;
        b.id = r.required<std::string>("id");
        b.nominal_kv = r.required<double>("nominal_kv");
        b.kind = parse_bus_kind(r.required<std::string>("kind"), where);
        b.v_mag = r.optional<double>("v_mag", 1.0);
        b.v_ang = r.optional<double>("v_ang", 0.0);
        b.region = parse_region(r.optional<std::string>("region", "IE"), where);
        r.finish();
        s.buses.push_back(std::move(b));
    }

    const auto& branches = array_at(doc, "branches");
    top.required<json>("branches");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        ObjectReader r(branches[i], label("branches", i, branches[i]), opts);
        Branch br;
        br.id = r.required<std::string>("id");
        br.from_bus = r.required<std::string>("from_bus");
        br.to_bus = r.required<std::string>("to_bus");
        br.r = r.optional<double>("r", 0.0);
        br.x = r.required<double>("x");
        br.b_shunt = r.optional<double>("b_shunt", 0.0);
        br.mva_rating = r.required<double>("mva_rating");
        br.in_service = r.optional<bool>("in_service", true);
        r.finish();
        s.branches.push_back(std::move(br));
    }

    const auto& machines = array_at(doc, "machines");
    top.required<json>("machines");
    for (std::size_t i = 0; i < machines.size(); ++i) {
        ObjectReader r(machines[i], label("machines", i, machines[i]), opts);
        SyncMachine g;
        g.id = r.required<std::string>("id");
        g.bus = r.required<std::string>("bus");
        g.s_rated = r.required<double>("s_rated");
        g.h = r.required<double>("h");
        g.d = r.optional<double>("d", 0.0);
        g.p_set = r.required<double>("p_set");
        g.q_set = r.optional<double>("q_set", 0.0);
        g.p_max = r.required<double>("p_max");
        g.p_min = r.optional<double>("p_min", 0.0);
        g.droop_r = r.optional<double>("droop_r", 0.05);
        g.t_gov = r.optional<double>("t_gov", 0.5);
        g.xd_prime = r.optional<double>("xd_prime", 0.3);
        g.online = r.optional<bool>("online", true);
        g.is_large_unit = r.optional<bool>("is_large_unit", false);
        r.finish();
        s.machines.push_back(std::move(g));
    }

    const auto& ibrs = array_at(doc, "ibr_units");
    top.required<json>("ibr_units");
    for (std::size_t i = 0; i < ibrs.size(); ++i) {
        const auto where = label("ibr_units", i, ibrs[i]);
        ObjectReader r(ibrs[i], where, opts);
        IbrUnit u;
        u.id = r.required<std::string>("id");
        u.bus = r.required<std::string>("bus");
        u.kind = parse_ibr_kind(r.required<std::string>("kind"), where);
        u.p = r.required<double>("p");
        u.q = r.optional<double>("q", 0.0);
        u.online = r.optional<bool>("online", true);
        r.finish();
        s.ibr_units.push_back(std::move(u));
    }

    const auto& loads = array_at(doc, "loads");
    top.required<json>("loads");
    for (std::size_t i = 0; i < loads.size(); ++i) {
        ObjectReader r(loads[i], label("loads", i, loads[i]), opts);
        Load l;
        l.id = r.required<std::string>("id");
        l.bus = r.required<std::string>("bus");
        l.p = r.required<double>("p");
        l.q = r.optional<double>("q", 0.0);
        l.freq_sensitivity = r.optional<double>("freq_sensitivity", 0.0);
        r.finish();
        s.loads.push_back(std::move(l));
    }
    top.finish();

    validate(s);
    return s;
}

Snapshot load_snapshot(std::istream& source, const LoadOptions& opts) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed snapshot document: ") + e.what());
    }
    return snapshot_from_json(doc, opts);
}

Snapshot load_snapshot_file(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw StorageError("cannot open " + path);
    return load_snapshot(in, opts);
}

nlohmann::ordered_json to_json(const Snapshot& snap) {
    nlohmann::ordered_json doc;
    doc["timestamp"] = snap.timestamp;
    doc["base_mva"] = snap.base_mva;
    doc["nominal_hz"] = snap.nominal_hz;
    auto& buses = doc["buses"] = nlohmann::ordered_json::array();
    for (const auto& b : snap.buses)
        buses.push_back({{"id", b.id},
                         {"nominal_kv", b.nominal_kv},
                         {"kind", to_string(b.kind)},
                         {"v_mag", b.v_mag},
                         {"v_ang", b.v_ang},
                         {"region", to_string(b.region)}});
    auto& branches = doc["branches"] = nlohmann::ordered_json::array();
    for (const auto& br : snap.branches)
        branches.push_back({{"id", br.id},
                            {"from_bus", br.from_bus},
                            {"to_bus", br.to_bus},
                            {"r", br.r},
                            {"x", br.x},
                            {"b_shunt", br.b_shunt},
                            {"mva_rating", br.mva_rating},
                            {"in_service", br.in_service}});
    auto& machines = doc["machines"] = nlohmann::ordered_json::array();
    for (const auto& g : snap.machines)
        machines.push_back({{"id", g.id},
                            {"bus", g.bus},
                            {"s_rated", g.s_rated},
                            {"h", g.h},
                            {"d", g.d},
                            {"p_set", g.p_set},
                            {"q_set", g.q_set},
                            {"p_max", g.p_max},
                            {"p_min", g.p_min},
                            {"droop_r", g.droop_r},
                            {"t_gov", g.t_gov},
                            {"xd_prime", g.xd_prime},
                            {"online", g.online},
                            {"is_large_unit", g.is_large_unit}});
    auto& ibrs = doc["ibr_units"] = nlohmann::ordered_json::array();
    for (const auto& u : snap.ibr_units)
        ibrs.push_back({{"id", u.id},
                        {"bus", u.bus},
                        {"kind", to_string(u.kind)},
                        {"p", u.p},
                        {"q", u.q},
                        {"online", u.online}});
    auto& loads = doc["loads"] = nlohmann::ordered_json::array();
    for (const auto& l : snap.loads)
        loads.push_back({{"id", l.id},
                         {"bus", l.bus},
                         {"p", l.p},
                         {"q", l.q},
                         {"freq_sensitivity", l.freq_sensitivity}});
    return doc;
}

std::string serialize(const Snapshot& snap) { return to_json(snap).dump(2); }

std::vector<Modification> modifications_from_json(const json& doc) {
    if (!doc.is_array()) throw ParseError("modifications must be an array");
    std::vector<Modification> out;
    LoadOptions strict;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        ObjectReader r(doc[i], "modifications[" + std::to_string(i) + "]", strict);
        Modification m;
        m.element = r.required<std::string>("element");
        const auto action = r.required<std::string>("action");
        if (action == "set_p") m.action = ModAction::set_p;
        else if (action == "commit") m.action = ModAction::commit;
        else if (action == "decommit") m.action = ModAction::decommit;
        else throw ParseError("unknown modification action '" + action + "'");
        if (doc[i].contains("mw") && !doc[i]["mw"].is_null()) m.mw = r.required<double>("mw");
        else r.optional<double>("mw", 0.0);
        r.finish();
        out.push_back(std::move(m));
    }
    return out;
}

nlohmann::ordered_json to_json(const std::vector<Modification>& mods) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : mods) {
        nlohmann::ordered_json j;
        j["element"] = m.element;
        j["action"] = to_string(m.action);
        if (m.mw) j["mw"] = *m.mw;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace dsa
