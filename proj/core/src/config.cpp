#include "dsa/config.hpp"

#include <fstream>
#include <set>
#include <type_traits>

#include "dsa/error.hpp"

namespace dsa {

namespace {

using json = nlohmann::json;

// Reads one config block, remembering which keys were consumed so that
// anything left over can be reported.
class Block {
public:
    Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        if constexpr (std::is_same_v<T, std::string>) {
            // Profile names such as 2030 arrive as numbers from key=value overrides.
            if (j_.at(key).is_number_integer()) {
                out = std::to_string(j_.at(key).get<long long>());
                return;
            }
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where() + "." + key + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown config key " + where() + "." + k);
    }

    std::string where() const { return path_.empty() ? "<root>" : path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Region region_of(const std::string& s) {
    if (s == "IE") return Region::IE;
    if (s == "NI") return Region::NI;
    throw ConfigError("unknown region '" + s + "'");
}

MuonMode muon_mode_of(const std::string& s) {
    if (s == "system") return MuonMode::system;
    if (s == "per_region") return MuonMode::per_region;
    throw ConfigError("muon_mode must be 'system' or 'per_region'");
}

std::map<Region, int> region_map(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    std::map<Region, int> out;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number_integer()) throw ConfigError(where + "." + k + " must be an integer");
        out[region_of(k)] = v.get<int>();
    }
    return out;
}

void read_profile(const json& j, PolicyCatalog& catalog) {
    Block b(j, "policy.profiles[]");
    PolicyLimits p;
    b.read("profile", p.profile);
    b.read("snsp_max_pct", p.snsp_max_pct);
    b.read("rocof_limit_hz_s", p.rocof_limit_hz_s);
    b.read("inertia_floor_mws", p.inertia_floor_mws);
    b.read("muon_min", p.muon_min);
    if (const auto* r = b.child("muon_min_by_region")) p.muon_min_by_region = region_map(*r, "muon_min_by_region");
    b.finish();
    if (p.profile.empty()) throw ConfigError("policy profile needs a name");
    catalog.add(p);
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

}  // namespace

PolicyLimits EngineConfig::policy_limits() const {
    PolicyLimits p = catalog.load_profile(policy_profile);
    p.muon_mode = muon_mode;
    if (!muon_min_by_region.empty()) p.muon_min_by_region = muon_min_by_region;
    return p;
}

ScreenOptions EngineConfig::screen_options() const {
    ScreenOptions o;
    o.limits = limits;
    o.voltage = voltage;
    o.sim = sim;
    o.angle_screening = angle_screening;
    o.budget_s = budget_s;
    o.workers = workers;
    o.power_flow = power_flow;
    o.dump_traces_dir = dump_traces_dir;
    return o;
}

void EngineConfig::validate() const {
    if (!(cycle_period_s > 0)) throw ConfigError("cycle_period_s must be positive");
    if (!(budget_s > 0)) throw ConfigError("budget_s must be positive");
    if (budget_s > cycle_period_s) throw ConfigError("budget_s must not exceed cycle_period_s");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (max_concurrent_whatifs < 1) throw ConfigError("max_concurrent_whatifs must be at least 1");
    limits.validate(50.0);
    sim.validate();
    if (!(power_flow.tol > 0) || power_flow.max_iter < 1) throw ConfigError("power_flow tol/max_iter must be positive");
    if (!(voltage.thermal_pct > 0)) throw ConfigError("voltage.thermal_pct must be positive");
    for (const auto& [kv, r] : voltage.ranges)
        if (!(r.v_min < r.v_max)) throw ConfigError("voltage range for " + std::to_string(kv) + " kV is empty");
    if (!(severity.rocof_hz_s > 0 && severity.frequency_hz > 0 && severity.angle_margin > 0 &&
          severity.voltage_pu > 0 && severity.thermal_pct > 0))
        throw ConfigError("severity normalization constants must be positive");
    PolicyLimits p;
    try {
        p = policy_limits();
    } catch (const UnknownProfileError& e) {
        throw ConfigError(e.what());
    }
    p.validate();
    if (limits.rocof_limit > p.rocof_limit_hz_s)
        throw ConfigError("limits.rocof_limit must not exceed the policy RoCoF limit of profile " + p.profile);
    if (contingencies.ibr_mw_floor < 0) throw ConfigError("contingencies.ibr_mw_floor must be nonnegative");
    parse_listen(listen);
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == listen.size())
        throw ConfigError("listen address must be host:port, got '" + listen + "'");
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(listen.substr(colon + 1), &used);
        if (used != listen.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("listen port is not a number in '" + listen + "'");
    }
    if (port < 0 || port > 65535) throw ConfigError("listen port out of range in '" + listen + "'");
    return {listen.substr(0, colon), port};
}

EngineConfig config_from_json(const json& doc) {
    EngineConfig c;
    Block root(doc, "");
    root.read("cycle_period_s", c.cycle_period_s);
    root.read("budget_s", c.budget_s);
    root.read("workers", c.workers);
    root.read("angle_screening", c.angle_screening);
    root.read("archive_path", c.archive_path);
    root.read("inbox_path", c.inbox_path);
    root.read("listen", c.listen);
    root.read("max_concurrent_whatifs", c.max_concurrent_whatifs);
    root.read("dump_traces_dir", c.dump_traces_dir);

    if (const auto* j = root.child("limits")) {
        Block b(*j, "limits");
        b.read("rocof_limit", c.limits.rocof_limit);
        b.read("nadir_limit", c.limits.nadir_limit);
        b.read("zenith_limit", c.limits.zenith_limit);
        b.read("rocof_window", c.limits.rocof_window);
        b.read("blanking", c.limits.blanking);
        b.read("angle_threshold", c.limits.angle_threshold);
        b.finish();
    }
    if (const auto* j = root.child("voltage")) {
        Block b(*j, "voltage");
        b.read("thermal_pct", c.voltage.thermal_pct);
        if (const auto* f = b.child("fallback")) {
            Block fb(*f, "voltage.fallback");
            fb.read("v_min", c.voltage.fallback.v_min);
            fb.read("v_max", c.voltage.fallback.v_max);
            fb.finish();
        }
        if (const auto* r = b.child("ranges")) {
            if (!r->is_array()) throw ConfigError("voltage.ranges must be an array");
            for (const auto& e : *r) {
                Block rb(e, "voltage.ranges[]");
                double kv = 0.0;
                VoltageRange vr;
                rb.read("nominal_kv", kv);
                rb.read("v_min", vr.v_min);
                rb.read("v_max", vr.v_max);
                rb.finish();
                if (!(kv > 0)) throw ConfigError("voltage.ranges[].nominal_kv must be positive");
                c.voltage.ranges[kv] = vr;
            }
        }
        b.finish();
    }
    if (const auto* j = root.child("simulation")) {
        Block b(*j, "simulation");
        b.read("dt", c.sim.dt);
        b.read("t_end", c.sim.t_end);
        b.read("event_time", c.sim.event_time);
        b.read("governors", c.sim.governors);
        std::string integrator = to_string(c.sim.integrator);
        b.read("integrator", integrator);
        if (integrator == "trapezoidal") c.sim.integrator = Integrator::trapezoidal;
        else if (integrator == "rk4") c.sim.integrator = Integrator::rk4;
        else throw ConfigError("simulation.integrator must be 'trapezoidal' or 'rk4'");
        b.finish();
    }
    if (const auto* j = root.child("power_flow")) {
        Block b(*j, "power_flow");
        b.read("tol", c.power_flow.tol);
        b.read("max_iter", c.power_flow.max_iter);
        b.read("flat_start", c.power_flow.flat_start);
        b.finish();
    }
    if (const auto* j = root.child("contingencies")) {
        Block b(*j, "contingencies");
        b.read("include_branches", c.contingencies.include_branches);
        b.read("include_machines", c.contingencies.include_machines);
        b.read("include_ibr", c.contingencies.include_ibr);
        b.read("ibr_mw_floor", c.contingencies.ibr_mw_floor);
        if (const auto* f = b.child("line_fault_clearing_s"); f && !f->is_null()) {
            if (!f->is_number()) throw ConfigError("contingencies.line_fault_clearing_s must be a number");
            c.contingencies.line_fault_clearing_s = f->get<double>();
        }
        if (const auto* s = b.child("splits")) {
            if (!s->is_array()) throw ConfigError("contingencies.splits must be an array");
            for (const auto& e : *s) {
                Block sb(e, "contingencies.splits[]");
                SplitDefinition d;
                sb.read("id", d.id);
                sb.read("branches", d.branches);
                sb.read("description", d.description);
                sb.finish();
                if (d.id.empty() || d.branches.empty())
                    throw ConfigError("contingencies.splits[] needs an id and at least one branch");
                c.contingencies.splits.push_back(std::move(d));
            }
        }
        b.finish();
    }
    if (const auto* j = root.child("severity")) {
        Block b(*j, "severity");
        b.read("rocof_hz_s", c.severity.rocof_hz_s);
        b.read("frequency_hz", c.severity.frequency_hz);
        b.read("angle_margin", c.severity.angle_margin);
        b.read("voltage_pu", c.severity.voltage_pu);
        b.read("thermal_pct", c.severity.thermal_pct);
        b.finish();
    }
    if (const auto* j = root.child("policy")) {
        Block b(*j, "policy");
        b.read("profile", c.policy_profile);
        std::string mode = "system";
        b.read("muon_mode", mode);
        c.muon_mode = muon_mode_of(mode);
        if (const auto* r = b.child("muon_min_by_region")) c.muon_min_by_region = region_map(*r, "policy.muon_min_by_region");
        if (const auto* ps = b.child("profiles")) {
            if (!ps->is_array()) throw ConfigError("policy.profiles must be an array");
            for (const auto& p : *ps) read_profile(p, c.catalog);
        }
        b.finish();
    }
    root.finish();
    return c;
}

EngineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    return config_from_json(doc);
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    if (doc.is_null()) doc = json::object();
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value, got '" + o + "'");
        std::string key = o.substr(0, eq);
        if (key.find('.') == std::string::npos) key = "limits." + key;
        json* node = &doc;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError("bad override key '" + key + "'");
            if (dot == std::string::npos) {
                (*node)[part] = parse_value(o.substr(eq + 1));
                break;
            }
            if (!node->contains(part)) (*node)[part] = json::object();
            node = &(*node)[part];
            if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object value");
            start = dot + 1;
        }
    }
}

}  // namespace dsa
