#include "dsa/report_io.hpp"

#include "dsa/error.hpp"
#include "dsa/snapshot_io.hpp"

namespace dsa {

namespace {

using json = nlohmann::json;

Region region_from(const std::string& s) {
    if (s == "IE") return Region::IE;
    if (s == "NI") return Region::NI;
    throw ParseError("unknown region '" + s + "'");
}

template <typename T>
T get(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("report: missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return get<T>(j, key);
}

}  // namespace

ojson to_json(const SystemMetrics& m) {
    ojson j;
    j["inertia_mws"] = m.inertia_mws;
    j["demand_mw"] = m.demand_mw;
    j["wind_mw"] = m.wind_mw;
    j["solar_mw"] = m.solar_mw;
    j["snsp_pct"] = m.snsp_pct;
    j["muon_count"] = m.muon_count;
    ojson by_region = ojson::object();
    for (const auto& [r, n] : m.muon_by_region) by_region[to_string(r)] = n;
    j["muon_by_region"] = by_region;
    j["net_interchange_mw"] = m.net_interchange_mw;
    j["snsp_exceeds_100"] = m.snsp_exceeds_100;
    return j;
}

ojson to_json(const PolicyReport& r) {
    ojson j;
    j["profile"] = r.profile;
    j["compliant"] = r.compliant;
    auto& arr = j["constraints"] = ojson::array();
    for (const auto& c : r.constraints) {
        ojson o;
        o["name"] = c.name;
        o["value"] = c.value;
        o["limit"] = c.limit;
        o["compliant"] = c.compliant;
        o["evaluated"] = c.evaluated;
        o["headroom"] = c.headroom;
        o["note"] = c.note;
        arr.push_back(std::move(o));
    }
    return j;
}

ojson to_json(const SecurityLimits& l) {
    ojson j;
    j["rocof_limit"] = l.rocof_limit;
    j["nadir_limit"] = l.nadir_limit;
    j["zenith_limit"] = l.zenith_limit;
    j["rocof_window"] = l.rocof_window;
    j["blanking"] = l.blanking;
    j["angle_threshold"] = l.angle_threshold;
    return j;
}

ojson to_json(const SecurityMetrics& m) {
    ojson j;
    j["rocof_max"] = m.rocof_max;
    j["rocof_min"] = m.rocof_min;
    j["nadir"] = m.nadir;
    j["zenith"] = m.zenith;
    j["angle_margin"] = m.angle_margin ? ojson(*m.angle_margin) : ojson(nullptr);
    j["voltage_secure"] = m.voltage_secure;
    auto& viol = j["voltage_violations"] = ojson::array();
    for (const auto& v : m.voltage_violations) {
        ojson o;
        o["element"] = v.element;
        o["kind"] = to_string(v.kind);
        o["value"] = v.value;
        o["limit"] = v.limit;
        viol.push_back(std::move(o));
    }
    auto& binding = j["binding"] = ojson::array();
    for (Binding b : m.binding.items()) binding.push_back(token(b));
    return j;
}

ojson to_json(const CaseResult& c) {
    ojson j;
    j["contingency_id"] = c.contingency_id;
    j["kind"] = to_string(c.kind);
    j["description"] = c.description;
    j["status"] = to_string(c.status);
    j["metrics"] = to_json(c.metrics);
    j["wall_time_s"] = c.wall_time_s;
    if (c.status == CaseStatus::failed) j["failure_reason"] = c.failure_reason;
    return j;
}

ojson to_json(const Totals& t) {
    ojson j;
    j["cases"] = t.cases;
    j["secure"] = t.secure;
    j["insecure"] = t.insecure;
    j["failed"] = t.failed;
    return j;
}

ojson to_json(const CycleReport& r, const ReportJsonOptions& opts) {
    ojson j;
    j["snapshot_ts"] = r.snapshot_ts;
    j["status"] = r.status;
    if (!r.diagnosis.empty()) j["diagnosis"] = r.diagnosis;
    j["ephemeral"] = r.ephemeral;
    if (r.provenance) {
        ojson p;
        p["base_ts"] = r.provenance->base_ts ? ojson(*r.provenance->base_ts) : ojson(nullptr);
        p["modifications"] = to_json(r.provenance->modifications);
        if (r.provenance->policy_profile) p["policy_profile"] = *r.provenance->policy_profile;
        j["provenance"] = p;
    }
    j["system_metrics"] = to_json(r.system_metrics);
    j["policy"] = to_json(r.policy);
    j["limits"] = to_json(r.limits);
    auto& cases = j["cases"] = ojson::array();
    for (const auto& c : r.cases) {
        auto cj = to_json(c);
        if (opts.normalize_timing) cj["wall_time_s"] = 0.0;
        cases.push_back(std::move(cj));
    }
    j["totals"] = to_json(r.totals);
    j["wall_time_s"] = opts.normalize_timing ? 0.0 : r.wall_time_s;
    j["budget_s"] = r.budget_s;
    j["over_budget"] = r.over_budget;
    return j;
}

std::string serialize(const CycleReport& r, const ReportJsonOptions& opts) { return to_json(r, opts).dump(2); }

SystemMetrics system_metrics_from_json(const json& j) {
    SystemMetrics m;
    m.inertia_mws = get<double>(j, "inertia_mws");
    m.demand_mw = get<double>(j, "demand_mw");
    m.wind_mw = get<double>(j, "wind_mw");
    m.solar_mw = get_or<double>(j, "solar_mw", 0.0);
    m.snsp_pct = get<double>(j, "snsp_pct");
    m.muon_count = get<int>(j, "muon_count");
    if (j.contains("muon_by_region"))
        for (const auto& [k, v] : j.at("muon_by_region").items()) m.muon_by_region[region_from(k)] = v.get<int>();
    m.net_interchange_mw = get_or<double>(j, "net_interchange_mw", 0.0);
    m.snsp_exceeds_100 = get_or<bool>(j, "snsp_exceeds_100", false);
    return m;
}

PolicyReport policy_report_from_json(const json& j) {
    PolicyReport r;
    r.profile = get_or<std::string>(j, "profile", "");
    r.compliant = get_or<bool>(j, "compliant", true);
    if (j.is_object() && j.contains("constraints")) {
        for (const auto& c : j.at("constraints")) {
            ConstraintStatus s;
            s.name = get<std::string>(c, "name");
            s.value = get<double>(c, "value");
            s.limit = get<double>(c, "limit");
            s.compliant = get<bool>(c, "compliant");
            s.evaluated = get_or<bool>(c, "evaluated", true);
            s.headroom = get_or<double>(c, "headroom", 0.0);
            s.note = get_or<std::string>(c, "note", "");
            r.constraints.push_back(std::move(s));
        }
    }
    return r;
}

SecurityLimits security_limits_from_json(const json& j) {
    SecurityLimits l;
    l.rocof_limit = get_or<double>(j, "rocof_limit", l.rocof_limit);
    l.nadir_limit = get_or<double>(j, "nadir_limit", l.nadir_limit);
    l.zenith_limit = get_or<double>(j, "zenith_limit", l.zenith_limit);
    l.rocof_window = get_or<double>(j, "rocof_window", l.rocof_window);
    l.blanking = get_or<double>(j, "blanking", l.blanking);
    l.angle_threshold = get_or<double>(j, "angle_threshold", l.angle_threshold);
    return l;
}

SecurityMetrics security_metrics_from_json(const json& j) {
    SecurityMetrics m;
    m.rocof_max = get<double>(j, "rocof_max");
    m.rocof_min = get<double>(j, "rocof_min");
    m.nadir = get<double>(j, "nadir");
    m.zenith = get<double>(j, "zenith");
    if (j.contains("angle_margin") && !j.at("angle_margin").is_null()) m.angle_margin = get<double>(j, "angle_margin");
    m.voltage_secure = get_or<bool>(j, "voltage_secure", true);
    if (j.contains("voltage_violations")) {
        for (const auto& v : j.at("voltage_violations")) {
            m.voltage_violations.push_back({get<std::string>(v, "element"),
                                            parse_violation_kind(get<std::string>(v, "kind")),
                                            get<double>(v, "value"), get<double>(v, "limit")});
        }
    }
    if (j.contains("binding"))
        for (const auto& b : j.at("binding")) m.binding.insert(parse_binding(b.get<std::string>()));
    return m;
}

CaseResult case_result_from_json(const json& j) {
    CaseResult c;
    c.contingency_id = get<std::string>(j, "contingency_id");
    c.kind = parse_contingency_kind(get<std::string>(j, "kind"));
    c.description = get_or<std::string>(j, "description", "");
    c.status = parse_case_status(get<std::string>(j, "status"));
    c.metrics = security_metrics_from_json(get<json>(j, "metrics"));
    c.wall_time_s = get_or<double>(j, "wall_time_s", 0.0);
    c.failure_reason = get_or<std::string>(j, "failure_reason", "");
    return c;
}

namespace {

CycleReport report_from(const json& j) {
    if (!j.is_object()) throw ParseError("report: document is not an object");
    CycleReport r;
    r.snapshot_ts = get<std::int64_t>(j, "snapshot_ts");
    r.status = get_or<std::string>(j, "status", "complete");
    r.diagnosis = get_or<std::string>(j, "diagnosis", "");
    r.ephemeral = get_or<bool>(j, "ephemeral", false);
    if (j.contains("provenance")) {
        const auto& p = j.at("provenance");
        Provenance prov;
        if (p.contains("base_ts") && !p.at("base_ts").is_null()) prov.base_ts = p.at("base_ts").get<std::int64_t>();
        if (p.contains("modifications")) prov.modifications = modifications_from_json(p.at("modifications"));
        if (p.contains("policy_profile")) prov.policy_profile = p.at("policy_profile").get<std::string>();
        r.provenance = prov;
    }
    r.system_metrics = system_metrics_from_json(get<json>(j, "system_metrics"));
    if (j.contains("policy")) r.policy = policy_report_from_json(j.at("policy"));
    if (j.contains("limits")) r.limits = security_limits_from_json(j.at("limits"));
    for (const auto& c : get<json>(j, "cases")) r.cases.push_back(case_result_from_json(c));
    const auto& t = get<json>(j, "totals");
    r.totals = {get<int>(t, "cases"), get<int>(t, "secure"), get<int>(t, "insecure"), get<int>(t, "failed")};
    r.wall_time_s = get_or<double>(j, "wall_time_s", 0.0);
    r.budget_s = get_or<double>(j, "budget_s", 0.0);
    r.over_budget = get_or<bool>(j, "over_budget", false);
    if (r.totals != tally(r.cases)) throw ParseError("report: totals do not match the case list");
    return r;
}

}  // namespace

CycleReport cycle_report_from_json(const json& j) {
    try {
        return report_from(j);
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

CycleReport parse_cycle_report(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return cycle_report_from_json(j);
}

CycleReport normalize_timing(CycleReport r) {
    r.wall_time_s = 0.0;
    for (auto& c : r.cases) c.wall_time_s = 0.0;
    return r;
}

}  // namespace dsa
