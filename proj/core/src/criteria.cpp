#include "dsa/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsa/error.hpp"

namespace dsa {

namespace {

constexpr double kRadToDeg = 57.295779513082320876798154814105;

// Index of the first sample at or after time t (tolerant of rounding).
long first_at_or_after(const Trace& tr, double t) {
    return static_cast<long>(std::ceil((t - tr.t0) / tr.dt - 1e-9));
}

}  // namespace

void SecurityLimits::validate(double nominal_hz) const {
    if (!(rocof_limit > 0)) throw ConfigError("rocof_limit must be positive");
    if (!(nadir_limit < nominal_hz && nominal_hz < zenith_limit))
        throw ConfigError("limits must satisfy nadir_limit < nominal < zenith_limit");
    if (!(rocof_window > 0)) throw ConfigError("rocof_window must be positive");
    if (!(blanking >= 0)) throw ConfigError("blanking must be nonnegative");
    if (!(angle_threshold > 0)) throw ConfigError("angle_threshold must be positive");
}

std::vector<Binding> BindingSet::items() const {
    std::vector<Binding> out;
    for (Binding b : kAllBindings)
        if (contains(b)) out.push_back(b);
    return out;
}

std::string display_name(Binding b) {
    switch (b) {
        case Binding::rocof_plus: return "RoCoF+";
        case Binding::rocof_minus: return "RoCoF-";
        case Binding::nadir: return "Nadir";
        case Binding::zenith: return "Zenith";
        case Binding::rotor_angle: return "RotorAngle";
        case Binding::voltage: return "Voltage";
    }
    return "?";
}

std::string token(Binding b) {
    switch (b) {
        case Binding::rocof_plus: return "rocof_plus";
        case Binding::rocof_minus: return "rocof_minus";
        case Binding::nadir: return "nadir";
        case Binding::zenith: return "zenith";
        case Binding::rotor_angle: return "rotor_angle";
        case Binding::voltage: return "voltage";
    }
    return "?";
}

Binding parse_binding(const std::string& s) {
    for (Binding b : kAllBindings)
        if (s == token(b) || s == display_name(b)) return b;
    throw ParseError("unknown constraint flag '" + s + "'");
}

RocofResult rocof(const Trace& tr, double window, double blanking, double event_time) {
    const long n = static_cast<long>(tr.values.size());
    if (n < 2 || !(tr.dt > 0) || (n - 1) * tr.dt <= window + 1e-12)
        throw TraceTooShortError("trace shorter than the RoCoF window");
    const long w = std::lround(window / tr.dt);
    // The sample at the event instant still holds the undisturbed state and
    // stays admissible; only samples strictly after it are blanked.
    long blank_lo = first_at_or_after(tr, event_time);
    if (std::abs(tr.t0 + blank_lo * tr.dt - event_time) <= 1e-9 * tr.dt) ++blank_lo;
    const long blank_hi = first_at_or_after(tr, event_time + blanking);  // first admissible after event
    auto blanked = [&](long k) { return k >= blank_lo && k < blank_hi; };

    RocofResult r{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    bool any = false;
    for (long k = std::max(w, blank_hi); k < n; ++k) {
        if (blanked(k - w)) continue;
        const double s = (tr.values[k] - tr.values[k - w]) / window;
        r.rocof_max = std::max(r.rocof_max, s);
        r.rocof_min = std::min(r.rocof_min, s);
        any = true;
    }
    if (!any) throw TraceTooShortError("no admissible RoCoF window after blanking");
    return r;
}

NadirZenith nadir_zenith(const Trace& tr, double event_time) {
    if (tr.values.empty()) throw EmptyTraceError("empty frequency trace");
    const long start = std::max(0L, first_at_or_after(tr, event_time));
    if (start >= static_cast<long>(tr.values.size())) throw EmptyTraceError("no samples after the event");
    const auto [lo, hi] = std::minmax_element(tr.values.begin() + start, tr.values.end());
    return {*lo, *hi};
}

double angle_margin(const DynamicResponse& resp, double threshold_deg) {
    double dmax = -1.0;
    for (const auto& island : resp.islands) {
        if (island.size() < 2) continue;
        const std::size_t first = resp.has_event ? static_cast<std::size_t>(resp.event_step) + 1 : 0;
        for (std::size_t k = first; k < resp.t.size(); ++k) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (int i : island) {
                lo = std::min(lo, resp.delta[i][k]);
                hi = std::max(hi, resp.delta[i][k]);
            }
            dmax = std::max(dmax, (hi - lo) * kRadToDeg);
        }
    }
    if (dmax < 0) throw SingleMachineError("rotor-angle margin needs two machines in one island");
    return (threshold_deg - dmax) / (threshold_deg + dmax);
}

SecurityMetrics classify(const MetricComponents& parts, const SecurityLimits& limits) {
    SecurityMetrics m;
    m.rocof_max = parts.rocof.rocof_max;
    m.rocof_min = parts.rocof.rocof_min;
    m.nadir = parts.extremes.nadir;
    m.zenith = parts.extremes.zenith;
    m.angle_margin = parts.angle_margin;
    m.voltage_secure = parts.voltage_secure;
    m.voltage_violations = parts.voltage_violations;
    if (m.rocof_max > limits.rocof_limit) m.binding.insert(Binding::rocof_plus);
    if (m.rocof_min < -limits.rocof_limit) m.binding.insert(Binding::rocof_minus);
    if (m.nadir < limits.nadir_limit) m.binding.insert(Binding::nadir);
    if (m.zenith > limits.zenith_limit) m.binding.insert(Binding::zenith);
    if (m.angle_margin && *m.angle_margin < 0.0) m.binding.insert(Binding::rotor_angle);
    if (!m.voltage_secure) m.binding.insert(Binding::voltage);
    return m;
}

MetricComponents frequency_components(const DynamicResponse& resp, const SecurityLimits& limits) {
    MetricComponents parts;
    parts.rocof = {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    parts.extremes = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    const double dt = resp.t.size() > 1 ? resp.t[1] - resp.t[0] : 0.0;
    const double event = resp.has_event ? resp.event_time : resp.t.front();
    bool any = false;
    for (const auto& island : resp.islands) {
        if (island.empty()) continue;
        const auto f = coi_frequency(resp, island);
        const Trace tr{resp.t.front(), dt, f};
        const auto r = rocof(tr, limits.rocof_window, limits.blanking, event);
        const auto e = nadir_zenith(tr, event);
        parts.rocof.rocof_max = std::max(parts.rocof.rocof_max, r.rocof_max);
        parts.rocof.rocof_min = std::min(parts.rocof.rocof_min, r.rocof_min);
        parts.extremes.nadir = std::min(parts.extremes.nadir, e.nadir);
        parts.extremes.zenith = std::max(parts.extremes.zenith, e.zenith);
        any = true;
    }
    if (!any) throw NoMachinesError("no island with an online machine after the event");
    return parts;
}

}  // namespace dsa
