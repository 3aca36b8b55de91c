#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsa/dynsim.hpp"
#include "dsa/powerflow.hpp"

namespace dsa {

/// Operator security thresholds.  Defaults are the margins applied inside
/// the operational limits: +-0.9 Hz/s RoCoF over 500 ms, 49.0 Hz nadir,
/// 50.8 Hz zenith.
struct SecurityLimits {
    double rocof_limit = 0.9;    // Hz/s, symmetric
    double nadir_limit = 49.0;   // Hz
    double zenith_limit = 50.8;  // Hz
    double rocof_window = 0.5;   // s
    double blanking = 0.1;       // s after the event
    double angle_threshold = 180.0;  // degrees

    /// Throws ConfigError; `nominal_hz` must sit strictly between nadir and zenith.
    void validate(double nominal_hz = 50.0) const;
    bool operator==(const SecurityLimits&) const = default;
};

enum class Binding : std::uint8_t {
    rocof_plus = 1 << 0,
    rocof_minus = 1 << 1,
    nadir = 1 << 2,
    zenith = 1 << 3,
    rotor_angle = 1 << 4,
    voltage = 1 << 5,
};

/// Small bit set of Binding flags.
class BindingSet {
public:
    constexpr BindingSet() = default;
    constexpr explicit BindingSet(std::uint8_t bits) : bits_(bits) {}

    constexpr bool contains(Binding b) const { return (bits_ & static_cast<std::uint8_t>(b)) != 0; }
    constexpr void insert(Binding b) { bits_ |= static_cast<std::uint8_t>(b); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint8_t bits() const { return bits_; }
    constexpr bool operator==(const BindingSet&) const = default;

    std::vector<Binding> items() const;

private:
    std::uint8_t bits_ = 0;
};

inline constexpr Binding kAllBindings[] = {Binding::rocof_plus, Binding::rocof_minus, Binding::nadir,
                                           Binding::zenith,     Binding::rotor_angle, Binding::voltage};

/// Display name ("RoCoF+", "Nadir", ...).
std::string display_name(Binding b);
/// Config/CLI token ("rocof_plus", "nadir", ...).
std::string token(Binding b);
Binding parse_binding(const std::string& s);

struct SecurityMetrics {
    double rocof_max = 0.0;  // Hz/s, most positive windowed slope
    double rocof_min = 0.0;  // Hz/s, most negative
    double nadir = 50.0;
    double zenith = 50.0;
    std::optional<double> angle_margin;  // absent when not applicable
    bool voltage_secure = true;
    std::vector<Violation> voltage_violations;
    BindingSet binding;

    bool operator==(const SecurityMetrics&) const = default;
};

/// A uniformly sampled trace.
struct Trace {
    double t0 = 0.0;
    double dt = 0.0;
    std::span<const double> values;
};

struct RocofResult {
    double rocof_max = 0.0;
    double rocof_min = 0.0;
};

/// Windowed slope (f(t) - f(t - window)) / window over every admissible
/// sample; window endpoints may not fall inside (event, event + blanking).
/// The sample at the event instant is pre-disturbance and stays admissible.
/// Throws TraceTooShortError.
RocofResult rocof(const Trace& trace, double window, double blanking, double event_time);

struct NadirZenith {
    double nadir = 0.0;
    double zenith = 0.0;
};

/// Extremes over samples with t >= event_time.  Throws EmptyTraceError.
NadirZenith nadir_zenith(const Trace& trace, double event_time = 0.0);

/// (threshold - dmax) / (threshold + dmax) where dmax is the largest rotor
/// angle separation (degrees) between two machines of one island after the
/// event.  Throws SingleMachineError when no island has two machines.
double angle_margin(const DynamicResponse& resp, double threshold_deg);

struct MetricComponents {
    RocofResult rocof;
    NadirZenith extremes;
    std::optional<double> angle_margin;
    bool voltage_secure = true;
    std::vector<Violation> voltage_violations;
};

/// Strict inequalities: a value exactly on a limit is secure.
SecurityMetrics classify(const MetricComponents& parts, const SecurityLimits& limits);

/// Frequency metrics of a response, worst island first: per-island COI
/// frequency, RoCoF and extremes, combined component-wise.
MetricComponents frequency_components(const DynamicResponse& resp, const SecurityLimits& limits);

}  // namespace dsa
