#pragma once

// Archive-level statistics: binding-constraint summary tables, correlation of
// insecurity flags with operating conditions, and scatter datasets.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsa/criteria.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/screener.hpp"

namespace dsa {

/// The part of a case that analytics needs.
struct CaseOutcome {
    CaseStatus status = CaseStatus::secure;
    BindingSet binding;

    bool operator==(const CaseOutcome&) const = default;
};

struct CycleRecord {
    std::int64_t ts = 0;
    SystemMetrics metrics;
    bool failed = false;  // base case could not be assessed
    std::vector<CaseOutcome> cases;

    bool operator==(const CycleRecord&) const = default;
};

CycleRecord to_record(const CycleReport& r);

/// Append-only, in-memory sequence of cycles with strictly increasing
/// timestamps.
class CaseArchive {
public:
    /// Throws PreconditionError when ts does not exceed the last timestamp.
    void append(const CycleReport& report);
    void append(CycleRecord record);

    const std::vector<CycleRecord>& cycles() const { return cycles_; }
    const CycleRecord* find(std::int64_t ts) const;
    std::size_t size() const { return cycles_.size(); }
    bool empty() const { return cycles_.empty(); }

private:
    std::vector<CycleRecord> cycles_;
};

struct TimeWindow {
    std::optional<std::int64_t> from;  // inclusive
    std::optional<std::int64_t> to;    // inclusive

    bool contains(std::int64_t ts) const { return (!from || ts >= *from) && (!to || ts <= *to); }
};

/// Case: one contingency in one cycle.  Cycle: one assessment cycle, binding
/// a flag when any of its cases does.
enum class Granularity { case_level, cycle_level };

struct SummaryRow {
    std::string constraint;
    long total_binding_cases = 0;
    double pct_of_all_cases = 0.0;  // rounded to 2 decimals
    double comparative_pct = 0.0;   // rounded to 2 decimals
};

struct SummaryTable {
    Granularity granularity = Granularity::case_level;
    /// RotorAngle, Voltage, RoCoF (either sign), Zenith, Nadir.
    std::vector<SummaryRow> rows;
    /// Counts for each individual flag (RoCoF+ and RoCoF- separately).
    std::vector<std::pair<Binding, long>> flag_counts;
    long cycles = 0;
    long all_cases = 0;
    long insecure_cases = 0;
    long failed_cases = 0;
    double insecure_pct = 0.0;  // rounded to 2 decimals
};

/// Throws EmptyWindowError when no cycle falls inside `window`.
SummaryTable summarize(const CaseArchive& archive, const TimeWindow& window = {},
                       Granularity granularity = Granularity::case_level);

/// 100 * num / den rounded half-up to 2 decimals using integer arithmetic.
double percent_2dp(long num, long den);

void print_summary(const SummaryTable& t, std::ostream& out);
nlohmann::ordered_json to_json(const SummaryTable& t);

enum class Variable { inertia, demand, wind };

std::string to_string(Variable v);
std::string unit_of(Variable v);
Variable parse_variable(const std::string& s);
double value_of(const SystemMetrics& m, Variable v);

struct Correlation {
    Variable variable = Variable::inertia;
    Binding flag = Binding::rocof_plus;
    Granularity granularity = Granularity::case_level;
    double coefficient = 0.0;  // point-biserial
    double mean_secure = 0.0;
    double mean_insecure = 0.0;
    long n_secure = 0;
    long n_insecure = 0;
};

/// Failed cases are skipped.  Throws DegenerateError when the flag or the
/// variable is constant over the window, EmptyWindowError when no cycle
/// falls inside it.
Correlation correlate(const CaseArchive& archive, Variable variable, Binding flag, const TimeWindow& window = {},
                      Granularity granularity = Granularity::case_level);

/// Pearson correlation between a 0/1 indicator and a continuous sample.
/// Throws DegenerateError when either has zero variance.
double point_biserial(const std::vector<double>& x, const std::vector<bool>& flag);

nlohmann::ordered_json to_json(const Correlation& c);

struct ScatterRow {
    std::int64_t ts = 0;
    double x = 0.0;
    double y = 0.0;
    bool insecure = false;
};

struct ScatterSet {
    Variable x = Variable::demand;
    Variable y = Variable::wind;
    Binding flag = Binding::zenith;
    std::vector<ScatterRow> rows;
};

/// One row per non-failed cycle.  Throws PreconditionError when x == y and
/// EmptyWindowError when no cycle falls inside the window.
ScatterSet scatter_export(const CaseArchive& archive, Variable x, Variable y, Binding flag,
                          const TimeWindow& window = {});

/// `# x=<var> [unit], y=<var> [unit], flag=<flag>` then `ts,x,y,insecure`.
void write_scatter_csv(const ScatterSet& s, std::ostream& out);

}  // namespace dsa
