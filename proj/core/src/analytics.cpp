#include "dsa/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iterator>

#include "dsa/error.hpp"

namespace dsa {

namespace {

struct RowDef {
    const char* name;
    std::uint8_t mask;
};

constexpr std::uint8_t bit(Binding b) { return static_cast<std::uint8_t>(b); }

const RowDef kRows[] = {
    {"RotorAngle", bit(Binding::rotor_angle)},
    {"Voltage", bit(Binding::voltage)},
    {"RoCoF", static_cast<std::uint8_t>(bit(Binding::rocof_plus) | bit(Binding::rocof_minus))},
    {"Zenith", bit(Binding::zenith)},
    {"Nadir", bit(Binding::nadir)},
};

// One unit of analysis: either a case or a whole cycle.
struct Unit {
    const CycleRecord* cycle;
    std::uint8_t bits;
    bool insecure;
    bool failed;
};

template <typename F>
long for_each_unit(const CaseArchive& archive, const TimeWindow& window, Granularity g, F&& f) {
    long cycles = 0;
    for (const auto& c : archive.cycles()) {
        if (!window.contains(c.ts)) continue;
        ++cycles;
        if (g == Granularity::case_level) {
            for (const auto& k : c.cases)
                f(Unit{&c, k.binding.bits(), k.status == CaseStatus::insecure, k.status == CaseStatus::failed});
        } else {
            if (c.failed) continue;
            std::uint8_t bits = 0;
            bool insecure = false;
            for (const auto& k : c.cases) {
                bits |= k.binding.bits();
                insecure = insecure || k.status == CaseStatus::insecure;
            }
            f(Unit{&c, bits, insecure, false});
        }
    }
    return cycles;
}

}  // namespace

CycleRecord to_record(const CycleReport& r) {
    CycleRecord rec;
    rec.ts = r.snapshot_ts;
    rec.metrics = r.system_metrics;
    rec.failed = r.status == "failed";
    rec.cases.reserve(r.cases.size());
    for (const auto& c : r.cases) rec.cases.push_back({c.status, c.metrics.binding});
    return rec;
}

void CaseArchive::append(const CycleReport& report) { append(to_record(report)); }

void CaseArchive::append(CycleRecord record) {
    if (!cycles_.empty() && record.ts <= cycles_.back().ts)
        throw PreconditionError("archive timestamps must strictly increase (got " + std::to_string(record.ts) +
                                " after " + std::to_string(cycles_.back().ts) + ")");
    cycles_.push_back(std::move(record));
}

const CycleRecord* CaseArchive::find(std::int64_t ts) const {
    auto it = std::lower_bound(cycles_.begin(), cycles_.end(), ts,
                               [](const CycleRecord& c, std::int64_t t) { return c.ts < t; });
    return it != cycles_.end() && it->ts == ts ? &*it : nullptr;
}

double percent_2dp(long num, long den) {
    if (den <= 0) return 0.0;
    const long long hundredths = (20000LL * num + den) / (2LL * den);
    return static_cast<double>(hundredths) / 100.0;
}

SummaryTable summarize(const CaseArchive& archive, const TimeWindow& window, Granularity granularity) {
    SummaryTable t;
    t.granularity = granularity;
    long counts[std::size(kRows)] = {};
    long flag_counts[std::size(kAllBindings)] = {};
    t.cycles = for_each_unit(archive, window, granularity, [&](const Unit& u) {
        ++t.all_cases;
        if (u.failed) ++t.failed_cases;
        if (u.insecure) ++t.insecure_cases;
        for (std::size_t r = 0; r < std::size(kRows); ++r)
            if (u.bits & kRows[r].mask) ++counts[r];
        for (std::size_t f = 0; f < std::size(kAllBindings); ++f)
            if (u.bits & bit(kAllBindings[f])) ++flag_counts[f];
    });
    if (t.cycles == 0) throw EmptyWindowError("no cycles in the requested window");

    long sum = 0;
    for (long c : counts) sum += c;
    for (std::size_t r = 0; r < std::size(kRows); ++r)
        t.rows.push_back({kRows[r].name, counts[r], percent_2dp(counts[r], t.all_cases), percent_2dp(counts[r], sum)});
    for (std::size_t f = 0; f < std::size(kAllBindings); ++f) t.flag_counts.emplace_back(kAllBindings[f], flag_counts[f]);
    t.insecure_pct = percent_2dp(t.insecure_cases, t.all_cases);
    return t;
}

void print_summary(const SummaryTable& t, std::ostream& out) {
    char line[128];
    std::snprintf(line, sizeof line, "%-18s %12s %15s %14s\n", "Binding constraint", "Total cases", "% of all cases",
                  "Comparative %");
    out << line;
    for (const auto& r : t.rows) {
        std::snprintf(line, sizeof line, "%-18s %12ld %14.2f%% %13.2f%%\n", r.constraint.c_str(),
                      r.total_binding_cases, r.pct_of_all_cases, r.comparative_pct);
        out << line;
    }
    const char* unit = t.granularity == Granularity::case_level ? "cases" : "cycles";
    std::snprintf(line, sizeof line, "insecure %ld of %ld %s (%.2f%%), failed %ld, cycles %ld\n", t.insecure_cases,
                  t.all_cases, unit, t.insecure_pct, t.failed_cases, t.cycles);
    out << line;
}

nlohmann::ordered_json to_json(const SummaryTable& t) {
    nlohmann::ordered_json j;
    j["granularity"] = t.granularity == Granularity::case_level ? "case" : "cycle";
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json o;
        o["constraint"] = r.constraint;
        o["total_binding_cases"] = r.total_binding_cases;
        o["pct_of_all_cases"] = r.pct_of_all_cases;
        o["comparative_pct"] = r.comparative_pct;
        rows.push_back(std::move(o));
    }
    nlohmann::ordered_json flags;
    for (const auto& [b, n] : t.flag_counts) flags[token(b)] = n;
    j["flag_counts"] = flags;
    nlohmann::ordered_json totals;
    totals["cycles"] = t.cycles;
    totals["all_cases"] = t.all_cases;
    totals["insecure_cases"] = t.insecure_cases;
    totals["failed_cases"] = t.failed_cases;
    totals["insecure_pct"] = t.insecure_pct;
    j["totals"] = totals;
    return j;
}

std::string to_string(Variable v) {
    switch (v) {
        case Variable::inertia: return "inertia";
        case Variable::demand: return "demand";
        case Variable::wind: return "wind";
    }
    return "?";
}

std::string unit_of(Variable v) { return v == Variable::inertia ? "MWs" : "MW"; }

Variable parse_variable(const std::string& s) {
    for (auto v : {Variable::inertia, Variable::demand, Variable::wind})
        if (s == to_string(v)) return v;
    throw ParseError("unknown variable '" + s + "' (expected inertia, demand or wind)");
}

double value_of(const SystemMetrics& m, Variable v) {
    switch (v) {
        case Variable::inertia: return m.inertia_mws;
        case Variable::demand: return m.demand_mw;
        case Variable::wind: return m.wind_mw;
    }
    return 0.0;
}

double point_biserial(const std::vector<double>& x, const std::vector<bool>& flag) {
    const std::size_t n = x.size();
    if (n < 2 || flag.size() != n) throw DegenerateError("correlation needs at least two paired samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += flag[i] ? 1.0 : 0.0;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = (flag[i] ? 1.0 : 0.0) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (syy == 0.0) throw DegenerateError("flag is constant over the window; correlation undefined");
    if (sxx == 0.0) throw DegenerateError("variable is constant over the window; correlation undefined");
    return sxy / std::sqrt(sxx * syy);
}

Correlation correlate(const CaseArchive& archive, Variable variable, Binding flag, const TimeWindow& window,
                      Granularity granularity) {
    Correlation c;
    c.variable = variable;
    c.flag = flag;
    c.granularity = granularity;
    std::vector<double> x;
    std::vector<bool> y;
    double sum_secure = 0.0, sum_insecure = 0.0;
    const long cycles = for_each_unit(archive, window, granularity, [&](const Unit& u) {
        if (u.failed) return;
        const double v = value_of(u.cycle->metrics, variable);
        const bool binds = (u.bits & bit(flag)) != 0;
        x.push_back(v);
        y.push_back(binds);
        if (binds) {
            ++c.n_insecure;
            sum_insecure += v;
        } else {
            ++c.n_secure;
            sum_secure += v;
        }
    });
    if (cycles == 0) throw EmptyWindowError("no cycles in the requested window");
    if (c.n_insecure == 0 || c.n_secure == 0)
        throw DegenerateError("flag " + token(flag) + " is constant over the window; correlation undefined");
    c.mean_secure = sum_secure / static_cast<double>(c.n_secure);
    c.mean_insecure = sum_insecure / static_cast<double>(c.n_insecure);
    c.coefficient = point_biserial(x, y);
    return c;
}

nlohmann::ordered_json to_json(const Correlation& c) {
    nlohmann::ordered_json j;
    j["variable"] = to_string(c.variable);
    j["flag"] = token(c.flag);
    j["granularity"] = c.granularity == Granularity::case_level ? "case" : "cycle";
    j["coefficient"] = c.coefficient;
    j["mean_secure"] = c.mean_secure;
    j["mean_insecure"] = c.mean_insecure;
    j["n_secure"] = c.n_secure;
    j["n_insecure"] = c.n_insecure;
    return j;
}

ScatterSet scatter_export(const CaseArchive& archive, Variable x, Variable y, Binding flag, const TimeWindow& window) {
    if (x == y) throw PreconditionError("scatter axes must differ");
    ScatterSet s{x, y, flag, {}};
    const long cycles = for_each_unit(archive, window, Granularity::cycle_level, [&](const Unit& u) {
        s.rows.push_back({u.cycle->ts, value_of(u.cycle->metrics, x), value_of(u.cycle->metrics, y),
                          (u.bits & bit(flag)) != 0});
    });
    if (cycles == 0) throw EmptyWindowError("no cycles in the requested window");
    return s;
}

void write_scatter_csv(const ScatterSet& s, std::ostream& out) {
    out << "# x=" << to_string(s.x) << " [" << unit_of(s.x) << "], y=" << to_string(s.y) << " [" << unit_of(s.y)
        << "], flag=" << token(s.flag) << ", ts [UTC s]\n";
    out << "ts,x,y,insecure\n";
    out << std::setprecision(10);
    for (const auto& r : s.rows) out << r.ts << ',' << r.x << ',' << r.y << ',' << (r.insecure ? 1 : 0) << '\n';
}

}  // namespace dsa
