#pragma once

// JSON documents for cycle reports and their parts.  Field order is fixed so
// two reports of the same inputs diff cleanly.

#include <string>

#include <nlohmann/json.hpp>

#include "dsa/criteria.hpp"
#include "dsa/netmodel.hpp"
#include "dsa/policy.hpp"
#include "dsa/screener.hpp"

namespace dsa {

using ojson = nlohmann::ordered_json;

ojson to_json(const SystemMetrics& m);
ojson to_json(const PolicyReport& r);
ojson to_json(const SecurityLimits& l);
ojson to_json(const SecurityMetrics& m);
ojson to_json(const CaseResult& c);
ojson to_json(const Totals& t);

struct ReportJsonOptions {
    /// Zero every wall-time field so documents compare byte for byte.
    bool normalize_timing = false;
};

ojson to_json(const CycleReport& r, const ReportJsonOptions& opts = {});
std::string serialize(const CycleReport& r, const ReportJsonOptions& opts = {});

SystemMetrics system_metrics_from_json(const nlohmann::json& j);
PolicyReport policy_report_from_json(const nlohmann::json& j);
SecurityLimits security_limits_from_json(const nlohmann::json& j);
SecurityMetrics security_metrics_from_json(const nlohmann::json& j);
CaseResult case_result_from_json(const nlohmann::json& j);
/// Throws ParseError on a malformed document.
CycleReport cycle_report_from_json(const nlohmann::json& j);
CycleReport parse_cycle_report(const std::string& text);

/// Copy of `r` with every timing field zeroed.
CycleReport normalize_timing(CycleReport r);

}  // namespace dsa
