#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsa/netmodel.hpp"

namespace dsa {

enum class ContingencyKind { gen_trip, ibr_trip, hvdc_trip, line_trip, system_split };

/// One N-1 event.  An optional bolted fault at `fault_bus` precedes the
/// element outage by `clearing_time_s`; without it the outage is immediate.
struct Contingency {
    std::string id;
    ContingencyKind kind = ContingencyKind::gen_trip;
    std::vector<std::string> elements;
    std::string description;
    std::optional<std::string> fault_bus = std::nullopt;
    double clearing_time_s = 0.0;

    bool operator==(const Contingency&) const = default;
};

std::string to_string(ContingencyKind k);
ContingencyKind parse_contingency_kind(const std::string& s);

/// Checks that the contingency's elements exist, match its kind and are
/// currently in service.  Throws UnknownElementError / AlreadyOutError.
void check_contingency(const Snapshot& snap, const Contingency& c);

/// Returns the post-outage copy of `snap` (the fault itself is a dynamic
/// phenomenon and does not appear here).
Snapshot apply_contingency(const Snapshot& snap, const Contingency& c);

}  // namespace dsa
