#include "dsa/contingency.hpp"

#include "dsa/error.hpp"

namespace dsa {

std::string to_string(ContingencyKind k) {
    switch (k) {
        case ContingencyKind::gen_trip: return "gen_trip";
        case ContingencyKind::ibr_trip: return "ibr_trip";
        case ContingencyKind::hvdc_trip: return "hvdc_trip";
        case ContingencyKind::line_trip: return "line_trip";
        case ContingencyKind::system_split: return "system_split";
    }
    return "?";
}

ContingencyKind parse_contingency_kind(const std::string& s) {
    if (s == "gen_trip") return ContingencyKind::gen_trip;
    if (s == "ibr_trip") return ContingencyKind::ibr_trip;
    if (s == "hvdc_trip") return ContingencyKind::hvdc_trip;
    if (s == "line_trip") return ContingencyKind::line_trip;
    if (s == "system_split") return ContingencyKind::system_split;
    throw ParseError("unknown contingency kind '" + s + "'");
}

void check_contingency(const Snapshot& snap, const Contingency& c) {
    if (c.elements.empty()) throw UnknownElementError(c.id + ": contingency names no elements");
    if (c.fault_bus && snap.bus_index(*c.fault_bus) < 0)
        throw UnknownElementError(c.id + ": unknown fault bus " + *c.fault_bus);
    for (const auto& e : c.elements) {
        switch (c.kind) {
            case ContingencyKind::gen_trip: {
                const int i = snap.machine_index(e);
                if (i < 0) throw UnknownElementError(c.id + ": unknown machine " + e);
                if (!snap.machines[i].online) throw AlreadyOutError(c.id + ": machine " + e + " already offline");
                break;
            }
            case ContingencyKind::ibr_trip:
            case ContingencyKind::hvdc_trip: {
                const int i = snap.ibr_index(e);
                if (i < 0) throw UnknownElementError(c.id + ": unknown IBR unit " + e);
                const bool hvdc = snap.ibr_units[i].kind == IbrKind::hvdc;
                if (hvdc != (c.kind == ContingencyKind::hvdc_trip))
                    throw UnknownElementError(c.id + ": element " + e + " does not match kind " + to_string(c.kind));
                if (!snap.ibr_units[i].online) throw AlreadyOutError(c.id + ": unit " + e + " already offline");
                break;
            }
            case ContingencyKind::line_trip:
            case ContingencyKind::system_split: {
                const int i = snap.branch_index(e);
                if (i < 0) throw UnknownElementError(c.id + ": unknown branch " + e);
                if (!snap.branches[i].in_service) throw AlreadyOutError(c.id + ": branch " + e + " already out");
                break;
            }
        }
    }
}

Snapshot apply_contingency(const Snapshot& snap, const Contingency& c) {
    check_contingency(snap, c);
    Snapshot out = snap;
    for (const auto& e : c.elements) {
        switch (c.kind) {
            case ContingencyKind::gen_trip: out.machines[out.machine_index(e)].online = false; break;
            case ContingencyKind::ibr_trip:
            case ContingencyKind::hvdc_trip: out.ibr_units[out.ibr_index(e)].online = false; break;
            case ContingencyKind::line_trip:
            case ContingencyKind::system_split: out.branches[out.branch_index(e)].in_service = false; break;
        }
    }
    return out;
}

}  // namespace dsa
