#include <doctest.h>

#include "dsa/contingency.hpp"
#include "dsa/error.hpp"
#include "fixtures.hpp"

using namespace dsa;

TEST_CASE("apply_contingency takes the elements out and leaves the input alone") {
    const Snapshot s = fx::ten_machine();
    const Snapshot post = apply_contingency(s, {"gen:G05", ContingencyKind::gen_trip, {"G05"}});
    CHECK_FALSE(post.machines[post.machine_index("G05")].online);
    CHECK(s.machines[s.machine_index("G05")].online);

    const Snapshot dc = apply_contingency(s, {"hvdc:HVDC1", ContingencyKind::hvdc_trip, {"HVDC1"}});
    CHECK_FALSE(dc.ibr_units[0].online);

    const Snapshot split =
        apply_contingency(s, {"split:A", ContingencyKind::system_split, {"RL1", "RL3"}});
    CHECK_FALSE(split.branches[0].in_service);
    CHECK(split.branches[1].in_service);
    CHECK_FALSE(split.branches[2].in_service);
    CHECK(islands(split).size() == 2);
}

TEST_CASE("contingency errors") {
    Snapshot s = fx::two_bus_with_ibr();
    CHECK_THROWS_AS(check_contingency(s, {"x", ContingencyKind::gen_trip, {"G9"}}), UnknownElementError);
    CHECK_THROWS_AS(check_contingency(s, {"x", ContingencyKind::line_trip, {"G1"}}), UnknownElementError);
    CHECK_THROWS_AS(check_contingency(s, {"x", ContingencyKind::hvdc_trip, {"W2"}}), UnknownElementError);
    CHECK_THROWS_AS(check_contingency(s, {"x", ContingencyKind::gen_trip, {}}), UnknownElementError);
    Contingency faulted{"x", ContingencyKind::line_trip, {"L1"}};
    faulted.fault_bus = "B7";
    CHECK_THROWS_AS(check_contingency(s, faulted), UnknownElementError);

    s.ibr_units[0].online = false;
    CHECK_THROWS_AS(check_contingency(s, {"x", ContingencyKind::ibr_trip, {"W2"}}), AlreadyOutError);
    s.branches[0].in_service = false;
    CHECK_THROWS_AS(apply_contingency(s, {"x", ContingencyKind::line_trip, {"L1"}}), AlreadyOutError);
}

TEST_CASE("contingency kind names round-trip") {
    for (auto k : {ContingencyKind::gen_trip, ContingencyKind::ibr_trip, ContingencyKind::hvdc_trip,
                   ContingencyKind::line_trip, ContingencyKind::system_split})
        CHECK(parse_contingency_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_contingency_kind("bus_trip"), ParseError);
}
