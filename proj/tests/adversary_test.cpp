#include "doctest.h"
#include "erouve/adversary.hpp"

using namespace erouve;
using namespace erouve::adversary;

namespace {

constexpr double kSpeed = 100.0 / 9.0;

struct Fixture {
  roadnet::RoadNetwork net = roadnet::build_network(roadnet::evaluation_map(kSpeed));
  roadnet::ConnectionsTable table = roadnet::compute_connections(net);
  SegmentId lower = *net.find_segment("lower");
  SegmentId upper = *net.find_segment("upper");
  SegmentId exit = *net.find_segment("exit");
  traffic::EmissionParams emission;
  OptProfile opt{net, emission};
  RouteRoles roles = classify_routes(net, table);
};

SegmentReport truth_on(SegmentId seg) {
  SegmentReport r;
  r.id = ReportId{1};
  r.vehicle = VehicleId{4};
  r.claimed_segment = seg;
  r.tt_s = 40.0;
  r.co2_ml = 70.0;
  r.witnesses = {VehicleId{3}, VehicleId{5}};
  return r;
}

}  // namespace

TEST_SUITE("adversary") {

TEST_CASE("opt values are free-flow") {
  const Fixture f;
  CHECK(f.opt.at(f.lower).tt_s == doctest::Approx(17.1));
  CHECK(f.opt.at(f.upper).tt_s == doctest::Approx(24.75));
  CHECK(f.opt.at(f.lower).co2_ml == doctest::Approx(27.4679).epsilon(1e-5));
}

TEST_CASE("route roles") {
  const Fixture f;
  CHECK(f.roles.of(f.lower) == RouteRole::short_route);
  CHECK(f.roles.of(f.upper) == RouteRole::long_route);
  CHECK_FALSE(f.roles.of(f.exit));
  CHECK(f.roles.counterpart.at(f.lower) == f.upper);
  CHECK(f.roles.counterpart.at(f.upper) == f.lower);
}

TEST_CASE("attacker schedule") {
  AttackPlan plan;
  SUBCASE("twenty percent of 150 in groups of three") {
    const auto s = schedule_attackers(plan, 150);
    CHECK(s.budget == 30);
    REQUIRE(s.ticks.size() == 10);
    CHECK(s.ticks.front().time_s == plan.start_time_s);
    CHECK(s.ticks.back().time_s == plan.start_time_s + 9 * plan.interval_s);
    for (const auto& t : s.ticks) CHECK(t.group_size == 3);
    CHECK_FALSE(s.degenerate);
  }
  SUBCASE("zero percent") {
    plan.infected_percent = 0.0;
    const auto s = schedule_attackers(plan, 150);
    CHECK(s.budget == 0);
    CHECK(s.ticks.empty());
  }
  SUBCASE("group count fixes the budget") {
    plan.group_size = 5;
    plan.group_count = 10;
    const auto s = schedule_attackers(plan, 150);
    CHECK(s.budget == 50);
    CHECK(s.ticks.size() == 10);
  }
  SUBCASE("remainder group") {
    plan.group_size = 4;
    const auto s = schedule_attackers(plan, 150);
    REQUIRE(s.ticks.size() == 8);
    CHECK(s.ticks.back().group_size == 2);
  }
  SUBCASE("budget below one group") {
    plan.infected_percent = 1.0;
    const auto s = schedule_attackers(plan, 150);
    CHECK(s.budget == 2);
    CHECK(s.degenerate);
  }
  SUBCASE("no attack") {
    plan.type = AttackType::none;
    CHECK(schedule_attackers(plan, 150).ticks.empty());
  }
}

TEST_CASE("coordinator infects the next exits after each tick") {
  const Fixture f;
  AttackPlan plan;
  plan.group_count = 2;
  AttackCoordinator c(plan, 150, f.roles);
  CHECK_FALSE(c.on_exit(VehicleId{0}, f.lower, 79.0));
  CHECK_FALSE(c.on_exit(VehicleId{1}, f.exit, 80.0));
  CHECK(c.on_exit(VehicleId{2}, f.lower, 80.0));
  CHECK(c.on_exit(VehicleId{3}, f.upper, 81.0));
  CHECK(c.on_exit(VehicleId{4}, f.lower, 82.0));
  CHECK_FALSE(c.on_exit(VehicleId{5}, f.lower, 83.0));
  CHECK_FALSE(c.on_exit(VehicleId{2}, f.lower, 90.0));
  CHECK(c.on_exit(VehicleId{6}, f.lower, 90.0));
  CHECK(c.on_exit(VehicleId{7}, f.lower, 91.0));
  CHECK(c.on_exit(VehicleId{8}, f.lower, 92.0));
  CHECK_FALSE(c.on_exit(VehicleId{9}, f.lower, 100.0));
  CHECK(c.infected_count() == 6);
  CHECK(c.infected(VehicleId{2}));
  CHECK_FALSE(c.infected(VehicleId{5}));
}

TEST_CASE("fake route attack only hits the favored route") {
  const Fixture f;
  AttackPlan plan;
  plan.type = AttackType::fake_route;
  AttackCoordinator c(plan, 150, f.roles);
  CHECK(c.attacks(f.lower));
  CHECK_FALSE(c.attacks(f.upper));
  CHECK_FALSE(c.attacks(f.exit));

  const auto truth = truth_on(f.lower);
  const auto forged = forge_report(truth, plan, f.roles, f.opt);
  CHECK(forged.claimed_segment == f.upper);
  CHECK(forged.tt_s == truth.tt_s);
  CHECK(forged.co2_ml == truth.co2_ml);
  CHECK(forged.witnesses == truth.witnesses);
}

TEST_CASE("fake data attack writes multiples of opt") {
  const Fixture f;
  AttackPlan plan;
  SUBCASE("favor short") {
    const auto s = forge_report(truth_on(f.lower), plan, f.roles, f.opt);
    CHECK(s.co2_ml == f.opt.at(f.lower).co2_ml);
    CHECK(s.tt_s == 40.0);
    CHECK(s.claimed_segment == f.lower);
    const auto l = forge_report(truth_on(f.upper), plan, f.roles, f.opt);
    CHECK(l.co2_ml == 2.0 * f.opt.at(f.upper).co2_ml);
  }
  SUBCASE("favor long swaps the levels") {
    plan.policy = TargetPolicy::favor_long;
    CHECK(forge_report(truth_on(f.upper), plan, f.roles, f.opt).co2_ml ==
          f.opt.at(f.upper).co2_ml);
    CHECK(forge_report(truth_on(f.lower), plan, f.roles, f.opt).co2_ml ==
          2.0 * f.opt.at(f.lower).co2_ml);
  }
  SUBCASE("tweak travel time") {
    plan.tweak_tt = true;
    CHECK(forge_report(truth_on(f.lower), plan, f.roles, f.opt).tt_s ==
          doctest::Approx(17.1));
  }
  SUBCASE("segments without alternatives pass through") {
    const auto t = truth_on(f.exit);
    CHECK(forge_report(t, plan, f.roles, f.opt).co2_ml == t.co2_ml);
  }
}

TEST_CASE("no attack is the identity") {
  const Fixture f;
  AttackPlan plan;
  plan.type = AttackType::none;
  for (const auto s : {f.lower, f.upper, f.exit}) {
    const auto t = truth_on(s);
    const auto out = forge_report(t, plan, f.roles, f.opt);
    CHECK(out.claimed_segment == t.claimed_segment);
    CHECK(out.co2_ml == t.co2_ml);
    CHECK(out.tt_s == t.tt_s);
  }
  AttackCoordinator c(plan, 150, f.roles);
  for (std::uint32_t i = 0; i < 50; ++i) CHECK_FALSE(c.on_exit(VehicleId{i}, f.lower, 80.0 + i));
}

TEST_CASE("plan validation") {
  AttackPlan plan;
  CHECK_NOTHROW(plan.validate(30.0));
  SUBCASE("interval too long for the TIN") {
    plan.interval_s = 16.0;
    CHECK_THROWS(plan.validate(30.0));
  }
  SUBCASE("group size") {
    plan.group_size = 0;
    CHECK_THROWS(plan.validate(30.0));
  }
  SUBCASE("percent") {
    plan.infected_percent = 120.0;
    CHECK_THROWS(plan.validate(30.0));
  }
  SUBCASE("levels") {
    plan.fd_long_level = 0.0;
    CHECK_THROWS(plan.validate(30.0));
  }
  SUBCASE("none skips checks") {
    plan.type = AttackType::none;
    plan.group_size = 0;
    CHECK_NOTHROW(plan.validate(30.0));
  }
}

}  // TEST_SUITE
