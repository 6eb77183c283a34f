#include <cmath>
#include <map>

#include "doctest.h"
#include "erouve/roadnet.hpp"
#include "erouve/traffic.hpp"

using namespace erouve;
using namespace erouve::traffic;

namespace {

constexpr double kSpeed = 100.0 / 9.0;  // 40 km/h
// Shipped defaults at 40 km/h, zero acceleration: 1 + 0.02 v + 0.002 v^2 + 0.0001 v^3.
constexpr double kCruiseRate = 1.606310013717421;

roadnet::RoadNetwork eval_net() { return roadnet::build_network(roadnet::evaluation_map(kSpeed)); }

std::vector<SegmentId> route_of(const roadnet::RoadNetwork& net,
                                std::initializer_list<const char*> names) {
  std::vector<SegmentId> out;
  for (const auto* n : names) out.push_back(*net.find_segment(n));
  return out;
}

}  // namespace

TEST_SUITE("traffic") {

TEST_CASE("co2 rate") {
  const EmissionParams p;
  CHECK(co2_rate(0.0, 0.0, p) == p.idle_mlps);
  CHECK(co2_rate(kSpeed, 0.0, p) == doctest::Approx(kCruiseRate).epsilon(1e-12));
  for (double v = 0.0; v <= 25.0; v += 0.5) {
    CHECK(co2_rate(v, -4.5, p) >= p.idle_mlps);
    CHECK(co2_rate(v, 2.5, p) >= p.idle_mlps);
  }
  const roadnet::RoadSegment lower{"lower", {}, {}, 190.0, 2, kSpeed, std::nullopt};
  const auto ff = free_flow(lower, p);
  CHECK(ff.tt_s == doctest::Approx(17.1));
  CHECK(ff.co2_ml == doctest::Approx(kCruiseRate * 17.1));
}

TEST_CASE("parameter validation") {
  MobilityParams m;
  m.dt_s = 2.0;  // longer than the reaction time
  CHECK_THROWS(m.validate());
  EmissionParams e;
  e.idle_mlps = -1.0;
  CHECK_THROWS(e.validate());
}

TEST_CASE("safe speed") {
  const MobilityParams p;
  CHECK(safe_speed(0.0, 0.0, p) == 0.0);
  const double g = 20.0;
  const double b = p.comfort_decel_mps2;
  const double tau = p.reaction_time_s;
  CHECK(safe_speed(g, 5.0, p) ==
        doctest::Approx(-b * tau + std::sqrt(b * b * tau * tau + 25.0 + 2.0 * b * g)));
}

TEST_CASE("spawn schedule") {
  SUBCASE("deterministic per seed") {
    FlowSpec f{150, 2.0, 0.5};
    Rng a(42);
    Rng b(42);
    const auto x = spawn_vehicles(f, a);
    const auto y = spawn_vehicles(f, b);
    REQUIRE(x.size() == 150);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].time_s == y[i].time_s);
      CHECK(x[i].vehicle == y[i].vehicle);
    }
  }
  SUBCASE("empty") {
    Rng rng(1);
    CHECK(spawn_vehicles(FlowSpec{0, 2.0, 0.5}, rng).empty());
  }
  SUBCASE("jitter bounds") {
    Rng rng(7);
    const auto s = spawn_vehicles(FlowSpec{50, 2.0, 0.5}, rng);
    REQUIRE(s.size() == 50);
    CHECK(s.front().time_s == 0.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double gap = s[i].time_s - s[i - 1].time_s;
      CHECK(gap >= 1.0);
      CHECK(gap <= 3.0);
    }
  }
}

TEST_CASE("free-flow traversal of an empty segment") {
  const auto net = eval_net();
  TrafficWorld world(net, MobilityParams{}, EmissionParams{});
  const auto lower = *net.find_segment("lower");
  REQUIRE(world.try_insert(VehicleId{0}, {lower}, 0.0, 0.0));
  std::optional<SegmentExit> out;
  for (double t = 0.0; t < 60.0 && !out; t += 0.5) {
    for (const auto& e : world.step(t)) out = e;
  }
  REQUIRE(out);
  CHECK(std::abs(out->exit_time_s - out->entry_time_s - 17.1) <= 0.5);
  CHECK(out->co2_ml == doctest::Approx(kCruiseRate * (out->exit_time_s - out->entry_time_s)).epsilon(0.05));
}

TEST_CASE("stopped leader at the minimum gap holds the follower") {
  const auto net = eval_net();
  MobilityParams p;
  TrafficWorld world(net, p, EmissionParams{});
  const auto lower = *net.find_segment("lower");
  REQUIRE(world.try_insert(VehicleId{0}, {lower}, 0.0, 0.0));
  auto& lead = world.vehicle(VehicleId{0});
  lead.position_m = 100.0;
  lead.speed_mps = 0.0;
  REQUIRE(world.try_insert(VehicleId{1}, {lower}, 0.0, 0.0));
  auto& follow = world.vehicle(VehicleId{1});
  follow.lane = lead.lane;
  follow.position_m = 100.0 - p.vehicle_length_m - p.min_gap_m;
  follow.speed_mps = 0.0;
  world.step(0.0);
  CHECK(world.vehicle(VehicleId{1}).speed_mps == 0.0);
}

TEST_CASE("shortest-path demand congests the lower path") {
  const auto net = eval_net();
  TrafficWorld world(net, MobilityParams{}, EmissionParams{});
  Rng rng(3);
  const auto schedule = spawn_vehicles(FlowSpec{150, 1.0, 0.5}, rng);
  const auto route = route_of(net, {"source", "lower", "exit"});
  const auto lower = route[1];

  std::size_t next = 0;
  std::vector<double> lower_tt;
  std::map<VehicleId, double> seg_sum;
  double t = 0.0;
  while ((next < schedule.size() || !world.active().empty()) && t < 2000.0) {
    while (next < schedule.size() && schedule[next].time_s <= t &&
           world.try_insert(schedule[next].vehicle, route, schedule[next].time_s, t)) {
      ++next;
    }
    for (const auto& e : world.step(t)) {
      if (e.segment == lower) lower_tt.push_back(e.exit_time_s - e.entry_time_s);
      seg_sum[e.vehicle] += e.co2_ml;
    }
    CHECK(world.min_same_lane_gap() >= MobilityParams{}.min_gap_m - 1e-9);
    t += 0.5;
  }
  REQUIRE(world.finished().size() == 150);
  double mean = 0.0;
  for (const double x : lower_tt) mean += x;
  mean /= static_cast<double>(lower_tt.size());
  CHECK(mean > 1.5 * 17.1);

  for (const auto& [id, v] : world.finished()) {
    CHECK(v.trip_co2_ml == seg_sum.at(id));
    CHECK(v.arrive_time_s.has_value());
  }
}

TEST_CASE("identical seeds give identical trajectories") {
  auto run = [] {
    const auto net = eval_net();
    TrafficWorld world(net, MobilityParams{}, EmissionParams{});
    Rng rng(11);
    const auto schedule = spawn_vehicles(FlowSpec{40, 1.0, 0.5}, rng);
    const auto route = route_of(net, {"source", "lower", "exit"});
    std::vector<double> trace;
    std::size_t next = 0;
    for (double t = 0.0; t < 300.0; t += 0.5) {
      while (next < schedule.size() && schedule[next].time_s <= t &&
             world.try_insert(schedule[next].vehicle, route, schedule[next].time_s, t)) {
        ++next;
      }
      world.step(t);
      for (const auto& [id, v] : world.active()) {
        trace.push_back(v.position_m);
        trace.push_back(v.speed_mps);
      }
    }
    return trace;
  };
  CHECK(run() == run());
}

}  // TEST_SUITE
