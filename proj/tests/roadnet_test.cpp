#include <random>
#include <set>

#include "doctest.h"
#include "erouve/roadnet.hpp"
#include "oracles.hpp"

using namespace erouve;
using namespace erouve::roadnet;

namespace {

NetworkSpec line(int n, double len = 100.0) {
  NetworkSpec spec;
  for (int i = 0; i < n; ++i) spec.junctions.push_back({"J" + std::to_string(i), {i * len, 0.0}});
  for (int i = 0; i + 1 < n; ++i) {
    spec.segments.push_back({"s" + std::to_string(i), "J" + std::to_string(i),
                             "J" + std::to_string(i + 1), len, 1, 10.0, std::nullopt});
  }
  spec.rsus = {"J0"};
  return spec;
}

std::string names(const RoadNetwork& net, const std::vector<SegmentId>& route) {
  std::string out;
  for (const auto s : route) out += (out.empty() ? "" : "|") + net.segment(s).name;
  return out;
}

}  // namespace

TEST_SUITE("roadnet") {

TEST_CASE("single segment network") {
  const auto net = build_network(line(2));
  CHECK(net.junction_count() == 2);
  CHECK(net.segment_count() == 1);
  CHECK(net.segment(SegmentId{0}).free_flow_time_s() == doctest::Approx(10.0));
}

TEST_CASE("malformed specs are rejected with the offending name") {
  auto spec = line(3);
  SUBCASE("dangling endpoint") {
    spec.segments[1].to = "nowhere";
    CHECK_THROWS_WITH_AS(build_network(spec), doctest::Contains("nowhere"), NetworkError);
  }
  SUBCASE("nonpositive length") {
    spec.segments[0].length_m = 0.0;
    CHECK_THROWS_WITH_AS(build_network(spec), doctest::Contains("s0"), NetworkError);
  }
  SUBCASE("duplicate segment id") {
    spec.segments[1].id = "s0";
    CHECK_THROWS_WITH_AS(build_network(spec), doctest::Contains("s0"), NetworkError);
  }
  SUBCASE("duplicate junction id") {
    spec.junctions.push_back({"J1", {}});
    CHECK_THROWS_WITH_AS(build_network(spec), doctest::Contains("J1"), NetworkError);
  }
  SUBCASE("lanes and speed") {
    spec.segments[0].lanes = 0;
    CHECK_THROWS_AS(build_network(spec), NetworkError);
    spec.segments[0].lanes = 1;
    spec.segments[0].v_max_mps = -1.0;
    CHECK_THROWS_AS(build_network(spec), NetworkError);
  }
  SUBCASE("lane map outside the downstream segment") {
    spec.segments[0].downstream_lane_map = LaneMapSpec{"s1", {3}};
    CHECK_THROWS_AS(build_network(spec), NetworkError);
  }
}

TEST_CASE("evaluation map") {
  const auto net = build_network(evaluation_map(40.0 / 3.6));
  const auto lower = *net.find_segment("lower");
  const auto upper = *net.find_segment("upper");
  const auto exit = *net.find_segment("exit");
  CHECK(net.segment(lower).length_m == 190.0);
  CHECK(net.segment(upper).length_m == 275.0);
  CHECK(net.segment(lower).lanes == 2);
  CHECK(net.segment(upper).lanes == 2);
  CHECK(net.segment(exit).lanes == 3);

  // Upper feeds two exit lanes, lower only one.
  const auto& up_map = *net.segment(upper).downstream_lane_map;
  const auto& low_map = *net.segment(lower).downstream_lane_map;
  CHECK(std::set<int>(up_map.lanes.begin(), up_map.lanes.end()).size() == 2);
  CHECK(std::set<int>(low_map.lanes.begin(), low_map.lanes.end()).size() == 1);

  const auto route = shortest_static_route(net, net.sources().front(), net.sinks().front());
  CHECK(names(net, route) == "source|lower|exit");

  const auto table = compute_connections(net);
  const auto j1 = *net.find_junction("J1");
  const auto& row = table.neighbors(j1);
  REQUIRE(row.size() == 1);
  REQUIRE(row[0].routes.size() == 2);
  CHECK(row[0].rsu == *net.find_junction("J2"));
}

TEST_CASE("toy connections table") {
  NetworkSpec spec;
  spec.junctions = {{"R1", {0, 0}}, {"R2", {100, 0}}, {"R3", {0, 100}}};
  spec.segments = {{"la", "R1", "R2", 100.0, 1, 10.0, std::nullopt},
                   {"lb", "R1", "R2", 130.0, 1, 10.0, std::nullopt},
                   {"lc", "R1", "R3", 90.0, 1, 10.0, std::nullopt}};
  spec.rsus = {"R1", "R2", "R3"};
  const auto net = build_network(spec);
  const auto table = compute_connections(net);
  const auto& row = table.neighbors(*net.find_junction("R1"));
  REQUIRE(row.size() == 2);
  CHECK(row[0].rsu == *net.find_junction("R2"));
  REQUIRE(row[0].routes.size() == 2);
  CHECK(row[0].routes[0].distance_m == 100.0);
  CHECK(row[0].routes[1].distance_m == 130.0);
  CHECK(row[1].rsu == *net.find_junction("R3"));
  REQUIRE(row[1].routes.size() == 1);
  CHECK(row[1].routes[0].distance_m == 90.0);
}

TEST_CASE("isolated rsu has no neighbors") {
  const auto net = build_network(line(3));
  const auto table = compute_connections(net);
  CHECK(table.neighbors(*net.find_junction("J0")).empty());
}

TEST_CASE("intermediate junctions become multi-segment routes") {
  auto spec = line(4);
  spec.rsus = {"J0", "J3"};
  const auto net = build_network(spec);
  const auto table = compute_connections(net);
  const auto& row = table.neighbors(*net.find_junction("J0"));
  REQUIRE(row.size() == 1);
  REQUIRE(row[0].routes.size() == 1);
  CHECK(row[0].routes[0].segments.size() == 3);
  CHECK(row[0].routes[0].distance_m == 300.0);
}

TEST_CASE("shortest route trivial and error cases") {
  const auto net = build_network(line(4));
  const auto j0 = *net.find_junction("J0");
  const auto j3 = *net.find_junction("J3");
  CHECK(shortest_static_route(net, j0, j0).empty());
  CHECK(names(net, shortest_static_route(net, j0, j3)) == "s0|s1|s2");
  CHECK(oracle::simple_paths(net, j0, j3).size() == 1);
  CHECK_THROWS_AS(shortest_static_route(net, j3, j0), NoRouteError);
}

TEST_CASE("equal length alternatives break toward the smaller segment id") {
  NetworkSpec spec;
  spec.junctions = {{"A", {}}, {"B", {}}};
  spec.segments = {{"x", "A", "B", 50.0, 1, 10.0, std::nullopt},
                   {"y", "A", "B", 50.0, 1, 10.0, std::nullopt}};
  spec.rsus = {"A"};
  const auto net = build_network(spec);
  const auto route = shortest_static_route(net, *net.find_junction("A"), *net.find_junction("B"));
  CHECK(names(net, route) == "x");
}

TEST_CASE("random graphs agree with brute force") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 30) {
    const auto spec = oracle::random_network(rng);
    RoadNetwork net;
    try {
      net = build_network(spec);
    } catch (const NetworkError&) {
      continue;
    }
    ++checked;
    const auto all = oracle::floyd_warshall(net, false);
    const auto restricted = oracle::floyd_warshall(net, true);
    const auto table = compute_connections(net);

    for (const auto n : net.rsu_junctions()) {
      for (const auto& entry : table.neighbors(n)) {
        CHECK(net.hosts_rsu(entry.rsu));
        for (const auto& r : entry.routes) {
          const auto& first = net.segment(r.segments.front());
          const double expect = first.to == entry.rsu
                                    ? first.length_m
                                    : first.length_m + restricted[first.to.value][entry.rsu.value];
          CHECK(r.distance_m == expect);
          CHECK(oracle::path_length(net, r.segments) == r.distance_m);
          for (std::size_t i = 0; i + 1 < r.segments.size(); ++i) {
            CHECK_FALSE(net.hosts_rsu(net.segment(r.segments[i]).to));
          }
        }
      }
    }
    for (std::size_t a = 0; a < net.junction_count(); ++a) {
      for (std::size_t b = 0; b < net.junction_count(); ++b) {
        const JunctionId ja{static_cast<std::uint32_t>(a)};
        const JunctionId jb{static_cast<std::uint32_t>(b)};
        if (all[a][b] == oracle::kInf) {
          if (a != b) CHECK_THROWS_AS(shortest_static_route(net, ja, jb), NoRouteError);
          continue;
        }
        const auto route = shortest_static_route(net, ja, jb);
        CHECK(net.route_length(route) == all[a][b]);
        for (const auto& p : oracle::simple_paths(net, ja, jb)) {
          CHECK(net.route_length(route) <= oracle::path_length(net, p));
        }
      }
    }
  }
}

}  // TEST_SUITE
