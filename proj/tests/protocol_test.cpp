#include <random>

#include "doctest.h"
#include "erouve/protocol.hpp"

using namespace erouve;
using namespace erouve::protocol;

namespace {

constexpr double kSpeed = 100.0 / 9.0;

CandidateEval cand(std::uint32_t first, double tt, double co2, double dist) {
  CandidateEval c;
  c.route = {SegmentId{first}};
  c.tt_s = tt;
  c.co2_ml = co2;
  c.distance_m = dist;
  return c;
}

struct Fixture {
  roadnet::RoadNetwork net = roadnet::build_network(roadnet::evaluation_map(kSpeed));
  roadnet::ConnectionsTable table = roadnet::compute_connections(net);
  JunctionId j1 = *net.find_junction("J1");
  JunctionId j3 = *net.find_junction("J3");
  SegmentId lower = *net.find_segment("lower");
  SegmentId upper = *net.find_segment("upper");
  SegmentId exit = *net.find_segment("exit");
  traffic::EmissionParams emission;

  Rsu rsu(bool defended) const {
    std::optional<DefenseParams> d;
    if (defended) d = DefenseParams{};
    return Rsu(j1, net, table, ProtocolParams{}, d, emission);
  }
};

SegmentReport report(std::uint32_t id, std::uint32_t vehicle, SegmentId seg, double tt, double co2,
                     double receipt) {
  SegmentReport r;
  r.id = ReportId{id};
  r.vehicle = VehicleId{vehicle};
  r.claimed_segment = seg;
  r.tt_s = tt;
  r.co2_ml = co2;
  r.dispatch_time_s = receipt - tt;
  r.receipt_time_s = receipt;
  return r;
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("vote examples") {
  SUBCASE("long route wins two rules to one") {
    // short: slow and dirty but shorter; long: faster and cleaner
    const auto d = vote({cand(1, 40.0, 70.0, 190.0), cand(2, 25.0, 45.0, 275.0)}, RuleWeights{});
    CHECK(d.time_vote == 1);
    CHECK(d.co2_vote == 1);
    CHECK(d.distance_vote == 0);
    CHECK(d.chosen == 1);
    CHECK(d.tally == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("single candidate") {
    const auto d = vote({cand(3, 1.0, 1.0, 1.0)}, RuleWeights{});
    CHECK(d.chosen == 0);
  }
  SUBCASE("weights can override the majority") {
    const auto d = vote({cand(1, 40.0, 70.0, 190.0), cand(2, 25.0, 45.0, 275.0)},
                        RuleWeights{1.0, 1.0, 3.0});
    CHECK(d.chosen == 0);
  }
  SUBCASE("three-way split goes to the shorter distance") {
    const auto d = vote({cand(1, 10.0, 30.0, 300.0), cand(2, 20.0, 10.0, 250.0),
                         cand(3, 30.0, 20.0, 200.0)},
                        RuleWeights{});
    CHECK(d.chosen == 2);
  }
  SUBCASE("no candidates") { CHECK_THROWS(vote({}, RuleWeights{})); }
}

TEST_CASE("vote winner is invariant under uniform weight scaling") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  for (int k = 0; k < 300; ++k) {
    std::vector<CandidateEval> c;
    for (std::uint32_t i = 0; i < 3; ++i) c.push_back(cand(i, u(rng), u(rng), u(rng)));
    const RuleWeights base{w(rng), w(rng), w(rng)};
    const double s = w(rng);
    const RuleWeights scaled{base.time * s, base.co2 * s, base.distance * s};
    CHECK(vote(c, base).chosen == vote(c, scaled).chosen);
  }
}

TEST_CASE("summarize averages in order") {
  const SegmentId s{4};
  CHECK(summarize(s, {}).stale);
  const std::vector<StatRecord> recs{{ReportId{1}, 0.0, 0.0, 10.0, 30.0},
                                     {ReportId{2}, 1.0, 1.0, 20.0, 50.0}};
  const auto st = summarize(s, recs);
  CHECK_FALSE(st.stale);
  CHECK(st.samples == 2);
  CHECK(st.mean_tt_s == 15.0);
  CHECK(st.mean_co2_ml == 40.0);
}

TEST_CASE("window keeps receipt order and expires at the TIN boundary") {
  RsuSegmentWindow w(SegmentId{0}, 30.0, sentinel::ConsistencyParams{});
  w.add({ReportId{2}, 5.0, 5.0, 1.0, 1.0});
  w.add({ReportId{1}, 0.0, 0.0, 1.0, 1.0});
  w.add({ReportId{0}, 5.0, 5.0, 1.0, 1.0});
  REQUIRE(w.records().size() == 3);
  CHECK(w.records()[0].id == ReportId{1});
  CHECK(w.records()[1].id == ReportId{0});
  CHECK(w.records()[2].id == ReportId{2});
  w.expire(30.0);
  CHECK(w.records().size() == 3);
  w.expire(31.0);
  CHECK(w.records().size() == 2);
  w.expire(100.0);
  CHECK(w.records().empty());
  w.expire(200.0);
  CHECK(w.stats().stale);
}

TEST_CASE("handshake range") {
  traffic::VehicleState v;
  on_handshake(v, {1.0, 2.0}, 101.0, 100.0);
  CHECK_FALSE(v.known_rsu);
  on_handshake(v, {1.0, 2.0}, 99.0, 100.0);
  REQUIRE(v.known_rsu);
  on_handshake(v, {1.0, 2.0}, 50.0, 100.0);
  CHECK(v.known_rsu->x == 1.0);
}

TEST_CASE("rsu owns the segments of its outgoing routes") {
  const Fixture f;
  auto rsu = f.rsu(false);
  CHECK(rsu.owns(f.lower));
  CHECK(rsu.owns(f.upper));
  CHECK_FALSE(rsu.owns(f.exit));
}

TEST_CASE("route request uses free flow when stale and is idempotent") {
  const Fixture f;
  auto rsu = f.rsu(false);
  const auto& d = rsu.on_route_request(VehicleId{1}, f.j3, 0.0);
  REQUIRE(d.candidates.size() == 2);
  CHECK(d.chosen_candidate().route.front() == f.lower);
  for (const auto& c : d.candidates) CHECK(c.used_free_flow);

  // Congest lower; a repeated request still returns the first answer.
  for (std::uint32_t i = 0; i < 5; ++i) rsu.accept_report(report(i, i, f.lower, 80.0, 150.0, 1.0), 1.0);
  CHECK(rsu.on_route_request(VehicleId{1}, f.j3, 2.0).chosen_candidate().route.front() == f.lower);
  CHECK(rsu.on_route_request(VehicleId{2}, f.j3, 2.0).chosen_candidate().route.front() == f.upper);

  // After passing, the vehicle gets a fresh answer.
  rsu.on_vehicle_passed(VehicleId{1}, 3.0);
  CHECK(rsu.on_route_request(VehicleId{1}, f.j3, 3.0).chosen_candidate().route.front() == f.upper);

  // Once the reports age out, lower is stale again.
  CHECK(rsu.on_route_request(VehicleId{9}, f.j3, 40.0).chosen_candidate().route.front() == f.lower);
}

TEST_CASE("beacons share owned statistics only") {
  const Fixture f;
  auto a = f.rsu(false);
  auto b = Rsu(*f.net.find_junction("J2"), f.net, f.table, ProtocolParams{}, std::nullopt, f.emission);
  b.accept_report(report(1, 1, f.exit, 40.0, 60.0, 5.0), 5.0);
  const auto msg = b.i2i_beacon(6.0);
  a.on_beacon(msg);
  REQUIRE(a.remote_cache().contains(f.exit));
  CHECK(a.current_stats(f.exit).mean_tt_s == 40.0);
  // The cache is a snapshot: it lags until the next beacon.
  b.accept_report(report(2, 2, f.exit, 20.0, 60.0, 7.0), 7.0);
  CHECK(a.current_stats(f.exit).mean_tt_s == 40.0);
  a.on_beacon(b.i2i_beacon(8.0));
  CHECK(a.current_stats(f.exit).mean_tt_s == 30.0);

  // Remote data never overrides owned segments.
  a.accept_report(report(3, 3, f.lower, 17.0, 27.0, 9.0), 9.0);
  BeaconMessage bogus{f.j1, 9.0, {SegmentStats{f.lower, 99.0, 99.0, 1, false}}};
  a.on_beacon(bogus);
  CHECK(a.current_stats(f.lower).mean_tt_s == 17.0);
}

TEST_CASE("undefended rsu accepts everything") {
  const Fixture f;
  auto rsu = f.rsu(false);
  auto r = report(1, 1, f.lower, 10.0, 5.0, 10.0);
  r.dispatch_time_s = 0.0;  // implausible, but nobody checks
  const auto out = rsu.accept_report(r, 10.0);
  CHECK(out.accepted);
  CHECK(rsu.windows().at(f.lower).records().size() == 1);
  CHECK(rsu.accepted_log().size() == 1);
}

TEST_CASE("defended rsu") {
  const Fixture f;
  auto rsu = f.rsu(true);
  SUBCASE("implausible travel time") {
    auto r = report(1, 1, f.lower, 20.0, 30.0, 30.0);
    r.dispatch_time_s = 5.0;
    const auto out = rsu.accept_report(r, 30.0);
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == RejectReason::implausible_tt);
    CHECK(rsu.accepted_log().empty());
  }
  SUBCASE("free-flow values are quarantined in a congested window") {
    for (std::uint32_t i = 0; i < 4; ++i) {
      CHECK(rsu.accept_report(report(i, i, f.lower, 35.0, 60.0 + i, 10.0 + i), 10.0 + i).accepted);
    }
    const auto out = rsu.accept_report(report(9, 9, f.lower, 35.0, 27.4679, 15.0), 15.0);
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == RejectReason::quarantined_pbs);
    REQUIRE(out.classification);
    CHECK(out.classification->classification == sentinel::Classification::pbs);
    // Never integrated: it expires as bogus once the VoW duration passes.
    const auto gone = rsu.expire_windows(26.0);
    CHECK(gone == std::vector<ReportId>{ReportId{9}});
    CHECK(rsu.bogus_log() == std::vector<ReportId>{ReportId{9}});
  }
  SUBCASE("witnesses overrule a false segment claim") {
    auto w = report(1, 1, f.lower, 30.0, 50.0, 10.0);
    w.witnesses = {VehicleId{2}};
    w.witness_segment = f.lower;
    REQUIRE(rsu.accept_report(w, 10.0).accepted);
    const auto out = rsu.accept_report(report(2, 2, f.upper, 30.0, 50.0, 11.0), 11.0);
    REQUIRE(out.claim);
    CHECK(out.claim->kind == sentinel::ClaimKind::overruled);
    CHECK(out.resolved_segment == f.lower);
    CHECK(out.accepted);
    CHECK(rsu.windows().at(f.lower).records().size() == 2);
    CHECK(rsu.windows().at(f.upper).records().empty());
  }
}

}  // TEST_SUITE
