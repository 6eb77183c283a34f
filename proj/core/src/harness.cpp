#include "erouve/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <set>

namespace erouve::harness {

namespace {

constexpr double kTimeEps = 1e-9;

JunctionId resolve_endpoint(const roadnet::RoadNetwork& net, const std::string& name,
                            const std::vector<JunctionId>& fallback, const char* what) {
  if (!name.empty()) {
    const auto j = net.find_junction(name);
    if (!j) throw ConfigError(std::string("traffic.") + what + " names unknown junction '" + name + "'");
    return *j;
  }
  if (fallback.empty()) throw ConfigError(std::string("network has no ") + what + " junction");
  return fallback.front();
}

struct Pending {
  traffic::Injection injection;
  std::optional<std::vector<SegmentId>> route;
};

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& config)
      : cfg_(config),
        net_(roadnet::build_network(cfg_.network_spec())),
        table_(roadnet::compute_connections(net_)),
        world_(net_, cfg_.mobility, cfg_.emission),
        ledger_(cfg_.protocol.communication_range_m),
        roles_(adversary::classify_routes(net_, table_)),
        opt_(net_, cfg_.emission) {
    origin_ = resolve_endpoint(net_, cfg_.traffic.origin, net_.sources(), "origin");
    destination_ = resolve_endpoint(net_, cfg_.traffic.destination, net_.sinks(), "destination");
    try {
      static_route_ = roadnet::shortest_static_route(net_, origin_, destination_);
    } catch (const roadnet::NoRouteError& e) {
      throw ConfigError(e.what());
    }
    if (static_route_.empty()) throw ConfigError("traffic origin and destination coincide");

    routing_ = cfg_.mode != Mode::shortest_path;
    auto plan = cfg_.attack;
    if (cfg_.mode == Mode::shortest_path || cfg_.mode == Mode::erouve) {
      plan.type = adversary::AttackType::none;
    }
    coordinator_.emplace(plan, cfg_.traffic.vehicle_count, roles_);

    std::optional<protocol::DefenseParams> defense;
    if (cfg_.mode == Mode::erouve_defended) defense = cfg_.defense_params();
    for (const auto j : net_.rsu_junctions()) {
      rsus_.emplace(j, std::make_unique<protocol::Rsu>(j, net_, table_, cfg_.protocol, defense,
                                                       cfg_.emission));
    }
    for (const auto& [j, row] : table_.rows()) {
      for (const auto& entry : row) {
        peers_[j].insert(entry.rsu);
        peers_[entry.rsu].insert(j);
      }
    }
  }

  RunResult run();

 private:
  std::vector<SegmentId> full_route(const std::vector<SegmentId>& head) const;
  std::vector<SegmentId> decide(VehicleId v, JunctionId rsu, double now);
  void inject(double now);
  void v2v_beacons(double now);
  void handle_exit(const traffic::SegmentExit& e, double now);
  void route_requests(double now);
  void i2i_beacons(double now);
  RunResult collect(double end_time);

  ScenarioConfig cfg_;
  roadnet::RoadNetwork net_;
  roadnet::ConnectionsTable table_;
  traffic::TrafficWorld world_;
  sentinel::WitnessLedger ledger_;
  adversary::RouteRoles roles_;
  adversary::OptProfile opt_;
  std::optional<adversary::AttackCoordinator> coordinator_;
  std::map<JunctionId, std::unique_ptr<protocol::Rsu>> rsus_;
  std::map<JunctionId, std::set<JunctionId>> peers_;

  JunctionId origin_;
  JunctionId destination_;
  std::vector<SegmentId> static_route_;
  bool routing_ = true;

  std::deque<Pending> pending_;
  std::map<VehicleId, double> scheduled_;
  std::map<VehicleId, JunctionId> dispatcher_;
  std::map<VehicleId, std::size_t> requested_at_;  // route index of the last Rq
  std::uint32_t next_report_ = 0;

  std::vector<protocol::RouteDecision> decisions_;
  std::vector<VerdictRecord> verdicts_;
};

std::vector<SegmentId> Simulation::full_route(const std::vector<SegmentId>& head) const {
  auto route = head;
  const JunctionId end = net_.segment(head.back()).to;
  const auto rest = roadnet::shortest_static_route(net_, end, destination_);
  route.insert(route.end(), rest.begin(), rest.end());
  return route;
}

std::vector<SegmentId> Simulation::decide(VehicleId v, JunctionId rsu, double now) {
  const auto& d = rsus_.at(rsu)->on_route_request(v, destination_, now);
  decisions_.push_back(d);
  return full_route(d.chosen_candidate().route);
}

void Simulation::inject(double now) {
  while (!pending_.empty()) {
    auto& p = pending_.front();
    if (p.injection.time_s > now + kTimeEps) break;
    const VehicleId v = p.injection.vehicle;
    if (!p.route) {
      p.route = routing_ && net_.hosts_rsu(origin_) ? decide(v, origin_, now) : static_route_;
    }
    if (!world_.try_insert(v, *p.route, p.injection.time_s, now)) break;
    if (net_.hosts_rsu(origin_)) {
      dispatcher_[v] = origin_;
      rsus_.at(origin_)->on_vehicle_passed(v, now);
    }
    pending_.pop_front();
  }
}

void Simulation::v2v_beacons(double now) {
  std::vector<sentinel::BeaconPeer> peers;
  for (const auto& [id, v] : world_.active()) peers.push_back({id, v.segment(), v.position_m});
  for (std::size_t i = 0; i < peers.size(); ++i) ledger_.record_beacon(peers, i, now);
}

void Simulation::handle_exit(const traffic::SegmentExit& e, double now) {
  const auto disp = dispatcher_.find(e.vehicle);
  if (disp != dispatcher_.end()) {
    auto& rsu = *rsus_.at(disp->second);
    SegmentReport truth;
    truth.id = ReportId{next_report_++};
    truth.vehicle = e.vehicle;
    truth.claimed_segment = e.segment;
    truth.tt_s = e.exit_time_s - e.entry_time_s;
    truth.co2_ml = e.co2_ml;
    truth.witnesses = ledger_.witnesses(e.vehicle, e.segment, e.entry_time_s);
    truth.witness_segment = e.segment;
    truth.dispatch_time_s = rsu.dispatch_time(e.vehicle).value_or(e.entry_time_s);
    truth.receipt_time_s = now;

    const bool forged = coordinator_->on_exit(e.vehicle, e.segment, now);
    const SegmentReport report =
        forged ? adversary::forge_report(truth, coordinator_->plan(), roles_, opt_) : truth;

    if (routing_) {
      const auto out = rsu.accept_report(report, now);
      VerdictRecord r;
      r.time_s = now;
      r.report = report.id;
      r.vehicle = e.vehicle;
      r.claimed = report.claimed_segment;
      r.true_segment = e.segment;
      r.rsu = disp->second;
      r.forged = forged;
      r.dispatch_time_s = report.dispatch_time_s;
      r.true_tt_s = truth.tt_s;
      r.true_co2_ml = truth.co2_ml;
      r.reported_tt_s = report.tt_s;
      r.reported_co2_ml = report.co2_ml;
      if (rsu.defended()) {
        r.plausible = out.plausible;
        if (out.claim) r.claim = out.claim->kind;
        if (out.classification) r.classification = out.classification->classification;
      }
      r.accepted = out.accepted;
      r.reason = out.reason;
      verdicts_.push_back(std::move(r));
    }
  }

  if (!e.entered) {
    ledger_.forget(e.vehicle);
    dispatcher_.erase(e.vehicle);
    requested_at_.erase(e.vehicle);
    return;
  }
  ledger_.prune(e.vehicle, e.exit_time_s);
  const JunctionId j = net_.segment(e.segment).to;
  if (net_.hosts_rsu(j)) {
    dispatcher_[e.vehicle] = j;
    rsus_.at(j)->on_vehicle_passed(e.vehicle, now);
  } else if (disp != dispatcher_.end()) {
    rsus_.at(disp->second)->mark_dispatch(e.vehicle, now);
  }
}

void Simulation::route_requests(double now) {
  if (!routing_) return;
  std::vector<std::pair<VehicleId, std::vector<SegmentId>>> reroutes;
  for (const auto& [id, v] : world_.active()) {
    if (v.on_last_segment()) continue;
    const auto& seg = net_.segment(v.segment());
    if (!net_.hosts_rsu(seg.to)) continue;
    const double dist = seg.length_m - v.position_m;
    auto& state = world_.vehicle(id);
    protocol::on_handshake(state, net_.junction(seg.to).position, dist,
                           cfg_.protocol.handshake_range_m);
    if (dist > cfg_.protocol.control_range_m || !state.known_rsu) continue;
    const auto it = requested_at_.find(id);
    if (it != requested_at_.end() && it->second == v.route_index) continue;
    requested_at_[id] = v.route_index;
    auto route = decide(id, seg.to, now);
    reroutes.emplace_back(id, std::move(route));
  }
  for (const auto& [id, route] : reroutes) world_.reroute(id, route);
}

void Simulation::i2i_beacons(double now) {
  std::vector<protocol::BeaconMessage> sent;
  for (auto& [j, rsu] : rsus_) sent.push_back(rsu->i2i_beacon(now));
  for (const auto& msg : sent) {
    const auto it = peers_.find(msg.from);
    if (it == peers_.end()) continue;
    for (const auto to : it->second) rsus_.at(to)->on_beacon(msg);
  }
}

RunResult Simulation::run() {
  traffic::Rng rng(cfg_.engine.seed);
  traffic::FlowSpec flow{cfg_.traffic.vehicle_count, cfg_.traffic.mean_headway_s,
                         cfg_.traffic.headway_jitter};
  for (const auto& inj : traffic::spawn_vehicles(flow, rng)) {
    pending_.push_back({inj, std::nullopt});
    scheduled_[inj.vehicle] = inj.time_s;
  }

  const double dt = cfg_.engine.dt_s;
  double next_v2v = 0.0;
  double next_i2i = cfg_.protocol.beacon_period_s;
  double now = 0.0;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= cfg_.engine.duration_s - kTimeEps) {
      now = t;
      break;
    }
    inject(t);
    if (t >= next_v2v - kTimeEps) {
      v2v_beacons(t);
      next_v2v += cfg_.protocol.v2v_beacon_period_s;
    }
    now = static_cast<double>(k + 1) * dt;
    for (const auto& e : world_.step(t)) handle_exit(e, now);
    route_requests(now);
    if (now >= next_i2i - kTimeEps) {
      i2i_beacons(now);
      next_i2i += cfg_.protocol.beacon_period_s;
    }
    if (pending_.empty() && world_.active().empty()) break;
  }
  for (auto& [j, rsu] : rsus_) rsu->expire_windows(now);
  return collect(now);
}

RunResult Simulation::collect(double end_time) {
  RunResult r;
  r.config = cfg_;
  for (const auto& [id, sched] : scheduled_) {
    VehicleRecord rec;
    rec.id = id;
    rec.inject_time_s = sched;
    rec.infected = coordinator_->infected(id);
    const traffic::VehicleState* state = nullptr;
    if (const auto it = world_.finished().find(id); it != world_.finished().end()) {
      state = &it->second;
    } else if (const auto it2 = world_.active().find(id); it2 != world_.active().end()) {
      state = &it2->second;
    }
    if (state) {
      rec.route = state->arrive_time_s ? state->traversed : state->route;
      rec.arrive_time_s = state->arrive_time_s;
      rec.trip_co2_ml = state->trip_co2_ml;
    } else {
      rec.route = static_route_;
    }
    rec.long_route = rec.route != static_route_;
    r.vehicles.push_back(std::move(rec));
  }

  std::set<ReportId> accepted_ids;
  for (const auto& [j, rsu] : rsus_) {
    auto& log = r.accepted[j];
    log = rsu->accepted_log();
    for (const auto& [seg, rec] : log) accepted_ids.insert(rec.id);
    r.summary.defense.bogus_expired += rsu->bogus_log().size();
  }

  auto& d = r.summary.defense;
  for (const auto& v : verdicts_) {
    const bool entered = accepted_ids.contains(v.report);
    const bool pbs = v.classification == sentinel::Classification::pbs;
    if (v.forged) {
      ++d.forged_reports;
      if (pbs) ++d.forged_quarantined;
      if (entered) {
        ++d.forged_missed;
      } else {
        ++d.forged_detected;
      }
      if (v.claimed != v.true_segment) {
        ++d.forged_fr;
        if (v.claim == sentinel::ClaimKind::overruled) ++d.forged_fr_overruled;
      }
      if (v.plausible == false) ++d.forged_implausible;
    } else {
      ++d.honest_reports;
      if (pbs) ++d.honest_quarantined;
      if (v.reason == protocol::RejectReason::implausible_tt ||
          v.reason == protocol::RejectReason::route_claim_overruled) {
        ++d.honest_rejected;
      }
    }
  }

  r.summary.config_fingerprint = config_fingerprint(cfg_);
  r.summary.scenario_fingerprint = scenario_fingerprint(cfg_);
  r.summary.mode = cfg_.mode;
  r.summary.seed = cfg_.engine.seed;
  r.summary.aggregates = aggregate(r.vehicles);
  r.summary.infected_vehicles = static_cast<std::size_t>(coordinator_->infected_count());
  r.summary.decisions = decisions_.size();
  r.summary.end_time_s = end_time;
  r.decisions = std::move(decisions_);
  r.verdicts = std::move(verdicts_);
  return r;
}

}  // namespace

Aggregates aggregate(const std::vector<VehicleRecord>& vehicles) {
  Aggregates a;
  a.vehicles = vehicles.size();
  std::vector<double> times;
  std::vector<double> co2;
  std::size_t long_count = 0;
  for (const auto& v : vehicles) {
    const auto tt = v.trip_time_s();
    if (!tt) continue;
    times.push_back(*tt);
    co2.push_back(v.trip_co2_ml);
    if (v.long_route) ++long_count;
  }
  a.arrived = times.size();
  if (times.empty()) return a;
  auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (const double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  auto median = [](std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  };
  a.mean_time_s = mean(times);
  a.median_time_s = median(times);
  a.mean_co2_ml = mean(co2);
  a.median_co2_ml = median(co2);
  a.long_route_share_pct = 100.0 * static_cast<double>(long_count) / static_cast<double>(a.arrived);
  return a;
}

RunResult run_scenario(const ScenarioConfig& config) {
  auto cfg = config;
  cfg.mobility.dt_s = cfg.engine.dt_s;
  cfg.validate();
  RunResult result;
  {
    Simulation sim(cfg);
    result = sim.run();
  }
  result.network = roadnet::build_network(cfg.network_spec());
  return result;
}

}  // namespace erouve::harness
