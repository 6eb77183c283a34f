#include "erouve/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace erouve::protocol {

SegmentStats summarize(SegmentId segment, const std::vector<StatRecord>& records) {
  SegmentStats s;
  s.segment = segment;
  s.samples = records.size();
  s.stale = records.empty();
  if (records.empty()) return s;
  double tt = 0.0;
  double co2 = 0.0;
  for (const auto& r : records) {
    tt += r.tt_s;
    co2 += r.co2_ml;
  }
  s.mean_tt_s = tt / static_cast<double>(records.size());
  s.mean_co2_ml = co2 / static_cast<double>(records.size());
  return s;
}

RsuSegmentWindow::RsuSegmentWindow(SegmentId segment, double tin_s,
                                   sentinel::ConsistencyParams consistency)
    : segment_(segment), tin_s_(tin_s), filter_(consistency) {}

void RsuSegmentWindow::add(const StatRecord& record) {
  const auto pos = std::upper_bound(records_.begin(), records_.end(), record,
                                    [](const StatRecord& a, const StatRecord& b) {
                                      return a.receipt_time_s < b.receipt_time_s ||
                                             (a.receipt_time_s == b.receipt_time_s && a.id < b.id);
                                    });
  records_.insert(pos, record);
}

std::vector<sentinel::FilterEntry> RsuSegmentWindow::expire(double now_s) {
  const double horizon = now_s - tin_s_;
  std::erase_if(records_, [&](const StatRecord& r) { return r.receipt_time_s < horizon; });
  return filter_.expire(now_s);
}

// ---------------------------------------------------------------------------

namespace {

// Strict ordering used for every tie: smaller distance, then first segment.
bool tie_before(const CandidateEval& a, const CandidateEval& b) {
  if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
  return a.route.front() < b.route.front();
}

template <typename Metric>
std::size_t argmin(const std::vector<CandidateEval>& c, Metric metric) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double mi = metric(c[i]);
    const double mb = metric(c[best]);
    if (mi < mb || (mi == mb && tie_before(c[i], c[best]))) best = i;
  }
  return best;
}

}  // namespace

RouteDecision vote(std::vector<CandidateEval> candidates, const RuleWeights& weights) {
  if (candidates.empty()) throw std::invalid_argument("vote needs at least one candidate");
  RouteDecision d;
  d.weights = weights;
  d.time_vote = argmin(candidates, [](const CandidateEval& c) { return c.tt_s; });
  d.co2_vote = argmin(candidates, [](const CandidateEval& c) { return c.co2_ml; });
  d.distance_vote = argmin(candidates, [](const CandidateEval& c) { return c.distance_m; });

  d.tally.assign(candidates.size(), 0.0);
  d.tally[d.time_vote] += weights.time;
  d.tally[d.co2_vote] += weights.co2;
  d.tally[d.distance_vote] += weights.distance;

  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (d.tally[i] > d.tally[best] ||
        (d.tally[i] == d.tally[best] && tie_before(candidates[i], candidates[best]))) {
      best = i;
    }
  }
  d.chosen = best;
  d.candidates = std::move(candidates);
  return d;
}

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::none: return "none";
    case RejectReason::implausible_tt: return "implausible-TT";
    case RejectReason::route_claim_overruled: return "route-claim-overruled";
    case RejectReason::quarantined_pbs: return "quarantined-PBS";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

Rsu::Rsu(JunctionId junction, const roadnet::RoadNetwork& net,
         const roadnet::ConnectionsTable& table, ProtocolParams params,
         std::optional<DefenseParams> defense, const traffic::EmissionParams& emission)
    : junction_(junction), net_(net), table_(table), params_(params), defense_(defense) {
  free_flow_.reserve(net.segment_count());
  for (const auto& seg : net.segments()) free_flow_.push_back(traffic::free_flow(seg, emission));
  for (const auto* route : table_.routes_from(junction_)) {
    for (const auto sid : route->segments) window(sid);
  }
}

RsuSegmentWindow& Rsu::window(SegmentId segment) {
  auto it = windows_.find(segment);
  if (it == windows_.end()) {
    const auto consistency = defense_ ? defense_->consistency : sentinel::ConsistencyParams{};
    it = windows_.emplace(segment, RsuSegmentWindow(segment, params_.tin_s, consistency)).first;
  }
  return it->second;
}

void Rsu::on_vehicle_passed(VehicleId vehicle, double now_s) {
  dispatch_[vehicle] = now_s;
  answered_.erase(vehicle);
}

std::optional<double> Rsu::dispatch_time(VehicleId vehicle) const {
  const auto it = dispatch_.find(vehicle);
  if (it == dispatch_.end()) return std::nullopt;
  return it->second;
}

SegmentStats Rsu::current_stats(SegmentId segment) const {
  if (const auto it = windows_.find(segment); it != windows_.end()) return it->second.stats();
  if (const auto it = remote_.find(segment); it != remote_.end()) return it->second;
  SegmentStats s;
  s.segment = segment;
  return s;
}

const RouteDecision& Rsu::on_route_request(VehicleId vehicle, JunctionId destination,
                                           double now_s) {
  if (const auto it = answered_.find(vehicle); it != answered_.end()) return it->second;
  expire_windows(now_s);

  auto dist_it = dist_to_.find(destination);
  if (dist_it == dist_to_.end()) {
    dist_it = dist_to_.emplace(destination, roadnet::distances_to(net_, destination)).first;
  }
  const auto& remaining = dist_it->second;

  std::vector<CandidateEval> candidates;
  for (const auto* route : table_.routes_from(junction_)) {
    const JunctionId end = net_.segment(route->segments.back()).to;
    const double rest = remaining[end.value];
    if (!std::isfinite(rest)) continue;
    CandidateEval c;
    c.route = route->segments;
    c.distance_m = route->distance_m + rest;
    for (const auto sid : route->segments) {
      const auto s = current_stats(sid);
      if (s.stale) {
        c.tt_s += free_flow_[sid.value].tt_s;
        c.co2_ml += free_flow_[sid.value].co2_ml;
        c.used_free_flow = true;
      } else {
        c.tt_s += s.mean_tt_s;
        c.co2_ml += s.mean_co2_ml;
      }
    }
    candidates.push_back(std::move(c));
  }
  if (candidates.empty()) {
    throw roadnet::NoRouteError("rsu '" + net_.junction(junction_).name + "' has no route to '" +
                                net_.junction(destination).name + "'");
  }

  auto decision = vote(std::move(candidates), params_.weights);
  decision.time_s = now_s;
  decision.rsu = junction_;
  decision.vehicle = vehicle;
  return answered_.insert_or_assign(vehicle, std::move(decision)).first->second;
}

void Rsu::accept_into(SegmentId segment, const StatRecord& record) {
  window(segment).add(record);
  accepted_log_.emplace_back(segment, record);
}

AcceptOutcome Rsu::accept_report(const SegmentReport& report, double now_s) {
  expire_windows(now_s);
  AcceptOutcome out;
  out.resolved_segment = report.claimed_segment;
  StatRecord record{report.id, now_s, now_s, report.tt_s, report.co2_ml};

  if (!defense_) {
    accept_into(report.claimed_segment, record);
    out.accepted = true;
    return out;
  }

  out.plausible = sentinel::check_plausibility(report, defense_->plausibility_epsilon_s);
  if (!out.plausible) {
    out.reason = RejectReason::implausible_tt;
    return out;
  }

  const std::vector<sentinel::LocationEvidence> evidence(evidence_.begin(), evidence_.end());
  out.claim = sentinel::validate_claim(report, evidence, now_s - params_.tin_s);
  out.resolved_segment = out.claim->resolved;
  const SegmentId heard_on =
      report.witness_segment.valid() ? report.witness_segment : out.resolved_segment;
  evidence_.push_back({report.vehicle, heard_on, report.witnesses, now_s});

  if (!owns(out.resolved_segment)) {
    if (out.claim->kind == sentinel::ClaimKind::overruled) {
      out.reason = RejectReason::route_claim_overruled;
      return out;
    }
    window(out.resolved_segment);
  }

  auto& win = window(out.resolved_segment);
  const double value = defense_->consistency.feature == sentinel::Feature::co2 ? report.co2_ml
                                                                                : report.tt_s;
  auto cls = win.filter().classify(report.id, value, now_s);
  for (const auto& bogus : cls.confirmed_bogus) quarantined_.erase(bogus.id);

  if (cls.classification == sentinel::Classification::vow) {
    accept_into(out.resolved_segment, record);
    out.accepted = true;
  } else {
    quarantined_.emplace(report.id, std::make_pair(out.resolved_segment, record));
    for (const auto& e : cls.integrated) {
      const auto it = quarantined_.find(e.id);
      if (it == quarantined_.end()) continue;
      auto rec = it->second.second;
      rec.accept_time_s = now_s;
      accept_into(it->second.first, rec);
      quarantined_.erase(it);
      if (e.id == report.id) {
        out.accepted = true;
      } else {
        out.integrated.push_back(e.id);
      }
    }
    if (!out.accepted) out.reason = RejectReason::quarantined_pbs;
  }
  out.classification = std::move(cls);
  return out;
}

std::vector<ReportId> Rsu::expire_windows(double now_s) {
  std::vector<ReportId> bogus;
  for (auto& [sid, win] : windows_) {
    for (const auto& e : win.expire(now_s)) {
      quarantined_.erase(e.id);
      bogus.push_back(e.id);
    }
  }
  const double horizon = now_s - params_.tin_s;
  while (!evidence_.empty() && evidence_.front().receipt_time_s < horizon) evidence_.pop_front();
  std::sort(bogus.begin(), bogus.end());
  bogus_log_.insert(bogus_log_.end(), bogus.begin(), bogus.end());
  return bogus;
}

BeaconMessage Rsu::i2i_beacon(double now_s) {
  expire_windows(now_s);
  BeaconMessage msg;
  msg.from = junction_;
  msg.time_s = now_s;
  for (const auto& [sid, win] : windows_) msg.stats.push_back(win.stats());
  return msg;
}

void Rsu::on_beacon(const BeaconMessage& message) {
  for (const auto& s : message.stats) remote_.insert_or_assign(s.segment, s);
}

void on_handshake(traffic::VehicleState& vehicle, const roadnet::Vec2& rsu_position,
                  double distance_m, double handshake_range_m) {
  if (distance_m <= handshake_range_m) vehicle.known_rsu = rsu_position;
}

}  // namespace erouve::protocol
