#include "erouve/sentinel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace erouve::sentinel {

void WitnessLedger::record_beacon(std::span<const BeaconPeer> peers, std::size_t broadcaster,
                                  double now_s) {
  const auto& from = peers[broadcaster];
  for (std::size_t i = 0; i < peers.size(); ++i) {
    if (i == broadcaster) continue;
    const auto& to = peers[i];
    if (to.segment != from.segment) continue;
    if (std::abs(to.position_m - from.position_m) > range_m_) continue;
    log_[to.id].push_back({from.id, from.segment, now_s});
  }
}

std::vector<VehicleId> WitnessLedger::witnesses(VehicleId listener, SegmentId segment,
                                                double since_s) const {
  std::set<VehicleId> heard;
  if (const auto it = log_.find(listener); it != log_.end()) {
    for (const auto& o : it->second) {
      if (o.segment == segment && o.time_s >= since_s) heard.insert(o.heard);
    }
  }
  return {heard.begin(), heard.end()};
}

const std::vector<Observation>& WitnessLedger::observations(VehicleId listener) const {
  static const std::vector<Observation> empty;
  const auto it = log_.find(listener);
  return it == log_.end() ? empty : it->second;
}

void WitnessLedger::prune(VehicleId listener, double before_s) {
  const auto it = log_.find(listener);
  if (it == log_.end()) return;
  std::erase_if(it->second, [&](const Observation& o) { return o.time_s < before_s; });
}

// ---------------------------------------------------------------------------

ClaimVerdict validate_claim(const SegmentReport& report,
                            std::span<const LocationEvidence> evidence, double since_s) {
  std::map<SegmentId, std::set<VehicleId>> voters;
  for (const auto& e : evidence) {
    if (e.reporter == report.vehicle || e.receipt_time_s < since_s) continue;
    if (std::binary_search(e.witnesses.begin(), e.witnesses.end(), report.vehicle)) {
      voters[e.segment].insert(e.reporter);
    }
  }

  ClaimVerdict verdict;
  verdict.claimed = report.claimed_segment;
  verdict.resolved = report.claimed_segment;
  for (const auto& [seg, who] : voters) verdict.tally[seg] = static_cast<int>(who.size());

  if (verdict.tally.empty()) {
    verdict.kind = ClaimKind::unwitnessed;
    return verdict;
  }
  const auto claimed_it = verdict.tally.find(report.claimed_segment);
  const int claimed_votes = claimed_it == verdict.tally.end() ? 0 : claimed_it->second;

  SegmentId best = report.claimed_segment;
  int best_votes = claimed_votes;
  for (const auto& [seg, votes] : verdict.tally) {
    if (votes > best_votes) {
      best = seg;
      best_votes = votes;
    }
  }
  if (best == report.claimed_segment) {
    verdict.kind = ClaimKind::confirmed;
  } else {
    verdict.kind = ClaimKind::overruled;
    verdict.resolved = best;
  }
  return verdict;
}

bool check_plausibility(const SegmentReport& report, double epsilon_s) {
  const double interval = report.receipt_time_s - report.dispatch_time_s;
  return std::abs(report.tt_s - interval) <= epsilon_s;
}

// ---------------------------------------------------------------------------

void ConsistencyParams::validate() const {
  if (!(threshold_percent > 0.0)) throw std::invalid_argument("threshold percent must be positive");
  if (!(vow_duration_s > 0.0)) throw std::invalid_argument("VoW duration must be positive");
}

double euclidean_distance(double x, std::span<const double> window) {
  double sum = 0.0;
  for (const double y : window) sum += (x - y) * (x - y);
  return std::sqrt(sum);
}

double absolute_threshold(double percent, std::span<const double> window) {
  if (window.empty()) return 0.0;
  double sum = 0.0;
  for (const double y : window) sum += y;
  const double n = static_cast<double>(window.size());
  return percent / 100.0 * (sum / n) * std::sqrt(n);
}

ConsistencyFilter::ConsistencyFilter(ConsistencyParams params) : params_(params) {
  params_.validate();
}

std::vector<FilterEntry> ConsistencyFilter::expire(double now_s) {
  const double horizon = now_s - params_.vow_duration_s;
  std::erase_if(vow_, [&](const FilterEntry& e) { return e.time_s < horizon; });
  std::vector<FilterEntry> bogus;
  std::erase_if(pbs_, [&](const FilterEntry& e) {
    if (e.time_s >= horizon) return false;
    bogus.push_back(e);
    return true;
  });
  return bogus;
}

std::vector<double> ConsistencyFilter::vow_values() const {
  std::vector<double> out;
  out.reserve(vow_.size());
  for (const auto& e : vow_) out.push_back(e.value);
  return out;
}

ClassifyOutcome ConsistencyFilter::classify(ReportId id, double x, double now_s) {
  ClassifyOutcome out;
  out.confirmed_bogus = expire(now_s);
  const FilterEntry entry{id, x, now_s};

  if (vow_.empty()) {
    out.bootstrap = true;
    out.classification = Classification::vow;
    vow_.push_back(entry);
    return out;
  }

  const auto values = vow_values();
  out.distance = euclidean_distance(x, values);
  out.threshold = absolute_threshold(params_.threshold_percent, values);
  if (out.distance < out.threshold) {
    out.classification = Classification::vow;
    vow_.push_back(entry);
    return out;
  }

  out.classification = Classification::pbs;
  pbs_.push_back(entry);
  if (pbs_.size() > vow_.size()) {
    out.integrated = pbs_;
    vow_ = std::move(pbs_);
    pbs_.clear();
  }
  return out;
}

}  // namespace erouve::sentinel
