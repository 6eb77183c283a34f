#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erouve/ids.hpp"
#include "erouve/report.hpp"
#include "erouve/roadnet.hpp"
#include "erouve/sentinel.hpp"
#include "erouve/traffic.hpp"

namespace erouve::protocol {

struct RuleWeights {
  double time = 1.0;
  double co2 = 1.0;
  double distance = 1.0;
};

struct ProtocolParams {
  double tin_s = 30.0;
  double beacon_period_s = 1.0;       // I2I
  double v2v_beacon_period_s = 1.0;
  double communication_range_m = 300.0;
  double handshake_range_m = 100.0;
  double control_range_m = 50.0;
  RuleWeights weights;
};

struct DefenseParams {
  sentinel::ConsistencyParams consistency;
  double plausibility_epsilon_s = 3.0;
};

// ---------------------------------------------------------------------------

struct SegmentStats {
  SegmentId segment;
  double mean_tt_s = 0.0;
  double mean_co2_ml = 0.0;
  std::size_t samples = 0;
  bool stale = true;
};

/// An accepted record in a segment's TIN buffer.
struct StatRecord {
  ReportId id;
  double receipt_time_s = 0.0;
  double accept_time_s = 0.0;
  double tt_s = 0.0;
  double co2_ml = 0.0;
};

/// Mean TT / CO2 over records, summed in the given order.
SegmentStats summarize(SegmentId segment, const std::vector<StatRecord>& records);

/// Per-segment TIN buffer, with the consistency filter used when defended.
class RsuSegmentWindow {
 public:
  RsuSegmentWindow(SegmentId segment, double tin_s, sentinel::ConsistencyParams consistency);

  /// Insert keeping (receipt time, id) order.
  void add(const StatRecord& record);
  /// Drop records received before now - TIN; age the filter.
  std::vector<sentinel::FilterEntry> expire(double now_s);

  [[nodiscard]] SegmentStats stats() const { return summarize(segment_, records_); }
  [[nodiscard]] const std::vector<StatRecord>& records() const { return records_; }
  [[nodiscard]] sentinel::ConsistencyFilter& filter() { return filter_; }
  [[nodiscard]] const sentinel::ConsistencyFilter& filter() const { return filter_; }
  [[nodiscard]] SegmentId segment() const { return segment_; }

 private:
  SegmentId segment_;
  double tin_s_;
  std::vector<StatRecord> records_;
  sentinel::ConsistencyFilter filter_;
};

// ---------------------------------------------------------------------------
// Decision system

/// One candidate route with the per-rule metrics the RSU compared.
struct CandidateEval {
  std::vector<SegmentId> route;
  double tt_s = 0.0;
  double co2_ml = 0.0;
  double distance_m = 0.0;  // route length plus remaining shortest distance
  bool used_free_flow = false;
};

struct RouteDecision {
  double time_s = 0.0;
  JunctionId rsu;
  VehicleId vehicle;
  std::vector<CandidateEval> candidates;
  std::size_t time_vote = 0;
  std::size_t co2_vote = 0;
  std::size_t distance_vote = 0;
  RuleWeights weights;
  std::vector<double> tally;
  std::size_t chosen = 0;

  [[nodiscard]] const CandidateEval& chosen_candidate() const { return candidates.at(chosen); }
};

/// Three-rule weighted majority vote. Each rule votes for its minimal
/// candidate; ties (inside a rule and in the final tally) go to the smaller
/// distance, then to the smaller first-segment id.
RouteDecision vote(std::vector<CandidateEval> candidates, const RuleWeights& weights);

// ---------------------------------------------------------------------------

enum class RejectReason { none, implausible_tt, route_claim_overruled, quarantined_pbs };

const char* to_string(RejectReason reason);

struct AcceptOutcome {
  bool accepted = false;
  RejectReason reason = RejectReason::none;
  bool plausible = true;
  std::optional<sentinel::ClaimVerdict> claim;
  std::optional<sentinel::ClassifyOutcome> classification;
  SegmentId resolved_segment;
  std::vector<ReportId> integrated;  // earlier quarantined reports now accepted
};

struct BeaconMessage {
  JunctionId from;
  double time_s = 0.0;
  std::vector<SegmentStats> stats;
};

/// A road side unit at one junction.
///
/// Owns the TIN windows of every segment on its outgoing connecting routes:
/// vehicles it dispatches report each traversed segment back to it. Remote
/// statistics from I2I beacons are used only for segments it does not own.
class Rsu {
 public:
  Rsu(JunctionId junction, const roadnet::RoadNetwork& net,
      const roadnet::ConnectionsTable& table, ProtocolParams params,
      std::optional<DefenseParams> defense, const traffic::EmissionParams& emission);

  [[nodiscard]] JunctionId junction() const { return junction_; }
  [[nodiscard]] bool defended() const { return defense_.has_value(); }

  /// The vehicle crossed this RSU's junction onto a dispatched route.
  void on_vehicle_passed(VehicleId vehicle, double now_s);
  /// Dispatch stamp: the instant the RSU last saw this vehicle start a segment.
  void mark_dispatch(VehicleId vehicle, double now_s) { dispatch_[vehicle] = now_s; }
  [[nodiscard]] std::optional<double> dispatch_time(VehicleId vehicle) const;

  /// Answer a route request. Repeated requests from the same vehicle return
  /// the first answer. Throws roadnet::NoRouteError when nothing leads to
  /// `destination`.
  const RouteDecision& on_route_request(VehicleId vehicle, JunctionId destination, double now_s);

  AcceptOutcome accept_report(const SegmentReport& report, double now_s);

  /// Returns reports dropped from PBS as confirmed bogus.
  std::vector<ReportId> expire_windows(double now_s);

  [[nodiscard]] BeaconMessage i2i_beacon(double now_s);
  void on_beacon(const BeaconMessage& message);

  /// Statistics the decision rules see for a segment right now.
  [[nodiscard]] SegmentStats current_stats(SegmentId segment) const;
  [[nodiscard]] const std::map<SegmentId, SegmentStats>& remote_cache() const { return remote_; }
  [[nodiscard]] const std::map<SegmentId, RsuSegmentWindow>& windows() const { return windows_; }
  [[nodiscard]] bool owns(SegmentId segment) const { return windows_.contains(segment); }

  /// Every record ever accepted (for replay checks).
  [[nodiscard]] const std::vector<std::pair<SegmentId, StatRecord>>& accepted_log() const {
    return accepted_log_;
  }
  /// Every report dropped from PBS as confirmed bogus.
  [[nodiscard]] const std::vector<ReportId>& bogus_log() const { return bogus_log_; }

 private:
  RsuSegmentWindow& window(SegmentId segment);
  void accept_into(SegmentId segment, const StatRecord& record);

  JunctionId junction_;
  const roadnet::RoadNetwork& net_;
  const roadnet::ConnectionsTable& table_;
  ProtocolParams params_;
  std::optional<DefenseParams> defense_;
  std::vector<traffic::FreeFlow> free_flow_;
  std::map<JunctionId, std::vector<double>> dist_to_;

  std::map<SegmentId, RsuSegmentWindow> windows_;
  std::map<SegmentId, SegmentStats> remote_;
  std::map<VehicleId, double> dispatch_;
  std::map<VehicleId, RouteDecision> answered_;
  std::deque<sentinel::LocationEvidence> evidence_;
  std::map<ReportId, std::pair<SegmentId, StatRecord>> quarantined_;
  std::vector<std::pair<SegmentId, StatRecord>> accepted_log_;
  std::vector<ReportId> bogus_log_;
};

/// Vehicle side of the handshake: within range the RSU position is stored.
void on_handshake(traffic::VehicleState& vehicle, const roadnet::Vec2& rsu_position,
                  double distance_m, double handshake_range_m);

}  // namespace erouve::protocol
