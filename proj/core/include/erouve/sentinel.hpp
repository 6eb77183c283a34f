#pragma once

#include <map>
#include <span>
#include <vector>

#include "erouve/ids.hpp"
#include "erouve/report.hpp"

namespace erouve::sentinel {

// ---------------------------------------------------------------------------
// V2V witnessing

struct Observation {
  VehicleId heard;     // broadcasting vehicle
  SegmentId segment;   // shared by broadcaster and listener
  double time_s = 0.0;
};

/// A vehicle's view at beacon time.
struct BeaconPeer {
  VehicleId id;
  SegmentId segment;
  double position_m = 0.0;
};

/// Per-vehicle record of beacons heard. Beacons never cross segments.
class WitnessLedger {
 public:
  explicit WitnessLedger(double range_m = 300.0) : range_m_(range_m) {}

  /// `broadcaster` beacons at `now`; same-segment peers within range record it.
  void record_beacon(std::span<const BeaconPeer> peers, std::size_t broadcaster, double now_s);

  /// Distinct vehicles heard on `segment` at or after `since_s`, ascending.
  [[nodiscard]] std::vector<VehicleId> witnesses(VehicleId listener, SegmentId segment,
                                                 double since_s) const;

  [[nodiscard]] const std::vector<Observation>& observations(VehicleId listener) const;

  /// Drop everything a vehicle heard before `before_s`.
  void prune(VehicleId listener, double before_s);
  void forget(VehicleId listener) { log_.erase(listener); }

 private:
  double range_m_;
  std::map<VehicleId, std::vector<Observation>> log_;
};

// ---------------------------------------------------------------------------
// Route-claim validation

/// A report the RSU already holds, as evidence of who traveled where.
struct LocationEvidence {
  VehicleId reporter;
  SegmentId segment;  // where the reporter heard its witnesses
  std::vector<VehicleId> witnesses;
  double receipt_time_s = 0.0;
};

enum class ClaimKind { confirmed, overruled, unwitnessed };

struct ClaimVerdict {
  SegmentId claimed;
  SegmentId resolved;
  ClaimKind kind = ClaimKind::unwitnessed;
  std::map<SegmentId, int> tally;  // distinct witnesses per segment
  [[nodiscard]] bool low_confidence() const { return kind == ClaimKind::unwitnessed; }
};

/// Majority vote over co-traveler evidence received at or after `since_s`.
/// The claim stands unless another segment's tally strictly exceeds it.
ClaimVerdict validate_claim(const SegmentReport& report,
                            std::span<const LocationEvidence> evidence, double since_s);

// ---------------------------------------------------------------------------
// Plausibility

/// The RSU knows when it dispatched the vehicle and when the report arrived;
/// the claimed travel time must agree with that interval within epsilon.
bool check_plausibility(const SegmentReport& report, double epsilon_s);

// ---------------------------------------------------------------------------
// Consistency filtering (VoW / PBS)

enum class Feature { co2, travel_time };

struct ConsistencyParams {
  double threshold_percent = 10.0;
  double vow_duration_s = 10.0;
  Feature feature = Feature::co2;

  void validate() const;
};

/// Euclidean distance of x to every value in the window.
double euclidean_distance(double x, std::span<const double> window);

/// Absolute threshold: each window member may deviate by `percent` on average,
/// i.e. (percent / 100) * mean(window) * sqrt(|window|).
double absolute_threshold(double percent, std::span<const double> window);

enum class Classification { vow, pbs };

struct FilterEntry {
  ReportId id;
  double value = 0.0;
  double time_s = 0.0;
};

struct ClassifyOutcome {
  Classification classification = Classification::vow;
  bool bootstrap = false;
  double distance = 0.0;
  double threshold = 0.0;
  std::vector<FilterEntry> integrated;      // PBS entries (incl. x) moved into VoW
  std::vector<FilterEntry> confirmed_bogus; // PBS entries aged out before x
};

/// Validation window plus potentially-bogus set for one segment.
///
/// Entries leave both sets once older than the VoW duration; PBS entries that
/// age out are confirmed bogus. When |PBS| exceeds |VoW| the PBS contents are
/// taken as a genuine traffic shift: they replace the VoW reference.
class ConsistencyFilter {
 public:
  explicit ConsistencyFilter(ConsistencyParams params = {});

  /// Age both sets; returns PBS entries dropped as bogus.
  std::vector<FilterEntry> expire(double now_s);

  ClassifyOutcome classify(ReportId id, double x, double now_s);

  [[nodiscard]] const std::vector<FilterEntry>& vow() const { return vow_; }
  [[nodiscard]] const std::vector<FilterEntry>& pbs() const { return pbs_; }
  [[nodiscard]] std::vector<double> vow_values() const;
  [[nodiscard]] const ConsistencyParams& params() const { return params_; }

 private:
  ConsistencyParams params_;
  std::vector<FilterEntry> vow_;
  std::vector<FilterEntry> pbs_;
};

}  // namespace erouve::sentinel
