#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "erouve/ids.hpp"
#include "erouve/roadnet.hpp"

namespace erouve::traffic {

/// Krauss-style car-following parameters.
struct MobilityParams {
  double dt_s = 0.5;
  double max_accel_mps2 = 2.5;
  double comfort_decel_mps2 = 4.5;
  double reaction_time_s = 1.0;
  double min_gap_m = 2.5;
  double vehicle_length_m = 5.0;

  void validate() const;
};

/// Polynomial instantaneous CO2 model, floored at the idle rate:
///   rate(v, a) = max(c0, c0 + c1 v + c2 v^2 + c3 v^3 + c4 a v)   [ml/s]
/// The shipped defaults are illustrative, not published EMIT values.
struct EmissionParams {
  double idle_mlps = 1.0;       // c0
  double c1 = 0.02;             // per m/s
  double c2 = 0.002;            // per (m/s)^2
  double c3 = 0.0001;           // per (m/s)^3
  double power_coeff = 0.12;    // c4, per m^2/s^3

  void validate() const;
};

double co2_rate(double speed_mps, double accel_mps2, const EmissionParams& params);

/// Uncongested traversal at the segment speed limit.
struct FreeFlow {
  double tt_s = 0.0;
  double co2_ml = 0.0;
};

FreeFlow free_flow(const roadnet::RoadSegment& segment, const EmissionParams& params);

/// Krauss safe speed for a (net) gap to a leader moving at `leader_speed`.
double safe_speed(double gap_m, double leader_speed_mps, const MobilityParams& params);

// ---------------------------------------------------------------------------

/// Deterministic RNG used for every stochastic draw in a run.
using Rng = std::mt19937_64;

/// Uniform in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
double uniform01(Rng& rng);

struct FlowSpec {
  int vehicle_count = 150;
  double mean_headway_s = 1.0;
  double headway_jitter = 0.5;  // relative: gaps uniform in mean*(1 +/- jitter)
};

struct Injection {
  double time_s = 0.0;
  VehicleId vehicle;
};

/// First vehicle at t = 0; each later gap drawn from the jittered headway.
std::vector<Injection> spawn_vehicles(const FlowSpec& flow, Rng& rng);

// ---------------------------------------------------------------------------

enum class Role { honest, infected };

struct VehicleState {
  VehicleId id;
  std::vector<SegmentId> route;  // full planned route, current segment at route_index
  std::size_t route_index = 0;
  int lane = 0;
  double position_m = 0.0;
  double speed_mps = 0.0;
  double accel_mps2 = 0.0;

  double scheduled_time_s = 0.0;
  double insert_time_s = 0.0;
  double segment_entry_time_s = 0.0;
  double segment_co2_ml = 0.0;

  double trip_co2_ml = 0.0;
  double trip_distance_m = 0.0;
  std::optional<double> arrive_time_s;

  Role role = Role::honest;
  std::optional<roadnet::Vec2> known_rsu;  // set on handshake
  std::vector<SegmentId> traversed;

  [[nodiscard]] SegmentId segment() const { return route.at(route_index); }
  [[nodiscard]] bool on_last_segment() const { return route_index + 1 >= route.size(); }
  [[nodiscard]] std::optional<SegmentId> next_segment() const {
    if (on_last_segment()) return std::nullopt;
    return route[route_index + 1];
  }
};

/// A vehicle left a segment during the last step.
struct SegmentExit {
  VehicleId vehicle;
  SegmentId segment;
  double entry_time_s = 0.0;
  double exit_time_s = 0.0;
  double co2_ml = 0.0;
  std::optional<SegmentId> entered;  // nullopt when the trip ended
};

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time-stepped microscopic mobility over a RoadNetwork.
///
/// Each step computes new speeds synchronously from the current state, then
/// moves vehicles. Segment-end crossings use stop-line gap acceptance against
/// the target lane (mapped lane for merges, least occupied lane otherwise).
class TrafficWorld {
 public:
  TrafficWorld(const roadnet::RoadNetwork& net, MobilityParams mobility,
               EmissionParams emission);

  /// Place a vehicle at the start of route.front(). Returns false when no
  /// lane has room at the entry point.
  bool try_insert(VehicleId id, std::vector<SegmentId> route, double scheduled_time_s,
                  double now_s);

  /// Advance from now_s to now_s + dt.
  std::vector<SegmentExit> step(double now_s);

  /// Replace everything after the current segment.
  void reroute(VehicleId id, const std::vector<SegmentId>& tail);

  [[nodiscard]] const std::map<VehicleId, VehicleState>& active() const { return active_; }
  [[nodiscard]] const std::map<VehicleId, VehicleState>& finished() const { return finished_; }
  [[nodiscard]] VehicleState& vehicle(VehicleId id);
  [[nodiscard]] const VehicleState& vehicle(VehicleId id) const;
  [[nodiscard]] const MobilityParams& mobility() const { return mobility_; }
  [[nodiscard]] const EmissionParams& emission() const { return emission_; }
  [[nodiscard]] const roadnet::RoadNetwork& network() const { return net_; }

  /// Smallest bumper-to-bumper gap between consecutive same-lane vehicles.
  [[nodiscard]] double min_same_lane_gap() const;

 private:
  struct Occupant {
    VehicleId id;
    double position_m;
    double speed_mps;
  };

  [[nodiscard]] int lane_count(SegmentId seg, int lane) const;
  [[nodiscard]] int target_lane(const VehicleState& v, SegmentId next) const;
  [[nodiscard]] std::optional<Occupant> last_in_lane(SegmentId seg, int lane) const;

  const roadnet::RoadNetwork& net_;
  MobilityParams mobility_;
  EmissionParams emission_;
  std::map<VehicleId, VehicleState> active_;
  std::map<VehicleId, VehicleState> finished_;
};

}  // namespace erouve::traffic
