#include "erouve/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

namespace erouve::traffic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void MobilityParams::validate() const {
  require(dt_s > 0 && max_accel_mps2 > 0 && comfort_decel_mps2 > 0 && reaction_time_s > 0 &&
              min_gap_m > 0 && vehicle_length_m > 0,
          "mobility parameters must be strictly positive");
  require(dt_s <= reaction_time_s, "mobility dt must not exceed the reaction time");
}

void EmissionParams::validate() const {
  require(idle_mlps >= 0.0, "emission idle rate must be nonnegative");
  require(std::isfinite(c1) && std::isfinite(c2) && std::isfinite(c3) && std::isfinite(power_coeff),
          "emission coefficients must be finite");
}

double co2_rate(double speed_mps, double accel_mps2, const EmissionParams& p) {
  const double v = speed_mps;
  const double poly =
      p.idle_mlps + p.c1 * v + p.c2 * v * v + p.c3 * v * v * v + p.power_coeff * accel_mps2 * v;
  return std::max(p.idle_mlps, poly);
}

FreeFlow free_flow(const roadnet::RoadSegment& segment, const EmissionParams& params) {
  const double tt = segment.length_m / segment.v_max_mps;
  return {tt, co2_rate(segment.v_max_mps, 0.0, params) * tt};
}

double safe_speed(double gap_m, double leader_speed_mps, const MobilityParams& p) {
  if (gap_m <= 0.0) return 0.0;
  const double bt = p.comfort_decel_mps2 * p.reaction_time_s;
  return -bt + std::sqrt(bt * bt + leader_speed_mps * leader_speed_mps +
                         2.0 * p.comfort_decel_mps2 * gap_m);
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Injection> spawn_vehicles(const FlowSpec& flow, Rng& rng) {
  std::vector<Injection> out;
  out.reserve(static_cast<std::size_t>(std::max(flow.vehicle_count, 0)));
  double t = 0.0;
  for (int i = 0; i < flow.vehicle_count; ++i) {
    if (i > 0) {
      const double u = uniform01(rng);
      t += flow.mean_headway_s * (1.0 + flow.headway_jitter * (2.0 * u - 1.0));
    }
    out.push_back({t, VehicleId{static_cast<std::uint32_t>(i)}});
  }
  return out;
}

// ---------------------------------------------------------------------------

TrafficWorld::TrafficWorld(const roadnet::RoadNetwork& net, MobilityParams mobility,
                           EmissionParams emission)
    : net_(net), mobility_(mobility), emission_(emission) {
  mobility_.validate();
  emission_.validate();
}

VehicleState& TrafficWorld::vehicle(VehicleId id) {
  if (auto it = active_.find(id); it != active_.end()) return it->second;
  return finished_.at(id);
}

const VehicleState& TrafficWorld::vehicle(VehicleId id) const {
  if (auto it = active_.find(id); it != active_.end()) return it->second;
  return finished_.at(id);
}

int TrafficWorld::lane_count(SegmentId seg, int lane) const {
  int n = 0;
  for (const auto& [id, v] : active_) {
    if (v.segment() == seg && v.lane == lane) ++n;
  }
  return n;
}

std::optional<TrafficWorld::Occupant> TrafficWorld::last_in_lane(SegmentId seg, int lane) const {
  std::optional<Occupant> last;
  for (const auto& [id, v] : active_) {
    if (v.segment() != seg || v.lane != lane) continue;
    if (!last || v.position_m < last->position_m) last = Occupant{id, v.position_m, v.speed_mps};
  }
  return last;
}

int TrafficWorld::target_lane(const VehicleState& v, SegmentId next) const {
  const auto& seg = net_.segment(v.segment());
  if (seg.downstream_lane_map && seg.downstream_lane_map->downstream == next) {
    return seg.downstream_lane_map->lanes.at(static_cast<std::size_t>(v.lane));
  }
  const auto& down = net_.segment(next);
  int best = 0;
  int best_count = std::numeric_limits<int>::max();
  for (int l = 0; l < down.lanes; ++l) {
    const int c = lane_count(next, l);
    if (c < best_count) {
      best = l;
      best_count = c;
    }
  }
  return best;
}

bool TrafficWorld::try_insert(VehicleId id, std::vector<SegmentId> route,
                              double scheduled_time_s, double now_s) {
  if (route.empty()) throw EngineError("cannot insert a vehicle with an empty route");
  const SegmentId first = route.front();
  const auto& seg = net_.segment(first);
  const double room = mobility_.min_gap_m + mobility_.vehicle_length_m;

  std::vector<std::pair<int, int>> lanes;  // (occupancy, lane)
  for (int l = 0; l < seg.lanes; ++l) lanes.emplace_back(lane_count(first, l), l);
  std::sort(lanes.begin(), lanes.end());

  for (const auto& [count, lane] : lanes) {
    const auto last = last_in_lane(first, lane);
    double speed = seg.v_max_mps;
    if (last) {
      if (last->position_m < room) continue;
      const double gap = last->position_m - room;
      speed = std::min(speed, safe_speed(gap, last->speed_mps, mobility_));
    }
    VehicleState v;
    v.id = id;
    v.route = std::move(route);
    v.lane = lane;
    v.speed_mps = speed;
    v.scheduled_time_s = scheduled_time_s;
    v.insert_time_s = now_s;
    v.segment_entry_time_s = now_s;
    active_.emplace(id, std::move(v));
    return true;
  }
  return false;
}

void TrafficWorld::reroute(VehicleId id, const std::vector<SegmentId>& tail) {
  auto& v = active_.at(id);
  v.route.resize(v.route_index + 1);
  v.route.insert(v.route.end(), tail.begin(), tail.end());
}

std::vector<SegmentExit> TrafficWorld::step(double now_s) {
  const double dt = mobility_.dt_s;
  const double next_t = now_s + dt;
  const double room = mobility_.min_gap_m + mobility_.vehicle_length_m;

  // Lane index of the pre-step state.
  std::map<std::pair<SegmentId, int>, std::vector<Occupant>> lanes;
  for (const auto& [id, v] : active_) {
    lanes[{v.segment(), v.lane}].push_back({id, v.position_m, v.speed_mps});
  }
  for (auto& [key, occ] : lanes) {
    std::sort(occ.begin(), occ.end(), [](const Occupant& a, const Occupant& b) {
      return std::tie(b.position_m, a.id) < std::tie(a.position_m, b.id);
    });
  }
  auto last_of = [&](SegmentId seg, int lane) -> std::optional<Occupant> {
    const auto it = lanes.find({seg, lane});
    if (it == lanes.end() || it->second.empty()) return std::nullopt;
    return it->second.back();
  };

  // 1. Synchronous speed update.
  std::map<VehicleId, double> new_speed;
  for (const auto& [id, v] : active_) {
    const auto& seg = net_.segment(v.segment());
    const auto& occ = lanes.at({v.segment(), v.lane});
    const auto self = std::find_if(occ.begin(), occ.end(),
                                   [&](const Occupant& o) { return o.id == id; });

    double gap = kInf;
    double leader_speed = 0.0;
    if (self != occ.begin()) {
      const auto& lead = *std::prev(self);
      gap = lead.position_m - mobility_.vehicle_length_m - v.position_m - mobility_.min_gap_m;
      leader_speed = lead.speed_mps;
    } else if (const auto next = v.next_segment()) {
      const double to_line = seg.length_m - v.position_m;
      const auto last = last_of(*next, target_lane(v, *next));
      if (!last) {
        gap = kInf;
      } else if (last->position_m >= room) {
        gap = to_line + last->position_m - room;
        leader_speed = last->speed_mps;
      } else {
        gap = to_line;  // stop line closed
        leader_speed = 0.0;
      }
    }

    double vn = std::min(v.speed_mps + mobility_.max_accel_mps2 * dt, seg.v_max_mps);
    if (gap < kInf) {
      vn = std::min(vn, safe_speed(gap, leader_speed, mobility_));
      vn = std::min(vn, std::max(gap, 0.0) / dt);
    }
    new_speed[id] = std::max(vn, 0.0);
  }

  // 2. Integrate positions; collect segment-end crossings.
  struct Crossing {
    VehicleId id;
    double overshoot;
  };
  std::vector<Crossing> crossings;
  std::vector<SegmentExit> exits;

  auto accrue = [&](VehicleState& v, double speed) {
    const double accel = (speed - v.speed_mps) / dt;
    v.accel_mps2 = accel;
    v.speed_mps = speed;
    v.segment_co2_ml += co2_rate(speed, accel, emission_) * dt;
  };

  std::vector<VehicleId> arrived;
  for (auto& [id, v] : active_) {
    const auto& seg = net_.segment(v.segment());
    const double speed = new_speed.at(id);
    const double pos = v.position_m + speed * dt;
    if (pos < seg.length_m || (pos == seg.length_m && !v.on_last_segment())) {
      accrue(v, speed);
      v.position_m = pos;
      continue;
    }
    if (v.on_last_segment()) {
      accrue(v, speed);
      v.position_m = seg.length_m;
      arrived.push_back(id);
    } else {
      crossings.push_back({id, pos - seg.length_m});
    }
  }

  std::sort(crossings.begin(), crossings.end(), [](const Crossing& a, const Crossing& b) {
    return a.overshoot > b.overshoot || (a.overshoot == b.overshoot && a.id < b.id);
  });

  for (const auto& c : crossings) {
    auto& v = active_.at(c.id);
    const SegmentId from = v.segment();
    const SegmentId next = *v.next_segment();
    const auto& down = net_.segment(next);
    const int lane = target_lane(v, next);
    double allowed = down.length_m;
    if (const auto last = last_in_lane(next, lane)) {
      allowed = std::min(allowed, last->position_m - room);
    }
    if (allowed < 0.0) {
      // Target lane taken this step; hold at the stop line.
      accrue(v, 0.0);
      v.position_m = net_.segment(from).length_m;
      continue;
    }
    accrue(v, new_speed.at(c.id));
    exits.push_back({c.id, from, v.segment_entry_time_s, next_t, v.segment_co2_ml, next});
    v.trip_co2_ml += v.segment_co2_ml;
    v.trip_distance_m += net_.segment(from).length_m;
    v.traversed.push_back(from);
    v.segment_co2_ml = 0.0;
    v.segment_entry_time_s = next_t;
    v.route_index += 1;
    v.lane = lane;
    v.position_m = std::min(c.overshoot, allowed);
    v.known_rsu.reset();
  }

  for (const auto id : arrived) {
    auto node = active_.extract(id);
    auto& v = node.mapped();
    exits.push_back({id, v.segment(), v.segment_entry_time_s, next_t, v.segment_co2_ml,
                     std::nullopt});
    v.trip_co2_ml += v.segment_co2_ml;
    v.trip_distance_m += net_.segment(v.segment()).length_m;
    v.traversed.push_back(v.segment());
    v.segment_co2_ml = 0.0;
    v.arrive_time_s = next_t;
    finished_.insert(std::move(node));
  }

  std::sort(exits.begin(), exits.end(),
            [](const SegmentExit& a, const SegmentExit& b) { return a.vehicle < b.vehicle; });

  if (min_same_lane_gap() < mobility_.min_gap_m - 1e-9) {
    throw EngineError("negative gap after step at t=" + std::to_string(next_t));
  }
  return exits;
}

double TrafficWorld::min_same_lane_gap() const {
  std::map<std::pair<SegmentId, int>, std::vector<double>> lanes;
  for (const auto& [id, v] : active_) lanes[{v.segment(), v.lane}].push_back(v.position_m);
  double best = kInf;
  for (auto& [key, pos] : lanes) {
    std::sort(pos.begin(), pos.end());
    for (std::size_t i = 1; i < pos.size(); ++i) {
      best = std::min(best, pos[i] - pos[i - 1] - mobility_.vehicle_length_m);
    }
  }
  return best;
}

}  // namespace erouve::traffic
