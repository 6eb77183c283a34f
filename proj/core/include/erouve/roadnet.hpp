#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erouve/ids.hpp"

namespace erouve::roadnet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

/// Raised by build_network; the message names the offending element.
class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a destination cannot be reached from the requested origin.
class NoRouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Declarative description, as read from a scenario file.

struct JunctionSpec {
  std::string id;
  Vec2 position;
};

struct LaneMapSpec {
  std::string downstream_segment;
  std::vector<int> lanes;  // lanes[i] = downstream lane fed by lane i
};

struct SegmentSpec {
  std::string id;
  std::string from;
  std::string to;
  double length_m = 0.0;
  int lanes = 1;
  double v_max_mps = 0.0;
  std::optional<LaneMapSpec> downstream_lane_map;
};

struct NetworkSpec {
  std::vector<JunctionSpec> junctions;
  std::vector<SegmentSpec> segments;
  std::vector<std::string> rsus;
};

// ---------------------------------------------------------------------------

struct Junction {
  std::string name;
  Vec2 position;
};

struct LaneMap {
  SegmentId downstream;
  std::vector<int> lanes;
};

struct RoadSegment {
  std::string name;
  JunctionId from;
  JunctionId to;
  double length_m = 0.0;
  int lanes = 1;
  double v_max_mps = 0.0;
  std::optional<LaneMap> downstream_lane_map;

  [[nodiscard]] double free_flow_time_s() const { return length_m / v_max_mps; }
};

/// Validated, immutable directed road graph with RSU placements.
/// Segment and junction ids are declaration indices; names are kept for I/O.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  RoadNetwork(std::vector<Junction> junctions, std::vector<RoadSegment> segments,
              std::vector<bool> hosts_rsu);

  [[nodiscard]] std::size_t junction_count() const { return junctions_.size(); }
  [[nodiscard]] std::size_t segment_count() const { return segments_.size(); }

  [[nodiscard]] const Junction& junction(JunctionId id) const { return junctions_.at(id.value); }
  [[nodiscard]] const RoadSegment& segment(SegmentId id) const { return segments_.at(id.value); }
  [[nodiscard]] const std::vector<RoadSegment>& segments() const { return segments_; }
  [[nodiscard]] const std::vector<Junction>& junctions() const { return junctions_; }

  [[nodiscard]] bool hosts_rsu(JunctionId id) const { return hosts_rsu_.at(id.value); }
  [[nodiscard]] std::vector<JunctionId> rsu_junctions() const;

  /// Outgoing segments of a junction in ascending id order.
  [[nodiscard]] const std::vector<SegmentId>& outgoing(JunctionId id) const {
    return outgoing_.at(id.value);
  }
  [[nodiscard]] const std::vector<SegmentId>& incoming(JunctionId id) const {
    return incoming_.at(id.value);
  }

  /// Junctions with no incoming / no outgoing segments.
  [[nodiscard]] std::vector<JunctionId> sources() const;
  [[nodiscard]] std::vector<JunctionId> sinks() const;

  [[nodiscard]] std::optional<JunctionId> find_junction(const std::string& name) const;
  [[nodiscard]] std::optional<SegmentId> find_segment(const std::string& name) const;

  [[nodiscard]] double route_length(const std::vector<SegmentId>& route) const;

 private:
  std::vector<Junction> junctions_;
  std::vector<RoadSegment> segments_;
  std::vector<bool> hosts_rsu_;
  std::vector<std::vector<SegmentId>> outgoing_;
  std::vector<std::vector<SegmentId>> incoming_;
  std::map<std::string, JunctionId> junction_index_;
  std::map<std::string, SegmentId> segment_index_;
};

RoadNetwork build_network(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Connections table

struct ConnectingRoute {
  std::vector<SegmentId> segments;
  double distance_m = 0.0;
};

struct NeighborEntry {
  JunctionId rsu;
  std::vector<ConnectingRoute> routes;  // ordered by first segment id
};

/// Per RSU: neighbors N(n) and every RSU-free route reaching each of them.
/// Routes are distinguished by their first (outgoing) segment; the remainder
/// of each route is the shortest path that avoids intermediate RSUs.
class ConnectionsTable {
 public:
  [[nodiscard]] const std::vector<NeighborEntry>& neighbors(JunctionId rsu) const;
  [[nodiscard]] std::vector<const ConnectingRoute*> routes_from(JunctionId rsu) const;
  [[nodiscard]] const std::map<JunctionId, std::vector<NeighborEntry>>& rows() const { return rows_; }

  void set_row(JunctionId rsu, std::vector<NeighborEntry> entries) {
    rows_[rsu] = std::move(entries);
  }

 private:
  std::map<JunctionId, std::vector<NeighborEntry>> rows_;
};

ConnectionsTable compute_connections(const RoadNetwork& net);

/// Distance-minimal segment sequence; ties broken toward the smaller
/// segment id. Throws NoRouteError if `to` is unreachable.
std::vector<SegmentId> shortest_static_route(const RoadNetwork& net, JunctionId from,
                                             JunctionId to);

/// Shortest distance from every junction to `to` (infinity when unreachable).
std::vector<double> distances_to(const RoadNetwork& net, JunctionId to);

/// The evaluation map: a source segment splitting into a long upper and a
/// short lower path, merging into a three-lane exit where the lower path
/// feeds a single lane.
NetworkSpec evaluation_map(double speed_mps);

}  // namespace erouve::roadnet
