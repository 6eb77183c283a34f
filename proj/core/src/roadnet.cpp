#include "erouve/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>

namespace erouve::roadnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ShortestPathTree {
  std::vector<double> dist;
  std::vector<SegmentId> pred;  // segment used to reach each junction
};

// Dijkstra from `start`. Junctions for which `terminal` holds are settled but
// never expanded (used to forbid passing through intermediate RSUs).
ShortestPathTree dijkstra(const RoadNetwork& net, JunctionId start,
                          const std::function<bool(JunctionId)>& terminal) {
  const auto n = net.junction_count();
  ShortestPathTree tree{std::vector<double>(n, kInf), std::vector<SegmentId>(n)};
  std::vector<bool> settled(n, false);

  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  tree.dist[start.value] = 0.0;
  frontier.emplace(0.0, start.value);

  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (settled[u]) continue;
    settled[u] = true;
    const JunctionId uj{u};
    if (uj != start && terminal(uj)) continue;

    for (const SegmentId sid : net.outgoing(uj)) {
      const auto& seg = net.segment(sid);
      const auto v = seg.to.value;
      if (settled[v]) continue;
      const double nd = d + seg.length_m;
      if (nd < tree.dist[v] || (nd == tree.dist[v] && sid < tree.pred[v])) {
        tree.dist[v] = nd;
        tree.pred[v] = sid;
        frontier.emplace(nd, v);
      }
    }
  }
  return tree;
}

std::vector<SegmentId> unwind(const RoadNetwork& net, const ShortestPathTree& tree,
                              JunctionId from, JunctionId to) {
  std::vector<SegmentId> route;
  for (JunctionId cur = to; cur != from;) {
    const SegmentId sid = tree.pred[cur.value];
    route.push_back(sid);
    cur = net.segment(sid).from;
  }
  std::reverse(route.begin(), route.end());
  return route;
}

}  // namespace

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

RoadNetwork::RoadNetwork(std::vector<Junction> junctions, std::vector<RoadSegment> segments,
                         std::vector<bool> hosts_rsu)
    : junctions_(std::move(junctions)),
      segments_(std::move(segments)),
      hosts_rsu_(std::move(hosts_rsu)),
      outgoing_(junctions_.size()),
      incoming_(junctions_.size()) {
  for (std::uint32_t i = 0; i < junctions_.size(); ++i) {
    junction_index_.emplace(junctions_[i].name, JunctionId{i});
  }
  for (std::uint32_t i = 0; i < segments_.size(); ++i) {
    segment_index_.emplace(segments_[i].name, SegmentId{i});
    outgoing_.at(segments_[i].from.value).push_back(SegmentId{i});
    incoming_.at(segments_[i].to.value).push_back(SegmentId{i});
  }
}

std::vector<JunctionId> RoadNetwork::rsu_junctions() const {
  std::vector<JunctionId> out;
  for (std::uint32_t i = 0; i < hosts_rsu_.size(); ++i) {
    if (hosts_rsu_[i]) out.emplace_back(i);
  }
  return out;
}

std::vector<JunctionId> RoadNetwork::sources() const {
  std::vector<JunctionId> out;
  for (std::uint32_t i = 0; i < junctions_.size(); ++i) {
    if (incoming_[i].empty()) out.emplace_back(i);
  }
  return out;
}

std::vector<JunctionId> RoadNetwork::sinks() const {
  std::vector<JunctionId> out;
  for (std::uint32_t i = 0; i < junctions_.size(); ++i) {
    if (outgoing_[i].empty()) out.emplace_back(i);
  }
  return out;
}

std::optional<JunctionId> RoadNetwork::find_junction(const std::string& name) const {
  const auto it = junction_index_.find(name);
  if (it == junction_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<SegmentId> RoadNetwork::find_segment(const std::string& name) const {
  const auto it = segment_index_.find(name);
  if (it == segment_index_.end()) return std::nullopt;
  return it->second;
}

double RoadNetwork::route_length(const std::vector<SegmentId>& route) const {
  double total = 0.0;
  for (const auto sid : route) total += segment(sid).length_m;
  return total;
}

RoadNetwork build_network(const NetworkSpec& spec) {
  std::vector<Junction> junctions;
  std::map<std::string, JunctionId> jindex;
  for (const auto& j : spec.junctions) {
    if (j.id.empty()) throw NetworkError("junction with empty id");
    if (!jindex.emplace(j.id, JunctionId{static_cast<std::uint32_t>(junctions.size())}).second) {
      throw NetworkError("duplicate junction id '" + j.id + "'");
    }
    junctions.push_back({j.id, j.position});
  }

  auto lookup = [&](const std::string& name, const std::string& context) {
    const auto it = jindex.find(name);
    if (it == jindex.end()) {
      throw NetworkError(context + " references undeclared junction '" + name + "'");
    }
    return it->second;
  };

  std::vector<RoadSegment> segments;
  std::map<std::string, SegmentId> sindex;
  for (const auto& s : spec.segments) {
    const std::string ctx = "segment '" + s.id + "'";
    if (s.id.empty()) throw NetworkError("segment with empty id");
    if (!sindex.emplace(s.id, SegmentId{static_cast<std::uint32_t>(segments.size())}).second) {
      throw NetworkError("duplicate segment id '" + s.id + "'");
    }
    if (!(s.length_m > 0.0) || !std::isfinite(s.length_m)) {
      throw NetworkError(ctx + " has nonpositive length");
    }
    if (s.lanes < 1) throw NetworkError(ctx + " has no lanes");
    if (!(s.v_max_mps > 0.0) || !std::isfinite(s.v_max_mps)) {
      throw NetworkError(ctx + " has nonpositive v_max");
    }
    RoadSegment seg;
    seg.name = s.id;
    seg.from = lookup(s.from, ctx);
    seg.to = lookup(s.to, ctx);
    seg.length_m = s.length_m;
    seg.lanes = s.lanes;
    seg.v_max_mps = s.v_max_mps;
    segments.push_back(std::move(seg));
  }

  // Lane maps resolve after all segments are known.
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    const auto& s = spec.segments[i];
    if (!s.downstream_lane_map) continue;
    const std::string ctx = "segment '" + s.id + "' lane map";
    const auto it = sindex.find(s.downstream_lane_map->downstream_segment);
    if (it == sindex.end()) {
      throw NetworkError(ctx + " references undeclared segment '" +
                         s.downstream_lane_map->downstream_segment + "'");
    }
    const auto& down = segments[it->second.value];
    if (down.from != segments[i].to) {
      throw NetworkError(ctx + " targets a segment that does not start at its end junction");
    }
    const auto& lanes = s.downstream_lane_map->lanes;
    if (static_cast<int>(lanes.size()) != segments[i].lanes) {
      throw NetworkError(ctx + " must map every lane");
    }
    for (const int l : lanes) {
      if (l < 0 || l >= down.lanes) throw NetworkError(ctx + " maps to a nonexistent lane");
    }
    segments[i].downstream_lane_map = LaneMap{it->second, lanes};
  }

  std::vector<bool> hosts(junctions.size(), false);
  for (const auto& r : spec.rsus) {
    const auto jid = lookup(r, "rsu placement");
    if (hosts[jid.value]) throw NetworkError("duplicate rsu placement '" + r + "'");
    hosts[jid.value] = true;
  }

  RoadNetwork net(std::move(junctions), std::move(segments), std::move(hosts));

  // Every sink reachable from every source.
  for (const auto src : net.sources()) {
    const auto tree = dijkstra(net, src, [](JunctionId) { return false; });
    for (const auto snk : net.sinks()) {
      if (tree.dist[snk.value] == kInf) {
        throw NetworkError("sink '" + net.junction(snk).name + "' unreachable from source '" +
                           net.junction(src).name + "'");
      }
    }
  }
  return net;
}

const std::vector<NeighborEntry>& ConnectionsTable::neighbors(JunctionId rsu) const {
  static const std::vector<NeighborEntry> empty;
  const auto it = rows_.find(rsu);
  return it == rows_.end() ? empty : it->second;
}

std::vector<const ConnectingRoute*> ConnectionsTable::routes_from(JunctionId rsu) const {
  std::vector<const ConnectingRoute*> out;
  for (const auto& entry : neighbors(rsu)) {
    for (const auto& route : entry.routes) out.push_back(&route);
  }
  std::sort(out.begin(), out.end(), [](const ConnectingRoute* a, const ConnectingRoute* b) {
    return a->segments.front() < b->segments.front() ||
           (a->segments.front() == b->segments.front() && a->distance_m < b->distance_m);
  });
  return out;
}

ConnectionsTable compute_connections(const RoadNetwork& net) {
  ConnectionsTable table;
  const auto is_rsu = [&](JunctionId j) { return net.hosts_rsu(j); };

  for (const auto n : net.rsu_junctions()) {
    std::map<JunctionId, std::vector<ConnectingRoute>> by_neighbor;
    for (const SegmentId first : net.outgoing(n)) {
      const auto& seg = net.segment(first);
      if (seg.to == n) continue;
      if (net.hosts_rsu(seg.to)) {
        by_neighbor[seg.to].push_back({{first}, seg.length_m});
        continue;
      }
      const auto tree = dijkstra(net, seg.to, is_rsu);
      for (const auto m : net.rsu_junctions()) {
        if (m == n || tree.dist[m.value] == kInf) continue;
        ConnectingRoute route;
        route.segments.push_back(first);
        for (const auto sid : unwind(net, tree, seg.to, m)) route.segments.push_back(sid);
        route.distance_m = seg.length_m + tree.dist[m.value];
        by_neighbor[m].push_back(std::move(route));
      }
    }
    std::vector<NeighborEntry> row;
    for (auto& [m, routes] : by_neighbor) row.push_back({m, std::move(routes)});
    table.set_row(n, std::move(row));
  }
  return table;
}

std::vector<SegmentId> shortest_static_route(const RoadNetwork& net, JunctionId from,
                                             JunctionId to) {
  if (from == to) return {};
  const auto tree = dijkstra(net, from, [](JunctionId) { return false; });
  if (tree.dist[to.value] == kInf) {
    throw NoRouteError("no route from '" + net.junction(from).name + "' to '" +
                       net.junction(to).name + "'");
  }
  return unwind(net, tree, from, to);
}

std::vector<double> distances_to(const RoadNetwork& net, JunctionId to) {
  // Reverse Dijkstra over incoming segments.
  const auto n = net.junction_count();
  std::vector<double> dist(n, kInf);
  std::vector<bool> settled(n, false);
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[to.value] = 0.0;
  frontier.emplace(0.0, to.value);
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (settled[u]) continue;
    settled[u] = true;
    for (const SegmentId sid : net.incoming(JunctionId{u})) {
      const auto& seg = net.segment(sid);
      const double nd = d + seg.length_m;
      if (nd < dist[seg.from.value]) {
        dist[seg.from.value] = nd;
        frontier.emplace(nd, seg.from.value);
      }
    }
  }
  return dist;
}

NetworkSpec evaluation_map(double speed_mps) {
  NetworkSpec spec;
  spec.junctions = {
      {"J0", {0.0, 0.0}},
      {"J1", {400.0, 0.0}},
      {"J2", {585.0, 0.0}},
      {"J3", {985.0, 0.0}},
  };
  spec.segments = {
      {"source", "J0", "J1", 400.0, 2, speed_mps, std::nullopt},
      {"upper", "J1", "J2", 275.0, 2, speed_mps, LaneMapSpec{"exit", {1, 2}}},
      {"lower", "J1", "J2", 190.0, 2, speed_mps, LaneMapSpec{"exit", {0, 0}}},
      {"exit", "J2", "J3", 400.0, 3, speed_mps, std::nullopt},
  };
  spec.rsus = {"J0", "J1", "J2", "J3"};
  return spec;
}

}  // namespace erouve::roadnet
