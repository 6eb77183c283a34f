#include "erouve/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace erouve::adversary {

const char* to_string(AttackType type) {
  switch (type) {
    case AttackType::none: return "none";
    case AttackType::fake_route: return "FR";
    case AttackType::fake_data: return "FD";
  }
  return "unknown";
}

const char* to_string(TargetPolicy policy) {
  return policy == TargetPolicy::favor_short ? "favor-short" : "favor-long";
}

void AttackPlan::validate(double tin_s) const {
  if (type == AttackType::none) return;
  if (group_size < 1) throw std::invalid_argument("attack group size must be at least 1");
  if (!(interval_s > 0.0)) throw std::invalid_argument("attack interval must be positive");
  if (interval_s > tin_s / 2.0) {
    throw std::invalid_argument("attack interval must let two groups fit in one TIN");
  }
  if (infected_percent < 0.0 || infected_percent > 100.0) {
    throw std::invalid_argument("infected percent must lie in [0, 100]");
  }
  if (group_count && *group_count < 0) throw std::invalid_argument("group count must be nonnegative");
  if (!(fd_short_level > 0.0) || !(fd_long_level > 0.0)) {
    throw std::invalid_argument("FD levels must be positive multiples of opt");
  }
}

OptValues compute_opt(const roadnet::RoadSegment& segment, const traffic::EmissionParams& emission) {
  return traffic::free_flow(segment, emission);
}

OptProfile::OptProfile(const roadnet::RoadNetwork& net, const traffic::EmissionParams& emission) {
  values_.reserve(net.segment_count());
  for (const auto& seg : net.segments()) values_.push_back(compute_opt(seg, emission));
}

AttackSchedule schedule_attackers(const AttackPlan& plan, int vehicle_count) {
  AttackSchedule s;
  if (plan.type == AttackType::none || vehicle_count <= 0) return s;
  s.budget = plan.group_count
                 ? std::min(*plan.group_count * plan.group_size, vehicle_count)
                 : static_cast<int>(std::lround(plan.infected_percent / 100.0 * vehicle_count));
  s.degenerate = s.budget > 0 && s.budget < plan.group_size;
  int left = s.budget;
  for (int k = 0; left > 0; ++k) {
    const int g = std::min(plan.group_size, left);
    s.ticks.push_back({plan.start_time_s + k * plan.interval_s, g});
    left -= g;
  }
  return s;
}

std::optional<RouteRole> RouteRoles::of(SegmentId s) const {
  const auto it = role.find(s);
  if (it == role.end()) return std::nullopt;
  return it->second;
}

RouteRoles classify_routes(const roadnet::RoadNetwork& net,
                           const roadnet::ConnectionsTable& table) {
  RouteRoles roles;
  for (const auto rsu : net.rsu_junctions()) {
    for (const auto& entry : table.neighbors(rsu)) {
      if (entry.routes.size() < 2) continue;
      std::vector<const roadnet::ConnectingRoute*> sorted;
      for (const auto& r : entry.routes) sorted.push_back(&r);
      std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        return a->distance_m < b->distance_m ||
               (a->distance_m == b->distance_m && a->segments.front() < b->segments.front());
      });
      const SegmentId shortest = sorted.front()->segments.front();
      roles.role[shortest] = RouteRole::short_route;
      roles.counterpart[shortest] = sorted[1]->segments.front();
      for (std::size_t i = 1; i < sorted.size(); ++i) {
        const SegmentId s = sorted[i]->segments.front();
        roles.role[s] = RouteRole::long_route;
        roles.counterpart[s] = shortest;
      }
    }
  }
  return roles;
}

namespace {

RouteRole favored_role(TargetPolicy policy) {
  return policy == TargetPolicy::favor_short ? RouteRole::short_route : RouteRole::long_route;
}

}  // namespace

AttackCoordinator::AttackCoordinator(AttackPlan plan, int vehicle_count, RouteRoles roles)
    : plan_(plan), schedule_(schedule_attackers(plan, vehicle_count)), roles_(std::move(roles)) {}

bool AttackCoordinator::attacks(SegmentId segment) const {
  const auto role = roles_.of(segment);
  if (!role) return false;
  switch (plan_.type) {
    case AttackType::none: return false;
    case AttackType::fake_route: return *role == favored_role(plan_.policy);
    case AttackType::fake_data: return true;
  }
  return false;
}

bool AttackCoordinator::on_exit(VehicleId vehicle, SegmentId segment, double now_s) {
  if (plan_.type == AttackType::none) return false;
  const int left = schedule_.budget - infected_count();
  // Re-arm for every tick that has passed.
  while (plan_.start_time_s + next_tick_ * plan_.interval_s <= now_s) {
    armed_ = std::min(plan_.group_size, left);
    ++next_tick_;
  }
  if (!attacks(segment) || armed_ <= 0 || left <= 0 || infected_.contains(vehicle)) return false;
  --armed_;
  infected_.emplace(vehicle, now_s);
  return true;
}

SegmentReport forge_report(const SegmentReport& truth, const AttackPlan& plan,
                           const RouteRoles& roles, const OptProfile& opt) {
  SegmentReport out = truth;
  const auto role = roles.of(truth.claimed_segment);
  if (plan.type == AttackType::none || !role) return out;
  const bool favored = *role == favored_role(plan.policy);

  if (plan.type == AttackType::fake_route) {
    if (favored) out.claimed_segment = roles.counterpart.at(truth.claimed_segment);
    return out;
  }

  const double level = favored ? plan.fd_short_level : plan.fd_long_level;
  const auto& o = opt.at(truth.claimed_segment);
  out.co2_ml = level * o.co2_ml;
  if (plan.tweak_tt) out.tt_s = level * o.tt_s;
  return out;
}

}  // namespace erouve::adversary
