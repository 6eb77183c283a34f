#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erouve/ids.hpp"
#include "erouve/report.hpp"
#include "erouve/roadnet.hpp"
#include "erouve/traffic.hpp"

namespace erouve::adversary {

enum class AttackType { none, fake_route, fake_data };
enum class TargetPolicy { favor_short, favor_long };

const char* to_string(AttackType type);
const char* to_string(TargetPolicy policy);

struct AttackPlan {
  AttackType type = AttackType::fake_data;
  int group_size = 3;
  double interval_s = 10.0;
  double infected_percent = 20.0;
  /// When set, the budget is group_count * group_size instead of a percentage.
  std::optional<int> group_count;
  double start_time_s = 80.0;
  /// FD report values as multiples of opt. Under favor-long the two levels
  /// swap routes, so the favored route always gets `fd_short_level`.
  double fd_short_level = 1.0;
  double fd_long_level = 2.0;
  TargetPolicy policy = TargetPolicy::favor_short;
  /// Stress option: FD also rewrites TT with the same multiple of opt_TT.
  bool tweak_tt = false;

  /// Throws std::invalid_argument. At least two groups must fit in one TIN.
  void validate(double tin_s) const;
};

/// Free-flow segment statistics attackers forge against.
using OptValues = traffic::FreeFlow;

OptValues compute_opt(const roadnet::RoadSegment& segment, const traffic::EmissionParams& emission);

class OptProfile {
 public:
  OptProfile(const roadnet::RoadNetwork& net, const traffic::EmissionParams& emission);
  [[nodiscard]] const OptValues& at(SegmentId segment) const { return values_.at(segment.value); }

 private:
  std::vector<OptValues> values_;
};

// ---------------------------------------------------------------------------

struct AttackTick {
  double time_s = 0.0;
  int group_size = 0;
};

struct AttackSchedule {
  int budget = 0;  // infected vehicles over the run
  std::vector<AttackTick> ticks;
  bool degenerate = false;  // budget smaller than one full group
};

/// Nominal schedule: a group every interval from the start time until the
/// infected budget round(percent * vehicles / 100) is spent.
AttackSchedule schedule_attackers(const AttackPlan& plan, int vehicle_count);

// ---------------------------------------------------------------------------

enum class RouteRole { short_route, long_route };

/// Short/long labelling of the outgoing routes of every RSU with more than
/// one way to the same neighbor. The first segment carries the role.
struct RouteRoles {
  std::map<SegmentId, RouteRole> role;
  std::map<SegmentId, SegmentId> counterpart;  // short -> first long, long -> short

  [[nodiscard]] std::optional<RouteRole> of(SegmentId s) const;
};

RouteRoles classify_routes(const roadnet::RoadNetwork& net, const roadnet::ConnectionsTable& table);

/// Exit-order group assignment. At each tick the next group-size vehicles to
/// leave an attacked segment are infected, until the budget runs out.
class AttackCoordinator {
 public:
  AttackCoordinator(AttackPlan plan, int vehicle_count, RouteRoles roles);

  [[nodiscard]] bool attacks(SegmentId segment) const;

  /// Returns true when this exit's report must be forged.
  bool on_exit(VehicleId vehicle, SegmentId segment, double now_s);

  [[nodiscard]] int infected_count() const { return static_cast<int>(infected_.size()); }
  [[nodiscard]] bool infected(VehicleId v) const { return infected_.contains(v); }
  [[nodiscard]] const AttackSchedule& schedule() const { return schedule_; }
  [[nodiscard]] const RouteRoles& roles() const { return roles_; }
  [[nodiscard]] const AttackPlan& plan() const { return plan_; }

 private:
  AttackPlan plan_;
  AttackSchedule schedule_;
  RouteRoles roles_;
  int next_tick_ = 0;
  int armed_ = 0;
  std::map<VehicleId, double> infected_;
};

/// Rewrites an honest report per the plan. Witness lists pass through.
SegmentReport forge_report(const SegmentReport& truth, const AttackPlan& plan,
                           const RouteRoles& roles, const OptProfile& opt);

}  // namespace erouve::adversary
