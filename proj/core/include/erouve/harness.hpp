#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erouve/adversary.hpp"
#include "erouve/protocol.hpp"
#include "erouve/roadnet.hpp"
#include "erouve/sentinel.hpp"
#include "erouve/traffic.hpp"

namespace erouve::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { shortest_path, erouve, erouve_attacked, erouve_defended };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct TrafficConfig {
  int vehicle_count = 150;
  double speed_limit_kmh = 40.0;
  double mean_headway_s = 1.0;
  double headway_jitter = 0.5;
  std::string origin;       // empty: first source junction
  std::string destination;  // empty: first sink junction

  [[nodiscard]] double speed_limit_mps() const { return speed_limit_kmh / 3.6; }
};

struct EngineConfig {
  double dt_s = 0.5;
  double duration_s = 900.0;
  std::uint64_t seed = 0;
};

struct DefenseConfig {
  double threshold_percent = 10.0;
  double plausibility_epsilon_s = 3.0;
  sentinel::Feature feature = sentinel::Feature::co2;
};

/// Everything one run needs. Field names mirror the scenario file.
struct ScenarioConfig {
  /// Empty means the built-in evaluation map at the traffic speed limit.
  std::optional<roadnet::NetworkSpec> network;
  traffic::MobilityParams mobility;
  traffic::EmissionParams emission;
  protocol::ProtocolParams protocol;
  adversary::AttackPlan attack;
  DefenseConfig defense;
  TrafficConfig traffic;
  EngineConfig engine;
  Mode mode = Mode::erouve;
  bool override_ranges = false;

  [[nodiscard]] roadnet::NetworkSpec network_spec() const;
  [[nodiscard]] protocol::DefenseParams defense_params() const;
  /// Throws ConfigError. Table ranges are enforced unless override_ranges.
  void validate() const;
};

/// Parse a scenario document. Unknown keys are errors; absent keys keep
/// their defaults except `engine.seed`, which is mandatory.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);
/// Canonical JSON: sorted keys, every field present.
std::string to_json(const ScenarioConfig& config);

/// FNV-1a 64 as 16 hex digits.
std::string fnv1a(const std::string& bytes);
/// Hash of the canonical JSON of the whole config.
std::string config_fingerprint(const ScenarioConfig& config);
/// Hash of what must match for two runs to be comparable: network,
/// mobility, emission, traffic and seed.
std::string scenario_fingerprint(const ScenarioConfig& config);

// ---------------------------------------------------------------------------

struct VehicleRecord {
  VehicleId id;
  bool infected = false;
  std::vector<SegmentId> route;
  double inject_time_s = 0.0;
  std::optional<double> arrive_time_s;
  double trip_co2_ml = 0.0;
  bool long_route = false;

  [[nodiscard]] std::optional<double> trip_time_s() const {
    if (!arrive_time_s) return std::nullopt;
    return *arrive_time_s - inject_time_s;
  }
};

struct VerdictRecord {
  double time_s = 0.0;
  ReportId report;
  VehicleId vehicle;
  SegmentId claimed;
  SegmentId true_segment;
  JunctionId rsu;
  bool forged = false;
  double dispatch_time_s = 0.0;
  double true_tt_s = 0.0;
  double true_co2_ml = 0.0;
  double reported_tt_s = 0.0;
  double reported_co2_ml = 0.0;
  std::optional<bool> plausible;
  std::optional<sentinel::ClaimKind> claim;
  std::optional<sentinel::Classification> classification;
  bool accepted = false;
  protocol::RejectReason reason = protocol::RejectReason::none;
};

struct Aggregates {
  std::size_t vehicles = 0;
  std::size_t arrived = 0;
  double mean_time_s = 0.0;
  double median_time_s = 0.0;
  double mean_co2_ml = 0.0;
  double median_co2_ml = 0.0;
  double long_route_share_pct = 0.0;
};

/// Recompute aggregates over arrived vehicles.
Aggregates aggregate(const std::vector<VehicleRecord>& vehicles);

struct DefenseScore {
  std::size_t honest_reports = 0;
  std::size_t honest_quarantined = 0;  // classified PBS at arrival
  std::size_t honest_rejected = 0;     // any rejection reason
  std::size_t forged_reports = 0;
  std::size_t forged_quarantined = 0;  // classified PBS at arrival
  std::size_t forged_detected = 0;     // never entered a statistics buffer
  std::size_t forged_missed = 0;
  std::size_t forged_fr = 0;
  std::size_t forged_fr_overruled = 0;
  std::size_t forged_implausible = 0;
  std::size_t bogus_expired = 0;
};

struct RunSummary {
  std::string config_fingerprint;
  std::string scenario_fingerprint;
  Mode mode = Mode::erouve;
  std::uint64_t seed = 0;
  Aggregates aggregates;
  DefenseScore defense;
  std::size_t infected_vehicles = 0;
  std::size_t decisions = 0;
  double end_time_s = 0.0;
};

struct RunResult {
  ScenarioConfig config;
  RunSummary summary;
  std::vector<VehicleRecord> vehicles;
  std::vector<protocol::RouteDecision> decisions;
  std::vector<VerdictRecord> verdicts;
  /// Per RSU: every record accepted into a statistics buffer.
  std::map<JunctionId, std::vector<std::pair<SegmentId, protocol::StatRecord>>> accepted;
  roadnet::RoadNetwork network;
};

/// Run a scenario to completion: every vehicle arrived, or the duration cap.
RunResult run_scenario(const ScenarioConfig& config);

// ---------------------------------------------------------------------------

struct Deviation {
  double mean_time_pct = 0.0;
  double mean_co2_pct = 0.0;
  double long_route_share_pp = 0.0;
};

/// (run - baseline) / baseline. Throws ConfigError when the scenario
/// fingerprints differ.
Deviation compare_runs(const RunSummary& run, const RunSummary& baseline);

struct SweepRow {
  std::string value;
  std::vector<std::uint64_t> seeds;
  std::vector<Aggregates> runs;
  std::vector<Deviation> deviations;
  Deviation mean_deviation;
};

/// Dotted config paths accepted as sweep axes.
std::vector<std::string> sweep_axes();

/// One run per (value, seed) plus one attack-free baseline per seed.
/// Rows come back in value order whatever order the runs finish in.
std::vector<SweepRow> sweep(const ScenarioConfig& base, const std::string& axis,
                            const std::vector<std::string>& values,
                            const std::vector<std::uint64_t>& seeds, unsigned jobs = 1);

// ---------------------------------------------------------------------------
// Files

void write_outputs(const RunResult& result, const std::filesystem::path& dir);
std::string vehicles_csv(const RunResult& result);
std::string decisions_csv(const RunResult& result);
std::string verdicts_csv(const RunResult& result);
std::string summary_text(const RunSummary& summary);
std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows);

/// Parse a summary document back; only the fields compare_runs needs.
RunSummary read_summary(const std::filesystem::path& path);
std::string deviation_text(const Deviation& d);

}  // namespace erouve::harness
