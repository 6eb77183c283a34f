#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "erouve/harness.hpp"

namespace erouve::harness {

using nlohmann::json;

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::shortest_path: return "shortest-path";
    case Mode::erouve: return "erouve";
    case Mode::erouve_attacked: return "erouve-attacked";
    case Mode::erouve_defended: return "erouve-defended";
  }
  return "unknown";
}

Mode parse_mode(const std::string& text) {
  for (const auto m : {Mode::shortest_path, Mode::erouve, Mode::erouve_attacked,
                       Mode::erouve_defended}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + text + "'");
}

namespace {

adversary::AttackType parse_attack_type(const std::string& s) {
  if (s == "none") return adversary::AttackType::none;
  if (s == "FR") return adversary::AttackType::fake_route;
  if (s == "FD") return adversary::AttackType::fake_data;
  throw ConfigError("unknown attack type '" + s + "'");
}

adversary::TargetPolicy parse_policy(const std::string& s) {
  if (s == "favor-short") return adversary::TargetPolicy::favor_short;
  if (s == "favor-long") return adversary::TargetPolicy::favor_long;
  throw ConfigError("unknown target policy '" + s + "'");
}

const char* to_string(sentinel::Feature f) {
  return f == sentinel::Feature::co2 ? "co2" : "travel-time";
}

sentinel::Feature parse_feature(const std::string& s) {
  if (s == "co2") return sentinel::Feature::co2;
  if (s == "travel-time") return sentinel::Feature::travel_time;
  throw ConfigError("unknown consistency feature '" + s + "'");
}

// Reads keys off one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return false;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + path_ + "." + key + "' has the wrong type");
    }
    return true;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown key '" + path_ + "." + key + "'");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

roadnet::NetworkSpec parse_network(const json& doc) {
  Section s(doc, "network");
  std::string preset;
  if (s.get("preset", preset)) {
    if (preset != "evaluation") throw ConfigError("unknown network preset '" + preset + "'");
    s.finish();
    return {};
  }
  roadnet::NetworkSpec spec;
  if (const auto* js = s.child("junctions")) {
    for (const auto& j : *js) {
      Section js_sec(j, "network.junctions[]");
      roadnet::JunctionSpec out;
      if (!js_sec.get("id", out.id)) throw ConfigError("junction without an id");
      js_sec.get("x", out.position.x);
      js_sec.get("y", out.position.y);
      js_sec.finish();
      spec.junctions.push_back(std::move(out));
    }
  }
  if (const auto* ss = s.child("segments")) {
    for (const auto& j : *ss) {
      Section sec(j, "network.segments[]");
      roadnet::SegmentSpec out;
      if (!sec.get("id", out.id)) throw ConfigError("segment without an id");
      sec.get("from", out.from);
      sec.get("to", out.to);
      sec.get("length_m", out.length_m);
      sec.get("lanes", out.lanes);
      sec.get("v_max_mps", out.v_max_mps);
      if (const auto* lm = sec.child("downstream_lane_map")) {
        Section m(*lm, "network.segments[].downstream_lane_map");
        roadnet::LaneMapSpec map;
        m.get("downstream_segment", map.downstream_segment);
        m.get("lanes", map.lanes);
        m.finish();
        out.downstream_lane_map = std::move(map);
      }
      sec.finish();
      spec.segments.push_back(std::move(out));
    }
  }
  s.get("rsus", spec.rsus);
  s.finish();
  return spec;
}

json network_json(const roadnet::NetworkSpec& spec) {
  json j;
  j["junctions"] = json::array();
  for (const auto& jn : spec.junctions) {
    j["junctions"].push_back({{"id", jn.id}, {"x", jn.position.x}, {"y", jn.position.y}});
  }
  j["segments"] = json::array();
  for (const auto& s : spec.segments) {
    json o = {{"id", s.id}, {"from", s.from}, {"to", s.to}, {"length_m", s.length_m},
              {"lanes", s.lanes}, {"v_max_mps", s.v_max_mps}};
    if (s.downstream_lane_map) {
      o["downstream_lane_map"] = {{"downstream_segment", s.downstream_lane_map->downstream_segment},
                                  {"lanes", s.downstream_lane_map->lanes}};
    }
    j["segments"].push_back(std::move(o));
  }
  j["rsus"] = spec.rsus;
  return j;
}

json config_json(const ScenarioConfig& c) {
  json j;
  j["network"] = c.network ? network_json(*c.network) : json{{"preset", "evaluation"}};
  j["mobility"] = {{"max_accel_mps2", c.mobility.max_accel_mps2},
                   {"comfort_decel_mps2", c.mobility.comfort_decel_mps2},
                   {"reaction_time_s", c.mobility.reaction_time_s},
                   {"min_gap_m", c.mobility.min_gap_m},
                   {"vehicle_length_m", c.mobility.vehicle_length_m}};
  j["emission"] = {{"idle_mlps", c.emission.idle_mlps},
                   {"c1", c.emission.c1},
                   {"c2", c.emission.c2},
                   {"c3", c.emission.c3},
                   {"power_coeff", c.emission.power_coeff}};
  j["protocol"] = {{"tin_s", c.protocol.tin_s},
                   {"beacon_period_s", c.protocol.beacon_period_s},
                   {"v2v_beacon_period_s", c.protocol.v2v_beacon_period_s},
                   {"communication_range_m", c.protocol.communication_range_m},
                   {"handshake_range_m", c.protocol.handshake_range_m},
                   {"control_range_m", c.protocol.control_range_m},
                   {"weights",
                    {{"time", c.protocol.weights.time},
                     {"co2", c.protocol.weights.co2},
                     {"distance", c.protocol.weights.distance}}}};
  const auto& a = c.attack;
  j["attack"] = {{"type", adversary::to_string(a.type)},
                 {"group_size", a.group_size},
                 {"interval_s", a.interval_s},
                 {"infected_percent", a.infected_percent},
                 {"group_count", a.group_count ? json(*a.group_count) : json(nullptr)},
                 {"start_time_s", a.start_time_s},
                 {"fd_short_level", a.fd_short_level},
                 {"fd_long_level", a.fd_long_level},
                 {"policy", adversary::to_string(a.policy)},
                 {"tweak_tt", a.tweak_tt}};
  j["defense"] = {{"threshold_percent", c.defense.threshold_percent},
                  {"plausibility_epsilon_s", c.defense.plausibility_epsilon_s},
                  {"feature", to_string(c.defense.feature)}};
  j["traffic"] = {{"vehicle_count", c.traffic.vehicle_count},
                  {"speed_limit_kmh", c.traffic.speed_limit_kmh},
                  {"mean_headway_s", c.traffic.mean_headway_s},
                  {"headway_jitter", c.traffic.headway_jitter},
                  {"origin", c.traffic.origin},
                  {"destination", c.traffic.destination}};
  j["engine"] = {{"dt_s", c.engine.dt_s},
                 {"duration_s", c.engine.duration_s},
                 {"seed", c.engine.seed}};
  j["mode"] = to_string(c.mode);
  j["override_ranges"] = c.override_ranges;
  return j;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_range(double v, double lo, double hi, const std::string& name) {
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << name << " = " << v << " outside [" << lo << ", " << hi
       << "] (set override_ranges to allow)";
    throw ConfigError(os.str());
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed scenario file: ") + e.what());
  }
  ScenarioConfig c;
  Section root(doc, "");

  if (const auto* n = root.child("network")) {
    auto spec = parse_network(*n);
    if (!spec.junctions.empty() || !spec.segments.empty()) c.network = std::move(spec);
  }
  if (const auto* m = root.child("mobility")) {
    Section s(*m, "mobility");
    s.get("max_accel_mps2", c.mobility.max_accel_mps2);
    s.get("comfort_decel_mps2", c.mobility.comfort_decel_mps2);
    s.get("reaction_time_s", c.mobility.reaction_time_s);
    s.get("min_gap_m", c.mobility.min_gap_m);
    s.get("vehicle_length_m", c.mobility.vehicle_length_m);
    s.finish();
  }
  if (const auto* e = root.child("emission")) {
    Section s(*e, "emission");
    s.get("idle_mlps", c.emission.idle_mlps);
    s.get("c1", c.emission.c1);
    s.get("c2", c.emission.c2);
    s.get("c3", c.emission.c3);
    s.get("power_coeff", c.emission.power_coeff);
    s.finish();
  }
  if (const auto* p = root.child("protocol")) {
    Section s(*p, "protocol");
    s.get("tin_s", c.protocol.tin_s);
    s.get("beacon_period_s", c.protocol.beacon_period_s);
    s.get("v2v_beacon_period_s", c.protocol.v2v_beacon_period_s);
    s.get("communication_range_m", c.protocol.communication_range_m);
    s.get("handshake_range_m", c.protocol.handshake_range_m);
    s.get("control_range_m", c.protocol.control_range_m);
    if (const auto* w = s.child("weights")) {
      Section ws(*w, "protocol.weights");
      ws.get("time", c.protocol.weights.time);
      ws.get("co2", c.protocol.weights.co2);
      ws.get("distance", c.protocol.weights.distance);
      ws.finish();
    }
    s.finish();
  }
  if (const auto* a = root.child("attack")) {
    Section s(*a, "attack");
    std::string text_value;
    if (s.get("type", text_value)) c.attack.type = parse_attack_type(text_value);
    s.get("group_size", c.attack.group_size);
    s.get("interval_s", c.attack.interval_s);
    s.get("infected_percent", c.attack.infected_percent);
    int groups = 0;
    if (s.get("group_count", groups)) c.attack.group_count = groups;
    s.get("start_time_s", c.attack.start_time_s);
    s.get("fd_short_level", c.attack.fd_short_level);
    s.get("fd_long_level", c.attack.fd_long_level);
    if (s.get("policy", text_value)) c.attack.policy = parse_policy(text_value);
    s.get("tweak_tt", c.attack.tweak_tt);
    s.finish();
  }
  if (const auto* d = root.child("defense")) {
    Section s(*d, "defense");
    s.get("threshold_percent", c.defense.threshold_percent);
    s.get("plausibility_epsilon_s", c.defense.plausibility_epsilon_s);
    std::string feature;
    if (s.get("feature", feature)) c.defense.feature = parse_feature(feature);
    s.finish();
  }
  if (const auto* t = root.child("traffic")) {
    Section s(*t, "traffic");
    s.get("vehicle_count", c.traffic.vehicle_count);
    s.get("speed_limit_kmh", c.traffic.speed_limit_kmh);
    s.get("mean_headway_s", c.traffic.mean_headway_s);
    s.get("headway_jitter", c.traffic.headway_jitter);
    s.get("origin", c.traffic.origin);
    s.get("destination", c.traffic.destination);
    s.finish();
  }
  bool has_seed = false;
  if (const auto* e = root.child("engine")) {
    Section s(*e, "engine");
    s.get("dt_s", c.engine.dt_s);
    s.get("duration_s", c.engine.duration_s);
    has_seed = s.get("seed", c.engine.seed);
    s.finish();
  }
  if (!has_seed) throw ConfigError("engine.seed is mandatory");
  std::string mode;
  if (root.get("mode", mode)) c.mode = parse_mode(mode);
  root.get("override_ranges", c.override_ranges);
  root.finish();

  c.mobility.dt_s = c.engine.dt_s;
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_json(const ScenarioConfig& config) { return config_json(config).dump(2); }

std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_fingerprint(const ScenarioConfig& config) {
  return fnv1a(config_json(config).dump());
}

std::string scenario_fingerprint(const ScenarioConfig& config) {
  const auto full = config_json(config);
  json part;
  for (const char* key : {"network", "mobility", "emission", "traffic"}) part[key] = full[key];
  part["dt_s"] = config.engine.dt_s;
  part["seed"] = config.engine.seed;
  return fnv1a(part.dump());
}

roadnet::NetworkSpec ScenarioConfig::network_spec() const {
  auto spec = network ? *network : roadnet::evaluation_map(traffic.speed_limit_mps());
  for (auto& s : spec.segments) {
    if (s.v_max_mps == 0.0) s.v_max_mps = traffic.speed_limit_mps();
  }
  return spec;
}

protocol::DefenseParams ScenarioConfig::defense_params() const {
  protocol::DefenseParams d;
  d.consistency.threshold_percent = defense.threshold_percent;
  d.consistency.vow_duration_s = protocol.tin_s / 3.0;
  d.consistency.feature = defense.feature;
  d.plausibility_epsilon_s = defense.plausibility_epsilon_s;
  return d;
}

void ScenarioConfig::validate() const {
  try {
    auto m = mobility;
    m.dt_s = engine.dt_s;
    m.validate();
    emission.validate();
    attack.validate(protocol.tin_s);
    defense_params().consistency.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  check(engine.duration_s > 0.0, "engine.duration_s must be positive");
  check(traffic.vehicle_count >= 0, "traffic.vehicle_count must be nonnegative");
  check(traffic.mean_headway_s > 0.0, "traffic.mean_headway_s must be positive");
  check(traffic.headway_jitter >= 0.0 && traffic.headway_jitter < 1.0,
        "traffic.headway_jitter must lie in [0, 1)");
  check(traffic.speed_limit_kmh > 0.0, "traffic.speed_limit_kmh must be positive");
  check(protocol.tin_s > 0.0, "protocol.tin_s must be positive");
  check(protocol.beacon_period_s > 0.0 && protocol.v2v_beacon_period_s > 0.0,
        "beacon periods must be positive");
  check(protocol.communication_range_m > 0.0 && protocol.handshake_range_m > 0.0 &&
            protocol.control_range_m > 0.0,
        "ranges must be positive");
  check(protocol.control_range_m <= protocol.handshake_range_m,
        "protocol.control_range_m must not exceed the handshake range");
  const auto& w = protocol.weights;
  check(w.time >= 0.0 && w.co2 >= 0.0 && w.distance >= 0.0 && w.time + w.co2 + w.distance > 0.0,
        "rule weights must be nonnegative and not all zero");
  check(defense.plausibility_epsilon_s >= 0.0, "defense.plausibility_epsilon_s must be nonnegative");

  if (override_ranges) return;
  check_range(protocol.tin_s, 30.0, 120.0, "protocol.tin_s");
  check_range(traffic.vehicle_count, 50.0, 150.0, "traffic.vehicle_count");
  check_range(traffic.speed_limit_kmh, 40.0, 90.0, "traffic.speed_limit_kmh");
  check_range(defense.threshold_percent, 10.0, 50.0, "defense.threshold_percent");
  if (attack.type != adversary::AttackType::none) {
    check_range(attack.group_size, 1.0, 5.0, "attack.group_size");
    check_range(attack.interval_s, 6.0, 14.0, "attack.interval_s");
    if (!attack.group_count) {
      check_range(attack.infected_percent, 10.0, 30.0, "attack.infected_percent");
    }
    check_range(attack.fd_short_level, 1.0, 2.0, "attack.fd_short_level");
    check_range(attack.fd_long_level, 1.0, 2.0, "attack.fd_long_level");
  }
}

}  // namespace erouve::harness
