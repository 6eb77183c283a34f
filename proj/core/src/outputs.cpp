#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "erouve/harness.hpp"

namespace erouve::harness {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "v1";

std::string header_line(const ScenarioConfig& c) {
  return fmt::format("# schema={} config_fingerprint={} scenario_fingerprint={}\n", kSchema,
                     config_fingerprint(c), scenario_fingerprint(c));
}

std::string route_label(const roadnet::RoadNetwork& net, const std::vector<SegmentId>& route,
                        const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < route.size(); ++i) {
    if (i > 0) out += sep;
    out += net.segment(route[i]).name;
  }
  return out;
}

const char* to_string(sentinel::ClaimKind k) {
  switch (k) {
    case sentinel::ClaimKind::confirmed: return "confirmed";
    case sentinel::ClaimKind::overruled: return "overruled";
    case sentinel::ClaimKind::unwitnessed: return "unwitnessed";
  }
  return "unknown";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

std::string vehicles_csv(const RunResult& r) {
  std::string out = header_line(r.config);
  out += "vehicle_id,infected,route,inject_time_s,arrive_time_s,trip_time_s,trip_co2_ml\n";
  for (const auto& v : r.vehicles) {
    const auto tt = v.trip_time_s();
    out += fmt::format("{},{},{},{},{},{},{}\n", v.id.value, v.infected ? 1 : 0,
                       route_label(r.network, v.route, "|"), v.inject_time_s,
                       v.arrive_time_s ? fmt::format("{}", *v.arrive_time_s) : "",
                       tt ? fmt::format("{}", *tt) : "",
                       v.arrive_time_s ? fmt::format("{}", v.trip_co2_ml) : "");
  }
  return out;
}

std::string decisions_csv(const RunResult& r) {
  std::string out = header_line(r.config);
  out += "time_s,rsu_id,vehicle_id,candidates,time_vote,co2_vote,dist_vote,chosen\n";
  for (const auto& d : r.decisions) {
    std::string cands;
    for (std::size_t i = 0; i < d.candidates.size(); ++i) {
      const auto& c = d.candidates[i];
      if (i > 0) cands += ';';
      cands += fmt::format("{}@{}/{}/{}", route_label(r.network, c.route, "+"), c.tt_s, c.co2_ml,
                           c.distance_m);
    }
    auto label = [&](std::size_t i) { return route_label(r.network, d.candidates[i].route, "+"); };
    out += fmt::format("{},{},{},{},{},{},{},{}\n", d.time_s, r.network.junction(d.rsu).name,
                       d.vehicle.value, cands, label(d.time_vote), label(d.co2_vote),
                       label(d.distance_vote), label(d.chosen));
  }
  return out;
}

std::string verdicts_csv(const RunResult& r) {
  std::string out = header_line(r.config);
  out += "time_s,report_id,vehicle_id,claimed_segment,plausible,claim_verdict,classification,"
         "ground_truth_forged\n";
  for (const auto& v : r.verdicts) {
    std::string plausible = "-";
    if (v.plausible) plausible = *v.plausible ? "1" : "0";
    std::string claim = "-";
    if (v.claim) claim = to_string(*v.claim);
    std::string cls = "-";
    if (v.classification) cls = *v.classification == sentinel::Classification::vow ? "vow" : "pbs";
    out += fmt::format("{},{},{},{},{},{},{},{}\n", v.time_s, v.report.value, v.vehicle.value,
                       r.network.segment(v.claimed).name, plausible, claim, cls,
                       v.forged ? 1 : 0);
  }
  return out;
}

std::string summary_text(const RunSummary& s) {
  const auto& a = s.aggregates;
  const auto& d = s.defense;
  std::string out;
  auto kv = [&](const char* k, const auto& v) { out += fmt::format("{} = {}\n", k, v); };
  kv("schema", kSchema);
  kv("config_fingerprint", s.config_fingerprint);
  kv("scenario_fingerprint", s.scenario_fingerprint);
  kv("mode", to_string(s.mode));
  kv("seed", s.seed);
  kv("vehicles", a.vehicles);
  kv("arrived", a.arrived);
  kv("unfinished", a.vehicles - a.arrived);
  kv("mean_time_s", a.mean_time_s);
  kv("median_time_s", a.median_time_s);
  kv("mean_co2_ml", a.mean_co2_ml);
  kv("median_co2_ml", a.median_co2_ml);
  kv("long_route_share_pct", a.long_route_share_pct);
  kv("infected_vehicles", s.infected_vehicles);
  kv("decisions", s.decisions);
  kv("end_time_s", s.end_time_s);
  kv("forged_reports", d.forged_reports);
  kv("forged_quarantined", d.forged_quarantined);
  kv("forged_detected", d.forged_detected);
  kv("forged_missed", d.forged_missed);
  kv("forged_fr", d.forged_fr);
  kv("forged_fr_overruled", d.forged_fr_overruled);
  kv("forged_implausible", d.forged_implausible);
  kv("honest_reports", d.honest_reports);
  kv("honest_quarantined", d.honest_quarantined);
  kv("honest_rejected", d.honest_rejected);
  kv("bogus_expired", d.bogus_expired);
  return out;
}

RunSummary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read summary " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(fmt::format("summary {} lacks '{}'", path.string(), key));
    return it->second;
  };
  RunSummary s;
  s.config_fingerprint = need("config_fingerprint");
  s.scenario_fingerprint = need("scenario_fingerprint");
  s.mode = parse_mode(need("mode"));
  s.seed = std::stoull(need("seed"));
  s.aggregates.vehicles = std::stoull(need("vehicles"));
  s.aggregates.arrived = std::stoull(need("arrived"));
  s.aggregates.mean_time_s = std::stod(need("mean_time_s"));
  s.aggregates.median_time_s = std::stod(need("median_time_s"));
  s.aggregates.mean_co2_ml = std::stod(need("mean_co2_ml"));
  s.aggregates.median_co2_ml = std::stod(need("median_co2_ml"));
  s.aggregates.long_route_share_pct = std::stod(need("long_route_share_pct"));
  return s;
}

Deviation compare_runs(const RunSummary& run, const RunSummary& baseline) {
  if (run.scenario_fingerprint != baseline.scenario_fingerprint) {
    throw ConfigError("scenario fingerprints differ (" + run.scenario_fingerprint + " vs " +
                      baseline.scenario_fingerprint + "); runs are not comparable");
  }
  const auto& a = run.aggregates;
  const auto& b = baseline.aggregates;
  Deviation d;
  d.mean_time_pct = 100.0 * (a.mean_time_s - b.mean_time_s) / b.mean_time_s;
  d.mean_co2_pct = 100.0 * (a.mean_co2_ml - b.mean_co2_ml) / b.mean_co2_ml;
  d.long_route_share_pp = a.long_route_share_pct - b.long_route_share_pct;
  return d;
}

std::string deviation_text(const Deviation& d) {
  return fmt::format("mean_time_dev_pct = {}\nmean_co2_dev_pct = {}\nlong_route_share_dev_pp = {}\n",
                     d.mean_time_pct, d.mean_co2_pct, d.long_route_share_pp);
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "vehicles.csv", vehicles_csv(result));
  write_file(dir / "decisions.csv", decisions_csv(result));
  write_file(dir / "verdicts.csv", verdicts_csv(result));
  write_file(dir / "summary.txt", summary_text(result.summary));
  write_file(dir / "config.json", to_json(result.config) + "\n");
}

// ---------------------------------------------------------------------------

namespace {

void collect_leaves(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_leaves(value, path, out);
    } else if (!value.is_array()) {
      out.push_back(path);
    }
  }
}

json::json_pointer pointer_of(const std::string& dotted) {
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) p += "/" + part;
  return json::json_pointer(p);
}

ScenarioConfig with_value(const ScenarioConfig& base, const std::string& axis,
                          const std::string& value) {
  auto doc = json::parse(to_json(base));
  const auto ptr = pointer_of(axis);
  auto& leaf = doc.at(ptr);
  try {
    if (leaf.is_string()) {
      leaf = value;
    } else if (leaf.is_boolean()) {
      leaf = value == "true" || value == "1";
    } else if (leaf.is_number_integer() || leaf.is_number_unsigned() || leaf.is_null()) {
      leaf = std::stoll(value);
    } else {
      leaf = std::stod(value);
    }
  } catch (const std::logic_error&) {
    throw ConfigError("sweep value '" + value + "' does not fit " + axis);
  }
  return parse_config(doc.dump());
}

}  // namespace

std::vector<std::string> sweep_axes() {
  ScenarioConfig c;
  c.attack.group_count = 0;  // expose the optional field as an axis
  auto doc = json::parse(to_json(c));
  doc.erase("network");
  std::vector<std::string> out;
  collect_leaves(doc, "", out);
  return out;
}

std::vector<SweepRow> sweep(const ScenarioConfig& base, const std::string& axis,
                            const std::vector<std::string>& values,
                            const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  const auto axes = sweep_axes();
  if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }
  if (values.empty()) return {};

  // Every distinct config to run, baselines deduplicated by fingerprint.
  std::vector<ScenarioConfig> tasks;
  std::map<std::string, std::size_t> index;
  auto enqueue = [&](const ScenarioConfig& c) {
    const auto key = config_fingerprint(c);
    const auto [it, fresh] = index.emplace(key, tasks.size());
    if (fresh) tasks.push_back(c);
    return it->second;
  };
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> plan(values.size());
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    for (const auto seed : seeds) {
      auto seeded = base;
      seeded.engine.seed = seed;
      auto cfg = with_value(seeded, axis, values[vi]);
      auto baseline = cfg;
      baseline.mode = Mode::erouve;
      baseline.attack.type = adversary::AttackType::none;
      const auto b = enqueue(baseline);
      const auto r = enqueue(cfg);
      plan[vi].emplace_back(r, b);
    }
  }

  std::vector<RunSummary> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = run_scenario(tasks[i]).summary;
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRow> rows;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    SweepRow row;
    row.value = values[vi];
    row.seeds = seeds;
    for (const auto& [r, b] : plan[vi]) {
      row.runs.push_back(results[r].aggregates);
      const auto d = compare_runs(results[r], results[b]);
      row.deviations.push_back(d);
      row.mean_deviation.mean_time_pct += d.mean_time_pct;
      row.mean_deviation.mean_co2_pct += d.mean_co2_pct;
      row.mean_deviation.long_route_share_pp += d.long_route_share_pp;
    }
    if (!plan[vi].empty()) {
      const double k = static_cast<double>(plan[vi].size());
      row.mean_deviation.mean_time_pct /= k;
      row.mean_deviation.mean_co2_pct /= k;
      row.mean_deviation.long_route_share_pp /= k;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows) {
  std::string out = fmt::format("# schema={} axis={}\n", kSchema, axis);
  out += "value,seed,mean_time_s,mean_co2_ml,long_route_share_pct,dev_time_pct,dev_co2_pct,"
         "dev_long_pp\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.runs.size(); ++i) {
      const auto& a = row.runs[i];
      const auto& d = row.deviations[i];
      out += fmt::format("{},{},{},{},{},{},{},{}\n", row.value, row.seeds[i], a.mean_time_s,
                         a.mean_co2_ml, a.long_route_share_pct, d.mean_time_pct, d.mean_co2_pct,
                         d.long_route_share_pp);
    }
    const auto& m = row.mean_deviation;
    out += fmt::format("{},mean,,,,{},{},{}\n", row.value, m.mean_time_pct, m.mean_co2_pct,
                       m.long_route_share_pp);
  }
  return out;
}

}  // namespace erouve::harness
