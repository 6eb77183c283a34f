#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "erouve/harness.hpp"

namespace h = erouve::harness;

namespace {

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, const std::string& mode,
            const std::string& baseline_path) {
  auto cfg = h::load_config(config_path);
  if (seed) cfg.engine.seed = *seed;
  if (!mode.empty()) cfg.mode = h::parse_mode(mode);
  const auto result = h::run_scenario(cfg);
  h::write_outputs(result, out_dir);
  std::string text = h::summary_text(result.summary);
  if (!baseline_path.empty()) {
    const auto baseline = h::read_summary(baseline_path);
    text += "baseline = " + baseline_path + "\n";
    text += h::deviation_text(h::compare_runs(result.summary, baseline));
    std::ofstream(std::filesystem::path(out_dir) / "summary.txt", std::ios::binary) << text;
  }
  std::cout << text;
  return 0;
}

int cmd_compare(const std::string& run_path, const std::string& baseline_path) {
  const auto run = h::read_summary(run_path);
  const auto baseline = h::read_summary(baseline_path);
  std::cout << h::deviation_text(h::compare_runs(run, baseline));
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values,
              const std::string& seeds, const std::string& out_dir, unsigned jobs) {
  const auto cfg = h::load_config(config_path);
  std::vector<std::uint64_t> seed_list;
  for (const auto& s : split(seeds)) seed_list.push_back(std::stoull(s));
  if (seed_list.empty()) seed_list.push_back(cfg.engine.seed);
  const auto rows = h::sweep(cfg, axis, split(values), seed_list, jobs);
  const auto text = h::sweep_csv(axis, rows);
  std::filesystem::create_directories(out_dir);
  std::ofstream(std::filesystem::path(out_dir) / "sweep.csv", std::ios::binary) << text;
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ErouVe eco-routing simulator with attacks and defense"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string mode;
  std::string baseline;
  auto* run = app.add_subcommand("run", "Run one scenario and write its CSV files");
  run->add_option("-c,--config", config_path, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("-s,--seed", seed, "Seed override");
  run->add_option("-o,--out", out_dir, "Output directory");
  run->add_option("-m,--mode", mode, "shortest-path | erouve | erouve-attacked | erouve-defended");
  run->add_option("-b,--baseline", baseline, "Summary of a baseline run to compare against")
      ->check(CLI::ExistingFile);

  std::string run_summary;
  std::string base_summary;
  auto* compare = app.add_subcommand("compare", "Deviation of a run from a baseline");
  compare->add_option("run", run_summary, "Summary of the run")->required()->check(CLI::ExistingFile);
  compare->add_option("baseline", base_summary, "Summary of the baseline")
      ->required()
      ->check(CLI::ExistingFile);

  std::string axis;
  std::string values;
  std::string seeds;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Deviation table over one config axis");
  sweep->add_option("-c,--config", config_path, "Scenario template")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("-a,--axis", axis, "Dotted config field, e.g. attack.group_size")->required();
  sweep->add_option("-v,--values", values, "Comma separated values");
  sweep->add_option("--seeds", seeds, "Comma separated seeds");
  sweep->add_option("-o,--out", out_dir, "Output directory");
  sweep->add_option("-j,--jobs", jobs, "Concurrent runs");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, seed, out_dir, mode, baseline);
    if (*compare) return cmd_compare(run_summary, base_summary);
    if (*sweep) return cmd_sweep(config_path, axis, values, seeds, out_dir, jobs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "erouve: %s\n", e.what());
    return 1;
  }
  return 1;
}
