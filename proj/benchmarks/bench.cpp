#include <random>

#include <benchmark/benchmark.h>

#include "erouve/harness.hpp"
#include "erouve/roadnet.hpp"
#include "erouve/sentinel.hpp"

using namespace erouve;

static void BM_Classify(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(55.0, 65.0);
  std::vector<double> xs(4096);
  for (auto& x : xs) x = u(rng);
  for (auto _ : state) {
    sentinel::ConsistencyFilter f;
    double t = 0.0;
    for (std::uint32_t i = 0; i < state.range(0); ++i) {
      benchmark::DoNotOptimize(f.classify(ReportId{i}, xs[i % xs.size()], t));
      t += 0.25;
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Classify)->Arg(256)->Arg(4096);

static void BM_Connections(benchmark::State& state) {
  roadnet::NetworkSpec spec;
  const int n = static_cast<int>(state.range(0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      spec.junctions.push_back({"J" + std::to_string(r * n + c), {c * 100.0, r * 100.0}});
    }
  }
  auto name = [n](int r, int c) { return "J" + std::to_string(r * n + c); };
  int k = 0;
  auto road = [&](const std::string& a, const std::string& b) {
    spec.segments.push_back({"s" + std::to_string(k++), a, b, 100.0, 1, 13.9, std::nullopt});
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) road(name(r, c), name(r, c + 1));
      if (r + 1 < n) road(name(r, c), name(r + 1, c));
      if ((r + c) % 3 == 0) spec.rsus.push_back(name(r, c));
    }
  }
  const auto net = roadnet::build_network(spec);
  for (auto _ : state) benchmark::DoNotOptimize(roadnet::compute_connections(net));
}
BENCHMARK(BM_Connections)->Arg(8)->Arg(16);

static void BM_DefaultRun(benchmark::State& state) {
  harness::ScenarioConfig c;
  c.engine.seed = 7;
  c.mode = harness::Mode::erouve_defended;
  for (auto _ : state) benchmark::DoNotOptimize(harness::run_scenario(c).summary);
}
BENCHMARK(BM_DefaultRun)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
