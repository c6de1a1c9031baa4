#include <benchmark/benchmark.h>

#include <random>

#include "dga/dg_nms.hpp"
#include "dga/pipeline.hpp"
#include "dga/uot.hpp"

namespace {

dga::uot::TransportProblem make_problem(int m, int n) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  dga::uot::TransportProblem p;
  p.cost = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return u(rng); });
  p.a = Eigen::VectorXd::Ones(m);
  p.b = Eigen::VectorXd::NullaryExpr(n, [&] { return 0.2 * u(rng); });
  p.epsilon = 0.1;
  return p;
}

void BM_UotSolve(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dga::uot::solve(p));
  }
}
BENCHMARK(BM_UotSolve)->Args({20, 1024})->Args({50, 5456});

void BM_DgNms(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<dga::nms::Detection> dets;
  for (int i = 0; i < state.range(0); ++i) {
    const double x = 400.0 * u(rng), y = 400.0 * u(rng);
    dets.push_back({dga::BBox(x, y, x + 20 + 40 * u(rng), y + 40 + 80 * u(rng)),
                    0.01 + 0.99 * u(rng), u(rng)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dga::nms::dg_nms(dets, 0.5, dga::nms::ScaleVariant::kLinear));
  }
}
BENCHMARK(BM_DgNms)->Arg(500)->Arg(2000);

void BM_ScenePipeline(benchmark::State& state) {
  dga::ExperimentConfig cfg;
  cfg.overlap = "crowded";
  for (auto _ : state) {
    benchmark::DoNotOptimize(dga::pipeline::run_scene(cfg, 0));
  }
}
BENCHMARK(BM_ScenePipeline);

}  // namespace

BENCHMARK_MAIN();
