#include <pla/dispersion.hpp>
#include <pla/pla.hpp>
#include <pla/simulate.hpp>

#include <benchmark/benchmark.h>

#include <random>

namespace {

Eigen::MatrixXd random_covariance(Eigen::Index m) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd w(m, m + 5);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
  Eigen::MatrixXd c = w * w.transpose() / static_cast<double>(m);
  return 0.5 * (c + c.transpose());
}

void BM_Eigendecompose(benchmark::State& state) {
  const pla::DispersionMatrix m(random_covariance(state.range(0)), pla::DispersionKind::kCovariance);
  for (auto _ : state) benchmark::DoNotOptimize(pla::eigendecompose(m));
}
BENCHMARK(BM_Eigendecompose)->Arg(20)->Arg(100)->Arg(200);

void BM_RunPlaFromData(benchmark::State& state) {
  pla::ScenarioSpec spec;
  spec.m_total = static_cast<int>(state.range(0));
  spec.n_sample = 5000;
  const auto pop = pla::generate_population(spec, 3);
  const auto sample = pla::draw_sample(pop, spec.n_sample, 4);
  pla::PlaConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pla::run_pla(sample, cfg));
}
BENCHMARK(BM_RunPlaFromData)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MonteCarloIteration(benchmark::State& state) {
  pla::ScenarioSpec spec;
  spec.m_total = static_cast<int>(state.range(0));
  spec.n_sample = 5000;
  pla::MonteCarloSpec mc;
  mc.iterations = 1;
  mc.threads = 1;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    mc.master_seed = seed++;
    benchmark::DoNotOptimize(pla::type_one_error(spec, mc));
  }
}
BENCHMARK(BM_MonteCarloIteration)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
