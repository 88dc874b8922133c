#include <benchmark/benchmark.h>

#include "sma/bootstrap_cal.hpp"
#include "sma/calibration_mc.hpp"
#include "sma/experiment.hpp"
#include "sma/selector.hpp"

namespace {

struct Setup {
  sma::ExperimentConfig config;
  sma::Scenario scenario;
  sma::ModelFamily family;
};

Setup make_setup(sma::Index n, int models)
{
  sma::ExperimentConfig c;
  c.n = n;
  c.p_max = models;
  c.models.clear();
  for (int m = 1; m <= models; ++m) {
    c.models.push_back(m);
  }
  c.m_dagger = models;
  c.validate();
  auto scenario = sma::generate_scenario(c);
  auto family = sma::build_family(c, scenario);
  return {std::move(c), std::move(scenario), std::move(family)};
}

void BM_FamilyBuild(benchmark::State& state)
{
  auto s = make_setup(state.range(0), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto family = sma::build_family(s.config, s.scenario);
    benchmark::DoNotOptimize(family.size());
  }
}
BENCHMARK(BM_FamilyBuild)->Args({100, 10})->Args({400, 20})->Unit(benchmark::kMillisecond);

void BM_ScaledDraws(benchmark::State& state)
{
  auto s = make_setup(state.range(0), static_cast<int>(state.range(1)));
  const sma::Index n_sim = 2000;
  for (auto _ : state) {
    auto draws = sma::sample_scaled_draws(s.family, s.scenario.sigmas, n_sim, 7, 1);
    benchmark::DoNotOptimize(draws.values().data());
  }
  state.SetItemsProcessed(state.iterations() * n_sim);
}
BENCHMARK(BM_ScaledDraws)->Args({100, 10})->Args({400, 20})->Unit(benchmark::kMillisecond);

void BM_CalibrateKnown(benchmark::State& state)
{
  auto s = make_setup(state.range(0), static_cast<int>(state.range(1)));
  auto settings = sma::calibration_settings(s.config, 11, 1);
  settings.n_sim = 2000;
  for (auto _ : state) {
    auto table = sma::calibrate_known(s.family, s.scenario.noise, settings);
    benchmark::DoNotOptimize(table.x_level);
  }
}
BENCHMARK(BM_CalibrateKnown)->Args({100, 10})->Args({400, 20})->Unit(benchmark::kMillisecond);

void BM_BootstrapCalibrate(benchmark::State& state)
{
  auto s = make_setup(state.range(0), static_cast<int>(state.range(1)));
  const sma::Vector y = sma::replicate_response(s.config, s.scenario, 0);
  const auto pre = sma::presmooth(s.family, y, s.config.m_dagger);
  auto settings = sma::calibration_settings(s.config, 13, 1);
  settings.n_sim = 2000;
  for (auto _ : state) {
    auto table = sma::bootstrap_calibrate(s.family, pre.residuals, settings);
    benchmark::DoNotOptimize(table.table.x_level);
  }
}
BENCHMARK(BM_BootstrapCalibrate)->Args({100, 10})->Args({400, 20})->Unit(benchmark::kMillisecond);

void BM_Select(benchmark::State& state)
{
  auto s = make_setup(state.range(0), static_cast<int>(state.range(1)));
  auto settings = sma::calibration_settings(s.config, 11, 1);
  settings.n_sim = 2000;
  const auto table = sma::calibrate_known(s.family, s.scenario.noise, settings);
  const sma::Vector y = sma::replicate_response(s.config, s.scenario, 0);
  for (auto _ : state) {
    const auto stats = sma::test_statistics(s.family, y);
    benchmark::DoNotOptimize(sma::sma_select(stats, table).m_hat);
  }
}
BENCHMARK(BM_Select)->Args({100, 10})->Args({400, 20})->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
