#include <benchmark/benchmark.h>

#include "acctune/evaluators.hpp"
#include "acctune/ga.hpp"
#include "bench_common.hpp"

namespace {

acctune::CostModel model_for(const char* dir) {
  return acctune::cost_model_from_json(acctune::read_file(bench::fixture(std::string(dir) + "/cost_model.json")));
}

// One generation is a full evaluate-select-crossover-mutate step, so a
// single-generation run measures its cost.
void BM_GaGeneration(benchmark::State& state, const char* rel, const char* dir, std::size_t population) {
  auto c = bench::classified(rel);
  auto model = model_for(dir);
  acctune::GAConfig cfg;
  cfg.population = population;
  cfg.generations = 1;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    cfg.seed = seed++;
    acctune::CostModelEvaluator ev(model, {c.genes, &c.project.model.loops, &c.project.model.refs});
    auto r = acctune::run_ga(cfg, c.genes.size(), ev);
    benchmark::DoNotOptimize(r.best.time_s);
  }
}
BENCHMARK_CAPTURE(BM_GaGeneration, himeno_m10, "himeno/himeno.c", "himeno", 10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_GaGeneration, ft_m30, "ft/ft.c", "ft", 30)->Unit(benchmark::kMillisecond);

void BM_GeneticOperators(benchmark::State& state) {
  acctune::Rng rng(3);
  auto pop = acctune::init_population(65, 30, rng);
  for (auto _ : state) {
    for (std::size_t i = 0; i + 1 < pop.size(); i += 2) {
      auto [a, b] = acctune::crossover(pop[i], pop[i + 1], 0.9, rng);
      pop[i] = acctune::mutate(std::move(a), 0.05, rng);
      pop[i + 1] = acctune::mutate(std::move(b), 0.05, rng);
    }
    benchmark::DoNotOptimize(pop.data());
  }
}
BENCHMARK(BM_GeneticOperators);

void BM_BruteForceHimeno(benchmark::State& state) {
  auto c = bench::classified("himeno/himeno.c");
  auto model = model_for("himeno");
  for (auto _ : state) {
    auto r = acctune::brute_force_optimum(model, {c.genes, &c.project.model.loops, &c.project.model.refs});
    benchmark::DoNotOptimize(r.time_s);
  }
}
BENCHMARK(BM_BruteForceHimeno)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
