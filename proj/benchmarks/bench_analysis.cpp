#include <benchmark/benchmark.h>

#include "acctune/classifier.hpp"
#include "acctune/emitter.hpp"
#include "acctune/loops.hpp"
#include "acctune/transfer_plan.hpp"
#include "acctune/var_refs.hpp"
#include "bench_common.hpp"

namespace {

void BM_ParseAndAnalyze(benchmark::State& state, const char* rel) {
  std::string text = acctune::read_file(bench::fixture(rel));
  for (auto _ : state) {
    auto unit = acctune::parse_source(text, rel);
    auto loops = acctune::extract_loops(unit);
    auto refs = acctune::analyze_variable_refs(unit, loops);
    benchmark::DoNotOptimize(refs.entries.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK_CAPTURE(BM_ParseAndAnalyze, himeno, "himeno/himeno.c");
BENCHMARK_CAPTURE(BM_ParseAndAnalyze, ft, "ft/ft.c");

void BM_ClassifyStatic(benchmark::State& state) {
  auto p = acctune::load_sources({bench::fixture("ft/ft.c")});
  acctune::StaticRuleProbe probe;
  for (auto _ : state) {
    auto v = acctune::classify_all(p.model.loops, p.model.refs, probe, p.units);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_ClassifyStatic)->Unit(benchmark::kMillisecond);

void BM_TransferPlan(benchmark::State& state, const char* rel) {
  auto c = bench::classified(rel);
  acctune::Genome g(c.genes.size(), 1);
  for (auto _ : state) {
    auto plan = acctune::make_transfer_plan(g, c.genes, c.project.model.loops, c.project.model.refs);
    benchmark::DoNotOptimize(plan.entries.data());
  }
}
BENCHMARK_CAPTURE(BM_TransferPlan, himeno_all_gpu, "himeno/himeno.c");
BENCHMARK_CAPTURE(BM_TransferPlan, ft_all_gpu, "ft/ft.c");

void BM_EmitVariant(benchmark::State& state) {
  auto p = acctune::load_sources({bench::fixture("himeno/himeno.c")});
  acctune::StaticRuleProbe probe;
  auto verdicts = acctune::classify_all(p.model.loops, p.model.refs, probe, p.units);
  auto genes = acctune::gene_loops(verdicts);
  acctune::Genome g(genes.size(), 1);
  auto plan = acctune::make_transfer_plan(g, genes, p.model.loops, p.model.refs);
  for (auto _ : state) {
    auto v = acctune::emit_variant(p.units, g, verdicts, plan, p.model.loops, p.model.refs);
    benchmark::DoNotOptimize(v.files.data());
  }
}
BENCHMARK(BM_EmitVariant);

}  // namespace
