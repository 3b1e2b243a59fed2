#pragma once

// Genetic search over offload patterns.
//
// One std::mt19937_64 seeded with `seed` drives every random choice, in
// this order:
//   1. initial population: individual by individual, gene by gene, one
//      draw per gene (top bit of the draw);
//   2. per generation, after evaluation, for each offspring pair: two
//      roulette draws, one crossover-rate draw, one cut draw when the
//      crossover happens, then one mutation draw per gene of the first
//      child and then of the second;
//   3. an odd last offspring slot takes one roulette draw and is copied
//      without crossover or mutation.
// Real-valued draws use the top 53 bits of one engine output.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "acctune/evaluators.hpp"
#include "acctune/genome.hpp"

namespace acctune {

struct GAConfig {
  std::size_t population = 10;
  std::size_t generations = 10;
  double crossover_rate = 0.9;
  double mutation_rate = 0.05;
  double timeout_s = 180.0;
  double penalty_time_s = 1000.0;
  std::uint64_t seed = 1;
  std::size_t elitism = 1;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// time^(-1/2). Throws DomainError unless time > 0.
double fitness(double time_s);

enum class EvalSource { Fresh, Cache, Penalty };
std::string_view to_string(EvalSource s) noexcept;

struct Individual {
  Genome genome;
  /// Time used for fitness: measured seconds, or the penalty time on timeout and failure.
  double time_s = 0.0;
  bool timed_out = false;
  double fitness = 0.0;
  EvalSource source = EvalSource::Fresh;
  std::string diagnostic;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bit() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

std::vector<Genome> init_population(std::size_t gene_len, std::size_t population, Rng& rng);

/// Index of one fitness-proportional draw.
std::size_t select_roulette(const std::vector<Individual>& population, Rng& rng);

/// One-point crossover with probability `rate`, cut uniform in [1, len-1].
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double rate, Rng& rng);

/// Same as crossover() at a given cut, without randomness.
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut);

Genome mutate(Genome g, double rate, Rng& rng);

/// Measurements already taken in this run, keyed by genome.
class EvalCache {
 public:
  bool lookup(const Genome& g, MeasuredTime& out) const;
  void store(const Genome& g, const MeasuredTime& m);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<Genome, MeasuredTime> entries_;
};

/// Turns a measurement into an Individual: timeouts and failures take the
/// penalty time; a run longer than the timeout counts as a timeout.
Individual individual_from(const Genome& g, const MeasuredTime& m, EvalSource hit, const GAConfig& config);

Individual evaluate_with_cache(const Genome& genome, Evaluator& evaluator, EvalCache& cache, const GAConfig& config);

struct GenerationRecord {
  std::size_t generation = 0;
  std::vector<Individual> individuals;
  Genome best_genome;
  double best_time_s = 0.0;
};

struct GAResult {
  Individual best;
  std::vector<GenerationRecord> records;
  std::size_t evaluator_calls = 0;
};

/// Throws ZeroGeneLength when gene_len is 0. `on_generation` is called after
/// each generation is recorded.
GAResult run_ga(const GAConfig& config, std::size_t gene_len, Evaluator& evaluator,
                const std::function<void(const GenerationRecord&)>& on_generation = {});

/// One JSON object per line.
std::string records_to_jsonl(const std::vector<GenerationRecord>& records);
std::string record_to_json(const GenerationRecord& record);

}  // namespace acctune
