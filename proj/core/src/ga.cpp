#include "acctune/ga.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include <json.hpp>

#include "acctune/error.hpp"

namespace acctune {

void GAConfig::validate() const {
  if (population == 0) throw ConfigError("population must be positive");
  if (generations == 0) throw ConfigError("generations must be positive");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover_rate must lie in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation_rate must lie in [0, 1]");
  if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be positive");
  if (!(penalty_time_s > 0.0)) throw ConfigError("penalty_time_s must be positive");
  if (elitism > population) throw ConfigError("elitism cannot exceed the population size");
}

double fitness(double time_s) {
  if (!(time_s > 0.0) || !std::isfinite(time_s)) throw DomainError("fitness needs a positive time, got " + std::to_string(time_s));
  return 1.0 / std::sqrt(time_s);
}

std::string_view to_string(EvalSource s) noexcept {
  switch (s) {
    case EvalSource::Fresh: return "fresh";
    case EvalSource::Cache: return "cache";
    case EvalSource::Penalty: return "penalty";
  }
  return "fresh";
}

std::vector<Genome> init_population(std::size_t gene_len, std::size_t population, Rng& rng) {
  if (gene_len == 0) throw ZeroGeneLength();
  std::vector<Genome> pop(population, Genome(gene_len));
  for (auto& g : pop)
    for (auto& b : g) b = rng.bit();
  return pop;
}

std::size_t select_roulette(const std::vector<Individual>& population, Rng& rng) {
  double total = 0.0;
  for (const auto& i : population) total += i.fitness;
  double x = rng.real() * total;
  for (std::size_t k = 0; k < population.size(); ++k) {
    x -= population[k].fitness;
    if (x < 0.0) return k;
  }
  return population.size() - 1;
}

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut) {
  if (a.size() != b.size()) throw LengthMismatch("crossover parents differ in length");
  Genome c1 = a;
  Genome c2 = b;
  for (std::size_t i = cut; i < a.size(); ++i) std::swap(c1[i], c2[i]);
  return {std::move(c1), std::move(c2)};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double rate, Rng& rng) {
  if (a.size() != b.size()) throw LengthMismatch("crossover parents differ in length");
  if (rng.real() >= rate || a.size() < 2) return {a, b};
  std::size_t cut = 1 + static_cast<std::size_t>(rng.next() % (a.size() - 1));
  return crossover_at(a, b, cut);
}

Genome mutate(Genome g, double rate, Rng& rng) {
  for (auto& b : g)
    if (rng.real() < rate) b = b ? 0 : 1;
  return g;
}

bool EvalCache::lookup(const Genome& g, MeasuredTime& out) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(g);
  if (it == entries_.end()) return false;
  out = it->second;
  return true;
}

void EvalCache::store(const Genome& g, const MeasuredTime& m) {
  std::lock_guard lock(mu_);
  entries_.emplace(g, m);
}

std::size_t EvalCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

Individual individual_from(const Genome& g, const MeasuredTime& m, EvalSource hit, const GAConfig& config) {
  Individual ind;
  ind.genome = g;
  ind.source = hit;
  bool timed_out = m.kind == MeasuredTime::Kind::Timeout || (m.ok() && m.seconds > config.timeout_s);
  if (m.ok() && !timed_out) {
    ind.time_s = m.seconds;
  } else {
    ind.time_s = config.penalty_time_s;
    ind.timed_out = timed_out;
    ind.diagnostic = timed_out ? "timeout" : m.diagnostic;
    if (hit == EvalSource::Fresh) ind.source = EvalSource::Penalty;
  }
  ind.fitness = fitness(ind.time_s);
  return ind;
}

Individual evaluate_with_cache(const Genome& genome, Evaluator& evaluator, EvalCache& cache, const GAConfig& config) {
  MeasuredTime m;
  if (cache.lookup(genome, m)) return individual_from(genome, m, EvalSource::Cache, config);
  m = evaluator.measure(genome);
  cache.store(genome, m);
  return individual_from(genome, m, EvalSource::Fresh, config);
}

namespace {

// Measures every uncached genome of `pop`, concurrently up to the
// evaluator's capacity, and commits results in population order.
std::vector<Individual> evaluate_generation(const std::vector<Genome>& pop, Evaluator& evaluator, EvalCache& cache,
                                            const GAConfig& config, std::size_t& calls) {
  std::vector<Genome> todo;
  std::set<Genome> seen;
  MeasuredTime dummy;
  for (const auto& g : pop)
    if (!cache.lookup(g, dummy) && seen.insert(g).second) todo.push_back(g);

  std::vector<MeasuredTime> results(todo.size());
  std::size_t workers = std::min(std::max<std::size_t>(evaluator.capability().max_concurrency, 1), todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      try {
        results[i] = evaluator.measure(todo[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  calls += todo.size();

  std::map<Genome, std::size_t> fresh;
  for (std::size_t i = 0; i < todo.size(); ++i) fresh[todo[i]] = i;
  std::vector<Individual> out;
  out.reserve(pop.size());
  for (const auto& g : pop) {
    auto it = fresh.find(g);
    if (it != fresh.end()) {
      const MeasuredTime& m = results[it->second];
      cache.store(g, m);
      out.push_back(individual_from(g, m, EvalSource::Fresh, config));
      fresh.erase(it);
    } else {
      MeasuredTime m;
      cache.lookup(g, m);
      out.push_back(individual_from(g, m, EvalSource::Cache, config));
    }
  }
  return out;
}

}  // namespace

GAResult run_ga(const GAConfig& config, std::size_t gene_len, Evaluator& evaluator,
                const std::function<void(const GenerationRecord&)>& on_generation) {
  config.validate();
  if (gene_len == 0) throw ZeroGeneLength();
  Rng rng(config.seed);
  std::vector<Genome> pop = init_population(gene_len, config.population, rng);
  EvalCache cache;
  GAResult result;
  bool have_best = false;

  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    std::vector<Individual> inds = evaluate_generation(pop, evaluator, cache, config, result.evaluator_calls);
    for (const auto& ind : inds) {
      if (!have_best || ind.time_s < result.best.time_s) {
        result.best = ind;
        have_best = true;
      }
    }
    GenerationRecord rec{gen, inds, result.best.genome, result.best.time_s};
    if (on_generation) on_generation(rec);
    result.records.push_back(std::move(rec));
    if (gen + 1 == config.generations) break;

    std::vector<std::size_t> order(inds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return inds[a].time_s < inds[b].time_s; });
    std::vector<Genome> next;
    next.reserve(config.population);
    for (std::size_t e = 0; e < config.elitism; ++e) next.push_back(inds[order[e]].genome);
    while (next.size() < config.population) {
      if (config.population - next.size() >= 2) {
        const Genome& a = inds[select_roulette(inds, rng)].genome;
        const Genome& b = inds[select_roulette(inds, rng)].genome;
        auto [c1, c2] = crossover(a, b, config.crossover_rate, rng);
        next.push_back(mutate(std::move(c1), config.mutation_rate, rng));
        next.push_back(mutate(std::move(c2), config.mutation_rate, rng));
      } else {
        next.push_back(inds[select_roulette(inds, rng)].genome);
      }
    }
    pop = std::move(next);
  }
  return result;
}

std::string record_to_json(const GenerationRecord& r) {
  nlohmann::json inds = nlohmann::json::array();
  for (const auto& i : r.individuals) {
    nlohmann::json j{{"genome", genome_to_string(i.genome)},
                     {"time_s", i.time_s},
                     {"fitness", i.fitness},
                     {"source", std::string(to_string(i.source))}};
    if (i.timed_out) j["timed_out"] = true;
    if (!i.diagnostic.empty()) j["diagnostic"] = i.diagnostic;
    inds.push_back(std::move(j));
  }
  return nlohmann::json{{"generation", r.generation},
                        {"individuals", inds},
                        {"best_genome", genome_to_string(r.best_genome)},
                        {"best_time_s", r.best_time_s}}
      .dump();
}

std::string records_to_jsonl(const std::vector<GenerationRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r) + "\n";
  return out;
}

}  // namespace acctune
