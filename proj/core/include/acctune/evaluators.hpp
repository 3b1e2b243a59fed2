#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acctune/classifier.hpp"
#include "acctune/emitter.hpp"
#include "acctune/genome.hpp"
#include "acctune/loops.hpp"
#include "acctune/source_model.hpp"
#include "acctune/transfer_plan.hpp"
#include "acctune/var_refs.hpp"

namespace acctune {

struct MeasuredTime {
  enum class Kind { Seconds, Timeout, Failure };
  Kind kind = Kind::Seconds;
  double seconds = 0.0;
  std::string diagnostic;
  /// Standard output of the measured run, when there was one.
  std::string output;

  static MeasuredTime of(double s) { return MeasuredTime{Kind::Seconds, s, {}, {}}; }
  static MeasuredTime timeout() { return MeasuredTime{Kind::Timeout, 0.0, {}, {}}; }
  static MeasuredTime failure(std::string why) { return MeasuredTime{Kind::Failure, 0.0, std::move(why), {}}; }
  bool ok() const noexcept { return kind == Kind::Seconds; }
};

struct EvaluatorCapability {
  std::size_t max_concurrency = 1;
  bool deterministic = false;
};

/// Measures one offload pattern. Implementations must be safe to call from
/// `max_concurrency` threads at once.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual MeasuredTime measure(const Genome& genome) = 0;
  virtual EvaluatorCapability capability() const = 0;
};

struct LoopCost {
  double cpu_s = 0.0;
  double gpu_s = 0.0;
};

/// Synthetic timing: overhead, per-loop CPU or GPU time by gene, and a
/// linear cost per transfer event (bytes / bandwidth + latency).
struct CostModel {
  double overhead_s = 0.0;
  std::map<int, LoopCost> loops;
  std::map<std::string, long long> var_bytes;
  double bandwidth_bytes_per_s = 1e10;
  double latency_s = 0.0;

  /// Seconds for one transfer of `variable`. A function-local name such as
  /// "main::x" falls back to the entry for "x".
  double transfer_time(const std::string& variable) const;
};

CostModel cost_model_from_json(const std::string& text);
std::string cost_model_to_json(const CostModel& model);

/// `placement` gives, per gene, whether the loop runs on the GPU (see
/// effective_placement). Throws ModelIncomplete when a gene loop or a planned
/// variable is missing.
MeasuredTime evaluate_costmodel(const Genome& placement, const std::vector<int>& gene_loops, const TransferPlan& plan,
                                const CostModel& model);

/// Everything needed to turn a genome into a plan.
struct PlanningContext {
  std::vector<int> gene_loops;
  const LoopTable* loops = nullptr;
  const VarRefTable* refs = nullptr;
};

class CostModelEvaluator final : public Evaluator {
 public:
  CostModelEvaluator(CostModel model, PlanningContext context);
  MeasuredTime measure(const Genome& genome) override;
  EvaluatorCapability capability() const override;

 private:
  CostModel model_;
  PlanningContext ctx_;
};

struct OptimumResult {
  Genome genome;
  double time_s = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive search over every genome; ties go to the smallest genome read
/// as a binary number with gene 0 most significant. Throws TooLarge above 20 genes.
OptimumResult brute_force_optimum(const CostModel& model, const PlanningContext& context);

struct CommandConfig {
  /// Templates; `{src}` (all source files), `{bin}` and `{workdir}` are substituted.
  std::string compile;
  std::string run;
  double timeout_s = 180.0;
  std::size_t capacity = 1;
};

/// Compiles and runs a variant in a fresh directory. A nonzero compile or
/// run status is a Failure; exceeding `timeout_s` kills the run. Throws
/// EnvironmentError when a command cannot be found (exit status 127).
MeasuredTime evaluate_external(const AnnotatedVariant& variant, const CommandConfig& config);

class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(CommandConfig config, std::span<const SourceUnit> units, std::vector<EligibilityVerdict> verdicts,
                    const LoopTable& loops, const VarRefTable& refs);
  MeasuredTime measure(const Genome& genome) override;
  EvaluatorCapability capability() const override;

 private:
  CommandConfig config_;
  std::span<const SourceUnit> units_;
  std::vector<EligibilityVerdict> verdicts_;
  std::vector<int> genes_;
  const LoopTable& loops_;
  const VarRefTable& refs_;
};

}  // namespace acctune
