#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "acctune/classifier.hpp"
#include "acctune/evaluators.hpp"
#include "acctune/ga.hpp"
#include "acctune/structure_io.hpp"
#include "acctune/transfer_plan.hpp"

namespace acctune {

struct ToolConfig {
  enum class EvaluatorKind { CostModel, External };

  /// Source files, or a structural description; exactly one is set.
  std::vector<std::string> inputs;
  std::string structure;
  ProbeConfig probe;
  EvaluatorKind evaluator = EvaluatorKind::CostModel;
  std::string cost_model_path;
  CommandConfig command;
  GAConfig ga;
  std::string trip_counts_path;
  long long trip_threshold = 0;
  std::string output_dir;
  double atol = 1e-6;
  double rtol = 1e-4;
};

/// Relative paths in the file are resolved against `base_dir`. Throws ConfigError.
ToolConfig tool_config_from_json(const std::string& text, const std::string& base_dir = ".");
ToolConfig load_tool_config(const std::string& path);

/// Parsed sources (empty for structure-only input) plus their analysis.
struct Project {
  std::vector<SourceUnit> units;
  ProjectModel model;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

Project load_sources(const std::vector<std::string>& paths);
/// Loads a structural description; sources named by its "path" fields are
/// parsed when present so that static probing can inspect loop bodies.
Project load_structure(const std::string& path);

struct ValueDiff {
  std::size_t index = 0;
  std::string baseline;
  std::string tuned;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

struct DiffReport {
  bool pass = true;
  std::size_t compared = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  double atol = 0.0;
  double rtol = 0.0;
  std::string diagnostic;
  std::vector<ValueDiff> failures;  // first few only
};

/// Element-wise comparison of whitespace-separated values; numbers pass when
/// |tuned - baseline| <= atol + rtol * |baseline|, other tokens must match
/// exactly. Throws UnparsableOutput on binary (NUL-containing) output.
DiffReport verify_results(const std::string& baseline_output, const std::string& tuned_output, double atol,
                          double rtol);

std::string diff_report_to_json(const DiffReport& d);

/// Evaluates the all-CPU genome. Throws EnvironmentError when it fails or
/// times out, since the unmodified program has to run.
MeasuredTime measure_baseline(Evaluator& evaluator, std::size_t gene_len, double timeout_s);

struct TuneReport {
  std::string status;  // "tuned" or "no offloadable loops"
  std::vector<std::string> inputs;
  std::string structure;
  std::vector<EligibilityVerdict> verdicts;
  std::vector<int> gene_loops;
  double baseline_time_s = 0.0;
  Genome best_genome;
  double best_time_s = 0.0;
  double improvement_ratio = 1.0;
  TransferPlan plan;
  std::vector<GenerationRecord> records;
  std::size_t evaluator_calls = 0;
  GAConfig ga;
  std::optional<DiffReport> verification;
  std::string verification_note;
};

/// Deterministic body only; timestamps go to metadata.json.
std::string report_to_json(const TuneReport& report);
/// Restores the summary fields (inputs, verdicts, genes, times, best genome,
/// GA settings). The plan, generation records and verification result are
/// not read back; emit_best recomputes the plan from the sources.
TuneReport report_from_json(const std::string& text);

struct PipelineHooks {
  /// Replaces the evaluator the config would build (used by tests).
  std::shared_ptr<Evaluator> evaluator;
  std::function<void(const GenerationRecord&)> on_generation;
};

/// parse, classify, baseline, search, emit, verify, report. Writes
/// report.json, generations.jsonl, metadata.json and the emitted sources
/// under `output_dir` when it is set.
TuneReport run_pipeline(const ToolConfig& config, const PipelineHooks& hooks = {});

/// Re-emits the best variant recorded in a report directory into `out_dir`.
/// Returns the written paths.
std::vector<std::string> emit_best(const std::string& report_dir, const std::string& out_dir);

}  // namespace acctune
