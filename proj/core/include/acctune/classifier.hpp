#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acctune/loops.hpp"
#include "acctune/source_model.hpp"
#include "acctune/var_refs.hpp"

namespace acctune {

enum class DirectiveKind { Kernels, ParallelLoop, ParallelLoopVector };

std::string_view to_string(DirectiveKind k) noexcept;
DirectiveKind directive_kind_from_string(std::string_view s);
/// The exact pragma line, e.g. `#pragma acc parallel loop`.
std::string_view pragma_text(DirectiveKind k) noexcept;

struct ProbeResult {
  bool accepted = false;
  std::string diagnostic;
  double elapsed_ms = 0.0;
};

struct ProbeConfig {
  enum class Mode { Static, Command };
  Mode mode = Mode::Static;
  /// Shell template; `{src}` and `{workdir}` are substituted.
  std::string command;
  std::size_t capacity = 1;
  std::optional<double> timeout_s;
};

/// One probe trial: the unit containing the loop with a single directive
/// inserted before it. `variant_source` is empty for structure-only input.
struct ProbeRequest {
  const LoopInfo* loop = nullptr;
  DirectiveKind kind = DirectiveKind::Kernels;
  std::string variant_source;
  std::string file_id;
  /// Every project unit, so external compilers see the whole program.
  std::span<const SourceUnit> units;
};

class CompileProbe {
 public:
  virtual ~CompileProbe() = default;
  virtual ProbeResult probe(const ProbeRequest& request) = 0;
  /// How many probes may run at once; 0 means unlimited.
  virtual std::size_t capacity() const noexcept = 0;
};

/// Rule-based stand-in for a trial compilation. Rejects a loop whose body
/// has a loop-carried flow dependence on the loop index, an output
/// dependence, a non-affine subscript on a written array, a write to a
/// scalar declared outside the loop, break/goto/return, or a call to a
/// function other than the device math library. A read at a later index
/// than the write (`a[i] = a[i+1]`) only blocks the parallel kinds, so
/// such loops end up with `parallel loop vector`.
class StaticRuleProbe final : public CompileProbe {
 public:
  ProbeResult probe(const ProbeRequest& request) override;
  std::size_t capacity() const noexcept override { return 0; }
};

/// Writes the project to a fresh temp directory and runs the configured
/// command against the probed file. Exit status 0 accepts.
class CommandProbe final : public CompileProbe {
 public:
  CommandProbe(std::string command_template, std::size_t capacity, std::optional<double> timeout_s = {});
  ProbeResult probe(const ProbeRequest& request) override;
  std::size_t capacity() const noexcept override { return capacity_; }

 private:
  std::string template_;
  std::size_t capacity_;
  std::optional<double> timeout_s_;
};

std::unique_ptr<CompileProbe> make_probe(const ProbeConfig& config);

/// Runs one probe outside of classification (used by the CLI and tests).
ProbeResult probe_compile(const std::string& variant_source, const ProbeConfig& config,
                          DirectiveKind kind = DirectiveKind::Kernels, const std::string& file_id = "probe.c");

struct ProbeAttempt {
  DirectiveKind kind;
  /// "accepted", "rejected: <diagnostic>" or "skipped: <reason>".
  std::string outcome;
  friend bool operator==(const ProbeAttempt&, const ProbeAttempt&) = default;
};

struct EligibilityVerdict {
  int loop_id = 0;
  bool eligible = false;
  DirectiveKind kind = DirectiveKind::Kernels;  // meaningful when eligible
  std::string reason;                           // meaningful when ineligible
  std::vector<ProbeAttempt> probe_log;
  friend bool operator==(const EligibilityVerdict&, const EligibilityVerdict&) = default;
};

/// `units` may be empty for structure-only input; the probe then sees no
/// source and only shape rules apply.
EligibilityVerdict classify_loop(const LoopInfo& loop, const VarRefTable& refs, CompileProbe& probe,
                                 std::span<const SourceUnit> units = {});

/// Classifies every loop, running probes concurrently up to the probe's capacity.
std::vector<EligibilityVerdict> classify_all(const LoopTable& loops, const VarRefTable& refs, CompileProbe& probe,
                                             std::span<const SourceUnit> units = {});

std::vector<EligibilityVerdict> filter_by_trip_count(std::vector<EligibilityVerdict> verdicts,
                                                     const std::map<int, long long>& trip_counts,
                                                     long long threshold);

/// Loop ids of the eligible verdicts in document order: gene i <-> element i.
std::vector<int> gene_loops(const std::vector<EligibilityVerdict>& verdicts);

/// Kind per eligible loop id.
std::map<int, DirectiveKind> kind_map(const std::vector<EligibilityVerdict>& verdicts);

std::string verdicts_to_json(const std::vector<EligibilityVerdict>& verdicts);
std::vector<EligibilityVerdict> verdicts_from_json(const std::string& text);

/// Reads a `{"<loop_id>": count}` profile.
std::map<int, long long> trip_counts_from_json(const std::string& text);

}  // namespace acctune
