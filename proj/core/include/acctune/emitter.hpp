#pragma once

// Materializes a genome and its transfer plan as OpenACC pragmas. Every
// insertion is a whole line, so removing the logged lines restores the
// original text exactly.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acctune/classifier.hpp"
#include "acctune/genome.hpp"
#include "acctune/loops.hpp"
#include "acctune/source_model.hpp"
#include "acctune/transfer_plan.hpp"
#include "acctune/var_refs.hpp"

namespace acctune {

struct Insertion {
  std::string file_id;
  int line = 0;  // 1-based line number in the emitted text
  std::string text;
  friend bool operator==(const Insertion&, const Insertion&) = default;
};

struct AnnotatedVariant {
  std::vector<std::pair<std::string, std::string>> files;  // (file_id, emitted text), in unit order
  Genome genome;
  std::map<int, DirectiveKind> kinds;
  TransferPlan plan;
  std::vector<Insertion> insertion_log;

  const std::string& text_of(const std::string& file_id) const;
};

/// Throws GenomeLengthMismatch, PlanInconsistent (an entry serves a loop
/// that is not offloaded, or a present site lies outside its region) and
/// EmissionError (an array of unknown extent).
AnnotatedVariant emit_variant(std::span<const SourceUnit> units, const Genome& genome,
                              const std::vector<EligibilityVerdict>& verdicts, const TransferPlan& plan,
                              const LoopTable& loops, const VarRefTable& refs);

/// Removes the logged lines of `file_id` from `text`.
std::string strip_inserted_lines(const std::string& text, const std::vector<Insertion>& log,
                                 const std::string& file_id);

/// `name[0:N][0:M]`.
std::string clause_item(const VarInfo& var);

std::string insertion_log_to_json(const std::vector<Insertion>& log);

}  // namespace acctune
