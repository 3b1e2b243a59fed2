#pragma once

// Canonical JSON form of the analyzed project: loops, variables with their
// per-region reference flags, and (optionally) the full flow tree. The same
// format is accepted as input, so programs analyzed by other tools can be
// fed to the classifier, planner and tuner.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acctune/loops.hpp"
#include "acctune/source_model.hpp"
#include "acctune/var_refs.hpp"

namespace acctune {

struct ProjectModel {
  std::vector<std::string> file_ids;
  /// Source path per file, when the model was produced from source files.
  std::vector<std::string> source_paths;
  LoopTable loops;
  VarRefTable refs;
  /// True when the flow tree came from source analysis or a full import.
  bool has_flow = true;
};

/// Parses and analyzes a set of source units.
ProjectModel analyze_project(std::span<const SourceUnit> units, std::vector<std::string> source_paths = {});

std::string to_json(const ProjectModel& model);

/// Accepts both the full form written by to_json and the minimal form
/// (files/loops/vars only). Throws FormatError on malformed input.
ProjectModel project_from_json(const std::string& text);

}  // namespace acctune
