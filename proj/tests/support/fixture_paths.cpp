#include "fixture_paths.hpp"

#include "acctune/source_model.hpp"
#include "acctune/structure_io.hpp"

namespace acctune::testing {

std::string fixture(const std::string& relative) { return std::string(ACCTUNE_FIXTURE_DIR) + "/" + relative; }

namespace {

void classify(Loaded& l) {
  StaticRuleProbe probe;
  l.verdicts = classify_all(l.project.model.loops, l.project.model.refs, probe, l.project.units);
  l.genes = gene_loops(l.verdicts);
}

}  // namespace

Loaded load_fixture(const std::vector<std::string>& relative_paths) {
  std::vector<std::string> paths;
  for (const auto& p : relative_paths) paths.push_back(fixture(p));
  Loaded l;
  l.project = load_sources(paths);
  classify(l);
  return l;
}

Loaded load_source_text(const std::string& text, const std::string& file_id) {
  Loaded l;
  l.project.units.push_back(parse_source(text, file_id));
  l.project.model = analyze_project(l.project.units);
  classify(l);
  return l;
}

}  // namespace acctune::testing
