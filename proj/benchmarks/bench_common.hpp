#pragma once

#include <string>

#include "acctune/classifier.hpp"
#include "acctune/pipeline.hpp"

namespace bench {

inline std::string fixture(const std::string& rel) { return std::string(ACCTUNE_FIXTURE_DIR) + "/" + rel; }

struct Classified {
  acctune::Project project;
  std::vector<int> genes;
};

inline Classified classified(const std::string& rel) {
  Classified c{acctune::load_sources({fixture(rel)}), {}};
  acctune::StaticRuleProbe probe;
  auto verdicts = acctune::classify_all(c.project.model.loops, c.project.model.refs, probe, c.project.units);
  c.genes = acctune::gene_loops(verdicts);
  return c;
}

}  // namespace bench
