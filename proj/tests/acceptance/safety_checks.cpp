#include <sstream>

#include "acceptance_checks.hpp"
#include "acctune/emitter.hpp"
#include "acctune/transfer_plan.hpp"
#include "device_interp.hpp"
#include "fixture_paths.hpp"

namespace acctune::acceptance {

namespace {

const char* const kSafetyFixtures[] = {"safety/iterative.c", "safety/locals.c", "safety/calls.c", "safety/nested.c",
                                       "safety/control.c"};

Genome genome_of(std::uint64_t value, std::size_t n) {
  Genome g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<std::uint8_t>((value >> (n - 1 - i)) & 1u);
  return g;
}

}  // namespace

Outcome semantic_safety() {
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::ostringstream first;
  for (const char* name : kSafetyFixtures) {
    testing::Loaded l = testing::load_fixture({name});
    const SourceUnit& original = l.project.units.front();
    testing::RunResult expected = testing::interpret(original);
    const auto& loops = l.project.model.loops;
    const auto& refs = l.project.model.refs;
    std::uint64_t total = std::uint64_t{1} << l.genes.size();
    for (std::uint64_t v = 0; v < total; ++v) {
      Genome g = genome_of(v, l.genes.size());
      ++checked;
      std::string problem;
      try {
        TransferPlan plan = make_transfer_plan(g, l.genes, loops, refs);
        AnnotatedVariant variant = emit_variant(l.project.units, g, l.verdicts, plan, loops, refs);
        SourceUnit tuned = parse_source(variant.text_of(original.file_id), original.file_id);
        problem = testing::compare_runs(expected, testing::interpret(tuned));
      } catch (const std::exception& e) {
        problem = e.what();
      }
      if (!problem.empty() && failures++ == 0) first << "; first failure " << name << " " << genome_to_string(g) << ": " << problem;
    }
  }
  std::ostringstream d;
  d << checked << " genomes over 5 fixtures, " << failures << " mismatches" << first.str();
  return {failures == 0 && checked > 0, d.str()};
}

}  // namespace acctune::acceptance
