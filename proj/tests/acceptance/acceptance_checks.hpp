#pragma once

#include <string>

namespace acctune::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome ga_matches_optimum();
Outcome ft_improvement();
Outcome fitness_law();
Outcome elitism_monotone();
Outcome cache_sound();
Outcome semantic_safety();
Outcome batching_saves_transfers();
Outcome golden_emission();
Outcome classification_table();
Outcome mutation_rate();

}  // namespace acctune::acceptance
