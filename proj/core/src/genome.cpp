#include "acctune/genome.hpp"

#include <algorithm>

#include "acctune/error.hpp"

namespace acctune {

std::string genome_to_string(const Genome& g) {
  std::string s;
  s.reserve(g.size());
  for (auto b : g) s += b ? '1' : '0';
  return s;
}

Genome genome_from_string(std::string_view s) {
  Genome g;
  g.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw FormatError("genome must consist of 0 and 1, got '" + std::string(s) + "'");
    g.push_back(c == '1');
  }
  return g;
}

std::size_t popcount(const Genome& g) noexcept {
  return static_cast<std::size_t>(std::count_if(g.begin(), g.end(), [](auto b) { return b != 0; }));
}

}  // namespace acctune
