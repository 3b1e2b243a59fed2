#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace acctune {

/// Offload pattern: element i is 1 when the i-th eligible loop runs on the GPU.
using Genome = std::vector<std::uint8_t>;

/// "0110..." in gene order.
std::string genome_to_string(const Genome& g);
/// Throws FormatError on characters other than '0' and '1'.
Genome genome_from_string(std::string_view s);
std::size_t popcount(const Genome& g) noexcept;

}  // namespace acctune
