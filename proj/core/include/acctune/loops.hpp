#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acctune/source_model.hpp"

namespace acctune {

enum class LoopShape { SingleLoop, TightlyNestedOuter, TightlyNestedInner, NonTightlyNested };

std::string_view to_string(LoopShape s) noexcept;
LoopShape loop_shape_from_string(std::string_view s);

struct LoopInfo {
  int loop_id = 0;
  std::string file_id;
  Span span;
  int line = 0;
  int depth = 0;
  std::optional<int> parent_loop;
  std::string index_var;
  std::optional<long long> trip_count_estimate;
  LoopShape shape = LoopShape::SingleLoop;
  /// Header has the form `x = lo; x <op> hi; x++|x--|x += k|x -= k`.
  bool canonical = false;
  /// Loop occupies whole lines, so pragmas and braces can be inserted around it.
  bool anchorable = false;
  /// Constant bounds when canonical and both bounds resolve: [lower, upper) step +1.
  std::optional<long long> lower_bound;
  std::optional<long long> upper_bound;
  bool unit_step = false;
};

struct LoopTable {
  std::vector<LoopInfo> loops;  // ordered by loop_id

  const LoopInfo* find(int loop_id) const noexcept;
  const LoopInfo* find(std::string_view file_id, const Span& span) const noexcept;
  std::size_t size() const noexcept { return loops.size(); }
};

/// Loops of one unit, numbered from `first_id` in document (preorder) order.
LoopTable extract_loops(const SourceUnit& unit, int first_id = 0);

/// Loops of a whole project; ids are unique across the units, in unit order.
LoopTable extract_loops(std::span<const SourceUnit> units);

/// Index variable, bounds and step of a for-statement header.
struct LoopHeader {
  std::string index_var;
  bool canonical = false;
  std::optional<long long> lower;
  std::optional<long long> upper;  // exclusive for increasing loops
  long long step = 0;
  std::optional<long long> trip_count;
};

/// `constants` resolves identifiers that name integer constants (may be empty).
LoopHeader analyze_loop_header(const Stmt& for_stmt,
                               const std::vector<std::pair<std::string, long long>>& constants = {});

/// The for-statement that is `loop`'s entire body (possibly inside braces),
/// or nullptr.
const Stmt* sole_inner_loop(const Stmt& loop) noexcept;

/// Integer constants declared as `const` at file scope, in declaration order.
std::vector<std::pair<std::string, long long>> integer_constants(const SourceUnit& unit);

/// Folds +, -, *, / over integer literals and the given constants.
std::optional<long long> eval_constant(const Expr& e,
                                       const std::vector<std::pair<std::string, long long>>& constants = {});

/// The for-statement of `unit` whose span is `span`, or nullptr.
const Stmt* find_loop_stmt(const SourceUnit& unit, const Span& span) noexcept;

}  // namespace acctune
