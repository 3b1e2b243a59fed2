#pragma once

// Variable reference facts and the execution-order flow tree that the
// transfer planner walks.
//
// The flow tree is built by inlining calls to known functions starting at
// `main` (or at the top-level statements when there is no `main`). Each
// node records the accesses that execute at the node itself; subtree
// accesses are the union over descendants. Region ids name nodes:
// "loop:<id>" for for-loops (aggregated over every occurrence) and
// "host:<k>" for everything the host executes outside loops.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acctune/loops.hpp"
#include "acctune/source_model.hpp"

namespace acctune {

enum class VarScope { Global, Local, LoopLocal };

std::string_view to_string(VarScope s) noexcept;
VarScope var_scope_from_string(std::string_view s);

struct VarInfo {
  /// Qualified name: globals keep their source name, locals are `func::name`.
  std::string name;
  std::string source_name;
  VarScope scope = VarScope::Global;
  BaseType type = BaseType::Double;
  std::vector<long long> extents;  // empty for scalars; -1 for unknown extents
  bool is_array = false;
  bool has_initializer = false;
  std::string file_id;
  std::string function;  // empty for globals
  Span decl_span;        // span of the declaration statement
  bool decl_anchorable = false;

  /// Total bytes, or nullopt if any extent is unknown.
  std::optional<long long> bytes() const noexcept;
};

struct AccessFlags {
  bool read = false;
  bool written = false;
  bool defined = false;

  bool any() const noexcept { return read || written || defined; }
  AccessFlags& operator|=(const AccessFlags& o) noexcept {
    read |= o.read;
    written |= o.written;
    defined |= o.defined;
    return *this;
  }
  friend bool operator==(const AccessFlags&, const AccessFlags&) = default;
};

enum class FlowKind { Seq, Host, Loop, Repeat, Branch, Call };

std::string_view to_string(FlowKind k) noexcept;

struct FlowNode {
  FlowKind kind = FlowKind::Seq;
  int loop_id = -1;     // Loop nodes
  std::string region;   // "loop:<id>" or "host:<k>"; empty for Seq
  std::string file_id;
  Span span;
  bool anchorable = false;
  bool is_decl = false;  // declaration statement (cannot sit inside an inserted block)
  std::string function;  // function whose body lexically contains the node
  int invocation = 0;    // which inlined invocation of `function`
  std::optional<long long> trip_count;  // Loop nodes
  std::map<int, AccessFlags> own;       // var index -> accesses at this node
  std::vector<FlowNode> children;
};

struct RefEntry {
  int var = 0;
  std::string region;
  AccessFlags flags;
};

struct VarRefTable {
  std::vector<VarInfo> vars;
  std::vector<RefEntry> entries;  // sorted by (var, region)
  FlowNode flow;                  // root Seq
  /// Loops whose nest provably assigns every element of the listed arrays.
  std::map<int, std::set<int>> full_writes;

  std::optional<int> var_index(std::string_view qualified_name) const noexcept;
  std::optional<AccessFlags> entry(int var, std::string_view region) const noexcept;
  /// Rebuilds `entries` from `flow`.
  void rebuild_entries();
};

/// Functions callable inside accelerated loops without making them ineligible.
bool is_device_math_function(std::string_view name) noexcept;

VarRefTable analyze_variable_refs(std::span<const SourceUnit> units, const LoopTable& loops);
VarRefTable analyze_variable_refs(const SourceUnit& unit, const LoopTable& loops);

}  // namespace acctune
