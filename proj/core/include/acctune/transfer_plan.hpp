#pragma once

// Data-movement planning for an offload pattern.
//
// A data region wraps a contiguous run of sibling statements inside one
// function body. Only arrays are planned; scalars travel as firstprivate
// kernel arguments and loop-local arrays live entirely on the device.
// Event counts weight each region by how often it executes, which is the
// product of the known trip counts of the CPU loops around it.

#include <string>
#include <string_view>
#include <vector>

#include "acctune/genome.hpp"
#include "acctune/loops.hpp"
#include "acctune/var_refs.hpp"

namespace acctune {

enum class TransferDirection { CopyIn, CopyOut, Copy, None };

std::string_view to_string(TransferDirection d) noexcept;
TransferDirection transfer_direction_from_string(std::string_view s);
bool moves_in(TransferDirection d) noexcept;
bool moves_out(TransferDirection d) noexcept;

struct PlanEntry {
  int var_index = 0;
  std::string variable;
  TransferDirection direction = TransferDirection::None;
  std::string file_id;
  /// From the start of the first wrapped statement to the end of the last.
  Span region_span;
  /// GPU loops strictly inside the region that use the variable.
  std::vector<int> present_sites;
  /// Every GPU loop the region serves, including one that is the anchor itself.
  std::vector<int> loops;
  bool temp_region = false;
  /// How many times the region executes per program run.
  long long multiplicity = 1;

  long long events() const noexcept;
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

struct TransferPlan {
  std::vector<PlanEntry> entries;  // ordered by (file_id, region start, variable)

  long long events() const noexcept;
  long long events_for(std::string_view variable) const noexcept;
  long long events_for(std::string_view variable, TransferDirection which) const noexcept;
  friend bool operator==(const TransferPlan&, const TransferPlan&) = default;
};

/// Widest legal region per variable for one genome. A region never crosses
/// a host write to its variable, a host read after a GPU write, a
/// declaration, a call whose callee touches the variable, or a file boundary.
struct GpuRegion {
  int var_index = 0;
  std::string file_id;
  Span anchor;
  std::vector<int> loops;  // GPU loops in execution order
  bool copy_in = false;
  bool copy_out = false;
  long long multiplicity = 1;
};

struct GpuRegionMap {
  std::vector<GpuRegion> regions;
};

/// Loops that run on the GPU for `genome`: gene 1 and no enclosing gene-1 loop.
std::vector<int> effective_gpu_loops(const Genome& genome, const std::vector<int>& gene_loops,
                                     const LoopTable& loops);

/// Per gene, 1 when the loop runs on the GPU, either offloaded itself or
/// nested in an offloaded loop.
Genome effective_placement(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops);

/// One region per GPU loop and variable.
TransferPlan plan_transfers(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops,
                            const VarRefTable& refs);

GpuRegionMap build_region_map(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops,
                              const VarRefTable& refs);

/// Replaces a variable's per-loop entries with its widened regions unless
/// that would add transfer events.
TransferPlan hoist_and_batch(const TransferPlan& plan, const GpuRegionMap& regions, const VarRefTable& refs);

/// Marks global arrays for the declare-create/update pattern.
TransferPlan suppress_auto_transfers(const TransferPlan& plan, const VarRefTable& refs);

/// plan_transfers, build_region_map, hoist_and_batch and suppress_auto_transfers in sequence.
TransferPlan make_transfer_plan(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops,
                                const VarRefTable& refs);

std::string plan_to_json(const TransferPlan& plan);
TransferPlan plan_from_json(const std::string& text, const VarRefTable& refs);

}  // namespace acctune
