#include "acctune/transfer_plan.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "acctune/error.hpp"

namespace acctune {

using nlohmann::json;

std::string_view to_string(TransferDirection d) noexcept {
  switch (d) {
    case TransferDirection::CopyIn: return "CopyIn";
    case TransferDirection::CopyOut: return "CopyOut";
    case TransferDirection::Copy: return "Copy";
    case TransferDirection::None: return "None";
  }
  return "None";
}

TransferDirection transfer_direction_from_string(std::string_view s) {
  if (s == "CopyIn") return TransferDirection::CopyIn;
  if (s == "CopyOut") return TransferDirection::CopyOut;
  if (s == "Copy") return TransferDirection::Copy;
  if (s == "None") return TransferDirection::None;
  throw FormatError("unknown transfer direction '" + std::string(s) + "'");
}

bool moves_in(TransferDirection d) noexcept { return d == TransferDirection::CopyIn || d == TransferDirection::Copy; }
bool moves_out(TransferDirection d) noexcept { return d == TransferDirection::CopyOut || d == TransferDirection::Copy; }

long long PlanEntry::events() const noexcept {
  return (static_cast<long long>(moves_in(direction)) + static_cast<long long>(moves_out(direction))) * multiplicity;
}

long long TransferPlan::events() const noexcept {
  long long n = 0;
  for (const auto& e : entries) n += e.events();
  return n;
}

long long TransferPlan::events_for(std::string_view variable) const noexcept {
  long long n = 0;
  for (const auto& e : entries)
    if (e.variable == variable) n += e.events();
  return n;
}

long long TransferPlan::events_for(std::string_view variable, TransferDirection which) const noexcept {
  long long n = 0;
  for (const auto& e : entries) {
    if (e.variable != variable) continue;
    bool in = moves_in(e.direction);
    bool out = moves_out(e.direction);
    if (which == TransferDirection::CopyIn && in) n += e.multiplicity;
    if (which == TransferDirection::CopyOut && out) n += e.multiplicity;
    if (which == TransferDirection::Copy && in && out) n += e.multiplicity;
  }
  return n;
}

namespace {

TransferDirection direction_of(bool in, bool out) {
  if (in && out) return TransferDirection::Copy;
  if (in) return TransferDirection::CopyIn;
  if (out) return TransferDirection::CopyOut;
  return TransferDirection::None;
}

struct VarSummary {
  bool host = false;
  bool host_write = false;
  bool gpu = false;
  bool gpu_read = false;
  bool gpu_write = false;
  bool gpu_partial = false;  // GPU write not proven to cover the whole array
  bool in_call = false;      // some access happens in a callee body

  void merge(const VarSummary& o) {
    host |= o.host;
    host_write |= o.host_write;
    gpu |= o.gpu;
    gpu_read |= o.gpu_read;
    gpu_write |= o.gpu_write;
    gpu_partial |= o.gpu_partial;
    in_call |= o.in_call;
  }
};

struct Flat {
  const FlowNode* node = nullptr;
  int parent = -1;
  int end = 0;  // one past the last preorder index of the subtree
};

enum class ChildClass { None, Gpu, CpuRead, Barrier, Mixed };

// Per-genome analysis of the flow tree.
class Planner {
 public:
  Planner(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops, const VarRefTable& refs)
      : refs_(refs) {
    if (genome.size() != gene_loops.size()) throw GenomeLengthMismatch(genome.size(), gene_loops.size());
    for (std::size_t i = 0; i < genome.size(); ++i)
      if (genome[i]) on_.insert(gene_loops[i]);
    (void)loops;
    flatten(refs.flow, -1);
    gpu_root_.assign(nodes_.size(), false);
    inside_gpu_.assign(nodes_.size(), false);
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      const FlowNode& f = *nodes_[n].node;
      bool parent_inside = nodes_[n].parent >= 0 && inside_gpu_[static_cast<std::size_t>(nodes_[n].parent)];
      gpu_root_[n] = !parent_inside && f.kind == FlowKind::Loop && on_.count(f.loop_id) > 0;
      inside_gpu_[n] = parent_inside || gpu_root_[n];
    }
    summarize();
  }

  bool planned(int v) const {
    const VarInfo& info = refs_.vars[static_cast<std::size_t>(v)];
    return info.is_array && info.scope != VarScope::LoopLocal;
  }

  std::vector<GpuRegion> regions(bool batched) {
    std::vector<GpuRegion> out;
    std::set<int> vars;
    for (const auto& [v, s] : summary_[0])
      if (s.gpu && planned(v)) vars.insert(v);
    for (int v : vars) {
      if (batched) {
        process_seq(0, v, out);
      } else {
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
          if (!gpu_root_[n] || !touches_gpu(static_cast<int>(n), v)) continue;
          int parent = nodes_[n].parent;
          emit_region(parent, static_cast<int>(n), static_cast<int>(n), v, out);
        }
      }
    }
    return merge_occurrences(std::move(out));
  }

 private:
  int flatten(const FlowNode& n, int parent) {
    int me = static_cast<int>(nodes_.size());
    nodes_.push_back(Flat{&n, parent, 0});
    for (const auto& [v, f] : n.own) {
      if (f.written) writes_[v].push_back(me);
      if (f.any()) accesses_[v].push_back(me);
    }
    for (const auto& c : n.children) flatten(c, me);
    nodes_[static_cast<std::size_t>(me)].end = static_cast<int>(nodes_.size());
    return me;
  }

  void summarize() {
    summary_.assign(nodes_.size(), {});
    for (std::size_t k = nodes_.size(); k-- > 0;) {
      const FlowNode& f = *nodes_[k].node;
      auto& sum = summary_[k];
      for (const auto& [v, a] : f.own) {
        if (!a.any()) continue;
        VarSummary& s = sum[v];
        if (inside_gpu_[k]) {
          s.gpu = true;
          s.gpu_read |= a.read;
          s.gpu_write |= a.written;
        } else {
          s.host = true;
          s.host_write |= a.written;
        }
      }
      if (gpu_root_[k]) {
        auto fw = refs_.full_writes.find(f.loop_id);
        for (auto& [v, s] : sum)
          if (s.gpu_write && (fw == refs_.full_writes.end() || !fw->second.count(v))) s.gpu_partial = true;
      }
      int p = nodes_[k].parent;
      if (p < 0) continue;
      bool call = nodes_[static_cast<std::size_t>(p)].node->kind == FlowKind::Call;
      for (const auto& [v, s] : sum) {
        VarSummary& dst = summary_[static_cast<std::size_t>(p)][v];
        dst.merge(s);
        if (call) dst.in_call = true;
      }
    }
  }

  const VarSummary* summary(int n, int v) const {
    const auto& m = summary_[static_cast<std::size_t>(n)];
    auto it = m.find(v);
    return it == m.end() ? nullptr : &it->second;
  }

  bool touches_gpu(int n, int v) const {
    const VarSummary* s = summary(n, v);
    return s && s->gpu;
  }

  ChildClass classify(int c, int v) const {
    const Flat& flat = nodes_[static_cast<std::size_t>(c)];
    const VarSummary* s = summary(c, v);
    bool gpu = s && s->gpu;
    if (flat.node->is_decl) return gpu ? ChildClass::Mixed : ChildClass::Barrier;
    if (!s) return ChildClass::None;
    if (gpu_root_[static_cast<std::size_t>(c)]) return ChildClass::Gpu;
    if (gpu && (s->in_call || flat.node->kind == FlowKind::Call)) return ChildClass::Mixed;
    if (!gpu) {
      if (!s->host) return ChildClass::None;
      return s->host_write ? ChildClass::Barrier : ChildClass::CpuRead;
    }
    if (!s->host) return flat.node->anchorable ? ChildClass::Gpu : ChildClass::Mixed;
    return ChildClass::Mixed;
  }

  std::vector<int> children_of(int n) const {
    std::vector<int> out;
    int c = n + 1;
    while (c < nodes_[static_cast<std::size_t>(n)].end) {
      out.push_back(c);
      c = nodes_[static_cast<std::size_t>(c)].end;
    }
    return out;
  }

  void recurse(int n, int v, std::vector<GpuRegion>& out) {
    const FlowNode& f = *nodes_[static_cast<std::size_t>(n)].node;
    if (f.kind == FlowKind::Seq) {
      process_seq(n, v, out);
      return;
    }
    for (int c : children_of(n)) recurse(c, v, out);
  }

  void process_seq(int seq, int v, std::vector<GpuRegion>& out) {
    std::vector<int> run;
    bool gpu_written = false;
    auto flush = [&] {
      auto first = std::find_if(run.begin(), run.end(), [&](int c) { return classify(c, v) == ChildClass::Gpu; });
      auto last = std::find_if(run.rbegin(), run.rend(), [&](int c) { return classify(c, v) == ChildClass::Gpu; });
      if (first != run.end()) emit_region(seq, *first, *last, v, out);
      run.clear();
      gpu_written = false;
    };
    for (int c : children_of(seq)) {
      const FlowNode& node = *nodes_[static_cast<std::size_t>(c)].node;
      if (!run.empty() && nodes_[static_cast<std::size_t>(run.front())].node->file_id != node.file_id) flush();
      switch (classify(c, v)) {
        case ChildClass::Gpu:
          run.push_back(c);
          gpu_written |= summary(c, v)->gpu_write;
          break;
        case ChildClass::None:
          if (!run.empty()) run.push_back(c);
          break;
        case ChildClass::CpuRead:
          if (gpu_written) flush();
          else if (!run.empty()) run.push_back(c);
          break;
        case ChildClass::Barrier: flush(); break;
        case ChildClass::Mixed:
          flush();
          recurse(c, v, out);
          break;
      }
    }
    flush();
  }

  bool repeating(const FlowNode& f) const {
    if (f.kind == FlowKind::Repeat) return true;
    return f.kind == FlowKind::Loop && (!f.trip_count || *f.trip_count > 1);
  }

  bool any_in(const std::vector<int>& positions, int lo, int hi) const {
    auto it = std::lower_bound(positions.begin(), positions.end(), lo);
    return it != positions.end() && *it < hi;
  }

  void emit_region(int seq, int first, int last, int v, std::vector<GpuRegion>& out) const {
    const VarInfo& info = refs_.vars[static_cast<std::size_t>(v)];
    const FlowNode& fn = *nodes_[static_cast<std::size_t>(first)].node;
    const FlowNode& ln = *nodes_[static_cast<std::size_t>(last)].node;
    GpuRegion r;
    r.var_index = v;
    r.file_id = fn.file_id;
    r.anchor = Span{fn.span.begin, ln.span.end};
    if (info.file_id == r.file_id && r.anchor.contains(info.decl_span)) return;

    int begin = first;
    int end = nodes_[static_cast<std::size_t>(last)].end;
    // `exposed` is a GPU read or partial write not preceded, within the
    // region, by a loop that overwrites the whole array without reading it.
    bool exposed = false;
    bool covered = false;
    bool write = false;
    for (int n = begin; n < end; ++n) {
      if (!gpu_root_[static_cast<std::size_t>(n)]) continue;
      const VarSummary* s = summary(n, v);
      if (!s || !s->gpu) continue;
      r.loops.push_back(nodes_[static_cast<std::size_t>(n)].node->loop_id);
      if (!covered) exposed |= s->gpu_read || s->gpu_partial;
      covered |= s->gpu_write && !s->gpu_partial && !s->gpu_read;
      write |= s->gpu_write;
    }
    if (r.loops.empty()) return;

    bool global = info.scope == VarScope::Global;
    const auto& w = writes_.count(v) ? writes_.at(v) : empty_;
    const auto& a = accesses_.count(v) ? accesses_.at(v) : empty_;
    bool before = global || (!w.empty() && w.front() < begin);
    bool after = global || (!a.empty() && a.back() >= end);
    for (int p = seq; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent) {
      const FlowNode& anc = *nodes_[static_cast<std::size_t>(p)].node;
      auto own = anc.own.find(v);
      if (own != anc.own.end() && own->second.any()) after = true;
      if (anc.kind == FlowKind::Loop && anc.trip_count) r.multiplicity *= *anc.trip_count;
      if (repeating(anc)) {
        int hi = nodes_[static_cast<std::size_t>(p)].end;
        before = before || any_in(w, p, hi);
        after = after || any_in(a, p, hi);
      }
    }
    r.copy_in = exposed && before;
    r.copy_out = write && after;
    out.push_back(std::move(r));
  }

  // The same lexical region reached through several calls becomes one region
  // whose transfers satisfy every occurrence.
  static std::vector<GpuRegion> merge_occurrences(std::vector<GpuRegion> in) {
    std::map<std::tuple<std::string, std::size_t, std::size_t, int>, GpuRegion> merged;
    for (auto& r : in) {
      auto key = std::make_tuple(r.file_id, r.anchor.begin, r.anchor.end, r.var_index);
      auto it = merged.find(key);
      if (it == merged.end()) {
        merged.emplace(key, std::move(r));
        continue;
      }
      GpuRegion& m = it->second;
      m.copy_in |= r.copy_in;
      m.copy_out |= r.copy_out;
      m.multiplicity += r.multiplicity;
      for (int l : r.loops)
        if (std::find(m.loops.begin(), m.loops.end(), l) == m.loops.end()) m.loops.push_back(l);
    }
    std::vector<GpuRegion> out;
    for (auto& [k, r] : merged) out.push_back(std::move(r));
    return out;
  }

  const VarRefTable& refs_;
  std::set<int> on_;
  std::vector<Flat> nodes_;
  std::vector<bool> gpu_root_;
  std::vector<bool> inside_gpu_;
  std::vector<std::map<int, VarSummary>> summary_;
  std::map<int, std::vector<int>> writes_;
  std::map<int, std::vector<int>> accesses_;
  const std::vector<int> empty_;
};

PlanEntry entry_from_region(const GpuRegion& r, const VarRefTable& refs, const LoopTable& loops) {
  PlanEntry e;
  e.var_index = r.var_index;
  e.variable = refs.vars[static_cast<std::size_t>(r.var_index)].name;
  e.direction = direction_of(r.copy_in, r.copy_out);
  e.file_id = r.file_id;
  e.region_span = r.anchor;
  e.loops = r.loops;
  e.multiplicity = r.multiplicity;
  for (int id : r.loops) {
    const LoopInfo* l = loops.find(id);
    if (!l || !(l->file_id == r.file_id && l->span == r.anchor)) e.present_sites.push_back(id);
  }
  std::sort(e.present_sites.begin(), e.present_sites.end());
  return e;
}

void sort_entries(std::vector<PlanEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const PlanEntry& a, const PlanEntry& b) {
    return std::tie(a.file_id, a.region_span.begin, a.region_span.end, a.variable) <
           std::tie(b.file_id, b.region_span.begin, b.region_span.end, b.variable);
  });
}

}  // namespace

std::vector<int> effective_gpu_loops(const Genome& genome, const std::vector<int>& gene_loops,
                                     const LoopTable& loops) {
  if (genome.size() != gene_loops.size()) throw GenomeLengthMismatch(genome.size(), gene_loops.size());
  std::set<int> on;
  for (std::size_t i = 0; i < genome.size(); ++i)
    if (genome[i]) on.insert(gene_loops[i]);
  std::vector<int> out;
  for (int id : on) {
    const LoopInfo* l = loops.find(id);
    bool shadowed = false;
    for (const LoopInfo* p = l && l->parent_loop ? loops.find(*l->parent_loop) : nullptr; p && !shadowed;
         p = p->parent_loop ? loops.find(*p->parent_loop) : nullptr)
      shadowed = on.count(p->loop_id) > 0;
    if (!shadowed) out.push_back(id);
  }
  return out;
}

Genome effective_placement(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops) {
  std::set<int> roots;
  for (int id : effective_gpu_loops(genome, gene_loops, loops)) roots.insert(id);
  Genome out(genome.size(), 0);
  for (std::size_t i = 0; i < genome.size(); ++i) {
    for (const LoopInfo* l = loops.find(gene_loops[i]); l && !out[i];
         l = l->parent_loop ? loops.find(*l->parent_loop) : nullptr)
      out[i] = roots.count(l->loop_id) ? 1 : 0;
  }
  return out;
}

TransferPlan plan_transfers(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops,
                            const VarRefTable& refs) {
  Planner p(genome, gene_loops, loops, refs);
  TransferPlan plan;
  for (const auto& r : p.regions(false)) plan.entries.push_back(entry_from_region(r, refs, loops));
  sort_entries(plan.entries);
  return plan;
}

GpuRegionMap build_region_map(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops,
                              const VarRefTable& refs) {
  Planner p(genome, gene_loops, loops, refs);
  return GpuRegionMap{p.regions(true)};
}

TransferPlan hoist_and_batch(const TransferPlan& plan, const GpuRegionMap& regions, const VarRefTable& refs) {
  std::map<int, std::vector<const GpuRegion*>> by_var;
  for (const auto& r : regions.regions) by_var[r.var_index].push_back(&r);
  std::map<int, long long> per_loop_events;
  for (const auto& e : plan.entries) per_loop_events[e.var_index] += e.events();

  TransferPlan out;
  std::set<int> batched;
  for (const auto& [v, rs] : by_var) {
    long long events = 0;
    for (const GpuRegion* r : rs)
      events += (static_cast<long long>(r->copy_in) + static_cast<long long>(r->copy_out)) * r->multiplicity;
    auto it = per_loop_events.find(v);
    long long before = it == per_loop_events.end() ? 0 : it->second;
    if (it != per_loop_events.end() && events > before) continue;
    batched.insert(v);
  }
  // Present sites need loop spans; recover them from the per-loop entries,
  // whose anchors are exactly their loops.
  std::map<int, std::pair<std::string, Span>> loop_span;
  for (const auto& e : plan.entries)
    if (e.loops.size() == 1 && e.present_sites.empty()) loop_span[e.loops.front()] = {e.file_id, e.region_span};
  for (const auto& e : plan.entries)
    if (!batched.count(e.var_index)) out.entries.push_back(e);
  for (int v : batched) {
    for (const GpuRegion* r : by_var[v]) {
      PlanEntry e;
      e.var_index = v;
      e.variable = refs.vars[static_cast<std::size_t>(v)].name;
      e.direction = direction_of(r->copy_in, r->copy_out);
      e.file_id = r->file_id;
      e.region_span = r->anchor;
      e.loops = r->loops;
      e.multiplicity = r->multiplicity;
      for (int id : r->loops) {
        auto ls = loop_span.find(id);
        bool is_anchor = ls != loop_span.end() && ls->second.first == r->file_id && ls->second.second == r->anchor;
        if (!is_anchor) e.present_sites.push_back(id);
      }
      std::sort(e.present_sites.begin(), e.present_sites.end());
      out.entries.push_back(std::move(e));
    }
  }
  sort_entries(out.entries);
  return out;
}

TransferPlan suppress_auto_transfers(const TransferPlan& plan, const VarRefTable& refs) {
  TransferPlan out = plan;
  for (auto& e : out.entries) {
    const VarInfo& v = refs.vars[static_cast<std::size_t>(e.var_index)];
    e.temp_region = v.scope == VarScope::Global && v.decl_anchorable && v.bytes().has_value();
  }
  return out;
}

TransferPlan make_transfer_plan(const Genome& genome, const std::vector<int>& gene_loops, const LoopTable& loops,
                                const VarRefTable& refs) {
  TransferPlan per_loop = plan_transfers(genome, gene_loops, loops, refs);
  GpuRegionMap regions = build_region_map(genome, gene_loops, loops, refs);
  return suppress_auto_transfers(hoist_and_batch(per_loop, regions, refs), refs);
}

std::string plan_to_json(const TransferPlan& plan) {
  json arr = json::array();
  for (const auto& e : plan.entries) {
    arr.push_back({{"var", e.variable},
                   {"direction", std::string(to_string(e.direction))},
                   {"file_id", e.file_id},
                   {"region_span", json::array({e.region_span.begin, e.region_span.end})},
                   {"present", e.present_sites},
                   {"loops", e.loops},
                   {"temp_region", e.temp_region},
                   {"multiplicity", e.multiplicity}});
  }
  return arr.dump(2) + "\n";
}

TransferPlan plan_from_json(const std::string& text, const VarRefTable& refs) {
  try {
    TransferPlan plan;
    for (const auto& j : json::parse(text)) {
      PlanEntry e;
      e.variable = j.at("var").get<std::string>();
      auto idx = refs.var_index(e.variable);
      if (!idx) throw FormatError("plan names unknown variable '" + e.variable + "'");
      e.var_index = *idx;
      e.direction = transfer_direction_from_string(j.at("direction").get<std::string>());
      e.file_id = j.value("file_id", std::string{});
      e.region_span = Span{j.at("region_span")[0].get<std::size_t>(), j.at("region_span")[1].get<std::size_t>()};
      e.present_sites = j.value("present", std::vector<int>{});
      e.loops = j.value("loops", std::vector<int>{});
      e.temp_region = j.value("temp_region", false);
      e.multiplicity = j.value("multiplicity", 1LL);
      plan.entries.push_back(std::move(e));
    }
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed transfer plan: ") + e.what());
  }
}

}  // namespace acctune
