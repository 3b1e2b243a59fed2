#include "acctune/emitter.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <json.hpp>

#include "acctune/error.hpp"

namespace acctune {

const std::string& AnnotatedVariant::text_of(const std::string& file_id) const {
  for (const auto& [id, text] : files)
    if (id == file_id) return text;
  throw Error("variant has no file '" + file_id + "'");
}

std::string clause_item(const VarInfo& var) {
  std::string s = var.source_name;
  for (long long e : var.extents) {
    if (e <= 0) throw EmissionError("array '" + var.source_name + "' has an unknown extent");
    s += "[0:" + std::to_string(e) + "]";
  }
  return s;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) {
    if (!s.empty()) s += ',';
    s += i;
  }
  return s;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start + 1));
    start = nl + 1;
  }
  return lines;
}

std::string indent_of(const std::string& line) {
  std::size_t n = 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return line.substr(0, n);
}

struct Group {
  Span span;
  int first_line = 0;
  int last_line = 0;
  std::vector<const PlanEntry*> entries;
};

// Outer regions first when several open on the same line.
bool outer_first(const Group* a, const Group* b) {
  return std::make_tuple(a->span.begin, -static_cast<long long>(a->span.end)) <
         std::make_tuple(b->span.begin, -static_cast<long long>(b->span.end));
}

// Inner regions first when several close on the same line.
bool inner_first(const Group* a, const Group* b) {
  return std::make_tuple(-static_cast<long long>(a->span.begin), a->span.end) <
         std::make_tuple(-static_cast<long long>(b->span.begin), b->span.end);
}

}  // namespace

AnnotatedVariant emit_variant(std::span<const SourceUnit> units, const Genome& genome,
                              const std::vector<EligibilityVerdict>& verdicts, const TransferPlan& plan,
                              const LoopTable& loops, const VarRefTable& refs) {
  std::vector<int> genes = gene_loops(verdicts);
  if (genome.size() != genes.size()) throw GenomeLengthMismatch(genome.size(), genes.size());
  AnnotatedVariant out;
  out.genome = genome;
  out.kinds = kind_map(verdicts);
  out.plan = plan;

  std::set<int> on;
  for (std::size_t i = 0; i < genome.size(); ++i)
    if (genome[i]) on.insert(genes[i]);
  std::set<int> roots;
  for (int id : effective_gpu_loops(genome, genes, loops)) roots.insert(id);

  for (const auto& e : plan.entries) {
    for (int id : e.loops)
      if (!on.count(id))
        throw PlanInconsistent("plan entry for '" + e.variable + "' serves loop " + std::to_string(id) +
                               ", which is not offloaded");
    for (int id : e.present_sites) {
      const LoopInfo* l = loops.find(id);
      if (!l || l->file_id != e.file_id || !e.region_span.contains(l->span))
        throw PlanInconsistent("present site loop " + std::to_string(id) + " for '" + e.variable +
                               "' lies outside its data region");
    }
  }

  for (const auto& unit : units) {
    const std::string& fid = unit.file_id;
    std::vector<std::string> lines = split_lines(unit.original_text);
    auto line_text = [&](int line) -> const std::string& {
      static const std::string empty;
      return line >= 1 && static_cast<std::size_t>(line) <= lines.size() ? lines[static_cast<std::size_t>(line - 1)]
                                                                          : empty;
    };
    auto line_of_span_end = [&](const Span& s) { return unit.line_of(s.end == 0 ? 0 : s.end - 1); };

    std::map<std::pair<std::size_t, std::size_t>, Group> data_groups;
    std::map<std::pair<std::size_t, std::size_t>, Group> temp_groups;
    for (const auto& e : plan.entries) {
      if (e.file_id != fid) continue;
      auto& groups = e.temp_region ? temp_groups : data_groups;
      Group& g = groups[{e.region_span.begin, e.region_span.end}];
      g.span = e.region_span;
      g.first_line = unit.line_of(e.region_span.begin);
      g.last_line = line_of_span_end(e.region_span);
      g.entries.push_back(&e);
    }

    // Insertions keyed by original line; `before` lines precede it, `after` lines follow it.
    std::map<int, std::vector<std::string>> before;
    std::map<int, std::vector<std::string>> after;

    std::vector<const Group*> temps;
    for (const auto& [k, g] : temp_groups) temps.push_back(&g);
    std::vector<const Group*> datas;
    for (const auto& [k, g] : data_groups) datas.push_back(&g);

    auto items_of = [&](const Group& g, bool (*pick)(TransferDirection)) {
      std::vector<std::string> items;
      for (const PlanEntry* e : g.entries)
        if (pick(e->direction)) items.push_back(clause_item(refs.vars[static_cast<std::size_t>(e->var_index)]));
      std::sort(items.begin(), items.end());
      return items;
    };

    std::sort(temps.begin(), temps.end(), outer_first);
    for (const Group* g : temps) {
      auto items = items_of(*g, moves_in);
      if (!items.empty())
        before[g->first_line].push_back(indent_of(line_text(g->first_line)) + "#pragma acc update device(" +
                                        join(items) + ")");
    }
    std::sort(datas.begin(), datas.end(), outer_first);
    for (const Group* g : datas) {
      std::vector<std::string> copy, in, outv, create;
      for (const PlanEntry* e : g->entries) {
        std::string item = clause_item(refs.vars[static_cast<std::size_t>(e->var_index)]);
        switch (e->direction) {
          case TransferDirection::Copy: copy.push_back(item); break;
          case TransferDirection::CopyIn: in.push_back(item); break;
          case TransferDirection::CopyOut: outv.push_back(item); break;
          case TransferDirection::None: create.push_back(item); break;
        }
      }
      std::string pragma = "#pragma acc data";
      for (auto [name, list] : {std::pair{"copy", &copy}, {"copyin", &in}, {"copyout", &outv}, {"create", &create}}) {
        if (list->empty()) continue;
        std::sort(list->begin(), list->end());
        pragma += std::string(" ") + name + "(" + join(*list) + ")";
      }
      std::string ind = indent_of(line_text(g->first_line));
      before[g->first_line].push_back(ind + pragma);
      before[g->first_line].push_back(ind + "{");
    }

    // Present clauses and compute directives, per loop.
    std::map<int, std::vector<std::string>> present;
    for (const auto& e : plan.entries)
      if (e.file_id == fid)
        for (int id : e.present_sites)
          present[id].push_back(clause_item(refs.vars[static_cast<std::size_t>(e.var_index)]));
    for (const auto& l : loops.loops) {
      if (l.file_id != fid) continue;
      std::string ind = indent_of(line_text(l.line));
      auto p = present.find(l.loop_id);
      if (p != present.end()) {
        auto items = p->second;
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        before[l.line].push_back(ind + "#pragma acc data present(" + join(items) + ")");
      }
      if (roots.count(l.loop_id)) {
        auto k = out.kinds.find(l.loop_id);
        if (k == out.kinds.end()) throw PlanInconsistent("offloaded loop " + std::to_string(l.loop_id) + " has no kind");
        before[l.line].push_back(ind + std::string(pragma_text(k->second)));
      }
    }

    std::sort(datas.begin(), datas.end(), inner_first);
    for (const Group* g : datas) after[g->last_line].push_back(indent_of(line_text(g->first_line)) + "}");
    std::sort(temps.begin(), temps.end(), inner_first);
    for (const Group* g : temps) {
      auto items = items_of(*g, moves_out);
      if (!items.empty())
        after[g->last_line].push_back(indent_of(line_text(g->first_line)) + "#pragma acc update self(" +
                                      join(items) + ")");
    }

    // declare create after each global's declaration.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::string>> declares;
    std::set<int> declared;
    for (const auto& e : plan.entries) {
      if (!e.temp_region || !declared.insert(e.var_index).second) continue;
      const VarInfo& v = refs.vars[static_cast<std::size_t>(e.var_index)];
      if (v.file_id != fid) continue;
      declares[{v.decl_span.begin, v.decl_span.end}].push_back(clause_item(v));
    }
    for (auto& [span, items] : declares) {
      std::sort(items.begin(), items.end());
      int line = line_of_span_end(Span{span.first, span.second});
      int first = unit.line_of(span.first);
      after[line].push_back(indent_of(line_text(first)) + "#pragma acc declare create(" + join(items) + ")");
    }

    std::string text;
    int out_line = 0;
    auto put = [&](const std::string& s) {
      text += s;
      text += '\n';
      ++out_line;
      out.insertion_log.push_back(Insertion{fid, out_line, s});
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
      int line = static_cast<int>(i) + 1;
      if (auto b = before.find(line); b != before.end())
        for (const auto& s : b->second) put(s);
      text += lines[i];
      ++out_line;
      if (auto a = after.find(line); a != after.end()) {
        if (text.back() != '\n') {
          // Unterminated final line: keep the emitted file unterminated too.
          for (const auto& s : a->second) {
            text += '\n';
            text += s;
            out.insertion_log.push_back(Insertion{fid, ++out_line, s});
          }
        } else {
          for (const auto& s : a->second) put(s);
        }
      }
    }
    out.files.emplace_back(fid, std::move(text));
  }
  return out;
}

std::string strip_inserted_lines(const std::string& text, const std::vector<Insertion>& log,
                                 const std::string& file_id) {
  std::set<int> drop;
  for (const auto& i : log)
    if (i.file_id == file_id) drop.insert(i.line);
  std::vector<std::string> lines = split_lines(text);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (!drop.count(static_cast<int>(i) + 1)) out += lines[i];
  bool unterminated = !text.empty() && text.back() != '\n';
  if (unterminated && drop.count(static_cast<int>(lines.size())) && !out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string insertion_log_to_json(const std::vector<Insertion>& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& i : log) arr.push_back({{"file_id", i.file_id}, {"line", i.line}, {"text", i.text}});
  return arr.dump(2) + "\n";
}

}  // namespace acctune
