#include "acctune/structure_io.hpp"

#include <algorithm>
#include <functional>
#include <tuple>

#include <json.hpp>

#include "acctune/error.hpp"

namespace acctune {

using nlohmann::json;

ProjectModel analyze_project(std::span<const SourceUnit> units, std::vector<std::string> source_paths) {
  ProjectModel m;
  for (const auto& u : units) m.file_ids.push_back(u.file_id);
  m.source_paths = std::move(source_paths);
  m.loops = extract_loops(units);
  m.refs = analyze_variable_refs(units, m.loops);
  m.has_flow = true;
  return m;
}

namespace {

json span_json(const Span& s) { return json::array({s.begin, s.end}); }

Span span_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("span must be [start, end]");
  Span s{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (s.end < s.begin) throw FormatError("span end precedes start");
  return s;
}

json flags_json(const AccessFlags& f) {
  return json{{"read", f.read}, {"written", f.written}, {"defined", f.defined}};
}

AccessFlags flags_from(const json& j) {
  AccessFlags f;
  f.read = j.value("read", false);
  f.written = j.value("written", false);
  f.defined = j.value("defined", false);
  return f;
}

json flow_json(const FlowNode& n, const VarRefTable& refs) {
  json j{{"kind", std::string(to_string(n.kind))}};
  if (!n.region.empty()) j["region"] = n.region;
  if (n.kind == FlowKind::Loop) j["loop_id"] = n.loop_id;
  if (!n.file_id.empty()) {
    j["file_id"] = n.file_id;
    j["span"] = span_json(n.span);
  }
  if (n.anchorable) j["anchorable"] = true;
  if (n.is_decl) j["is_decl"] = true;
  if (!n.function.empty()) j["function"] = n.function;
  if (n.invocation) j["invocation"] = n.invocation;
  if (n.trip_count) j["trip_count"] = *n.trip_count;
  if (!n.own.empty()) {
    json own = json::array();
    for (const auto& [v, f] : n.own) {
      json e = flags_json(f);
      e["var"] = refs.vars[static_cast<std::size_t>(v)].name;
      own.push_back(std::move(e));
    }
    j["own"] = std::move(own);
  }
  if (!n.children.empty()) {
    json kids = json::array();
    for (const auto& c : n.children) kids.push_back(flow_json(c, refs));
    j["children"] = std::move(kids);
  }
  return j;
}

FlowKind flow_kind_from(const std::string& s) {
  if (s == "seq") return FlowKind::Seq;
  if (s == "host") return FlowKind::Host;
  if (s == "loop") return FlowKind::Loop;
  if (s == "repeat") return FlowKind::Repeat;
  if (s == "branch") return FlowKind::Branch;
  if (s == "call") return FlowKind::Call;
  throw FormatError("unknown flow node kind '" + s + "'");
}

FlowNode flow_from(const json& j, const VarRefTable& refs) {
  FlowNode n;
  n.kind = flow_kind_from(j.at("kind").get<std::string>());
  n.region = j.value("region", std::string{});
  n.loop_id = j.value("loop_id", -1);
  n.file_id = j.value("file_id", std::string{});
  if (j.contains("span")) n.span = span_from(j["span"]);
  n.anchorable = j.value("anchorable", false);
  n.is_decl = j.value("is_decl", false);
  n.function = j.value("function", std::string{});
  n.invocation = j.value("invocation", 0);
  if (j.contains("trip_count") && !j["trip_count"].is_null()) n.trip_count = j["trip_count"].get<long long>();
  if (j.contains("own")) {
    for (const auto& e : j["own"]) {
      auto idx = refs.var_index(e.at("var").get<std::string>());
      if (!idx) throw FormatError("flow references unknown variable '" + e["var"].get<std::string>() + "'");
      n.own[*idx] = flags_from(e);
    }
  }
  if (j.contains("children"))
    for (const auto& c : j["children"]) n.children.push_back(flow_from(c, refs));
  return n;
}

std::string normalize_region(const json& r) {
  if (r.is_number_integer()) return "loop:" + std::to_string(r.get<int>());
  if (!r.is_string()) throw FormatError("region must be a string or loop id");
  std::string s = r.get<std::string>();
  if (s == "pre" || s == "post" || s.rfind("host:", 0) == 0 || s.rfind("loop:", 0) == 0) return s;
  throw FormatError("unknown region '" + s + "'");
}

// Flow for a minimal import: host "pre", the loop forest in id order, host
// "post". Loop regions carry their aggregated flags, which treats every
// access in a loop as possibly executing in its own (host) part.
FlowNode default_flow(const ProjectModel& m) {
  FlowNode root;
  root.kind = FlowKind::Seq;
  auto host = [&](const std::string& region) {
    FlowNode h;
    h.kind = FlowKind::Host;
    h.region = region;
    for (const auto& e : m.refs.entries)
      if (e.region == region) h.own[e.var] |= e.flags;
    return h;
  };
  std::function<FlowNode(const LoopInfo&)> loop_node = [&](const LoopInfo& l) {
    FlowNode n;
    n.kind = FlowKind::Loop;
    n.loop_id = l.loop_id;
    n.region = "loop:" + std::to_string(l.loop_id);
    n.file_id = l.file_id;
    n.span = l.span;
    n.anchorable = l.anchorable;
    n.trip_count = l.trip_count_estimate;
    for (const auto& e : m.refs.entries)
      if (e.region == n.region) n.own[e.var] |= e.flags;
    FlowNode body;
    body.kind = FlowKind::Seq;
    for (const auto& c : m.loops.loops)
      if (c.parent_loop == l.loop_id) body.children.push_back(loop_node(c));
    n.children.push_back(std::move(body));
    return n;
  };
  root.children.push_back(host("pre"));
  for (const auto& l : m.loops.loops)
    if (!l.parent_loop) root.children.push_back(loop_node(l));
  root.children.push_back(host("post"));
  return root;
}

}  // namespace

std::string to_json(const ProjectModel& m) {
  json files = json::array();
  for (std::size_t f = 0; f < m.file_ids.size(); ++f) {
    const std::string& fid = m.file_ids[f];
    json jf{{"file_id", fid}};
    if (f < m.source_paths.size()) jf["path"] = m.source_paths[f];
    json loops = json::array();
    for (const auto& l : m.loops.loops) {
      if (l.file_id != fid) continue;
      json jl{{"loop_id", l.loop_id},
              {"span", span_json(l.span)},
              {"parent", l.parent_loop ? json(*l.parent_loop) : json(nullptr)},
              {"shape", std::string(to_string(l.shape))},
              {"index_var", l.index_var},
              {"trip_count", l.trip_count_estimate ? json(*l.trip_count_estimate) : json(nullptr)},
              {"line", l.line},
              {"depth", l.depth},
              {"canonical", l.canonical},
              {"anchorable", l.anchorable},
              {"unit_step", l.unit_step}};
      if (l.lower_bound) jl["lower"] = *l.lower_bound;
      if (l.upper_bound) jl["upper"] = *l.upper_bound;
      loops.push_back(std::move(jl));
    }
    jf["loops"] = std::move(loops);
    json vars = json::array();
    for (std::size_t v = 0; v < m.refs.vars.size(); ++v) {
      const VarInfo& info = m.refs.vars[v];
      bool here = info.file_id == fid || (info.file_id.empty() && f == 0);
      if (!here) continue;
      json refs = json::array();
      for (const auto& e : m.refs.entries) {
        if (e.var != static_cast<int>(v)) continue;
        json je = flags_json(e.flags);
        je["region"] = e.region;
        refs.push_back(std::move(je));
      }
      json jv{{"name", info.name},
              {"source_name", info.source_name},
              {"scope", std::string(to_string(info.scope))},
              {"type", std::string(to_string(info.type))},
              {"array", info.is_array},
              {"extents", info.extents},
              {"initialized", info.has_initializer},
              {"decl_span", span_json(info.decl_span)},
              {"decl_anchorable", info.decl_anchorable},
              {"refs", std::move(refs)}};
      if (!info.function.empty()) jv["function"] = info.function;
      vars.push_back(std::move(jv));
    }
    jf["vars"] = std::move(vars);
    files.push_back(std::move(jf));
  }
  json root{{"files", std::move(files)}};
  if (m.has_flow) root["flow"] = flow_json(m.refs.flow, m.refs);
  json fw = json::object();
  for (const auto& [loop, vs] : m.refs.full_writes) {
    json names = json::array();
    for (int v : vs) names.push_back(m.refs.vars[static_cast<std::size_t>(v)].name);
    fw[std::to_string(loop)] = std::move(names);
  }
  root["full_writes"] = std::move(fw);
  return root.dump(2) + "\n";
}

ProjectModel project_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("structural description is not valid JSON: ") + e.what());
  }
  try {
    ProjectModel m;
    if (!root.contains("files") || !root["files"].is_array())
      throw FormatError("structural description needs a \"files\" array");
    std::vector<std::pair<int, std::vector<RefEntry>>> pending;
    for (const auto& jf : root["files"]) {
      std::string fid = jf.at("file_id").get<std::string>();
      m.file_ids.push_back(fid);
      if (jf.contains("path")) m.source_paths.push_back(jf["path"].get<std::string>());
      for (const auto& jl : jf.value("loops", json::array())) {
        LoopInfo l;
        l.loop_id = jl.at("loop_id").get<int>();
        l.file_id = fid;
        l.span = span_from(jl.at("span"));
        if (jl.contains("parent") && !jl["parent"].is_null()) l.parent_loop = jl["parent"].get<int>();
        l.shape = loop_shape_from_string(jl.value("shape", std::string("SingleLoop")));
        l.index_var = jl.value("index_var", std::string{});
        if (jl.contains("trip_count") && !jl["trip_count"].is_null())
          l.trip_count_estimate = jl["trip_count"].get<long long>();
        l.line = jl.value("line", 0);
        l.depth = jl.value("depth", 0);
        l.canonical = jl.value("canonical", true);
        l.anchorable = jl.value("anchorable", true);
        l.unit_step = jl.value("unit_step", false);
        if (jl.contains("lower")) l.lower_bound = jl["lower"].get<long long>();
        if (jl.contains("upper")) l.upper_bound = jl["upper"].get<long long>();
        m.loops.loops.push_back(std::move(l));
      }
      for (const auto& jv : jf.value("vars", json::array())) {
        VarInfo v;
        v.name = jv.at("name").get<std::string>();
        v.source_name = jv.value("source_name", v.name);
        v.scope = var_scope_from_string(jv.value("scope", std::string("global")));
        std::string type = jv.value("type", std::string("double"));
        v.type = type == "int" ? BaseType::Int : type == "long" ? BaseType::Long
               : type == "char" ? BaseType::Char : type == "float" ? BaseType::Float : BaseType::Double;
        v.extents = jv.value("extents", std::vector<long long>{});
        v.is_array = jv.value("array", !v.extents.empty());
        v.has_initializer = jv.value("initialized", false);
        v.file_id = fid;
        v.function = jv.value("function", std::string{});
        if (jv.contains("decl_span")) v.decl_span = span_from(jv["decl_span"]);
        v.decl_anchorable = jv.value("decl_anchorable", false);
        int idx = static_cast<int>(m.refs.vars.size());
        std::vector<RefEntry> refs;
        for (const auto& jr : jv.value("refs", json::array()))
          refs.push_back(RefEntry{idx, normalize_region(jr.at("region")), flags_from(jr)});
        m.refs.vars.push_back(std::move(v));
        pending.emplace_back(idx, std::move(refs));
      }
    }
    std::sort(m.loops.loops.begin(), m.loops.loops.end(),
              [](const LoopInfo& a, const LoopInfo& b) { return a.loop_id < b.loop_id; });
    for (std::size_t i = 1; i < m.loops.loops.size(); ++i)
      if (m.loops.loops[i].loop_id == m.loops.loops[i - 1].loop_id)
        throw FormatError("duplicate loop_id " + std::to_string(m.loops.loops[i].loop_id));
    for (const auto& l : m.loops.loops) {
      if (!l.parent_loop) continue;
      const LoopInfo* p = m.loops.find(*l.parent_loop);
      if (!p) throw FormatError("loop " + std::to_string(l.loop_id) + " has unknown parent");
      if (p->file_id == l.file_id && !p->span.contains(l.span))
        throw FormatError("loop " + std::to_string(l.loop_id) + " is not contained in its parent");
    }
    if (root.contains("full_writes")) {
      for (const auto& [loop, names] : root["full_writes"].items()) {
        for (const auto& n : names) {
          auto idx = m.refs.var_index(n.get<std::string>());
          if (idx) m.refs.full_writes[std::stoi(loop)].insert(*idx);
        }
      }
    }
    if (root.contains("flow")) {
      m.refs.flow = flow_from(root["flow"], m.refs);
      m.refs.rebuild_entries();
      m.has_flow = true;
    } else {
      for (auto& [idx, refs] : pending)
        for (auto& r : refs) {
          if (r.region.rfind("host:", 0) == 0)
            throw FormatError("host regions other than pre/post need an explicit \"flow\"");
          m.refs.entries.push_back(std::move(r));
        }
      std::sort(m.refs.entries.begin(), m.refs.entries.end(), [](const RefEntry& a, const RefEntry& b) {
        return std::tie(a.var, a.region) < std::tie(b.var, b.region);
      });
      m.refs.flow = default_flow(m);
      m.has_flow = false;
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed structural description: ") + e.what());
  }
}

}  // namespace acctune
