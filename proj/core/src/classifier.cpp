#include "acctune/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "acctune/error.hpp"
#include "acctune/process.hpp"

namespace acctune {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(DirectiveKind k) noexcept {
  switch (k) {
    case DirectiveKind::Kernels: return "Kernels";
    case DirectiveKind::ParallelLoop: return "ParallelLoop";
    case DirectiveKind::ParallelLoopVector: return "ParallelLoopVector";
  }
  return "Kernels";
}

DirectiveKind directive_kind_from_string(std::string_view s) {
  if (s == "Kernels") return DirectiveKind::Kernels;
  if (s == "ParallelLoop") return DirectiveKind::ParallelLoop;
  if (s == "ParallelLoopVector") return DirectiveKind::ParallelLoopVector;
  throw FormatError("unknown directive kind '" + std::string(s) + "'");
}

std::string_view pragma_text(DirectiveKind k) noexcept {
  switch (k) {
    case DirectiveKind::Kernels: return "#pragma acc kernels";
    case DirectiveKind::ParallelLoop: return "#pragma acc parallel loop";
    case DirectiveKind::ParallelLoopVector: return "#pragma acc parallel loop vector";
  }
  return "#pragma acc kernels";
}

namespace {

using Constants = std::vector<std::pair<std::string, long long>>;

bool mentions(const Expr& e, const std::string& name) {
  bool found = false;
  for_each_expr(e, [&](const Expr& x) { found = found || (x.kind == ExprKind::Ident && x.text == name); });
  return found;
}

bool has_index_expr(const Expr& e) {
  bool found = false;
  for_each_expr(e, [&](const Expr& x) { found = found || x.kind == ExprKind::Index; });
  return found;
}

struct Subscript {
  bool uses_index = false;
  bool affine = true;
  long long offset = 0;
};

// Classifies a subscript as independent of `i`, `i + c`, or anything else.
Subscript subscript_form(const Expr& e, const std::string& i, const Constants& constants) {
  Subscript s;
  if (!mentions(e, i)) return s;
  s.uses_index = true;
  if (e.kind == ExprKind::Ident) return s;
  if (e.kind == ExprKind::Binary && (e.text == "+" || e.text == "-")) {
    const Expr& a = e.args[0];
    const Expr& b = e.args[1];
    if (a.kind == ExprKind::Ident && a.text == i && !mentions(b, i)) {
      if (auto c = eval_constant(b, constants)) {
        s.offset = e.text == "+" ? *c : -*c;
        return s;
      }
    }
    if (e.text == "+" && b.kind == ExprKind::Ident && b.text == i && !mentions(a, i)) {
      if (auto c = eval_constant(a, constants)) {
        s.offset = *c;
        return s;
      }
    }
  }
  s.affine = false;
  return s;
}

struct ArrayAccess {
  std::string array;
  std::vector<const Expr*> subscripts;  // outermost dimension first
  bool write = false;
  bool read = false;
};

// Unwinds `a[x][y]` into base name and subscripts; false if the base is not a name.
bool unwind_index(const Expr& e, ArrayAccess& out) {
  const Expr* cur = &e;
  std::vector<const Expr*> subs;
  while (cur->kind == ExprKind::Index) {
    subs.push_back(&cur->args[1]);
    cur = &cur->args[0];
  }
  if (cur->kind != ExprKind::Ident) return false;
  out.array = cur->text;
  out.subscripts.assign(subs.rbegin(), subs.rend());
  return true;
}

struct BodyFacts {
  std::vector<ArrayAccess> accesses;
  std::set<std::string> declared;
  std::set<std::string> nested_index_vars;
  std::vector<std::string> scalar_writes;
  std::vector<std::string> unknown_calls;
  std::string jump;  // first break/goto/return seen
};

void collect_expr(const Expr& e, BodyFacts& f, bool is_write, bool also_read) {
  switch (e.kind) {
    case ExprKind::Index: {
      ArrayAccess a;
      if (unwind_index(e, a)) {
        a.write = is_write;
        a.read = !is_write || also_read;
        f.accesses.push_back(a);
        for (const Expr* s : a.subscripts) collect_expr(*s, f, false, false);
        return;
      }
      break;
    }
    case ExprKind::Ident:
      if (is_write) f.scalar_writes.push_back(e.text);
      return;
    case ExprKind::Assign:
      collect_expr(e.args[0], f, true, e.text != "=");
      collect_expr(e.args[1], f, false, false);
      return;
    case ExprKind::PreIncDec:
    case ExprKind::PostIncDec:
      collect_expr(e.args[0], f, true, true);
      return;
    case ExprKind::Call:
      if (!is_device_math_function(e.text)) f.unknown_calls.push_back(e.text);
      break;
    default: break;
  }
  for (const auto& a : e.args) collect_expr(a, f, false, false);
}

void collect_stmt(const Stmt& s, BodyFacts& f) {
  switch (s.kind) {
    case StmtKind::Break:
      if (f.jump.empty()) f.jump = "break";
      break;
    case StmtKind::Goto:
      if (f.jump.empty()) f.jump = "goto";
      break;
    case StmtKind::Return:
      if (f.jump.empty()) f.jump = "return";
      break;
    case StmtKind::Decl:
      if (s.decl)
        for (const auto& d : s.decl->declarators) {
          f.declared.insert(d.name);
          if (d.init) collect_expr(*d.init, f, false, false);
          for (const auto& x : d.init_list) collect_expr(x, f, false, false);
        }
      break;
    case StmtKind::For: {
      LoopHeader h = analyze_loop_header(s);
      if (!h.index_var.empty()) f.nested_index_vars.insert(h.index_var);
      break;
    }
    default: break;
  }
  if (s.expr) collect_expr(*s.expr, f, false, false);
  if (s.step) collect_expr(*s.step, f, false, false);
  for (const auto& i : s.init) collect_stmt(i, f);
  for (const auto& c : s.children) collect_stmt(c, f);
}

// Rule check for one loop statement; returns a diagnostic or empty when accepted.
std::string check_loop(const Stmt& loop, DirectiveKind kind, const Constants& constants) {
  LoopHeader h = analyze_loop_header(loop, constants);
  if (!h.canonical) return "loop header is not in canonical form";
  const std::string& i = h.index_var;
  BodyFacts f;
  for (const auto& c : loop.children) collect_stmt(c, f);

  if (!f.jump.empty()) return f.jump + " inside loop body";
  if (!f.unknown_calls.empty()) return "call to unknown function '" + f.unknown_calls.front() + "'";
  for (const auto& w : f.scalar_writes) {
    if (w == i) return "loop index '" + i + "' modified in body";
    if (!f.declared.count(w) && !f.nested_index_vars.count(w)) return "write to shared scalar '" + w + "'";
  }

  std::set<std::string> written;
  for (const auto& a : f.accesses)
    if (a.write && !f.declared.count(a.array)) written.insert(a.array);

  long long dir = h.step > 0 ? 1 : -1;
  for (const auto& name : written) {
    std::optional<std::size_t> dim;
    std::optional<long long> write_offset;
    std::vector<long long> read_offsets;
    for (const auto& a : f.accesses) {
      if (a.array != name) continue;
      std::optional<std::size_t> here;
      long long offset = 0;
      for (std::size_t d = 0; d < a.subscripts.size(); ++d) {
        Subscript s = subscript_form(*a.subscripts[d], i, constants);
        if (!s.uses_index) continue;
        if (!s.affine || here) return "non-affine subscript on '" + name + "'";
        here = d;
        offset = s.offset;
      }
      for (const Expr* s : a.subscripts)
        if (mentions(*s, i) && has_index_expr(*s)) return "non-affine subscript on '" + name + "'";
      if (!here) return "access to '" + name + "' independent of loop index '" + i + "'";
      if (dim && *dim != *here) return "loop index in different subscript positions of '" + name + "'";
      dim = here;
      if (a.write) {
        if (write_offset && *write_offset != offset) return "output dependence on '" + name + "'";
        write_offset = offset;
      }
      if (a.read) read_offsets.push_back(offset);
    }
    for (long long r : read_offsets) {
      long long delta = (r - *write_offset) * dir;
      if (delta < 0) return "loop-carried dependence on '" + name + "'";
      if (delta > 0 && kind != DirectiveKind::ParallelLoopVector)
        return "anti-dependence on '" + name + "' prevents parallelization";
    }
  }
  return {};
}

const Stmt* find_directive_target(const SourceUnit& unit) {
  const Stmt* found = nullptr;
  for_each_stmt(unit, [&](const Stmt& s, int) {
    if (found || s.kind != StmtKind::For) return;
    for (const auto& p : s.pragmas)
      if (p.rfind("acc", 0) == 0) found = &s;
  });
  return found;
}

std::string insert_line_before(const std::string& text, const std::vector<std::size_t>& line_starts, int line,
                               std::string_view content) {
  std::size_t at = line_starts[static_cast<std::size_t>(line - 1)];
  std::size_t ws = at;
  while (ws < text.size() && (text[ws] == ' ' || text[ws] == '\t')) ++ws;
  std::string out = text.substr(0, at);
  out += text.substr(at, ws - at);
  out += content;
  out += '\n';
  out += text.substr(at);
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

std::string substitute(std::string t, const std::string& key, const std::string& value) {
  for (std::size_t p = t.find(key); p != std::string::npos; p = t.find(key, p + value.size()))
    t.replace(p, key.size(), value);
  return t;
}

}  // namespace

ProbeResult StaticRuleProbe::probe(const ProbeRequest& request) {
  auto start = std::chrono::steady_clock::now();
  ProbeResult r;
  if (request.variant_source.empty()) {
    r.accepted = true;
    r.diagnostic = "no source available; accepted by shape rule";
  } else {
    SourceUnit unit = parse_source(request.variant_source, request.file_id);
    const Stmt* target = find_directive_target(unit);
    if (!target) {
      r.diagnostic = "no loop follows the directive";
    } else {
      DirectiveKind kind = request.kind;
      for (const auto& p : target->pragmas) {
        if ("#pragma " + p == pragma_text(DirectiveKind::ParallelLoopVector)) kind = DirectiveKind::ParallelLoopVector;
        else if ("#pragma " + p == pragma_text(DirectiveKind::ParallelLoop)) kind = DirectiveKind::ParallelLoop;
        else if ("#pragma " + p == pragma_text(DirectiveKind::Kernels)) kind = DirectiveKind::Kernels;
      }
      r.diagnostic = check_loop(*target, kind, integer_constants(unit));
      r.accepted = r.diagnostic.empty();
    }
  }
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

CommandProbe::CommandProbe(std::string command_template, std::size_t capacity, std::optional<double> timeout_s)
    : template_(std::move(command_template)), capacity_(std::max<std::size_t>(capacity, 1)), timeout_s_(timeout_s) {
  if (template_.empty()) throw ProbeUnavailable("probe command template is empty");
}

ProbeResult CommandProbe::probe(const ProbeRequest& request) {
  std::error_code ec;
  fs::path base = fs::temp_directory_path(ec);
  if (ec) throw ProbeUnavailable("no temporary directory: " + ec.message());
  std::string pattern = (base / "acctune-probe-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw ProbeUnavailable("cannot create probe directory under " + base.string());
  fs::path workdir(pattern);
  auto write_file = [&](const std::string& file_id, const std::string& text) {
    fs::path p = workdir / fs::path(file_id).filename();
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw ProbeUnavailable("cannot write probe file " + p.string());
    return p;
  };
  for (const auto& u : request.units)
    if (u.file_id != request.file_id) write_file(u.file_id, u.original_text);
  fs::path src = write_file(request.file_id, request.variant_source);

  std::string cmd = substitute(template_, "{src}", shell_quote(src.string()));
  cmd = substitute(cmd, "{workdir}", shell_quote(workdir.string()));
  ProcessResult pr = run_shell(cmd, timeout_s_, workdir.string());
  fs::remove_all(workdir, ec);
  if (pr.exit_code == 127) throw ProbeUnavailable("probe command not found: " + trim(pr.err));
  ProbeResult r;
  r.elapsed_ms = pr.wall_seconds * 1000.0;
  r.accepted = pr.exit_code == 0 && !pr.timed_out;
  if (!r.accepted) {
    r.diagnostic = pr.timed_out ? std::string("probe timed out") : trim(pr.err);
    if (r.diagnostic.empty()) r.diagnostic = "exit status " + std::to_string(pr.exit_code);
  }
  return r;
}

std::unique_ptr<CompileProbe> make_probe(const ProbeConfig& config) {
  if (config.mode == ProbeConfig::Mode::Static) return std::make_unique<StaticRuleProbe>();
  return std::make_unique<CommandProbe>(config.command, config.capacity, config.timeout_s);
}

ProbeResult probe_compile(const std::string& variant_source, const ProbeConfig& config, DirectiveKind kind,
                          const std::string& file_id) {
  auto probe = make_probe(config);
  ProbeRequest req;
  req.kind = kind;
  req.variant_source = variant_source;
  req.file_id = file_id;
  return probe->probe(req);
}

EligibilityVerdict classify_loop(const LoopInfo& loop, const VarRefTable& refs, CompileProbe& probe,
                                 std::span<const SourceUnit> units) {
  (void)refs;
  EligibilityVerdict v;
  v.loop_id = loop.loop_id;
  const SourceUnit* unit = nullptr;
  for (const auto& u : units)
    if (u.file_id == loop.file_id) unit = &u;
  if (!units.empty() && !unit) throw FormatError("loop " + std::to_string(loop.loop_id) + " names unknown file");
  if (!loop.anchorable) {
    v.reason = "loop does not occupy whole lines";
    return v;
  }
  if (!loop.canonical) {
    v.reason = "loop header is not in canonical form";
    return v;
  }
  bool kernels_shape = loop.shape == LoopShape::SingleLoop || loop.shape == LoopShape::TightlyNestedOuter;
  std::string last;
  for (DirectiveKind k : {DirectiveKind::Kernels, DirectiveKind::ParallelLoop, DirectiveKind::ParallelLoopVector}) {
    if (k == DirectiveKind::Kernels && !kernels_shape) {
      v.probe_log.push_back({k, "skipped: shape " + std::string(to_string(loop.shape))});
      continue;
    }
    ProbeRequest req;
    req.loop = &loop;
    req.kind = k;
    req.file_id = loop.file_id;
    req.units = units;
    if (unit) req.variant_source = insert_line_before(unit->original_text, unit->line_starts, loop.line, pragma_text(k));
    ProbeResult r = probe.probe(req);
    if (r.accepted) {
      v.probe_log.push_back({k, "accepted"});
      v.eligible = true;
      v.kind = k;
      return v;
    }
    last = r.diagnostic;
    v.probe_log.push_back({k, "rejected: " + r.diagnostic});
  }
  v.reason = last;
  return v;
}

std::vector<EligibilityVerdict> classify_all(const LoopTable& loops, const VarRefTable& refs, CompileProbe& probe,
                                             std::span<const SourceUnit> units) {
  std::vector<EligibilityVerdict> out(loops.loops.size());
  std::size_t workers = probe.capacity();
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(loops.loops.size(), 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        out[i] = classify_loop(loops.loops[i], refs, probe, units);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<EligibilityVerdict> filter_by_trip_count(std::vector<EligibilityVerdict> verdicts,
                                                     const std::map<int, long long>& trip_counts,
                                                     long long threshold) {
  if (threshold <= 0) return verdicts;
  for (auto& v : verdicts) {
    if (!v.eligible) continue;
    auto it = trip_counts.find(v.loop_id);
    if (it != trip_counts.end() && it->second < threshold) {
      v.eligible = false;
      v.reason = "below trip-count threshold";
    }
  }
  return verdicts;
}

std::vector<int> gene_loops(const std::vector<EligibilityVerdict>& verdicts) {
  std::vector<int> ids;
  for (const auto& v : verdicts)
    if (v.eligible) ids.push_back(v.loop_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<int, DirectiveKind> kind_map(const std::vector<EligibilityVerdict>& verdicts) {
  std::map<int, DirectiveKind> m;
  for (const auto& v : verdicts)
    if (v.eligible) m[v.loop_id] = v.kind;
  return m;
}

std::string verdicts_to_json(const std::vector<EligibilityVerdict>& verdicts) {
  json arr = json::array();
  for (const auto& v : verdicts) {
    json j{{"loop_id", v.loop_id}, {"status", v.eligible ? "eligible" : "ineligible"}};
    if (v.eligible) j["kind"] = std::string(to_string(v.kind));
    else j["reason"] = v.reason;
    json log = json::array();
    for (const auto& a : v.probe_log) log.push_back({{"kind", std::string(to_string(a.kind))}, {"outcome", a.outcome}});
    j["probe_log"] = std::move(log);
    arr.push_back(std::move(j));
  }
  return json{{"verdicts", arr}, {"gene_loops", gene_loops(verdicts)}}.dump(2) + "\n";
}

std::vector<EligibilityVerdict> verdicts_from_json(const std::string& text) {
  try {
    json root = json::parse(text);
    std::vector<EligibilityVerdict> out;
    for (const auto& j : root.at("verdicts")) {
      EligibilityVerdict v;
      v.loop_id = j.at("loop_id").get<int>();
      v.eligible = j.at("status").get<std::string>() == "eligible";
      if (v.eligible) v.kind = directive_kind_from_string(j.at("kind").get<std::string>());
      else v.reason = j.value("reason", std::string{});
      for (const auto& a : j.value("probe_log", json::array()))
        v.probe_log.push_back({directive_kind_from_string(a.at("kind").get<std::string>()),
                               a.at("outcome").get<std::string>()});
      out.push_back(std::move(v));
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed verdicts: ") + e.what());
  }
}

std::map<int, long long> trip_counts_from_json(const std::string& text) {
  try {
    std::map<int, long long> out;
    const json j = json::parse(text);
    for (const auto& [k, v] : j.items()) out[std::stoi(k)] = v.get<long long>();
    return out;
  } catch (const std::exception& e) {
    throw FormatError(std::string("malformed trip-count profile: ") + e.what());
  }
}

}  // namespace acctune
