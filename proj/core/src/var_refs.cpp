#include "acctune/var_refs.hpp"

#include <algorithm>
#include <functional>

#include "acctune/error.hpp"

namespace acctune {

std::string_view to_string(VarScope s) noexcept {
  switch (s) {
    case VarScope::Global: return "global";
    case VarScope::Local: return "local";
    case VarScope::LoopLocal: return "loop-local";
  }
  return "global";
}

VarScope var_scope_from_string(std::string_view s) {
  if (s == "global") return VarScope::Global;
  if (s == "local") return VarScope::Local;
  if (s == "loop-local") return VarScope::LoopLocal;
  throw FormatError("unknown variable scope '" + std::string(s) + "'");
}

std::string_view to_string(FlowKind k) noexcept {
  switch (k) {
    case FlowKind::Seq: return "seq";
    case FlowKind::Host: return "host";
    case FlowKind::Loop: return "loop";
    case FlowKind::Repeat: return "repeat";
    case FlowKind::Branch: return "branch";
    case FlowKind::Call: return "call";
  }
  return "seq";
}

std::optional<long long> VarInfo::bytes() const noexcept {
  long long n = static_cast<long long>(size_of(type));
  for (long long e : extents) {
    if (e < 0) return std::nullopt;
    n *= e;
  }
  return n;
}

std::optional<int> VarRefTable::var_index(std::string_view qualified_name) const noexcept {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == qualified_name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<AccessFlags> VarRefTable::entry(int var, std::string_view region) const noexcept {
  for (const auto& e : entries)
    if (e.var == var && e.region == region) return e.flags;
  return std::nullopt;
}

namespace {

void aggregate(const FlowNode& n, std::map<std::pair<int, std::string>, AccessFlags>& out,
               std::vector<const FlowNode*>& loop_stack) {
  if (n.kind == FlowKind::Loop) loop_stack.push_back(&n);
  for (const auto& [v, f] : n.own) {
    if (!f.any()) continue;
    if (n.kind != FlowKind::Loop && n.kind != FlowKind::Seq) out[{v, n.region}] |= f;
    for (const FlowNode* l : loop_stack) out[{v, l->region}] |= f;
  }
  for (const auto& c : n.children) aggregate(c, out, loop_stack);
  if (n.kind == FlowKind::Loop) loop_stack.pop_back();
}

}  // namespace

void VarRefTable::rebuild_entries() {
  std::map<std::pair<int, std::string>, AccessFlags> agg;
  std::vector<const FlowNode*> stack;
  aggregate(flow, agg, stack);
  entries.clear();
  for (const auto& [key, f] : agg) entries.push_back(RefEntry{key.first, key.second, f});
}

bool is_device_math_function(std::string_view name) noexcept {
  static const std::set<std::string_view> fns{
      "sqrt", "sqrtf", "exp",  "expf",  "log",  "logf", "sin",   "sinf",  "cos",   "cosf",
      "tan",  "tanf",  "fabs", "fabsf", "pow",  "powf", "floor", "ceil",  "fmin",  "fmax",
      "abs",  "atan",  "atan2", "tanh", "exp2", "log2", "log10", "fmod",  "round", "trunc"};
  return fns.count(name) > 0;
}

namespace {

using AccessMap = std::map<int, AccessFlags>;

struct FunctionRef {
  std::size_t unit = 0;
  const Stmt* stmt = nullptr;
};

// Lexical resolution of identifiers to variables.
struct Resolver {
  std::span<const SourceUnit> units;
  const LoopTable& loops;
  std::vector<VarInfo>& vars;
  std::map<std::string, FunctionRef> functions;
  // (unit, ident offset) -> var
  std::map<std::pair<std::size_t, std::size_t>, int> ident_var;
  // (unit, declarator offset) -> var
  std::map<std::pair<std::size_t, std::size_t>, int> decl_var;
  std::map<std::string, int> globals;
  // var -> loop that declares it (innermost), and loops in which it is accessed
  std::map<int, int> declared_in_loop;
  std::map<int, std::set<int>> accessed_in_loop;

  std::vector<std::map<std::string, int>> scopes;
  std::vector<int> loop_stack;
  std::size_t cur_unit = 0;
  std::string cur_function;

  void run() {
    for (std::size_t u = 0; u < units.size(); ++u) {
      for (const auto& s : units[u].statements) {
        if (s.kind == StmtKind::Function) {
          if (!functions.count(s.name)) functions[s.name] = FunctionRef{u, &s};
        } else if (s.kind == StmtKind::Decl) {
          declare_globals(u, s);
        }
      }
    }
    for (std::size_t u = 0; u < units.size(); ++u) {
      cur_unit = u;
      for (const auto& s : units[u].statements) {
        scopes.clear();
        loop_stack.clear();
        if (s.kind == StmtKind::Function) {
          cur_function = s.name;
          scopes.emplace_back();
          for (const auto& p : s.params) add_local(p.name, p.type, {}, false, s.span, false, false);
          walk(s.children.front());
        } else if (s.kind == StmtKind::Decl) {
          cur_function.clear();
          scopes.emplace_back();
          for (const auto& d : s.decl->declarators) {
            for (const auto& e : d.extent_exprs) expr(e);
            if (d.init) expr(*d.init);
            for (const auto& e : d.init_list) expr(e);
          }
        } else if (s.kind != StmtKind::Prototype) {
          cur_function.clear();
          scopes.emplace_back();
          walk(s);
        }
      }
    }
  }

  void declare_globals(std::size_t u, const Stmt& s) {
    for (const auto& d : s.decl->declarators) {
      auto it = globals.find(d.name);
      int idx;
      if (it == globals.end()) {
        idx = static_cast<int>(vars.size());
        VarInfo v;
        v.name = d.name;
        v.source_name = d.name;
        v.scope = VarScope::Global;
        vars.push_back(std::move(v));
        globals[d.name] = idx;
      } else {
        idx = it->second;
      }
      VarInfo& v = vars[static_cast<std::size_t>(idx)];
      bool definition = !s.decl->is_extern;
      if (definition || v.file_id.empty()) {
        v.type = s.decl->type;
        v.extents = d.extents;
        v.is_array = d.is_array();
        v.file_id = units[u].file_id;
        v.decl_span = s.span;
        v.decl_anchorable = s.anchorable;
      }
      v.has_initializer = v.has_initializer || d.init.has_value() || d.has_brace_init;
      decl_var[{u, d.span.begin}] = idx;
    }
  }

  int add_local(const std::string& name, BaseType type, const std::vector<long long>& extents,
                bool is_array, const Span& decl_span, bool anchorable, bool initialized) {
    std::string q = cur_function.empty() ? name : cur_function + "::" + name;
    std::string base = q;
    int dup = 1;
    while (std::any_of(vars.begin(), vars.end(), [&](const VarInfo& v) { return v.name == q; }))
      q = base + "#" + std::to_string(++dup);
    VarInfo v;
    v.name = q;
    v.source_name = name;
    v.scope = cur_function.empty() && loop_stack.empty() ? VarScope::Global : VarScope::Local;
    v.type = type;
    v.extents = extents;
    v.is_array = is_array;
    v.has_initializer = initialized;
    v.file_id = units[cur_unit].file_id;
    v.function = cur_function;
    v.decl_span = decl_span;
    v.decl_anchorable = anchorable;
    int idx = static_cast<int>(vars.size());
    vars.push_back(std::move(v));
    scopes.back()[name] = idx;
    if (!loop_stack.empty()) declared_in_loop[idx] = loop_stack.back();
    return idx;
  }

  std::optional<int> lookup(const std::string& name) const {
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    auto g = globals.find(name);
    if (g != globals.end()) return g->second;
    return std::nullopt;
  }

  int loop_id_of(const Stmt& s) const {
    const LoopInfo* l = loops.find(units[cur_unit].file_id, s.span);
    if (!l) throw Error("loop table does not match source unit " + units[cur_unit].file_id);
    return l->loop_id;
  }

  void local_decl(const Stmt& s) {
    for (const auto& d : s.decl->declarators) {
      for (const auto& e : d.extent_exprs) expr(e);
      if (d.init) expr(*d.init);
      for (const auto& e : d.init_list) expr(e);
      bool init = d.init.has_value() || d.has_brace_init;
      int idx = add_local(d.name, s.decl->type, d.extents, d.is_array(), s.span, s.anchorable, init);
      if (s.decl->is_static) vars[static_cast<std::size_t>(idx)].has_initializer = true;
      decl_var[{cur_unit, d.span.begin}] = idx;
    }
  }

  void walk(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Compound:
        scopes.emplace_back();
        for (const auto& c : s.children) walk(c);
        scopes.pop_back();
        return;
      case StmtKind::Decl: local_decl(s); return;
      case StmtKind::For: {
        int id = loop_id_of(s);
        scopes.emplace_back();
        loop_stack.push_back(id);
        for (const auto& i : s.init) {
          if (i.kind == StmtKind::Decl) local_decl(i);
          else if (i.expr) expr(*i.expr);
        }
        if (s.expr) expr(*s.expr);
        if (s.step) expr(*s.step);
        walk(s.children.front());
        loop_stack.pop_back();
        scopes.pop_back();
        return;
      }
      default:
        if (s.expr) expr(*s.expr);
        for (const auto& c : s.children) walk(c);
    }
  }

  void expr(const Expr& e) {
    for_each_expr(e, [&](const Expr& x) {
      if (x.kind != ExprKind::Ident) return;
      if (auto v = lookup(x.text)) {
        ident_var[{cur_unit, x.span.begin}] = *v;
        if (!loop_stack.empty()) accessed_in_loop[*v].insert(loop_stack.back());
      }
    });
  }

  // Scalars declared in a loop body are private to it. Arrays are private only
  // when no deeper loop touches them; otherwise they need device storage.
  void assign_loop_local_scopes() {
    for (const auto& [v, declaring] : declared_in_loop) {
      VarInfo& info = vars[static_cast<std::size_t>(v)];
      if (!info.is_array) {
        info.scope = VarScope::LoopLocal;
        continue;
      }
      const auto& used = accessed_in_loop[v];
      bool deeper = std::any_of(used.begin(), used.end(), [&](int l) { return l != declaring; });
      info.scope = deeper ? VarScope::Local : VarScope::LoopLocal;
    }
  }
};

// Builds the flow tree by inlining known functions.
struct FlowBuilder {
  std::span<const SourceUnit> units;
  const LoopTable& loops;
  Resolver& res;
  std::vector<std::string> call_stack;
  std::map<std::string, int> invocations;
  std::map<std::string, AccessMap> summaries;
  std::size_t cur_unit = 0;
  std::string cur_function;
  int cur_invocation = 0;

  std::optional<int> var_at(const Expr& ident) const {
    auto it = res.ident_var.find({cur_unit, ident.span.begin});
    if (it == res.ident_var.end()) return std::nullopt;
    return it->second;
  }

  bool is_known(const std::string& name) const { return res.functions.count(name) > 0; }

  // Transitive accesses of a function body, used where a call cannot be
  // represented as a Call node (conditions, loop headers).
  const AccessMap& summary(const std::string& fn) {
    auto it = summaries.find(fn);
    if (it != summaries.end()) return it->second;
    summaries[fn] = {};  // recursion guard
    AccessMap acc;
    const FunctionRef& ref = res.functions.at(fn);
    std::size_t saved = cur_unit;
    cur_unit = ref.unit;
    for_each_stmt(*ref.stmt, [&](const Stmt& s, int) {
      if (s.expr) rvalue(*s.expr, acc, true);
      if (s.step) rvalue(*s.step, acc, true);
      if (s.decl)
        for (const auto& d : s.decl->declarators) {
          if (d.init) rvalue(*d.init, acc, true);
          for (const auto& e : d.init_list) rvalue(e, acc, true);
        }
    });
    cur_unit = saved;
    // Only globals escape a function.
    AccessMap globals_only;
    for (const auto& [v, f] : acc)
      if (res.vars[static_cast<std::size_t>(v)].scope == VarScope::Global) globals_only[v] = f;
    summaries[fn] = globals_only;
    return summaries[fn];
  }

  void write(const Expr& target, AccessMap& acc, bool also_read, bool fold_calls) {
    const Expr* base = &target;
    while (base->kind == ExprKind::Index) {
      rvalue(base->args[1], acc, fold_calls);
      base = &base->args[0];
    }
    if (auto v = var_at(*base)) {
      acc[*v].written = true;
      if (also_read) acc[*v].read = true;
    }
  }

  // Accesses of an expression. Calls to known functions are folded in as
  // summaries when `fold_calls` is set, otherwise they are left to the caller.
  void rvalue(const Expr& e, AccessMap& acc, bool fold_calls) {
    switch (e.kind) {
      case ExprKind::Ident:
        if (auto v = var_at(e)) acc[*v].read = true;
        return;
      case ExprKind::Assign:
        write(e.args[0], acc, e.text != "=", fold_calls);
        rvalue(e.args[1], acc, fold_calls);
        return;
      case ExprKind::PreIncDec:
      case ExprKind::PostIncDec: write(e.args[0], acc, true, fold_calls); return;
      case ExprKind::Call: {
        bool known = is_known(e.text);
        for (const auto& a : e.args) {
          if (!known && a.kind == ExprKind::Ident) {
            if (auto v = var_at(a); v && res.vars[static_cast<std::size_t>(*v)].is_array) {
              acc[*v].read = true;
              acc[*v].written = true;
              continue;
            }
          }
          rvalue(a, acc, fold_calls);
        }
        if (known && fold_calls)
          for (const auto& [v, f] : summary(e.text)) acc[v] |= f;
        return;
      }
      default:
        for (const auto& a : e.args) rvalue(a, acc, fold_calls);
    }
  }

  void collect_known_calls(const Expr& e, std::vector<std::string>& out) {
    for_each_expr(e, [&](const Expr& x) {
      if (x.kind == ExprKind::Call && is_known(x.text)) out.push_back(x.text);
    });
  }

  FlowNode node(FlowKind k, const Stmt& s) const {
    FlowNode n;
    n.kind = k;
    n.file_id = units[cur_unit].file_id;
    n.span = s.span;
    n.anchorable = s.anchorable;
    n.function = cur_function;
    n.invocation = cur_invocation;
    return n;
  }

  FlowNode body_seq(const Stmt& body) {
    FlowNode seq = node(FlowKind::Seq, body);
    seq.anchorable = false;
    if (body.kind == StmtKind::Compound) {
      for (const auto& c : body.children) stmt(c, seq);
    } else {
      stmt(body, seq);
    }
    return seq;
  }

  FlowNode invoke(const std::string& fn) {
    const FunctionRef& ref = res.functions.at(fn);
    std::size_t saved_unit = cur_unit;
    std::string saved_fn = cur_function;
    int saved_inv = cur_invocation;
    cur_unit = ref.unit;
    cur_function = fn;
    cur_invocation = invocations[fn]++;
    call_stack.push_back(fn);
    FlowNode body = body_seq(ref.stmt->children.front());
    call_stack.pop_back();
    cur_unit = saved_unit;
    cur_function = saved_fn;
    cur_invocation = saved_inv;
    return body;
  }

  // A statement whose expression contains known calls becomes a Call node
  // holding the inlined callee bodies.
  void expression_stmt(const Stmt& s, const Expr& e, FlowNode& parent, AccessMap pre) {
    std::vector<std::string> calls;
    collect_known_calls(e, calls);
    bool recursive = std::any_of(calls.begin(), calls.end(), [&](const std::string& c) {
      return std::find(call_stack.begin(), call_stack.end(), c) != call_stack.end();
    });
    FlowNode n = node(calls.empty() ? FlowKind::Host : FlowKind::Call, s);
    n.own = std::move(pre);
    if (calls.empty() || recursive) {
      n.kind = FlowKind::Host;
      rvalue(e, n.own, true);
    } else {
      rvalue(e, n.own, false);
      for (const auto& c : calls) n.children.push_back(invoke(c));
    }
    parent.children.push_back(std::move(n));
  }

  void stmt(const Stmt& s, FlowNode& parent) {
    switch (s.kind) {
      case StmtKind::Compound: {
        FlowNode seq = node(FlowKind::Seq, s);
        for (const auto& c : s.children) stmt(c, seq);
        parent.children.push_back(std::move(seq));
        return;
      }
      case StmtKind::Decl: {
        AccessMap acc;
        std::vector<std::string> calls;
        const Expr* call_expr = nullptr;
        for (const auto& d : s.decl->declarators) {
          auto it = res.decl_var.find({cur_unit, d.span.begin});
          if (it == res.decl_var.end()) continue;
          AccessFlags& f = acc[it->second];
          f.defined = true;
          if (d.init || d.has_brace_init) f.written = true;
          for (const auto& e : d.init_list) rvalue(e, acc, true);
          if (d.init) {
            collect_known_calls(*d.init, calls);
            if (calls.empty()) rvalue(*d.init, acc, true);
            else call_expr = &*d.init;
          }
        }
        if (call_expr && s.decl->declarators.size() == 1) {
          expression_stmt(s, *call_expr, parent, std::move(acc));
          parent.children.back().is_decl = true;
          return;
        }
        if (call_expr)
          for (const auto& d : s.decl->declarators)
            if (d.init) rvalue(*d.init, acc, true);
        FlowNode n = node(FlowKind::Host, s);
        n.is_decl = true;
        n.own = std::move(acc);
        parent.children.push_back(std::move(n));
        return;
      }
      case StmtKind::Expr:
      case StmtKind::Return:
        if (s.expr) {
          expression_stmt(s, *s.expr, parent, {});
        } else {
          parent.children.push_back(node(FlowKind::Host, s));
        }
        return;
      case StmtKind::For: {
        FlowNode n = node(FlowKind::Loop, s);
        const LoopInfo* info = loops.find(units[cur_unit].file_id, s.span);
        n.loop_id = info->loop_id;
        n.trip_count = info->trip_count_estimate;
        for (const auto& i : s.init) {
          if (i.kind == StmtKind::Decl) {
            for (const auto& d : i.decl->declarators) {
              auto it = res.decl_var.find({cur_unit, d.span.begin});
              if (it != res.decl_var.end()) {
                n.own[it->second].defined = true;
                if (d.init) n.own[it->second].written = true;
              }
              if (d.init) rvalue(*d.init, n.own, true);
            }
          } else if (i.expr) {
            rvalue(*i.expr, n.own, true);
          }
        }
        if (s.expr) rvalue(*s.expr, n.own, true);
        if (s.step) rvalue(*s.step, n.own, true);
        n.children.push_back(body_seq(s.children.front()));
        parent.children.push_back(std::move(n));
        return;
      }
      case StmtKind::While:
      case StmtKind::DoWhile: {
        FlowNode n = node(FlowKind::Repeat, s);
        rvalue(*s.expr, n.own, true);
        n.children.push_back(body_seq(s.children.front()));
        parent.children.push_back(std::move(n));
        return;
      }
      case StmtKind::If: {
        FlowNode n = node(FlowKind::Branch, s);
        rvalue(*s.expr, n.own, true);
        n.children.push_back(body_seq(s.children[0]));
        if (s.children.size() > 1) {
          n.children.push_back(body_seq(s.children[1]));
        } else {
          FlowNode empty = node(FlowKind::Seq, s);
          empty.anchorable = false;
          n.children.push_back(std::move(empty));
        }
        parent.children.push_back(std::move(n));
        return;
      }
      case StmtKind::Label: stmt(s.children.front(), parent); return;
      case StmtKind::Function:
      case StmtKind::Prototype: return;
      default: parent.children.push_back(node(FlowKind::Host, s)); return;
    }
  }

  FlowNode build() {
    FlowNode root;
    root.kind = FlowKind::Seq;
    bool has_main = res.functions.count("main") > 0;
    for (std::size_t u = 0; u < units.size(); ++u) {
      cur_unit = u;
      cur_function.clear();
      cur_invocation = 0;
      for (const auto& s : units[u].statements) {
        if (s.kind == StmtKind::Function || s.kind == StmtKind::Prototype) continue;
        if (s.kind == StmtKind::Decl) {
          // Static-storage definitions run before any code.
          FlowNode n = node(FlowKind::Host, s);
          n.is_decl = true;
          for (const auto& d : s.decl->declarators) {
            auto it = res.decl_var.find({u, d.span.begin});
            if (it == res.decl_var.end()) continue;
            AccessFlags& f = n.own[it->second];
            if (!s.decl->is_extern) f.defined = true;
            if (d.init || d.has_brace_init) f.written = true;
          }
          root.children.push_back(std::move(n));
          continue;
        }
        if (!has_main) stmt(s, root);
      }
    }
    if (has_main) {
      const FunctionRef& ref = res.functions.at("main");
      cur_unit = ref.unit;
      cur_function.clear();
      FlowNode call = node(FlowKind::Call, *ref.stmt);
      call.anchorable = false;
      call.children.push_back(invoke("main"));
      root.children.push_back(std::move(call));
    }
    return root;
  }
};

void number_regions(FlowNode& n, int& next_host) {
  if (n.kind == FlowKind::Loop) n.region = "loop:" + std::to_string(n.loop_id);
  else if (n.kind != FlowKind::Seq) n.region = "host:" + std::to_string(next_host++);
  for (auto& c : n.children) number_regions(c, next_host);
}

// ---- full-write proof ----

struct FullWriteAnalyzer {
  std::span<const SourceUnit> units;
  const LoopTable& loops;
  const Resolver& res;
  std::size_t unit = 0;

  const LoopInfo* info(const Stmt& s) const { return loops.find(units[unit].file_id, s.span); }

  static std::vector<const Stmt*> body_list(const Stmt& loop) {
    const Stmt& body = loop.children.front();
    std::vector<const Stmt*> out;
    if (body.kind == StmtKind::Compound) {
      for (const auto& c : body.children) out.push_back(&c);
    } else {
      out.push_back(&body);
    }
    return out;
  }

  static bool has_jump(const Stmt& loop) {
    bool jump = false;
    for_each_stmt(loop, [&](const Stmt& s, int) {
      jump = jump || s.kind == StmtKind::Continue || s.kind == StmtKind::Break ||
             s.kind == StmtKind::Goto || s.kind == StmtKind::Return;
    });
    return jump;
  }

  // Collects arrays whose every element is assigned by the nest rooted at
  // chain.front(); `chain` holds the loops entered so far.
  void scan(const Stmt& loop, std::vector<const LoopInfo*>& chain, std::set<int>& out) {
    for (const Stmt* s : body_list(loop)) {
      if (s->kind == StmtKind::For) {
        const LoopInfo* li = info(*s);
        if (!li || has_jump(*s)) continue;
        chain.push_back(li);
        scan(*s, chain, out);
        chain.pop_back();
      } else if (s->kind == StmtKind::Expr && s->expr && s->expr->kind == ExprKind::Assign &&
                 s->expr->text == "=") {
        check_assignment(s->expr->args[0], chain, out);
      }
    }
  }

  void check_assignment(const Expr& target, const std::vector<const LoopInfo*>& chain, std::set<int>& out) {
    std::vector<const Expr*> subs;
    const Expr* base = &target;
    while (base->kind == ExprKind::Index) {
      subs.push_back(&base->args[1]);
      base = &base->args[0];
    }
    std::reverse(subs.begin(), subs.end());
    if (base->kind != ExprKind::Ident || subs.size() != chain.size()) return;
    auto it = res.ident_var.find({unit, base->span.begin});
    if (it == res.ident_var.end()) return;
    const VarInfo& v = res.vars[static_cast<std::size_t>(it->second)];
    if (!v.is_array || v.extents.size() != subs.size()) return;
    for (std::size_t d = 0; d < subs.size(); ++d) {
      const LoopInfo* l = chain[d];
      if (subs[d]->kind != ExprKind::Ident || subs[d]->text != l->index_var) return;
      if (!l->unit_step || l->lower_bound != 0 || !l->upper_bound || *l->upper_bound != v.extents[d]) return;
    }
    out.insert(it->second);
  }

  void run(std::map<int, std::set<int>>& full) {
    for (unit = 0; unit < units.size(); ++unit) {
      for_each_stmt(units[unit], [&](const Stmt& s, int) {
        if (s.kind != StmtKind::For) return;
        const LoopInfo* li = info(s);
        if (!li || has_jump(s)) return;
        std::vector<const LoopInfo*> chain{li};
        std::set<int> out;
        scan(s, chain, out);
        if (!out.empty()) full[li->loop_id] = std::move(out);
      });
    }
  }
};

}  // namespace

VarRefTable analyze_variable_refs(std::span<const SourceUnit> units, const LoopTable& loops) {
  VarRefTable table;
  Resolver res{units, loops, table.vars, {}, {}, {}, {}, {}, {}, {}, {}, 0, {}};
  res.run();
  res.assign_loop_local_scopes();
  FlowBuilder fb{units, loops, res, {}, {}, {}, 0, {}, 0};
  table.flow = fb.build();
  int next_host = 0;
  number_regions(table.flow, next_host);
  table.rebuild_entries();
  FullWriteAnalyzer fw{units, loops, res, 0};
  fw.run(table.full_writes);
  return table;
}

VarRefTable analyze_variable_refs(const SourceUnit& unit, const LoopTable& loops) {
  return analyze_variable_refs(std::span<const SourceUnit>(&unit, 1), loops);
}

}  // namespace acctune
