#include "acctune/loops.hpp"

#include <algorithm>

#include "acctune/error.hpp"

namespace acctune {

std::string_view to_string(LoopShape s) noexcept {
  switch (s) {
    case LoopShape::SingleLoop: return "SingleLoop";
    case LoopShape::TightlyNestedOuter: return "TightlyNestedOuter";
    case LoopShape::TightlyNestedInner: return "TightlyNestedInner";
    case LoopShape::NonTightlyNested: return "NonTightlyNested";
  }
  return "SingleLoop";
}

LoopShape loop_shape_from_string(std::string_view s) {
  if (s == "SingleLoop") return LoopShape::SingleLoop;
  if (s == "TightlyNestedOuter") return LoopShape::TightlyNestedOuter;
  if (s == "TightlyNestedInner") return LoopShape::TightlyNestedInner;
  if (s == "NonTightlyNested") return LoopShape::NonTightlyNested;
  throw FormatError("unknown loop shape '" + std::string(s) + "'");
}

const LoopInfo* LoopTable::find(int loop_id) const noexcept {
  auto it = std::lower_bound(loops.begin(), loops.end(), loop_id,
                             [](const LoopInfo& l, int id) { return l.loop_id < id; });
  if (it != loops.end() && it->loop_id == loop_id) return &*it;
  for (const auto& l : loops)
    if (l.loop_id == loop_id) return &l;
  return nullptr;
}

const LoopInfo* LoopTable::find(std::string_view file_id, const Span& span) const noexcept {
  for (const auto& l : loops)
    if (l.file_id == file_id && l.span == span) return &l;
  return nullptr;
}

namespace {

std::optional<long long> eval(const Expr& e, const std::vector<std::pair<std::string, long long>>& constants) {
  switch (e.kind) {
    case ExprKind::IntLit:
    case ExprKind::CharLit: return e.int_value;
    case ExprKind::Ident:
      for (const auto& [n, v] : constants)
        if (n == e.text) return v;
      return std::nullopt;
    case ExprKind::Unary:
      if (e.text == "-") {
        if (auto v = eval(e.args[0], constants)) return -*v;
      }
      return std::nullopt;
    case ExprKind::Binary: {
      auto a = eval(e.args[0], constants);
      auto b = eval(e.args[1], constants);
      if (!a || !b) return std::nullopt;
      if (e.text == "+") return *a + *b;
      if (e.text == "-") return *a - *b;
      if (e.text == "*") return *a * *b;
      if (e.text == "/" && *b != 0) return *a / *b;
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

bool is_ident(const Expr& e, const std::string& name) { return e.kind == ExprKind::Ident && e.text == name; }

// Step of `x++`, `++x`, `x--`, `x += k`, `x -= k`, `x = x + k`; 0 if not a unit-form step on x.
long long step_of(const Expr& e, const std::string& x,
                  const std::vector<std::pair<std::string, long long>>& constants) {
  if ((e.kind == ExprKind::PostIncDec || e.kind == ExprKind::PreIncDec) && is_ident(e.args[0], x))
    return e.text == "++" ? 1 : -1;
  if (e.kind == ExprKind::Assign && is_ident(e.args[0], x)) {
    if (e.text == "+=" || e.text == "-=") {
      auto k = eval(e.args[1], constants);
      if (!k || *k == 0) return 0;
      return e.text == "+=" ? *k : -*k;
    }
    if (e.text == "=" && e.args[1].kind == ExprKind::Binary && is_ident(e.args[1].args[0], x)) {
      auto k = eval(e.args[1].args[1], constants);
      if (!k || *k == 0) return 0;
      if (e.args[1].text == "+") return *k;
      if (e.args[1].text == "-") return -*k;
    }
  }
  return 0;
}

std::string var_of_step(const Expr& e) {
  if ((e.kind == ExprKind::PostIncDec || e.kind == ExprKind::PreIncDec || e.kind == ExprKind::Assign) &&
      e.args[0].kind == ExprKind::Ident)
    return e.args[0].text;
  return {};
}

}  // namespace

LoopHeader analyze_loop_header(const Stmt& s, const std::vector<std::pair<std::string, long long>>& constants) {
  LoopHeader h;
  std::optional<Expr> init_value;
  if (!s.init.empty()) {
    const Stmt& init = s.init.front();
    if (init.kind == StmtKind::Decl && init.decl && init.decl->declarators.size() == 1) {
      const auto& d = init.decl->declarators.front();
      h.index_var = d.name;
      if (d.init) init_value = *d.init;
    } else if (init.kind == StmtKind::Expr && init.expr && init.expr->kind == ExprKind::Assign &&
               init.expr->text == "=" && init.expr->args[0].kind == ExprKind::Ident) {
      h.index_var = init.expr->args[0].text;
      init_value = init.expr->args[1];
    }
  }
  if (h.index_var.empty() && s.step) h.index_var = var_of_step(*s.step);
  if (h.index_var.empty() || !s.step || !s.expr) return h;

  h.step = step_of(*s.step, h.index_var, constants);
  if (h.step == 0) return h;

  const Expr& c = *s.expr;
  if (c.kind != ExprKind::Binary) return h;
  static const std::vector<std::string> rel{"<", "<=", ">", ">="};
  if (std::find(rel.begin(), rel.end(), c.text) == rel.end()) return h;
  std::string op = c.text;
  const Expr* bound = nullptr;
  if (is_ident(c.args[0], h.index_var)) {
    bound = &c.args[1];
  } else if (is_ident(c.args[1], h.index_var)) {
    bound = &c.args[0];
    op = op == "<" ? ">" : op == "<=" ? ">=" : op == ">" ? "<" : "<=";
  } else {
    return h;
  }
  bool increasing = op == "<" || op == "<=";
  if (increasing != (h.step > 0)) return h;
  h.canonical = true;

  auto lo = init_value ? eval(*init_value, constants) : std::nullopt;
  auto hi = eval(*bound, constants);
  if (!lo || !hi) return h;
  if (increasing) {
    h.lower = *lo;
    h.upper = op == "<" ? *hi : *hi + 1;
    long long span = *h.upper - *h.lower;
    long long n = span <= 0 ? 0 : (span + h.step - 1) / h.step;
    if (n > 0) h.trip_count = n;
  } else {
    long long top = *lo;
    long long bottom = op == ">" ? *hi + 1 : *hi;
    long long span = top - bottom + 1;
    long long k = -h.step;
    long long n = span <= 0 ? 0 : (span + k - 1) / k;
    if (n > 0) h.trip_count = n;
  }
  return h;
}

const Stmt* sole_inner_loop(const Stmt& loop) noexcept {
  if (loop.children.empty()) return nullptr;
  const Stmt* body = &loop.children.front();
  while (body->kind == StmtKind::Compound) {
    if (body->children.size() != 1) return nullptr;
    body = &body->children.front();
  }
  return body->kind == StmtKind::For ? body : nullptr;
}

namespace {

}  // namespace

std::optional<long long> eval_constant(const Expr& e,
                                       const std::vector<std::pair<std::string, long long>>& constants) {
  return eval(e, constants);
}

const Stmt* find_loop_stmt(const SourceUnit& unit, const Span& span) noexcept {
  const Stmt* found = nullptr;
  for_each_stmt(unit, [&](const Stmt& s, int) {
    if (!found && s.kind == StmtKind::For && s.span == span) found = &s;
  });
  return found;
}

std::vector<std::pair<std::string, long long>> integer_constants(const SourceUnit& unit) {
  std::vector<std::pair<std::string, long long>> out;
  for (const auto& s : unit.statements) {
    if (s.kind != StmtKind::Decl || !s.decl || !s.decl->is_const) continue;
    for (const auto& d : s.decl->declarators) {
      if (d.is_array() || !d.init) continue;
      if (auto v = eval(*d.init, out)) out.emplace_back(d.name, *v);
    }
  }
  return out;
}

namespace {

bool has_for_descendant(const Stmt& s) {
  bool found = false;
  for (const auto& c : s.children)
    for_each_stmt(c, [&](const Stmt& x, int) { found = found || x.kind == StmtKind::For; });
  return found;
}

struct Collector {
  const SourceUnit& unit;
  std::vector<std::pair<std::string, long long>> constants;
  LoopTable& table;
  int next_id;

  void visit(const Stmt& s, std::optional<int> parent, int depth, bool parent_tight_outer,
             const Stmt* parent_stmt) {
    if (s.kind == StmtKind::For) {
      LoopInfo info;
      info.loop_id = next_id++;
      info.file_id = unit.file_id;
      info.span = s.span;
      info.line = s.line;
      info.depth = depth;
      info.parent_loop = parent;
      info.anchorable = s.anchorable;
      LoopHeader h = analyze_loop_header(s, constants);
      info.index_var = h.index_var;
      info.canonical = h.canonical;
      info.trip_count_estimate = h.trip_count;
      info.lower_bound = h.lower;
      info.upper_bound = h.upper;
      info.unit_step = h.step == 1;

      bool tight_outer = sole_inner_loop(s) != nullptr;
      bool is_inner_of_tight = parent_tight_outer && parent_stmt && sole_inner_loop(*parent_stmt) == &s;
      if (tight_outer) info.shape = LoopShape::TightlyNestedOuter;
      else if (has_for_descendant(s)) info.shape = LoopShape::NonTightlyNested;
      else if (is_inner_of_tight) info.shape = LoopShape::TightlyNestedInner;
      else info.shape = LoopShape::SingleLoop;

      int id = info.loop_id;
      table.loops.push_back(std::move(info));
      for (const auto& i : s.init) visit(i, id, depth + 1, false, nullptr);
      for (const auto& c : s.children) visit(c, id, depth + 1, tight_outer, &s);
      return;
    }
    for (const auto& i : s.init) visit(i, parent, depth, false, nullptr);
    // Compound wrappers keep the tight-nesting relation to the enclosing loop.
    bool pass = s.kind == StmtKind::Compound && parent_tight_outer;
    for (const auto& c : s.children) visit(c, parent, depth, pass, pass ? parent_stmt : nullptr);
  }
};

}  // namespace

LoopTable extract_loops(const SourceUnit& unit, int first_id) {
  LoopTable table;
  Collector c{unit, integer_constants(unit), table, first_id};
  for (const auto& s : unit.statements) c.visit(s, std::nullopt, 0, false, nullptr);
  return table;
}

LoopTable extract_loops(std::span<const SourceUnit> units) {
  LoopTable all;
  int next = 0;
  for (const auto& u : units) {
    LoopTable t = extract_loops(u, next);
    next += static_cast<int>(t.loops.size());
    for (auto& l : t.loops) all.loops.push_back(std::move(l));
  }
  return all;
}

}  // namespace acctune
