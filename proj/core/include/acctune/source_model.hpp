#pragma once

// Structural model of one C-subset translation unit.
//
// The subset covers what loop-nest benchmarks are written in: functions,
// scalar and fixed-extent array declarations, for/while/do/if statements,
// assignments, arithmetic and calls. Pointers, structs and preprocessor
// conditionals are rejected with a ParseError naming the construct.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace acctune {

/// Half-open byte range [begin, end) into the original text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(const Span& other) const noexcept {
    return begin <= other.begin && other.end <= end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class BaseType { Void, Char, Int, Long, Float, Double };

std::size_t size_of(BaseType t) noexcept;
bool is_floating(BaseType t) noexcept;
std::string_view to_string(BaseType t) noexcept;

enum class ExprKind {
  Ident,
  IntLit,
  FloatLit,
  StringLit,
  CharLit,
  Index,       // args[0][args[1]]
  Call,        // text(args...)
  Unary,       // text args[0]
  Binary,      // args[0] text args[1]
  Assign,      // args[0] text args[1], text is "=", "+=", ...
  PreIncDec,   // text args[0]
  PostIncDec,  // args[0] text
  Ternary,     // args[0] ? args[1] : args[2]
  Cast,        // (text) args[0]
  Comma,
};

struct Expr {
  ExprKind kind = ExprKind::Ident;
  Span span;
  std::string text;
  std::vector<Expr> args;
  long long int_value = 0;
  double float_value = 0.0;
};

struct Declarator {
  std::string name;
  Span span;
  std::vector<Expr> extent_exprs;
  /// Resolved extents; -1 where the extent is empty or not a constant.
  std::vector<long long> extents;
  std::optional<Expr> init;
  std::vector<Expr> init_list;
  bool has_brace_init = false;

  bool is_array() const noexcept { return !extent_exprs.empty() || has_empty_extent; }
  bool has_empty_extent = false;
};

struct Declaration {
  BaseType type = BaseType::Int;
  bool is_const = false;
  bool is_static = false;
  bool is_extern = false;
  std::vector<Declarator> declarators;
};

struct Param {
  BaseType type = BaseType::Int;
  std::string name;
};

enum class StmtKind {
  Compound,
  Decl,
  Expr,
  For,
  While,
  DoWhile,
  If,
  Return,
  Break,
  Continue,
  Goto,
  Label,
  Empty,
  Function,
  Prototype,
};

/// One statement node. Child layout by kind:
///   Compound: children = items
///   For:      init (0 or 1 Decl/Expr stmt), expr = condition, step, children[0] = body
///   While:    expr = condition, children[0] = body
///   DoWhile:  children[0] = body, expr = condition
///   If:       expr = condition, children[0] = then, children[1] = else (optional)
///   Label:    name, children[0] = labelled statement
///   Function: name, params, return_type, children[0] = body (Compound)
struct Stmt {
  StmtKind kind = StmtKind::Empty;
  Span span;
  int line = 0;      // 1-based line of span.begin
  int end_line = 0;  // 1-based line of span.end - 1
  /// Statement occupies whole lines and may be wrapped by inserted lines.
  bool anchorable = false;

  std::vector<std::string> pragmas;           // `#pragma` lines directly before
  std::vector<std::string> trailing_pragmas;  // Compound: before the closing brace

  std::optional<Expr> expr;
  std::optional<Expr> step;
  std::optional<Declaration> decl;
  std::vector<Stmt> init;
  std::vector<Stmt> children;

  std::string name;
  BaseType return_type = BaseType::Void;
  std::vector<Param> params;
};

struct GlobalDecl {
  std::string name;
  BaseType type = BaseType::Int;
  std::vector<long long> extents;  // empty for scalars
  bool is_array = false;
};

struct SourceUnit {
  std::string file_id;
  std::string original_text;
  std::vector<Stmt> statements;  // top-level items in document order
  std::vector<GlobalDecl> top_level_decls;
  std::vector<std::string> trailing_pragmas;
  std::vector<std::size_t> line_starts;

  int line_of(std::size_t offset) const noexcept;
  int column_of(std::size_t offset) const noexcept;
  std::string_view slice(const Span& s) const {
    return std::string_view(original_text).substr(s.begin, s.end - s.begin);
  }
};

/// Parses `source_text`. Throws ParseError for anything outside the subset.
SourceUnit parse_source(std::string source_text, std::string file_id);

/// Rebuilds the text by walking statement spans and the gaps between them.
std::string reconstruct_from_spans(const SourceUnit& unit);

/// Depth-first, document-order visit of every statement (including nested
/// for-init statements). The visitor receives the statement and its depth.
template <typename F>
void for_each_stmt(const Stmt& s, F&& f, int depth = 0) {
  f(s, depth);
  for (const auto& i : s.init) for_each_stmt(i, f, depth + 1);
  for (const auto& c : s.children) for_each_stmt(c, f, depth + 1);
}

template <typename F>
void for_each_stmt(const SourceUnit& u, F&& f) {
  for (const auto& s : u.statements) for_each_stmt(s, f, 0);
}

template <typename F>
void for_each_expr(const Expr& e, F&& f) {
  f(e);
  for (const auto& a : e.args) for_each_expr(a, f);
}

}  // namespace acctune
