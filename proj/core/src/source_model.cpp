#include "acctune/source_model.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <set>

#include "acctune/error.hpp"

namespace acctune {

std::size_t size_of(BaseType t) noexcept {
  switch (t) {
    case BaseType::Void: return 0;
    case BaseType::Char: return 1;
    case BaseType::Int: return 4;
    case BaseType::Long: return 8;
    case BaseType::Float: return 4;
    case BaseType::Double: return 8;
  }
  return 0;
}

bool is_floating(BaseType t) noexcept { return t == BaseType::Float || t == BaseType::Double; }

std::string_view to_string(BaseType t) noexcept {
  switch (t) {
    case BaseType::Void: return "void";
    case BaseType::Char: return "char";
    case BaseType::Int: return "int";
    case BaseType::Long: return "long";
    case BaseType::Float: return "float";
    case BaseType::Double: return "double";
  }
  return "int";
}

int SourceUnit::line_of(std::size_t offset) const noexcept {
  auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
  return static_cast<int>(it - line_starts.begin());
}

int SourceUnit::column_of(std::size_t offset) const noexcept {
  int line = line_of(offset);
  return static_cast<int>(offset - line_starts[static_cast<std::size_t>(line - 1)]) + 1;
}

namespace {

enum class Tok { Ident, Int, Float, String, Char, Punct, Pragma, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<std::size_t> compute_line_starts(const std::string& text) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < text.size(); ++i)
    if (text[i] == '\n') starts.push_back(i + 1);
  return starts;
}

class Lexer {
 public:
  explicit Lexer(const SourceUnit& unit) : unit_(unit), src_(unit.original_text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      if (c == '#') {
        if (!at_line_start(pos_)) fail("stray '#'", pos_);
        if (auto t = directive()) out.push_back(std::move(*t));
        continue;
      }
      out.push_back(next());
    }
    out.push_back(Token{Tok::End, "", src_.size(), src_.size()});
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& construct, std::size_t at,
                         const std::string& detail = {}) const {
    throw ParseError(construct, unit_.line_of(at), unit_.column_of(at), detail);
  }

  bool at_line_start(std::size_t at) const {
    while (at > 0) {
      char p = src_[at - 1];
      if (p == '\n') return true;
      if (p != ' ' && p != '\t' && p != '\r') return false;
      --at;
    }
    return true;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        auto close = src_.find("*/", pos_ + 2);
        if (close == std::string::npos) fail("unterminated comment", pos_);
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  std::optional<Token> directive() {
    std::size_t start = pos_;
    std::size_t eol = start;
    // Directives may continue over backslash-newline.
    while (eol < src_.size() && src_[eol] != '\n') {
      if (src_[eol] == '\\' && eol + 1 < src_.size() && src_[eol + 1] == '\n') eol += 2;
      else ++eol;
    }
    std::string line = src_.substr(start + 1, eol - start - 1);
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && std::isalpha(static_cast<unsigned char>(line[j]))) ++j;
    std::string name = line.substr(i, j - i);
    pos_ = eol;
    static const std::set<std::string> conditionals{"if", "ifdef", "ifndef", "elif", "else", "endif"};
    if (conditionals.count(name)) fail("preprocessor conditional", start, "#" + name);
    if (name == "define" || name == "undef") fail("macro definition", start, "#" + name);
    if (name == "include") return std::nullopt;
    if (name == "pragma") {
      std::string body = line.substr(j);
      auto b = body.find_first_not_of(" \t");
      auto e = body.find_last_not_of(" \t\r");
      body = b == std::string::npos ? std::string{} : body.substr(b, e - b + 1);
      return Token{Tok::Pragma, body, start, eol};
    }
    fail("preprocessor directive", start, "#" + name);
  }

  Token next() {
    std::size_t start = pos_;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      return make(Tok::Ident, start);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      return number(start);
    }
    if (c == '"') {
      ++pos_;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        if (src_[pos_] == '\\') ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '\n') fail("unterminated string literal", start);
        ++pos_;
      }
      if (pos_ >= src_.size()) fail("unterminated string literal", start);
      ++pos_;
      return make(Tok::String, start);
    }
    if (c == '\'') {
      ++pos_;
      while (pos_ < src_.size() && src_[pos_] != '\'') {
        if (src_[pos_] == '\\') ++pos_;
        ++pos_;
      }
      if (pos_ >= src_.size()) fail("unterminated character literal", start);
      ++pos_;
      return make(Tok::Char, start);
    }
    static const char* const three[] = {"<<=", ">>=", "..."};
    static const char* const two[] = {"++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
                                      "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "->"};
    for (const char* p : three)
      if (src_.compare(pos_, 3, p) == 0) {
        pos_ += 3;
        return make(Tok::Punct, start);
      }
    for (const char* p : two)
      if (src_.compare(pos_, 2, p) == 0) {
        pos_ += 2;
        return make(Tok::Punct, start);
      }
    static const std::string singles = "+-*/%=<>!~&|^?:;,.()[]{}";
    if (singles.find(c) == std::string::npos) fail("unexpected character", start, std::string(1, c));
    ++pos_;
    return make(Tok::Punct, start);
  }

  Token number(std::size_t start) {
    bool is_float = false;
    if (src_.compare(pos_, 2, "0x") == 0 || src_.compare(pos_, 2, "0X") == 0) {
      pos_ += 2;
      while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    } else {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '.') {
        is_float = true;
        ++pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        is_float = true;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    while (pos_ < src_.size() && std::strchr("uUlLfF", src_[pos_]) != nullptr && src_[pos_] != '\0') {
      if (src_[pos_] == 'f' || src_[pos_] == 'F') is_float = true;
      ++pos_;
    }
    return make(is_float ? Tok::Float : Tok::Int, start);
  }

  Token make(Tok k, std::size_t start) { return Token{k, src_.substr(start, pos_ - start), start, pos_}; }

  const SourceUnit& unit_;
  const std::string& src_;
  std::size_t pos_ = 0;
};

const std::set<std::string>& type_keywords() {
  static const std::set<std::string> k{"void",   "char",     "short",  "int",    "long",
                                       "float",  "double",   "signed", "unsigned", "const",
                                       "static", "extern",   "register", "inline", "volatile"};
  return k;
}

class Parser {
 public:
  Parser(SourceUnit& unit, std::vector<Token> toks) : unit_(unit), toks_(std::move(toks)) {
    scopes_.emplace_back();
  }

  void run() {
    while (true) {
      collect_pragmas();
      if (peek().kind == Tok::End) break;
      unit_.statements.push_back(top_level_item());
    }
    unit_.trailing_pragmas = std::move(pending_);
  }

 private:
  // ---- token helpers ----
  const Token& peek(std::size_t k = 0) const {
    std::size_t i = idx_;
    std::size_t seen = 0;
    while (i < toks_.size()) {
      if (toks_[i].kind != Tok::Pragma) {
        if (seen == k) return toks_[i];
        ++seen;
      }
      ++i;
    }
    return toks_.back();
  }
  bool is(const char* p, std::size_t k = 0) const {
    const Token& t = peek(k);
    return (t.kind == Tok::Punct || t.kind == Tok::Ident) && t.text == p;
  }
  const Token& take() {
    if (toks_[idx_].kind == Tok::Pragma)
      fail_at("pragma inside an expression or declaration", toks_[idx_].begin);
    return toks_[idx_++];
  }
  const Token& expect(const char* p) {
    if (!is(p)) fail_at(std::string("expected '") + p + "'", peek().begin, describe(peek()));
    return take();
  }
  std::string describe(const Token& t) const {
    return t.kind == Tok::End ? "end of file" : "found '" + t.text + "'";
  }
  [[noreturn]] void fail_at(const std::string& construct, std::size_t at,
                            const std::string& detail = {}) const {
    throw ParseError(construct, unit_.line_of(at), unit_.column_of(at), detail);
  }
  std::size_t last_end() const { return toks_[idx_ - 1].end; }

  void collect_pragmas() {
    while (idx_ < toks_.size() && toks_[idx_].kind == Tok::Pragma) pending_.push_back(toks_[idx_++].text);
  }

  bool starts_type() const {
    const Token& t = peek();
    if (t.kind != Tok::Ident) return false;
    static const std::set<std::string> rejected{"struct", "union", "enum", "typedef"};
    if (rejected.count(t.text)) fail_at(t.text + " declaration", t.begin);
    return type_keywords().count(t.text) > 0;
  }

  // ---- scopes (array-vs-scalar tracking for decay detection) ----
  void declare(const std::string& name, bool is_array) { scopes_.back()[name] = is_array; }
  bool is_array_name(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return false;
  }

  // ---- declarations ----
  struct TypeSpec {
    BaseType type = BaseType::Int;
    bool is_const = false, is_static = false, is_extern = false;
  };

  TypeSpec type_spec() {
    TypeSpec ts;
    std::set<std::string> words;
    while (peek().kind == Tok::Ident && type_keywords().count(peek().text)) words.insert(take().text);
    ts.is_const = words.count("const") > 0;
    ts.is_static = words.count("static") > 0;
    ts.is_extern = words.count("extern") > 0;
    if (words.count("double")) ts.type = BaseType::Double;
    else if (words.count("float")) ts.type = BaseType::Float;
    else if (words.count("char")) ts.type = BaseType::Char;
    else if (words.count("void")) ts.type = BaseType::Void;
    else if (words.count("long")) ts.type = BaseType::Long;
    else ts.type = BaseType::Int;
    if (is("*")) fail_at("pointer declaration", peek().begin);
    return ts;
  }

  Declarator declarator(const TypeSpec& ts) {
    Declarator d;
    if (is("*")) fail_at("pointer declaration", peek().begin);
    if (peek().kind != Tok::Ident) fail_at("declarator", peek().begin, describe(peek()));
    const Token& name = take();
    d.name = name.text;
    d.span.begin = name.begin;
    while (is("[")) {
      take();
      if (is("]")) {
        d.has_empty_extent = true;
        d.extents.push_back(-1);
      } else {
        Expr e = assignment();
        d.extents.push_back(const_eval(e).value_or(-1));
        d.extent_exprs.push_back(std::move(e));
      }
      expect("]");
    }
    if (is("=")) {
      take();
      if (is("{")) {
        take();
        d.has_brace_init = true;
        brace_list(d.init_list);
        expect("}");
      } else {
        d.init = assignment();
      }
    }
    d.span.end = last_end();
    if (ts.is_const && !d.is_array() && d.init) {
      if (auto v = const_eval(*d.init)) consts_[d.name] = *v;
    }
    declare(d.name, d.is_array());
    return d;
  }

  void brace_list(std::vector<Expr>& out) {
    while (!is("}")) {
      if (is("{")) {
        take();
        brace_list(out);
        expect("}");
      } else {
        out.push_back(assignment());
      }
      if (!is(",")) break;
      take();
    }
  }

  Declaration declaration_rest(const TypeSpec& ts, Declarator first) {
    Declaration decl;
    decl.type = ts.type;
    decl.is_const = ts.is_const;
    decl.is_static = ts.is_static;
    decl.is_extern = ts.is_extern;
    decl.declarators.push_back(std::move(first));
    while (is(",")) {
      take();
      decl.declarators.push_back(declarator(ts));
    }
    expect(";");
    return decl;
  }

  std::optional<long long> const_eval(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::IntLit: return e.int_value;
      case ExprKind::CharLit: return e.int_value;
      case ExprKind::Ident: {
        auto it = consts_.find(e.text);
        if (it != consts_.end()) return it->second;
        return std::nullopt;
      }
      case ExprKind::Unary: {
        auto v = const_eval(e.args[0]);
        if (!v) return std::nullopt;
        if (e.text == "-") return -*v;
        if (e.text == "+") return *v;
        return std::nullopt;
      }
      case ExprKind::Binary: {
        auto a = const_eval(e.args[0]);
        auto b = const_eval(e.args[1]);
        if (!a || !b) return std::nullopt;
        if (e.text == "+") return *a + *b;
        if (e.text == "-") return *a - *b;
        if (e.text == "*") return *a * *b;
        if (e.text == "/" && *b != 0) return *a / *b;
        if (e.text == "%" && *b != 0) return *a % *b;
        return std::nullopt;
      }
      case ExprKind::Cast: return const_eval(e.args[0]);
      default: return std::nullopt;
    }
  }

  // ---- top level ----
  Stmt top_level_item() {
    if (!starts_type()) return statement();
    std::size_t begin = peek().begin;
    auto pragmas = std::move(pending_);
    pending_.clear();
    TypeSpec ts = type_spec();
    if (peek().kind == Tok::Ident && is("(", 1)) return function(ts, begin, std::move(pragmas));
    Stmt s;
    s.kind = StmtKind::Decl;
    s.pragmas = std::move(pragmas);
    s.decl = declaration_rest(ts, declarator(ts));
    finish(s, begin);
    for (const auto& d : s.decl->declarators) {
      GlobalDecl g;
      g.name = d.name;
      g.type = ts.type;
      g.extents = d.extents;
      g.is_array = d.is_array();
      unit_.top_level_decls.push_back(std::move(g));
    }
    return s;
  }

  Stmt function(const TypeSpec& ts, std::size_t begin, std::vector<std::string> pragmas) {
    Stmt f;
    f.pragmas = std::move(pragmas);
    f.return_type = ts.type;
    f.name = take().text;
    declare(f.name, false);
    expect("(");
    scopes_.emplace_back();
    if (is("void") && is(")", 1)) take();
    while (!is(")")) {
      if (!starts_type()) fail_at("parameter", peek().begin, describe(peek()));
      TypeSpec pts = type_spec();
      Param p;
      p.type = pts.type;
      if (peek().kind == Tok::Ident) p.name = take().text;
      if (is("[")) fail_at("array parameter", peek().begin, "arrays are referenced by name only");
      declare(p.name, false);
      f.params.push_back(std::move(p));
      if (!is(",")) break;
      take();
    }
    expect(")");
    if (is(";")) {
      take();
      scopes_.pop_back();
      f.kind = StmtKind::Prototype;
      finish(f, begin);
      return f;
    }
    f.kind = StmtKind::Function;
    if (!is("{")) fail_at("function body", peek().begin, describe(peek()));
    f.children.push_back(compound());
    scopes_.pop_back();
    finish(f, begin);
    return f;
  }

  void finish(Stmt& s, std::size_t begin) {
    s.span = Span{begin, last_end()};
    s.line = unit_.line_of(s.span.begin);
    s.end_line = unit_.line_of(s.span.end - 1);
  }

  // ---- statements ----
  Stmt statement() {
    collect_pragmas();
    auto pragmas = std::move(pending_);
    pending_.clear();
    Stmt s = statement_body();
    s.pragmas = std::move(pragmas);
    return s;
  }

  Stmt statement_body() {
    const Token& t = peek();
    std::size_t begin = t.begin;
    Stmt s;
    if (t.kind == Tok::End) fail_at("statement", begin, "unexpected end of file");
    if (is("{")) return compound();
    if (starts_type()) {
      TypeSpec ts = type_spec();
      if (peek().kind == Tok::Ident && is("(", 1)) fail_at("nested function declaration", peek().begin);
      s.kind = StmtKind::Decl;
      s.decl = declaration_rest(ts, declarator(ts));
      finish(s, begin);
      return s;
    }
    if (t.kind == Tok::Ident) {
      const std::string& w = t.text;
      if (w == "for") return for_stmt();
      if (w == "while") {
        take();
        s.kind = StmtKind::While;
        expect("(");
        s.expr = expression();
        expect(")");
        s.children.push_back(statement());
        finish(s, begin);
        return s;
      }
      if (w == "do") {
        take();
        s.kind = StmtKind::DoWhile;
        s.children.push_back(statement());
        expect("while");
        expect("(");
        s.expr = expression();
        expect(")");
        expect(";");
        finish(s, begin);
        return s;
      }
      if (w == "if") {
        take();
        s.kind = StmtKind::If;
        expect("(");
        s.expr = expression();
        expect(")");
        s.children.push_back(statement());
        collect_pragmas();
        if (is("else")) {
          if (!pending_.empty()) fail_at("pragma before else", peek().begin);
          take();
          s.children.push_back(statement());
        }
        finish(s, begin);
        return s;
      }
      if (w == "return") {
        take();
        s.kind = StmtKind::Return;
        if (!is(";")) s.expr = expression();
        expect(";");
        finish(s, begin);
        return s;
      }
      if (w == "break" || w == "continue") {
        take();
        s.kind = w == "break" ? StmtKind::Break : StmtKind::Continue;
        expect(";");
        finish(s, begin);
        return s;
      }
      if (w == "goto") {
        take();
        s.kind = StmtKind::Goto;
        if (peek().kind != Tok::Ident) fail_at("goto target", peek().begin);
        s.name = take().text;
        expect(";");
        finish(s, begin);
        return s;
      }
      if (w == "switch" || w == "case" || w == "default") fail_at("switch statement", begin);
      if (w == "sizeof") fail_at("sizeof", begin);
      if (is(":", 1)) {
        s.kind = StmtKind::Label;
        s.name = take().text;
        take();
        s.children.push_back(statement());
        finish(s, begin);
        return s;
      }
    }
    if (is(";")) {
      take();
      s.kind = StmtKind::Empty;
      finish(s, begin);
      return s;
    }
    s.kind = StmtKind::Expr;
    s.expr = expression();
    expect(";");
    finish(s, begin);
    return s;
  }

  Stmt compound() {
    std::size_t begin = peek().begin;
    expect("{");
    Stmt s;
    s.kind = StmtKind::Compound;
    scopes_.emplace_back();
    while (true) {
      collect_pragmas();
      if (is("}")) break;
      if (peek().kind == Tok::End) fail_at("unterminated block", begin);
      s.children.push_back(statement());
    }
    s.trailing_pragmas = std::move(pending_);
    pending_.clear();
    expect("}");
    scopes_.pop_back();
    finish(s, begin);
    return s;
  }

  Stmt for_stmt() {
    std::size_t begin = peek().begin;
    take();
    Stmt s;
    s.kind = StmtKind::For;
    expect("(");
    scopes_.emplace_back();
    if (!is(";")) {
      Stmt init;
      std::size_t ib = peek().begin;
      if (starts_type()) {
        TypeSpec ts = type_spec();
        init.kind = StmtKind::Decl;
        init.decl = declaration_rest(ts, declarator(ts));
      } else {
        init.kind = StmtKind::Expr;
        init.expr = expression();
        expect(";");
      }
      finish(init, ib);
      s.init.push_back(std::move(init));
    } else {
      take();
    }
    if (!is(";")) s.expr = expression();
    expect(";");
    if (!is(")")) s.step = expression();
    expect(")");
    s.children.push_back(statement());
    scopes_.pop_back();
    finish(s, begin);
    return s;
  }

  // ---- expressions ----
  Expr expression() {
    Expr e = assignment();
    if (!is(",")) return e;
    Expr c;
    c.kind = ExprKind::Comma;
    c.span.begin = e.span.begin;
    c.args.push_back(std::move(e));
    while (is(",")) {
      take();
      c.args.push_back(assignment());
    }
    c.span.end = last_end();
    return c;
  }

  static bool is_assign_op(const std::string& s) {
    static const std::set<std::string> ops{"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
    return ops.count(s) > 0;
  }

  void check_lvalue(const Expr& e) const {
    if (e.kind != ExprKind::Ident && e.kind != ExprKind::Index)
      fail_at("assignment target", e.span.begin, "only variables and array elements are assignable");
  }

  Expr assignment() {
    Expr lhs = ternary();
    if (peek().kind == Tok::Punct && is_assign_op(peek().text)) {
      check_lvalue(lhs);
      Expr a;
      a.kind = ExprKind::Assign;
      a.text = take().text;
      a.span.begin = lhs.span.begin;
      a.args.push_back(std::move(lhs));
      a.args.push_back(assignment());
      a.span.end = last_end();
      check_decay(a.args[1]);
      return a;
    }
    return lhs;
  }

  Expr ternary() {
    Expr c = binary(0);
    if (!is("?")) return c;
    take();
    Expr t;
    t.kind = ExprKind::Ternary;
    t.span.begin = c.span.begin;
    t.args.push_back(std::move(c));
    t.args.push_back(expression());
    expect(":");
    t.args.push_back(ternary());
    t.span.end = last_end();
    return t;
  }

  static int precedence(const std::string& op) {
    static const std::map<std::string, int> p{
        {"||", 1}, {"&&", 2}, {"|", 3},  {"^", 4},  {"&", 5},  {"==", 6}, {"!=", 6},
        {"<", 7},  {">", 7},  {"<=", 7}, {">=", 7}, {"<<", 8}, {">>", 8}, {"+", 9},
        {"-", 9},  {"*", 10}, {"/", 10}, {"%", 10}};
    auto it = p.find(op);
    return it == p.end() ? -1 : it->second;
  }

  Expr binary(int min_prec) {
    Expr lhs = unary();
    while (peek().kind == Tok::Punct) {
      int p = precedence(peek().text);
      if (p < 0 || p < min_prec) break;
      Expr b;
      b.kind = ExprKind::Binary;
      b.text = take().text;
      b.span.begin = lhs.span.begin;
      Expr rhs = binary(p + 1);
      check_decay(lhs);
      check_decay(rhs);
      b.args.push_back(std::move(lhs));
      b.args.push_back(std::move(rhs));
      b.span.end = last_end();
      lhs = std::move(b);
    }
    return lhs;
  }

  // An array name used as a value (not subscripted, not a call argument)
  // decays to a pointer.
  void check_decay(const Expr& e) const {
    if (e.kind == ExprKind::Ident && is_array_name(e.text))
      fail_at("pointer arithmetic", e.span.begin, "array '" + e.text + "' used as a value");
  }

  Expr unary() {
    const Token& t = peek();
    std::size_t begin = t.begin;
    if (t.kind == Tok::Punct) {
      if (t.text == "*") fail_at("pointer dereference", begin);
      if (t.text == "&") fail_at("address-of operator", begin);
      if (t.text == "++" || t.text == "--") {
        Expr e;
        e.kind = ExprKind::PreIncDec;
        e.text = take().text;
        e.args.push_back(unary());
        check_lvalue(e.args[0]);
        e.span = Span{begin, last_end()};
        return e;
      }
      if (t.text == "-" || t.text == "+" || t.text == "!" || t.text == "~") {
        Expr e;
        e.kind = ExprKind::Unary;
        e.text = take().text;
        e.args.push_back(unary());
        check_decay(e.args[0]);
        e.span = Span{begin, last_end()};
        return e;
      }
      if (t.text == "(" && peek(1).kind == Tok::Ident && type_keywords().count(peek(1).text)) {
        take();
        TypeSpec ts = type_spec();
        expect(")");
        Expr e;
        e.kind = ExprKind::Cast;
        e.text = std::string(to_string(ts.type));
        e.args.push_back(unary());
        check_decay(e.args[0]);
        e.span = Span{begin, last_end()};
        return e;
      }
    }
    return postfix();
  }

  Expr postfix() {
    Expr e = primary();
    while (true) {
      if (is("[")) {
        take();
        Expr idx;
        idx.kind = ExprKind::Index;
        idx.span.begin = e.span.begin;
        idx.args.push_back(std::move(e));
        idx.args.push_back(expression());
        expect("]");
        idx.span.end = last_end();
        e = std::move(idx);
      } else if (is("(")) {
        if (e.kind != ExprKind::Ident) fail_at("indirect call", e.span.begin);
        take();
        Expr c;
        c.kind = ExprKind::Call;
        c.text = e.text;
        c.span.begin = e.span.begin;
        while (!is(")")) {
          c.args.push_back(assignment());
          if (!is(",")) break;
          take();
        }
        expect(")");
        c.span.end = last_end();
        e = std::move(c);
      } else if (is("++") || is("--")) {
        check_lvalue(e);
        Expr p;
        p.kind = ExprKind::PostIncDec;
        p.text = take().text;
        p.span.begin = e.span.begin;
        p.args.push_back(std::move(e));
        p.span.end = last_end();
        e = std::move(p);
      } else if (is(".") || is("->")) {
        fail_at("member access", peek().begin);
      } else {
        return e;
      }
    }
  }

  Expr primary() {
    const Token& t = peek();
    Expr e;
    e.span.begin = t.begin;
    switch (t.kind) {
      case Tok::Ident: {
        if (t.text == "sizeof") fail_at("sizeof", t.begin);
        if (type_keywords().count(t.text)) fail_at("declaration in expression", t.begin);
        e.kind = ExprKind::Ident;
        e.text = take().text;
        break;
      }
      case Tok::Int:
        e.kind = ExprKind::IntLit;
        e.text = take().text;
        e.int_value = std::stoll(e.text, nullptr, 0);
        break;
      case Tok::Float:
        e.kind = ExprKind::FloatLit;
        e.text = take().text;
        e.float_value = std::stod(e.text);
        break;
      case Tok::String:
        e.kind = ExprKind::StringLit;
        e.text = take().text;
        while (peek().kind == Tok::String) e.text += take().text;
        break;
      case Tok::Char: {
        e.kind = ExprKind::CharLit;
        e.text = take().text;
        e.int_value = e.text.size() > 2 ? static_cast<unsigned char>(e.text[1]) : 0;
        if (e.text.size() > 3 && e.text[1] == '\\') {
          switch (e.text[2]) {
            case 'n': e.int_value = '\n'; break;
            case 't': e.int_value = '\t'; break;
            case '0': e.int_value = 0; break;
            default: e.int_value = static_cast<unsigned char>(e.text[2]);
          }
        }
        break;
      }
      case Tok::Punct:
        if (t.text == "(") {
          take();
          Expr inner = expression();
          expect(")");
          inner.span = Span{e.span.begin, last_end()};
          return inner;
        }
        [[fallthrough]];
      default:
        fail_at("expression", t.begin, describe(t));
    }
    e.span.end = last_end();
    return e;
  }

  SourceUnit& unit_;
  std::vector<Token> toks_;
  std::size_t idx_ = 0;
  std::vector<std::string> pending_;
  std::vector<std::map<std::string, bool>> scopes_;
  std::map<std::string, long long> consts_;
};

bool line_prefix_blank(const std::string& text, std::size_t at) {
  while (at > 0 && text[at - 1] != '\n') {
    char c = text[at - 1];
    if (c != ' ' && c != '\t') return false;
    --at;
  }
  return true;
}

bool line_suffix_blank(const std::string& text, std::size_t at) {
  while (at < text.size() && text[at] != '\n') {
    char c = text[at];
    if (c == '/' && at + 1 < text.size() && text[at + 1] == '/') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
    ++at;
  }
  return true;
}

void mark_anchorable(const std::string& text, Stmt& s, bool blocked) {
  s.anchorable = !blocked && line_prefix_blank(text, s.span.begin) && line_suffix_blank(text, s.span.end);
  for (auto& i : s.init) mark_anchorable(text, i, true);
  for (std::size_t k = 0; k < s.children.size(); ++k) {
    // The then-branch of an if/else cannot be followed by an inserted line.
    bool child_blocked = s.kind == StmtKind::If && k == 0 && s.children.size() == 2;
    mark_anchorable(text, s.children[k], child_blocked);
  }
}

void append_text(const SourceUnit& u, const Stmt& s, std::string& out) {
  std::size_t cursor = s.span.begin;
  auto emit_child = [&](const Stmt& c) {
    out.append(u.original_text, cursor, c.span.begin - cursor);
    append_text(u, c, out);
    cursor = c.span.end;
  };
  std::vector<const Stmt*> kids;
  for (const auto& i : s.init) kids.push_back(&i);
  for (const auto& c : s.children) kids.push_back(&c);
  std::sort(kids.begin(), kids.end(), [](const Stmt* a, const Stmt* b) { return a->span.begin < b->span.begin; });
  for (const Stmt* c : kids) emit_child(*c);
  out.append(u.original_text, cursor, s.span.end - cursor);
}

}  // namespace

SourceUnit parse_source(std::string source_text, std::string file_id) {
  SourceUnit unit;
  unit.file_id = std::move(file_id);
  unit.original_text = std::move(source_text);
  unit.line_starts = compute_line_starts(unit.original_text);
  Lexer lexer(unit);
  Parser parser(unit, lexer.run());
  parser.run();
  for (auto& s : unit.statements) mark_anchorable(unit.original_text, s, false);
  return unit;
}

std::string reconstruct_from_spans(const SourceUnit& unit) {
  std::string out;
  out.reserve(unit.original_text.size());
  std::size_t cursor = 0;
  for (const auto& s : unit.statements) {
    out.append(unit.original_text, cursor, s.span.begin - cursor);
    append_text(unit, s, out);
    cursor = s.span.end;
  }
  out.append(unit.original_text, cursor, std::string::npos);
  return out;
}

}  // namespace acctune
