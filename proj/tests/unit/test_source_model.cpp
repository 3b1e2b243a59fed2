#include <random>
#include <string>

#include "doctest.h"

#include "acctune/error.hpp"
#include "acctune/loops.hpp"
#include "acctune/pipeline.hpp"
#include "acctune/source_model.hpp"
#include "fixture_paths.hpp"

using namespace acctune;

namespace {

std::string parse_error_construct(const std::string& text) {
  try {
    parse_source(text, "t.c");
  } catch (const ParseError& e) {
    return e.construct();
  }
  return "<no error>";
}

int count_for_headers(const std::string& text) {
  int n = 0;
  for (std::size_t p = text.find("for ("); p != std::string::npos; p = text.find("for (", p + 1)) ++n;
  for (std::size_t p = text.find("for("); p != std::string::npos; p = text.find("for(", p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("a minimal loop yields one loop node with its index variable") {
  auto unit = parse_source("double a[8], b[8];\nint main(void) {\n  int i, n = 8;\n  for(i=0;i<n;i++){a[i]=b[i];}\n  return 0;\n}\n", "m.c");
  auto loops = extract_loops(unit);
  REQUIRE(loops.size() == 1);
  CHECK(loops.loops[0].index_var == "i");
  CHECK(loops.loops[0].shape == LoopShape::SingleLoop);
}

TEST_CASE("an empty file has no loops and no declarations") {
  auto unit = parse_source("", "empty.c");
  CHECK(unit.statements.empty());
  CHECK(unit.top_level_decls.empty());
  CHECK(extract_loops(unit).size() == 0);
  CHECK(reconstruct_from_spans(unit).empty());
}

TEST_CASE("constructs outside the subset raise ParseError naming the construct") {
  CHECK(parse_error_construct("#if FOO\nint x;\n#endif\n") == "preprocessor conditional");
  CHECK(parse_error_construct("int main(void) { int *p; return 0; }\n") != "<no error>");
  CHECK(parse_error_construct("struct s { int a; };\n") != "<no error>");
  CHECK(parse_error_construct("#define N 10\n") != "<no error>");
  CHECK(parse_error_construct("int main(void) { for (;;) { } \n") != "<no error>");
}

TEST_CASE("ParseError reports a 1-based line and column") {
  try {
    parse_source("int x;\nint main(void) {\n  int *p;\n  return 0;\n}\n", "t.c");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 1);
  }
}

TEST_CASE("tight and non-tight nests get the expected shapes") {
  const char* text =
      "double a[4][4];\n"
      "int main(void) {\n"
      "  int i, j;\n"
      "  for (i = 0; i < 4; i++)\n"
      "    for (j = 0; j < 4; j++)\n"
      "      a[i][j] = 0.0;\n"
      "  for (i = 0; i < 4; i++) {\n"
      "    a[i][0] = 1.0;\n"
      "    for (j = 1; j < 4; j++)\n"
      "      a[i][j] = a[i][0];\n"
      "  }\n"
      "  return 0;\n"
      "}\n";
  auto loops = extract_loops(parse_source(text, "n.c"));
  REQUIRE(loops.size() == 4);
  CHECK(loops.loops[0].shape == LoopShape::TightlyNestedOuter);
  CHECK(loops.loops[1].shape == LoopShape::TightlyNestedInner);
  CHECK(loops.loops[1].parent_loop == 0);
  CHECK(loops.loops[2].shape == LoopShape::NonTightlyNested);
  CHECK(loops.loops[3].parent_loop == 2);
  CHECK(loops.loops[0].trip_count_estimate == 4);
  CHECK(loops.loops[3].trip_count_estimate == 3);
}

TEST_CASE("the FT-shaped fixture has 82 loops") {
  auto text = read_file(testing::fixture("ft/ft.c"));
  auto unit = parse_source(text, "ft.c");
  auto loops = extract_loops(unit);
  CHECK(loops.size() == 82);
  CHECK(static_cast<int>(loops.size()) == count_for_headers(text));
}

TEST_CASE("property: spans reconstruct every fixture byte for byte") {
  for (const char* rel : {"himeno/himeno.c", "ft/ft.c", "batching/three_loops.c", "classify/corpus.c",
                          "safety/iterative.c", "safety/locals.c", "safety/calls.c", "safety/nested.c",
                          "safety/control.c"}) {
    auto text = read_file(testing::fixture(rel));
    CAPTURE(rel);
    CHECK(reconstruct_from_spans(parse_source(text, rel)) == text);
  }
}

TEST_CASE("property: round-trip survives random whitespace and comments") {
  const char* pieces[] = {"\n", "  ", "\t", "/* c */", "// line\n", "\n\n"};
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text = "double a[16];";
    text += pieces[rng() % 6];
    text += "\nint main(void) {";
    text += pieces[rng() % 6];
    text += "\n  int i;\n";
    int loops = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < loops; ++k) {
      text += "  for (i = 0; i < 16; i++)";
      text += pieces[rng() % 6];
      text += "\n    a[i] = a[i] + " + std::to_string(k) + ".0;";
      text += pieces[rng() % 6];
      text += "\n";
    }
    text += "  return 0;\n}\n";
    auto unit = parse_source(text, "r.c");
    CAPTURE(text);
    CHECK(reconstruct_from_spans(unit) == text);
    CHECK(static_cast<int>(extract_loops(unit).size()) == loops);
  }
}

TEST_CASE("parsing is deterministic") {
  auto text = read_file(testing::fixture("himeno/himeno.c"));
  auto a = extract_loops(parse_source(text, "h.c"));
  auto b = extract_loops(parse_source(text, "h.c"));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.loops[i].span == b.loops[i].span);
    CHECK(a.loops[i].shape == b.loops[i].shape);
    CHECK(a.loops[i].parent_loop == b.loops[i].parent_loop);
  }
}

TEST_CASE("loop header analysis") {
  auto unit = parse_source(
      "const int N = 10;\nint main(void) {\n  int i;\n  for (i = N - 1; i >= 0; i--) { }\n"
      "  for (i = 2; i <= N; i += 2) { }\n  while (i > 0) i--;\n  return 0;\n}\n",
      "h.c");
  auto loops = extract_loops(unit);
  REQUIRE(loops.size() == 2);
  CHECK(loops.loops[0].canonical);
  CHECK(loops.loops[0].trip_count_estimate == 10);
  CHECK(loops.loops[1].trip_count_estimate == 5);
}
