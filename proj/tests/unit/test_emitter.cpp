#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "doctest.h"

#include "acctune/emitter.hpp"
#include "acctune/error.hpp"
#include "acctune/pipeline.hpp"
#include "fixture_paths.hpp"

using namespace acctune;
using testing::Loaded;

namespace {

AnnotatedVariant emit(const Loaded& l, const Genome& g) {
  const auto& m = l.project.model;
  return emit_variant(l.project.units, g, l.verdicts, make_transfer_plan(g, l.genes, m.loops, m.refs), m.loops,
                      m.refs);
}

AnnotatedVariant emit(const Loaded& l, const std::string& g) { return emit(l, genome_from_string(g)); }

int count_compute_pragmas(const std::string& text) {
  int n = 0;
  std::size_t pos = 0;
  while ((pos = text.find("#pragma acc ", pos)) != std::string::npos) {
    auto eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol - pos);
    if (line == "#pragma acc kernels" || line == "#pragma acc parallel loop" ||
        line == "#pragma acc parallel loop vector")
      ++n;
    pos = eol;
  }
  return n;
}

// The loop's text in the emitted file with inserted lines removed.
std::string without_inserted(const std::string& text, const LoopInfo& loop, const std::vector<Insertion>& log) {
  std::set<int> inserted;
  for (const auto& ins : log) inserted.insert(ins.line);
  std::string slice = text.substr(loop.span.begin, loop.span.end - loop.span.begin);
  std::string out;
  int line = loop.line;
  std::size_t start = 0;
  while (start <= slice.size()) {
    auto eol = slice.find('\n', start);
    bool last = eol == std::string::npos;
    std::string piece = slice.substr(start, last ? std::string::npos : eol - start + 1);
    if (!inserted.count(line)) out += piece;
    if (last) break;
    start = eol + 1;
    ++line;
  }
  return out;
}

const char* kLocalNest =
    "#include <stdio.h>\n"
    "int main(void) {\n"
    "  int i, j;\n"
    "  double b[8][8];\n"
    "  double a[8][8];\n"
    "  for (i = 0; i < 8; i++)\n"
    "    for (j = 0; j < 8; j++)\n"
    "      b[i][j] = i + j;\n"
    "  for (i = 0; i < 8; i++)\n"
    "    for (j = 0; j < 8; j++)\n"
    "      a[i][j] = b[i][j] * 2.0;\n"
    "  printf(\"%f\\n\", a[3][3]);\n"
    "  return 0;\n"
    "}\n";

const char* kAllFixtures[] = {"himeno/himeno.c",    "batching/three_loops.c", "classify/corpus.c",
                              "safety/iterative.c", "safety/locals.c",        "safety/calls.c",
                              "safety/nested.c",    "safety/control.c",       "refs/refs30.c"};

}  // namespace

TEST_CASE("an all-zero genome leaves the source untouched") {
  for (const char* rel : kAllFixtures) {
    auto l = testing::load_fixture({rel});
    auto v = emit(l, std::string(l.genes.size(), '0'));
    CAPTURE(rel);
    CHECK(v.files.front().second == l.project.units.front().original_text);
    CHECK(v.insertion_log.empty());
  }
}

TEST_CASE("a tight nest reading a local array gets a copyin region and a kernels pragma") {
  auto l = testing::load_source_text(kLocalNest);
  REQUIRE(l.genes == std::vector<int>{0, 1, 2, 3});
  auto v = emit(l, "0010");
  const auto& text = v.files.front().second;
  CHECK(text.find("  #pragma acc data copyin(b[0:8][0:8]) copyout(a[0:8][0:8])\n  {\n") != std::string::npos);
  CHECK(text.find("  #pragma acc kernels\n  for (i = 0; i < 8; i++)\n    for (j = 0; j < 8; j++)\n"
                  "      a[i][j] = b[i][j] * 2.0;") != std::string::npos);
  CHECK(count_compute_pragmas(text) == 1);
  CHECK(strip_inserted_lines(text, v.insertion_log, v.files.front().first) == l.project.units.front().original_text);
}

TEST_CASE("a temporary-region global gets declare create at its declaration and updates around the region") {
  const char* text =
      "#include <stdio.h>\n"
      "double g[16];\n"
      "int main(void) {\n"
      "  int i;\n"
      "  for (i = 0; i < 16; i++)\n"
      "    g[i] = i;\n"
      "  for (i = 0; i < 16; i++)\n"
      "    g[i] = g[i] * 2.0;\n"
      "  printf(\"%f\\n\", g[3]);\n"
      "  return 0;\n"
      "}\n";
  auto l = testing::load_source_text(text);
  auto out = emit(l, "01").files.front().second;
  CHECK(out ==
        "#include <stdio.h>\n"
        "double g[16];\n"
        "#pragma acc declare create(g[0:16])\n"
        "int main(void) {\n"
        "  int i;\n"
        "  for (i = 0; i < 16; i++)\n"
        "    g[i] = i;\n"
        "  #pragma acc update device(g[0:16])\n"
        "  #pragma acc kernels\n"
        "  for (i = 0; i < 16; i++)\n"
        "    g[i] = g[i] * 2.0;\n"
        "  #pragma acc update self(g[0:16])\n"
        "  printf(\"%f\\n\", g[3]);\n"
        "  return 0;\n"
        "}\n");
}

TEST_CASE("kind spellings follow the verdicts") {
  auto l = testing::load_fixture({"classify/corpus.c"});
  auto v = emit(l, std::string(l.genes.size(), '1'));
  for (const auto& ins : v.insertion_log) {
    auto t = ins.text;
    t.erase(0, t.find_first_not_of(' '));
    CAPTURE(t);
    CHECK(t.rfind("#pragma acc ", 0) == 0);
    CHECK(t.find("  ") == std::string::npos);
  }
}

TEST_CASE("property: stripping, pragma count and re-parse over random genomes") {
  std::mt19937_64 rng(2024);
  for (const char* rel : kAllFixtures) {
    auto l = testing::load_fixture({rel});
    const auto& original = l.project.units.front().original_text;
    const auto& loops = l.project.model.loops;
    for (int trial = 0; trial < 40; ++trial) {
      Genome g(l.genes.size());
      for (auto& b : g) b = static_cast<std::uint8_t>(rng() & 1);
      auto v = emit(l, g);
      const auto& [file_id, text] = v.files.front();
      CAPTURE(rel);
      CAPTURE(genome_to_string(g));
      CHECK(strip_inserted_lines(text, v.insertion_log, file_id) == original);
      auto roots = effective_gpu_loops(g, l.genes, loops);
      CHECK(count_compute_pragmas(text) == static_cast<int>(roots.size()));
      bool has_nested_gene = roots.size() != popcount(g);
      if (!has_nested_gene) CHECK(count_compute_pragmas(text) == static_cast<int>(popcount(g)));
      auto reparsed = extract_loops(parse_source(text, file_id));
      REQUIRE(reparsed.size() == loops.size());
      for (std::size_t i = 0; i < loops.size(); ++i) {
        CHECK(reparsed.loops[i].index_var == loops.loops[i].index_var);
        CHECK(reparsed.loops[i].shape == loops.loops[i].shape);
        CHECK(without_inserted(text, reparsed.loops[i], v.insertion_log) ==
              std::string(l.project.units.front().slice(loops.loops[i].span)));
      }
    }
  }
}

TEST_CASE("a source without a final newline strips back exactly") {
  std::string text = "double w[4];\nint main(void) {\n  int i;\n  for (i = 0; i < 4; i++)\n    w[i] = i;\n  return 0;\n}";
  auto l = testing::load_source_text(text);
  auto v = emit(l, "1");
  CHECK(v.files.front().second != text);
  CHECK(strip_inserted_lines(v.files.front().second, v.insertion_log, v.files.front().first) == text);
}

TEST_CASE("emission errors") {
  auto l = testing::load_source_text(kLocalNest);
  const auto& m = l.project.model;

  SUBCASE("genome length") {
    CHECK_THROWS_AS(emit(l, "01"), GenomeLengthMismatch);
  }
  SUBCASE("plan for a loop that is not offloaded") {
    auto plan = make_transfer_plan(genome_from_string("0010"), l.genes, m.loops, m.refs);
    CHECK_THROWS_AS(emit_variant(l.project.units, genome_from_string("0000"), l.verdicts, plan, m.loops, m.refs),
                    PlanInconsistent);
  }
  SUBCASE("present site outside its region") {
    auto plan = make_transfer_plan(genome_from_string("0010"), l.genes, m.loops, m.refs);
    REQUIRE_FALSE(plan.entries.empty());
    plan.entries.front().present_sites.push_back(0);
    CHECK_THROWS_AS(emit_variant(l.project.units, genome_from_string("0010"), l.verdicts, plan, m.loops, m.refs),
                    PlanInconsistent);
  }
  SUBCASE("array of unknown extent") {
    auto u = testing::load_source_text(
        "extern double z[];\ndouble w[4];\nint main(void) {\n  int i;\n  for (i = 0; i < 4; i++)\n"
        "    w[i] = z[i];\n  return 0;\n}\n");
    CHECK_THROWS_AS(emit(u, "1"), EmissionError);
  }
}

TEST_CASE("clause items and the insertion log format") {
  VarInfo v;
  v.name = "main::grid";
  v.source_name = "grid";
  v.is_array = true;
  v.extents = {6, 8, 10};
  CHECK(clause_item(v) == "grid[0:6][0:8][0:10]");
  auto json = insertion_log_to_json({{"a.c", 3, "#pragma acc kernels"}});
  CHECK(json.find("\"line\"") != std::string::npos);
  CHECK(json.find("#pragma acc kernels") != std::string::npos);
}
