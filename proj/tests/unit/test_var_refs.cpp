#include <regex>
#include <set>
#include <string>
#include <tuple>

#include "doctest.h"

#include "acctune/error.hpp"
#include "acctune/loops.hpp"
#include "acctune/pipeline.hpp"
#include "acctune/structure_io.hpp"
#include "acctune/var_refs.hpp"
#include "fixture_paths.hpp"

using namespace acctune;

namespace {

struct Row {
  const char* var;
  int loop;
  bool read, written, defined;
};

// Worked out by hand from tests/fixtures/refs/refs30.c. Loop entries cover
// the whole loop subtree, so loop 2 also sees what its inner loop 3 touches.
const Row kHandTable[] = {
    {"a", 2, false, true, false},         {"a", 4, true, false, false},
    {"b", 0, true, true, false},          {"b", 1, false, true, false},
    {"b", 2, true, false, false},         {"b", 4, true, false, false},
    {"s", 5, true, true, false},          {"main::c", 4, false, true, false},
    {"main::c", 5, true, false, false},   {"main::t", 2, true, true, true},
    {"main::t", 3, true, false, false},   {"main::tmp", 2, true, true, true},
    {"main::tmp", 3, false, true, false}, {"main::j", 2, true, true, false},
    {"main::j", 3, true, true, false},    {"scale::f", 0, true, false, false},
};

ProjectModel analyze_fixture(const std::string& rel) {
  return load_sources({testing::fixture(rel)}).model;
}

}  // namespace

TEST_CASE("loop entries of the 30-line fixture match the hand table") {
  auto model = analyze_fixture("refs/refs30.c");
  const auto& refs = model.refs;
  std::set<std::pair<std::string, int>> expected;
  for (const auto& row : kHandTable) {
    CAPTURE(row.var);
    CAPTURE(row.loop);
    auto v = refs.var_index(row.var);
    REQUIRE(v.has_value());
    auto flags = refs.entry(*v, "loop:" + std::to_string(row.loop));
    REQUIRE(flags.has_value());
    CHECK(flags->read == row.read);
    CHECK(flags->written == row.written);
    CHECK(flags->defined == row.defined);
    expected.insert({row.var, row.loop});
  }
  // No other (variable, loop) pair exists apart from the loop indices.
  for (const auto& e : refs.entries) {
    if (e.region.rfind("loop:", 0) != 0) continue;
    const auto& name = refs.vars[static_cast<std::size_t>(e.var)].name;
    if (name == "main::i" || name == "scale::i") continue;
    CAPTURE(name);
    CAPTURE(e.region);
    CHECK(expected.count({name, std::stoi(e.region.substr(5))}) == 1);
  }
}

TEST_CASE("scope tags of the 30-line fixture") {
  auto model = analyze_fixture("refs/refs30.c");
  auto scope_of = [&](const char* n) { return model.refs.vars[*model.refs.var_index(n)].scope; };
  CHECK(scope_of("a") == VarScope::Global);
  CHECK(scope_of("s") == VarScope::Global);
  CHECK(scope_of("main::c") == VarScope::Local);
  CHECK(scope_of("scale::f") == VarScope::Local);
  // A scalar declared in the loop body is private to the loop.
  CHECK(scope_of("main::t") == VarScope::LoopLocal);
  // An array declared in the loop body but used by an inner loop needs
  // device storage when only the inner loop is offloaded.
  CHECK(scope_of("main::tmp") == VarScope::Local);
}

TEST_CASE("an array private to one loop body is loop-local") {
  auto unit = parse_source(
      "double out[8];\nint main(void) {\n  int i;\n  for (i = 0; i < 8; i++) {\n    double w[2];\n"
      "    w[0] = i; w[1] = 2.0 * i;\n    out[i] = w[0] + w[1];\n  }\n  return 0;\n}\n",
      "p.c");
  auto loops = extract_loops(unit);
  auto refs = analyze_variable_refs(unit, loops);
  CHECK(refs.vars[*refs.var_index("main::w")].scope == VarScope::LoopLocal);
}

TEST_CASE("writes after all loops are visible to a later host region") {
  auto model = analyze_fixture("refs/refs30.c");
  const auto& refs = model.refs;
  int s = *refs.var_index("s");
  bool host_read = false;
  for (const auto& e : refs.entries)
    if (e.var == s && e.region.rfind("host:", 0) == 0 && e.flags.read && !e.flags.written) host_read = true;
  CHECK(host_read);
}

TEST_CASE("property: no write seen by a token-level scan is missed") {
  // A name followed by optional subscripts and then an assignment operator
  // or ++/--, or preceded by ++/--.
  const std::regex write_re(R"(([A-Za-z_]\w*)\s*(\[[^\]=;]*\]\s*)*(=(?!=)|\+=|-=|\*=|/=|\+\+|--))");
  const std::regex pre_re(R"((\+\+|--)\s*([A-Za-z_]\w*))");
  for (const char* rel : {"refs/refs30.c", "himeno/himeno.c", "ft/ft.c", "classify/corpus.c", "safety/iterative.c",
                          "safety/locals.c", "safety/calls.c", "safety/nested.c", "safety/control.c"}) {
    CAPTURE(rel);
    auto project = load_sources({testing::fixture(rel)});
    const auto& unit = project.units.front();
    const auto& refs = project.model.refs;
    for (const auto& loop : project.model.loops.loops) {
      std::string body(unit.slice(loop.span));
      std::set<std::string> written;
      for (std::sregex_iterator it(body.begin(), body.end(), write_re), end; it != end; ++it) {
        // `<=`, `>=` and `!=` are comparisons, not writes.
        auto pos = static_cast<std::size_t>(it->position(3));
        if ((*it)[3] == "=" && pos > 0 && std::string("<>!").find(body[pos - 1]) != std::string::npos) continue;
        written.insert((*it)[1]);
      }
      for (std::sregex_iterator it(body.begin(), body.end(), pre_re), end; it != end; ++it) written.insert((*it)[2]);
      for (const auto& name : written) {
        bool found = false;
        bool known = false;
        for (std::size_t v = 0; v < refs.vars.size(); ++v) {
          if (refs.vars[v].source_name != name) continue;
          known = true;
          auto f = refs.entry(static_cast<int>(v), "loop:" + std::to_string(loop.loop_id));
          if (f && f->written) found = true;
        }
        if (!known) continue;  // keywords and type names caught by the pattern
        CAPTURE(name);
        CAPTURE(loop.loop_id);
        CHECK(found);
      }
    }
  }
}

TEST_CASE("analysis is deterministic") {
  auto a = analyze_fixture("himeno/himeno.c");
  auto b = analyze_fixture("himeno/himeno.c");
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("structural description round-trips through JSON") {
  auto model = analyze_fixture("refs/refs30.c");
  auto text = to_json(model);
  auto back = project_from_json(text);
  CHECK(to_json(back) == text);
  CHECK(back.loops.size() == model.loops.size());
  CHECK(back.refs.vars.size() == model.refs.vars.size());
}

TEST_CASE("the minimal structural form is accepted") {
  const char* text = R"({"files": [{"file_id": "m.c", "loops": [
      {"loop_id": 0, "span": [10, 60], "parent": null, "shape": "SingleLoop", "index_var": "i", "trip_count": 100},
      {"loop_id": 1, "span": [70, 120], "parent": null, "shape": "SingleLoop", "index_var": "i", "trip_count": null}],
    "vars": [{"name": "a", "scope": "global", "refs": [
      {"region": "loop:0", "read": false, "written": true, "defined": false},
      {"region": "loop:1", "read": true, "written": false, "defined": false}]}]}]})";
  auto model = project_from_json(text);
  REQUIRE(model.loops.size() == 2);
  CHECK(model.loops.loops[0].trip_count_estimate == 100);
  CHECK_FALSE(model.loops.loops[1].trip_count_estimate.has_value());
  auto a = model.refs.var_index("a");
  REQUIRE(a.has_value());
  CHECK(model.refs.entry(*a, "loop:0")->written);
  CHECK(model.refs.entry(*a, "loop:1")->read);
}

TEST_CASE("malformed structural descriptions raise FormatError") {
  CHECK_THROWS_AS(project_from_json("not json"), FormatError);
  CHECK_THROWS_AS(project_from_json(R"({"files": 3})"), FormatError);
  CHECK_THROWS_AS(project_from_json(R"({"files": [{"file_id": "m.c", "loops": [{"loop_id": 0}]}]})"), FormatError);
}
