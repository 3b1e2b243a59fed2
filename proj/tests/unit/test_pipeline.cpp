#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include "doctest.h"

#include "acctune/emitter.hpp"
#include "acctune/error.hpp"
#include "acctune/pipeline.hpp"
#include "fixture_paths.hpp"

using namespace acctune;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "acctune-unit-XXXXXX").string();
    REQUIRE(mkdtemp(pattern.data()) != nullptr);
    path = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

class FixedEvaluator final : public Evaluator {
 public:
  explicit FixedEvaluator(MeasuredTime m) : m_(std::move(m)) {}
  MeasuredTime measure(const Genome&) override { return m_; }
  EvaluatorCapability capability() const override { return {1, true}; }

 private:
  MeasuredTime m_;
};

ToolConfig himeno_config(const std::string& out, std::uint64_t seed = 1) {
  auto c = load_tool_config(testing::fixture("himeno/config.json"));
  c.output_dir = out;
  c.ga.seed = seed;
  return c;
}

const char* kSerial =
    "#include <stdio.h>\n"
    "double a[16];\n"
    "int main(void) {\n"
    "  int i;\n"
    "  a[0] = 1.0;\n"
    "  for (i = 1; i < 16; i++)\n"
    "    a[i] = a[i - 1] * 1.5;\n"
    "  printf(\"%f\\n\", a[15]);\n"
    "  return 0;\n"
    "}\n";

const char* kParallel =
    "#include <stdio.h>\n"
    "double a[256];\n"
    "double b[256];\n"
    "int main(void) {\n"
    "  int i;\n"
    "  for (i = 0; i < 256; i++)\n"
    "    b[i] = i * 0.25;\n"
    "  for (i = 0; i < 256; i++)\n"
    "    a[i] = b[i] * b[i] + 1.0;\n"
    "  printf(\"%f %f\\n\", a[10], a[255]);\n"
    "  return 0;\n"
    "}\n";

}  // namespace

TEST_CASE("config: relative paths resolve against the config directory") {
  auto c = tool_config_from_json(
      R"({"inputs": ["src/a.c", "/abs/b.c"], "evaluator": {"kind": "costmodel", "model": "m.json"},
          "trip_counts": "trips.json", "trip_threshold": 100, "output_dir": "out"})",
      "/work/cfg");
  CHECK(c.inputs == std::vector<std::string>{"/work/cfg/src/a.c", "/abs/b.c"});
  CHECK(c.cost_model_path == "/work/cfg/m.json");
  CHECK(c.trip_counts_path == "/work/cfg/trips.json");
  CHECK(c.output_dir == "/work/cfg/out");
  CHECK(c.trip_threshold == 100);
  CHECK(c.atol == 1e-6);
  CHECK(c.rtol == 1e-4);
  CHECK(c.ga.population == 10);
}

TEST_CASE("config: the external evaluator's timeout becomes the search timeout") {
  auto c = tool_config_from_json(
      R"({"inputs": ["a.c"], "evaluator": {"kind": "external", "compile": "cc {src} -o {bin}", "run": "{bin}",
          "timeout_s": 30, "capacity": 2}, "verify": {"atol": 0.01, "rtol": 0}})");
  CHECK(c.evaluator == ToolConfig::EvaluatorKind::External);
  CHECK(c.command.timeout_s == 30.0);
  CHECK(c.command.capacity == 2);
  CHECK(c.ga.timeout_s == 30.0);
  CHECK(c.atol == 0.01);
}

TEST_CASE("config errors") {
  const char* bad[] = {
      "{",
      R"({"evaluator": {"kind": "costmodel", "model": "m.json"}})",
      R"({"inputs": ["a.c"], "structure": "s.json", "evaluator": {"kind": "costmodel", "model": "m.json"}})",
      R"({"inputs": ["a.c"]})",
      R"({"inputs": ["a.c"], "evaluator": {"kind": "magic"}})",
      R"({"inputs": ["a.c"], "evaluator": {"kind": "costmodel"}})",
      R"({"inputs": ["a.c"], "evaluator": {"kind": "external", "compile": "cc"}})",
      R"({"structure": "s.json", "evaluator": {"kind": "external", "run": "x"}})",
      R"({"inputs": ["a.c"], "probe": {"mode": "command"}, "evaluator": {"kind": "costmodel", "model": "m"}})",
      R"({"inputs": ["a.c"], "probe": {"mode": "psychic"}, "evaluator": {"kind": "costmodel", "model": "m"}})",
      R"({"inputs": ["a.c"], "evaluator": {"kind": "costmodel", "model": "m"}, "ga": {"population": 0}})",
      R"({"inputs": ["a.c"], "evaluator": {"kind": "costmodel", "model": "m"}, "trip_threshold": -1})",
      R"({"inputs": "a.c", "evaluator": {"kind": "costmodel", "model": "m"}})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(tool_config_from_json(text), ConfigError);
  }
  CHECK_THROWS_AS(load_tool_config("/nonexistent/acctune.json"), ConfigError);
}

TEST_CASE("verify: tolerance semantics") {
  auto same = verify_results("1.0 2.5 done\n", "1.0 2.5 done\n", 1e-6, 1e-4);
  CHECK(same.pass);
  CHECK(same.compared == 3);
  CHECK(same.max_abs_error == 0.0);

  CHECK(verify_results("0.5", "0.500000001", 1e-6, 0.0).pass);

  // Bound is atol + rtol * |baseline| = 0.25 + 0.25 * 1 = 0.5, exactly representable.
  CHECK(verify_results("1.0", "1.5", 0.25, 0.25).pass);
  CHECK_FALSE(verify_results("1.0", "1.5000001", 0.25, 0.25).pass);
  CHECK(verify_results("-4.0", "-5.0", 0.0, 0.25).pass);
  CHECK_FALSE(verify_results("-4.0", "-5.0", 0.0, 0.2).pass);

  auto diff = verify_results("1 2 3", "1 2.5 3", 0.1, 0.0);
  CHECK_FALSE(diff.pass);
  REQUIRE(diff.failures.size() == 1);
  CHECK(diff.failures[0].index == 1);
  CHECK(diff.max_abs_error == doctest::Approx(0.5));
  CHECK(diff.max_rel_error == doctest::Approx(0.25));
}

TEST_CASE("verify: lengths, words, NaN and binary output") {
  auto len = verify_results("1 2 3", "1 2", 1e-6, 1e-4);
  CHECK_FALSE(len.pass);
  CHECK_FALSE(len.diagnostic.empty());
  CHECK_FALSE(verify_results("ok", "OK", 1.0, 1.0).pass);
  CHECK(verify_results("nan 1", "nan 1", 0.0, 0.0).pass);
  CHECK_FALSE(verify_results("nan", "1.0", 1e9, 0.0).pass);
  CHECK_FALSE(verify_results("1.0", "nan", 1e9, 0.0).pass);
  CHECK_THROWS_AS(verify_results(std::string("1\0 2", 4), "1 2", 0.0, 0.0), UnparsableOutput);
  CHECK(diff_report_to_json(len).find("\"pass\": false") != std::string::npos);
}

TEST_CASE("baseline measurement") {
  FixedEvaluator ten(MeasuredTime::of(10.0));
  CHECK(measure_baseline(ten, 1, 180.0).seconds == 10.0);
  FixedEvaluator broken(MeasuredTime::failure("segfault"));
  CHECK_THROWS_AS(measure_baseline(broken, 3, 180.0), EnvironmentError);
  FixedEvaluator hung(MeasuredTime::timeout());
  CHECK_THROWS_AS(measure_baseline(hung, 3, 180.0), EnvironmentError);
  FixedEvaluator slow(MeasuredTime::of(200.0));
  CHECK_THROWS_AS(measure_baseline(slow, 3, 180.0), EnvironmentError);

  auto ft = testing::load_fixture({"ft/ft.c"});
  CostModelEvaluator calibrated(cost_model_from_json(read_file(testing::fixture("ft/cost_model.json"))),
                                ft.context());
  CHECK(measure_baseline(calibrated, 65, 180.0).seconds == doctest::Approx(31.3));
}

TEST_CASE("tune on the 13-gene fixture writes a complete, reproducible report") {
  TempDir tmp;
  auto report = run_pipeline(himeno_config(tmp / "a"));
  CHECK(report.status == "tuned");
  CHECK(report.gene_loops.size() == 13);
  CHECK(report.improvement_ratio == doctest::Approx(report.baseline_time_s / report.best_time_s).epsilon(1e-12));
  CHECK(std::abs(report.improvement_ratio - report.baseline_time_s / report.best_time_s) <= 1e-12);

  auto l = testing::load_fixture({"himeno/himeno.c"});
  auto opt = brute_force_optimum(cost_model_from_json(read_file(testing::fixture("himeno/cost_model.json"))),
                                 l.context());
  CHECK(report.best_time_s <= opt.time_s * 1.05);

  for (const char* f : {"report.json", "generations.jsonl", "metadata.json", "insertions.json", "src/himeno.c"})
    CHECK(fs::exists(tmp / (std::string("a/") + f)));
  CHECK(report.records.size() == 10);

  // The emitted variant is the best genome's variant and strips back to the input.
  const auto& m = l.project.model;
  auto v = emit_variant(l.project.units, report.best_genome, l.verdicts, report.plan, m.loops, m.refs);
  CHECK(read_file(tmp / "a/src/himeno.c") == v.files.front().second);
  CHECK(strip_inserted_lines(v.files.front().second, v.insertion_log, v.files.front().first) ==
        l.project.units.front().original_text);

  run_pipeline(himeno_config(tmp / "b"));
  CHECK(read_file(tmp / "a/report.json") == read_file(tmp / "b/report.json"));
  CHECK(read_file(tmp / "a/generations.jsonl") == read_file(tmp / "b/generations.jsonl"));

  auto parsed = report_from_json(read_file(tmp / "a/report.json"));
  CHECK(parsed.status == report.status);
  CHECK(parsed.inputs == report.inputs);
  CHECK(parsed.verdicts == report.verdicts);
  CHECK(parsed.gene_loops == report.gene_loops);
  CHECK(parsed.best_genome == report.best_genome);
  CHECK(parsed.baseline_time_s == report.baseline_time_s);
  CHECK(parsed.best_time_s == report.best_time_s);
  CHECK(parsed.improvement_ratio == report.improvement_ratio);
  CHECK(parsed.evaluator_calls == report.evaluator_calls);
  CHECK(parsed.ga.seed == report.ga.seed);
}

TEST_CASE("emit-best reproduces the tuned sources") {
  TempDir tmp;
  run_pipeline(himeno_config(tmp / "r"));
  auto written = emit_best(tmp / "r", tmp / "out");
  REQUIRE(written.size() == 1);
  CHECK(read_file(written[0]) == read_file(tmp / "r/src/himeno.c"));
  CHECK(fs::exists(tmp / "out/insertions.json"));
  CHECK_THROWS(emit_best(tmp / "missing", tmp / "out2"));
}

TEST_CASE("the 65-gene calibrated model reaches at least five times") {
  TempDir tmp;
  auto c = load_tool_config(testing::fixture("ft/config.json"));
  c.output_dir.clear();
  auto report = run_pipeline(c);
  CHECK(report.gene_loops.size() == 65);
  CHECK(report.baseline_time_s == doctest::Approx(31.3));
  CHECK(report.improvement_ratio >= 5.0);
  CHECK(report.best_time_s <= 6.4);
  CHECK(report.ga.population == 30);
  CHECK(report.records.size() == 20);
}

TEST_CASE("a program with nothing to offload gives a clean report") {
  TempDir tmp;
  write_file(tmp / "serial.c", kSerial);
  write_file(tmp / "model.json", R"({"overhead_s": 0.5, "loops": {"0": {"cpu_s": 1.0, "gpu_s": 0.1}}})");
  auto c = tool_config_from_json(
      R"({"inputs": ["serial.c"], "evaluator": {"kind": "costmodel", "model": "model.json"}, "output_dir": "out"})",
      tmp.path.string());
  auto report = run_pipeline(c);
  CHECK(report.status == "no offloadable loops");
  CHECK(report.improvement_ratio == 1.0);
  CHECK(report.best_genome.empty());
  CHECK(report.baseline_time_s == doctest::Approx(0.5));
  CHECK(fs::exists(tmp / "out/report.json"));
  CHECK_THROWS_AS(emit_best(tmp / "out", tmp / "emit"), ConfigError);
}

TEST_CASE("external evaluation verifies the tuned output against the baseline") {
  TempDir tmp;
  write_file(tmp / "p.c", kParallel);
  std::string base = R"({"inputs": ["p.c"], "ga": {"population": 4, "generations": 2}, "output_dir": "out",
      "evaluator": {"kind": "external", "timeout_s": 60, "compile": "cc -O0 -o {bin} {src}", )";

  auto good = run_pipeline(tool_config_from_json(base + R"("run": "{bin}"}})", tmp.path.string()));
  REQUIRE(good.verification.has_value());
  CHECK(good.verification->pass);
  CHECK(good.verification->compared == 2);

  // A run command that prints a different value whenever a directive is
  // present, and is slower without one so that the search prefers offloading.
  auto bad = run_pipeline(tool_config_from_json(
      base + R"("run": "if grep -q 'pragma acc' {src}; then echo 2; else sleep 0.3; echo 1; fi"}})",
      tmp.path.string()));
  REQUIRE(popcount(bad.best_genome) > 0);
  REQUIRE(bad.verification.has_value());
  CHECK_FALSE(bad.verification->pass);
}

TEST_CASE("structure-only input runs with the cost model") {
  TempDir tmp;
  auto model = load_sources({testing::fixture("batching/three_loops.c")}).model;
  auto text = to_json(model);
  // Drop the source path so the structure stands alone.
  auto pos = text.find(testing::fixture("batching/three_loops.c"));
  REQUIRE(pos != std::string::npos);
  text.replace(pos, testing::fixture("batching/three_loops.c").size(), "/nonexistent/three_loops.c");
  write_file(tmp / "structure.json", text);
  // Without source text every loop passes the shape-only probe, so the model
  // also covers the initialization loop.
  auto cm = cost_model_from_json(read_file(testing::fixture("batching/cost_model.json")));
  for (const auto& loop : model.loops.loops) cm.loops.try_emplace(loop.loop_id, LoopCost{0.4, 0.05});
  write_file(tmp / "model.json", cost_model_to_json(cm));
  auto c = tool_config_from_json(
      R"({"structure": "structure.json", "evaluator": {"kind": "costmodel", "model": "model.json"}})",
      tmp.path.string());
  auto report = run_pipeline(c);
  CHECK(report.status == "tuned");
  CHECK_FALSE(report.gene_loops.empty());
  CHECK(report.improvement_ratio > 1.0);
}
