#include "acctune/pipeline.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "acctune/emitter.hpp"
#include "acctune/error.hpp"

namespace acctune {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw EnvironmentError("cannot write '" + path + "'");
}

namespace {

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).lexically_normal().string();
}

GAConfig ga_from_json(const json& j) {
  GAConfig g;
  g.population = j.value("population", g.population);
  g.generations = j.value("generations", g.generations);
  g.crossover_rate = j.value("crossover_rate", g.crossover_rate);
  g.mutation_rate = j.value("mutation_rate", g.mutation_rate);
  g.timeout_s = j.value("timeout_s", g.timeout_s);
  g.penalty_time_s = j.value("penalty_time_s", g.penalty_time_s);
  g.seed = j.value("seed", g.seed);
  g.elitism = j.value("elitism", g.elitism);
  return g;
}

json ga_to_json(const GAConfig& g) {
  return json{{"population", g.population},     {"generations", g.generations},
              {"crossover_rate", g.crossover_rate}, {"mutation_rate", g.mutation_rate},
              {"timeout_s", g.timeout_s},       {"penalty_time_s", g.penalty_time_s},
              {"seed", g.seed},                 {"elitism", g.elitism}};
}

std::string iso_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

ToolConfig tool_config_from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    ToolConfig c;
    for (const auto& p : j.value("inputs", std::vector<std::string>{})) c.inputs.push_back(resolve(base_dir, p));
    c.structure = resolve(base_dir, j.value("structure", std::string{}));
    if (c.inputs.empty() == c.structure.empty())
      throw ConfigError("config needs exactly one of \"inputs\" and \"structure\"");

    json probe = j.value("probe", json::object());
    std::string mode = probe.value("mode", std::string("static"));
    if (mode == "static") c.probe.mode = ProbeConfig::Mode::Static;
    else if (mode == "command") c.probe.mode = ProbeConfig::Mode::Command;
    else throw ConfigError("probe.mode must be \"static\" or \"command\"");
    c.probe.command = probe.value("command", std::string{});
    c.probe.capacity = probe.value("capacity", std::size_t{1});
    if (probe.contains("timeout_s")) c.probe.timeout_s = probe["timeout_s"].get<double>();
    if (c.probe.mode == ProbeConfig::Mode::Command && c.probe.command.empty())
      throw ConfigError("probe.command is required in command mode");

    if (!j.contains("evaluator")) throw ConfigError("config needs an \"evaluator\" section");
    json ev = j["evaluator"];
    std::string kind = ev.value("kind", std::string{});
    if (kind == "costmodel") {
      c.evaluator = ToolConfig::EvaluatorKind::CostModel;
      c.cost_model_path = resolve(base_dir, ev.value("model", std::string{}));
      if (c.cost_model_path.empty()) throw ConfigError("evaluator.model is required for the cost-model evaluator");
    } else if (kind == "external") {
      c.evaluator = ToolConfig::EvaluatorKind::External;
      c.command.compile = ev.value("compile", std::string{});
      c.command.run = ev.value("run", std::string{});
      c.command.timeout_s = ev.value("timeout_s", 180.0);
      c.command.capacity = ev.value("capacity", std::size_t{1});
      if (c.command.run.empty()) throw ConfigError("evaluator.run is required for the external evaluator");
      if (!c.structure.empty()) throw ConfigError("the external evaluator needs source inputs");
    } else {
      throw ConfigError("evaluator.kind must be \"costmodel\" or \"external\"");
    }

    c.ga = ga_from_json(j.value("ga", json::object()));
    if (c.evaluator == ToolConfig::EvaluatorKind::External && !j.value("ga", json::object()).contains("timeout_s"))
      c.ga.timeout_s = c.command.timeout_s;
    c.ga.validate();
    c.trip_counts_path = resolve(base_dir, j.value("trip_counts", std::string{}));
    c.trip_threshold = j.value("trip_threshold", 0LL);
    if (c.trip_threshold < 0) throw ConfigError("trip_threshold must not be negative");
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string{}));
    json verify = j.value("verify", json::object());
    c.atol = verify.value("atol", c.atol);
    c.rtol = verify.value("rtol", c.rtol);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ToolConfig load_tool_config(const std::string& path) {
  std::string base = fs::path(path).parent_path().string();
  return tool_config_from_json(read_file(path), base.empty() ? "." : base);
}

Project load_sources(const std::vector<std::string>& paths) {
  Project p;
  for (const auto& path : paths) p.units.push_back(parse_source(read_file(path), fs::path(path).filename().string()));
  std::vector<std::string> abs;
  for (const auto& path : paths) abs.push_back(fs::absolute(path).lexically_normal().string());
  p.model = analyze_project(p.units, abs);
  return p;
}

Project load_structure(const std::string& path) {
  Project p;
  p.model = project_from_json(read_file(path));
  if (p.model.source_paths.size() == p.model.file_ids.size() && !p.model.source_paths.empty()) {
    bool all = true;
    for (const auto& s : p.model.source_paths) all = all && fs::exists(s);
    if (all) {
      for (std::size_t i = 0; i < p.model.source_paths.size(); ++i)
        p.units.push_back(parse_source(read_file(p.model.source_paths[i]), p.model.file_ids[i]));
    }
  }
  return p;
}

DiffReport verify_results(const std::string& baseline_output, const std::string& tuned_output, double atol,
                          double rtol) {
  if (baseline_output.find('\0') != std::string::npos || tuned_output.find('\0') != std::string::npos)
    throw UnparsableOutput("output contains NUL bytes");
  auto tokens = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string t; in >> t;) out.push_back(t);
    return out;
  };
  auto number = [](const std::string& t, double& v) {
    char* end = nullptr;
    v = std::strtod(t.c_str(), &end);
    return end && *end == '\0' && end != t.c_str();
  };
  DiffReport d;
  d.atol = atol;
  d.rtol = rtol;
  auto a = tokens(baseline_output);
  auto b = tokens(tuned_output);
  if (a.size() != b.size()) {
    d.pass = false;
    d.diagnostic = "value count differs: baseline has " + std::to_string(a.size()) + ", tuned has " +
                   std::to_string(b.size());
  }
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    ++d.compared;
    double x = 0;
    double y = 0;
    bool ok = true;
    ValueDiff vd{i, a[i], b[i], 0.0, 0.0};
    if (number(a[i], x) && number(b[i], y)) {
      if (std::isnan(x) || std::isnan(y)) {
        ok = std::isnan(x) && std::isnan(y);
      } else {
        vd.abs_error = std::fabs(y - x);
        vd.rel_error = x != 0.0 ? vd.abs_error / std::fabs(x) : (vd.abs_error == 0.0 ? 0.0 : INFINITY);
        ok = vd.abs_error <= atol + rtol * std::fabs(x);
        d.max_abs_error = std::max(d.max_abs_error, vd.abs_error);
        d.max_rel_error = std::max(d.max_rel_error, vd.rel_error);
      }
    } else {
      ok = a[i] == b[i];
    }
    if (!ok) {
      d.pass = false;
      if (d.failures.size() < 20) d.failures.push_back(vd);
    }
  }
  if (d.diagnostic.empty() && !d.pass) d.diagnostic = "values differ beyond tolerance";
  return d;
}

std::string diff_report_to_json(const DiffReport& d) {
  json fails = json::array();
  for (const auto& f : d.failures)
    fails.push_back({{"index", f.index},
                     {"baseline", f.baseline},
                     {"tuned", f.tuned},
                     {"abs_error", f.abs_error},
                     {"rel_error", f.rel_error}});
  return json{{"pass", d.pass},
              {"compared", d.compared},
              {"max_abs_error", d.max_abs_error},
              {"max_rel_error", d.max_rel_error},
              {"atol", d.atol},
              {"rtol", d.rtol},
              {"diagnostic", d.diagnostic},
              {"failures", fails}}
             .dump(2) +
         "\n";
}

MeasuredTime measure_baseline(Evaluator& evaluator, std::size_t gene_len, double timeout_s) {
  MeasuredTime m = evaluator.measure(Genome(gene_len, 0));
  if (m.kind == MeasuredTime::Kind::Timeout || (m.ok() && m.seconds > timeout_s))
    throw EnvironmentError("baseline (all-CPU) run exceeded the " + std::to_string(timeout_s) + " s timeout");
  if (!m.ok()) throw EnvironmentError("baseline (all-CPU) run failed: " + m.diagnostic);
  return m;
}

std::string report_to_json(const TuneReport& r) {
  json kinds = json::object();
  for (const auto& [id, k] : kind_map(r.verdicts)) kinds[std::to_string(id)] = std::string(to_string(k));
  json verification;
  if (r.verification) verification = json::parse(diff_report_to_json(*r.verification));
  else verification = json{{"skipped", r.verification_note}};
  json j{{"status", r.status},
         {"inputs", r.inputs},
         {"structure", r.structure},
         {"gene_loops", r.gene_loops},
         {"kinds", kinds},
         {"verdicts", json::parse(verdicts_to_json(r.verdicts))["verdicts"]},
         {"baseline_time_s", r.baseline_time_s},
         {"best_genome", genome_to_string(r.best_genome)},
         {"best_time_s", r.best_time_s},
         {"improvement_ratio", r.improvement_ratio},
         {"plan", json::parse(plan_to_json(r.plan))},
         {"evaluator_calls", r.evaluator_calls},
         {"generations", r.records.size()},
         {"ga", ga_to_json(r.ga)},
         {"verification", verification}};
  return j.dump(2) + "\n";
}

TuneReport report_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    TuneReport r;
    r.status = j.at("status").get<std::string>();
    r.inputs = j.value("inputs", std::vector<std::string>{});
    r.structure = j.value("structure", std::string{});
    r.gene_loops = j.value("gene_loops", std::vector<int>{});
    r.verdicts = verdicts_from_json(json{{"verdicts", j.at("verdicts")}}.dump());
    r.baseline_time_s = j.at("baseline_time_s").get<double>();
    r.best_genome = genome_from_string(j.at("best_genome").get<std::string>());
    r.best_time_s = j.at("best_time_s").get<double>();
    r.improvement_ratio = j.at("improvement_ratio").get<double>();
    r.evaluator_calls = j.value("evaluator_calls", std::size_t{0});
    r.ga = ga_from_json(j.value("ga", json::object()));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

namespace {

void write_variant(const AnnotatedVariant& v, const std::string& dir) {
  for (const auto& [file_id, text] : v.files) write_file((fs::path(dir) / fs::path(file_id).filename()).string(), text);
}

}  // namespace

TuneReport run_pipeline(const ToolConfig& config, const PipelineHooks& hooks) {
  auto started = std::chrono::steady_clock::now();
  std::string started_at = iso_now();
  Project project = config.inputs.empty() ? load_structure(config.structure) : load_sources(config.inputs);
  const LoopTable& loops = project.model.loops;
  const VarRefTable& refs = project.model.refs;

  auto probe = make_probe(config.probe);
  std::vector<EligibilityVerdict> verdicts = classify_all(loops, refs, *probe, project.units);
  if (!config.trip_counts_path.empty() && config.trip_threshold > 0)
    verdicts = filter_by_trip_count(std::move(verdicts), trip_counts_from_json(read_file(config.trip_counts_path)),
                                    config.trip_threshold);
  std::vector<int> genes = gene_loops(verdicts);

  TuneReport report;
  report.inputs = project.model.source_paths;
  report.structure = config.structure;
  report.verdicts = verdicts;
  report.gene_loops = genes;
  report.ga = config.ga;

  std::shared_ptr<Evaluator> evaluator = hooks.evaluator;
  if (!evaluator) {
    if (config.evaluator == ToolConfig::EvaluatorKind::CostModel) {
      CostModel model = cost_model_from_json(read_file(config.cost_model_path));
      evaluator = std::make_shared<CostModelEvaluator>(std::move(model), PlanningContext{genes, &loops, &refs});
    } else {
      evaluator = std::make_shared<ExternalEvaluator>(config.command, project.units, verdicts, loops, refs);
    }
  }

  MeasuredTime baseline = measure_baseline(*evaluator, genes.size(), config.ga.timeout_s);
  report.baseline_time_s = baseline.seconds;

  if (genes.empty()) {
    report.status = "no offloadable loops";
    report.best_time_s = baseline.seconds;
    report.improvement_ratio = 1.0;
    report.verification_note = "nothing was offloaded";
  } else {
    GAResult ga = run_ga(config.ga, genes.size(), *evaluator, hooks.on_generation);
    report.status = "tuned";
    report.best_genome = ga.best.genome;
    report.best_time_s = ga.best.time_s;
    report.improvement_ratio = baseline.seconds / ga.best.time_s;
    report.records = std::move(ga.records);
    report.evaluator_calls = ga.evaluator_calls;
    report.plan = make_transfer_plan(report.best_genome, genes, loops, refs);

    if (config.evaluator == ToolConfig::EvaluatorKind::External && !hooks.evaluator) {
      MeasuredTime tuned = evaluator->measure(report.best_genome);
      if (tuned.ok()) report.verification = verify_results(baseline.output, tuned.output, config.atol, config.rtol);
      else report.verification_note = "best variant did not run: " + tuned.diagnostic;
    } else {
      report.verification_note = "the evaluator produces no program output to compare";
    }
  }

  if (!config.output_dir.empty()) {
    fs::path dir(config.output_dir);
    write_file((dir / "report.json").string(), report_to_json(report));
    write_file((dir / "generations.jsonl").string(), records_to_jsonl(report.records));
    if (!project.units.empty() && !genes.empty()) {
      AnnotatedVariant v = emit_variant(project.units, report.best_genome, verdicts, report.plan, loops, refs);
      write_variant(v, (dir / "src").string());
      write_file((dir / "insertions.json").string(), insertion_log_to_json(v.insertion_log));
    }
    char host[256] = {0};
    gethostname(host, sizeof host - 1);
    json meta{{"started_at", started_at},
              {"finished_at", iso_now()},
              {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
              {"host", host},
              {"tool_version", "0.1.0"}};
    write_file((dir / "metadata.json").string(), meta.dump(2) + "\n");
  }
  return report;
}

std::vector<std::string> emit_best(const std::string& report_dir, const std::string& out_dir) {
  TuneReport r = report_from_json(read_file((fs::path(report_dir) / "report.json").string()));
  if (r.inputs.empty()) throw ConfigError("the report has no source inputs to annotate");
  if (r.best_genome.empty()) throw ConfigError("the report has no offloaded loops");
  Project p = load_sources(r.inputs);
  if (gene_loops(r.verdicts) != r.gene_loops) throw FormatError("report verdicts disagree with its gene loops");
  for (int id : r.gene_loops)
    if (!p.model.loops.find(id)) throw FormatError("sources changed since the report was written");
  TransferPlan plan = make_transfer_plan(r.best_genome, r.gene_loops, p.model.loops, p.model.refs);
  AnnotatedVariant v = emit_variant(p.units, r.best_genome, r.verdicts, plan, p.model.loops, p.model.refs);
  std::vector<std::string> written;
  for (const auto& [file_id, text] : v.files) {
    std::string path = (fs::path(out_dir) / fs::path(file_id).filename()).string();
    write_file(path, text);
    written.push_back(path);
  }
  write_file((fs::path(out_dir) / "insertions.json").string(), insertion_log_to_json(v.insertion_log));
  return written;
}

}  // namespace acctune
