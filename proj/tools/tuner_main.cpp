#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acctune/classifier.hpp"
#include "acctune/error.hpp"
#include "acctune/pipeline.hpp"
#include "acctune/structure_io.hpp"

namespace {

enum Exit { Ok = 0, UserError = 1, EnvError = 2, VerifyFailed = 3 };

using namespace acctune;

int cmd_analyze(const std::vector<std::string>& files, const std::string& out) {
  Project p = load_sources(files);
  write_file(out, to_json(p.model));
  std::cerr << "analyzed " << files.size() << " file(s), " << p.model.loops.size() << " loop(s)\n";
  return Ok;
}

int cmd_classify(const std::string& model_path, const std::string& probe, double timeout_s,
                 const std::string& out) {
  Project p = load_structure(model_path);
  ProbeConfig cfg;
  if (probe == "static") {
    cfg.mode = ProbeConfig::Mode::Static;
  } else {
    cfg.mode = ProbeConfig::Mode::Command;
    cfg.command = probe;
    if (timeout_s > 0) cfg.timeout_s = timeout_s;
  }
  auto prober = make_probe(cfg);
  auto verdicts = classify_all(p.model.loops, p.model.refs, *prober, p.units);
  write_file(out, verdicts_to_json(verdicts));
  std::cerr << gene_loops(verdicts).size() << " of " << verdicts.size() << " loop(s) eligible\n";
  return Ok;
}

int cmd_tune(const std::string& config_path, const std::string& out) {
  ToolConfig cfg = load_tool_config(config_path);
  if (!out.empty()) cfg.output_dir = std::filesystem::absolute(out).string();
  PipelineHooks hooks;
  hooks.on_generation = [](const GenerationRecord& r) {
    std::cerr << "generation " << r.generation << ": best " << r.best_time_s << " s\n";
  };
  TuneReport r = run_pipeline(cfg, hooks);
  std::cout << r.status << ": baseline " << r.baseline_time_s << " s, best " << r.best_time_s << " s, ratio "
            << r.improvement_ratio << "\n";
  if (r.verification && !r.verification->pass) {
    std::cerr << "verification failed: " << r.verification->diagnostic << "\n";
    return VerifyFailed;
  }
  return Ok;
}

int cmd_emit_best(const std::string& report, const std::string& out) {
  for (const auto& p : emit_best(report, out)) std::cout << p << "\n";
  return Ok;
}

int cmd_verify(const std::string& a, const std::string& b, double atol, double rtol) {
  DiffReport d = verify_results(read_file(a), read_file(b), atol, rtol);
  std::cout << diff_report_to_json(d);
  return d.pass ? Ok : VerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search OpenACC loop-offload patterns for C programs"};
  app.require_subcommand(1);

  std::vector<std::string> files;
  std::string out;
  auto* analyze = app.add_subcommand("analyze", "Parse sources and write their loop/variable model");
  analyze->add_option("files", files, "C source files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", out, "Model JSON path")->required();

  std::string model;
  std::string probe = "static";
  double probe_timeout = 0;
  auto* classify = app.add_subcommand("classify", "Decide which loops can be offloaded and with which directive");
  classify->add_option("--model", model, "Model JSON from analyze")->required()->check(CLI::ExistingFile);
  classify->add_option("--probe", probe, "\"static\" or a compile command using {src} and {workdir}");
  classify->add_option("--probe-timeout", probe_timeout, "Seconds per probe compile");
  classify->add_option("--out", out, "Verdicts JSON path")->required();

  std::string config;
  auto* tune = app.add_subcommand("tune", "Run the genetic search");
  tune->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  tune->add_option("--out", out, "Report directory (overrides output_dir)");

  std::string report;
  auto* emit = app.add_subcommand("emit-best", "Write the best variant of a report");
  emit->add_option("--report", report, "Report directory")->required()->check(CLI::ExistingDirectory);
  emit->add_option("--out", out, "Output directory")->required();

  std::string baseline;
  std::string tuned;
  double atol = 1e-6;
  double rtol = 1e-4;
  auto* verify = app.add_subcommand("verify", "Compare two program outputs value by value");
  verify->add_option("--baseline", baseline, "Output of the unmodified program")->required()->check(CLI::ExistingFile);
  verify->add_option("--tuned", tuned, "Output of the tuned variant")->required()->check(CLI::ExistingFile);
  verify->add_option("--atol", atol, "Absolute tolerance")->capture_default_str();
  verify->add_option("--rtol", rtol, "Relative tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? Ok : UserError;
  }

  try {
    if (*analyze) return cmd_analyze(files, out);
    if (*classify) return cmd_classify(model, probe, probe_timeout, out);
    if (*tune) return cmd_tune(config, out);
    if (*emit) return cmd_emit_best(report, out);
    if (*verify) return cmd_verify(baseline, tuned, atol, rtol);
  } catch (const EnvironmentError& e) {
    std::cerr << "environment error: " << e.what() << "\n";
    return EnvError;
  } catch (const ProbeUnavailable& e) {
    std::cerr << "probe unavailable: " << e.what() << "\n";
    return EnvError;
  } catch (const UnparsableOutput& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return VerifyFailed;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return UserError;
  }
  return UserError;
}
