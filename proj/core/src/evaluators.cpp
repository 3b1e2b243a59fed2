#include "acctune/evaluators.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "acctune/error.hpp"
#include "acctune/process.hpp"

namespace acctune {

using nlohmann::json;
namespace fs = std::filesystem;

double CostModel::transfer_time(const std::string& variable) const {
  auto it = var_bytes.find(variable);
  if (auto sep = variable.rfind("::"); it == var_bytes.end() && sep != std::string::npos)
    it = var_bytes.find(variable.substr(sep + 2));
  if (it == var_bytes.end()) throw ModelIncomplete("cost model has no entry for variable '" + variable + "'");
  return static_cast<double>(it->second) / bandwidth_bytes_per_s + latency_s;
}

CostModel cost_model_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    CostModel m;
    m.overhead_s = j.value("overhead_s", 0.0);
    m.bandwidth_bytes_per_s = j.value("bandwidth_bytes_per_s", 1e10);
    m.latency_s = j.value("latency_s", 0.0);
    const json loops = j.value("loops", json::object());
    const json vars = j.value("vars", json::object());
    for (const auto& [k, v] : loops.items())
      m.loops[std::stoi(k)] = LoopCost{v.at("cpu_s").get<double>(), v.at("gpu_s").get<double>()};
    for (const auto& [k, v] : vars.items())
      m.var_bytes[k] = v.at("bytes").get<long long>();
    if (m.overhead_s < 0 || m.latency_s < 0 || m.bandwidth_bytes_per_s <= 0)
      throw FormatError("cost model parameters must be non-negative with positive bandwidth");
    for (const auto& [id, c] : m.loops)
      if (c.cpu_s < 0 || c.gpu_s < 0) throw FormatError("loop " + std::to_string(id) + " has a negative time");
    for (const auto& [name, b] : m.var_bytes)
      if (b < 0) throw FormatError("variable '" + name + "' has negative size");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed cost model: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw FormatError("cost model loop keys must be integers");
  }
}

std::string cost_model_to_json(const CostModel& m) {
  json loops = json::object();
  for (const auto& [id, c] : m.loops) loops[std::to_string(id)] = {{"cpu_s", c.cpu_s}, {"gpu_s", c.gpu_s}};
  json vars = json::object();
  for (const auto& [name, b] : m.var_bytes) vars[name] = {{"bytes", b}};
  return json{{"overhead_s", m.overhead_s},
              {"loops", loops},
              {"vars", vars},
              {"bandwidth_bytes_per_s", m.bandwidth_bytes_per_s},
              {"latency_s", m.latency_s}}
             .dump(2) +
         "\n";
}

MeasuredTime evaluate_costmodel(const Genome& genome, const std::vector<int>& gene_loops, const TransferPlan& plan,
                                const CostModel& model) {
  if (genome.size() != gene_loops.size()) throw GenomeLengthMismatch(genome.size(), gene_loops.size());
  double t = model.overhead_s;
  for (std::size_t i = 0; i < genome.size(); ++i) {
    auto it = model.loops.find(gene_loops[i]);
    if (it == model.loops.end())
      throw ModelIncomplete("cost model has no entry for loop " + std::to_string(gene_loops[i]));
    t += genome[i] ? it->second.gpu_s : it->second.cpu_s;
  }
  for (const auto& e : plan.entries) {
    long long events = e.events();
    if (events > 0) t += static_cast<double>(events) * model.transfer_time(e.variable);
  }
  return MeasuredTime::of(t);
}

CostModelEvaluator::CostModelEvaluator(CostModel model, PlanningContext context)
    : model_(std::move(model)), ctx_(std::move(context)) {}

MeasuredTime CostModelEvaluator::measure(const Genome& genome) {
  TransferPlan plan = make_transfer_plan(genome, ctx_.gene_loops, *ctx_.loops, *ctx_.refs);
  return evaluate_costmodel(effective_placement(genome, ctx_.gene_loops, *ctx_.loops), ctx_.gene_loops, plan, model_);
}

EvaluatorCapability CostModelEvaluator::capability() const {
  return EvaluatorCapability{std::max(1u, std::thread::hardware_concurrency()), true};
}

OptimumResult brute_force_optimum(const CostModel& model, const PlanningContext& ctx) {
  std::size_t n = ctx.gene_loops.size();
  if (n > 20) throw TooLarge("exhaustive search is limited to 20 genes, got " + std::to_string(n));
  std::uint64_t total = std::uint64_t{1} << n;
  auto genome_of = [n](std::uint64_t value) {
    Genome g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<std::uint8_t>((value >> (n - 1 - i)) & 1u);
    return g;
  };
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<std::size_t>(std::min<std::uint64_t>(workers, total));
  std::vector<std::pair<double, std::uint64_t>> best(workers, {std::numeric_limits<double>::infinity(), 0});
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&](std::size_t w) {
    try {
      for (std::uint64_t v = w; v < total; v += workers) {
        Genome g = genome_of(v);
        TransferPlan plan = make_transfer_plan(g, ctx.gene_loops, *ctx.loops, *ctx.refs);
        Genome placed = effective_placement(g, ctx.gene_loops, *ctx.loops);
        double t = evaluate_costmodel(placed, ctx.gene_loops, plan, model).seconds;
        if (t < best[w].first) best[w] = {t, v};
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  auto it = std::min_element(best.begin(), best.end());
  return OptimumResult{genome_of(it->second), it->first, static_cast<std::size_t>(total)};
}

namespace {

std::string substitute(std::string t, const std::string& key, const std::string& value) {
  for (std::size_t p = t.find(key); p != std::string::npos; p = t.find(key, p + value.size()))
    t.replace(p, key.size(), value);
  return t;
}

std::string expand(const std::string& tmpl, const std::string& srcs, const fs::path& bin, const fs::path& workdir) {
  std::string s = substitute(tmpl, "{src}", srcs);
  s = substitute(s, "{bin}", shell_quote(bin.string()));
  return substitute(s, "{workdir}", shell_quote(workdir.string()));
}

std::string tail(const std::string& s) {
  std::string t = s.size() > 2000 ? s.substr(s.size() - 2000) : s;
  while (!t.empty() && (t.back() == '\n' || t.back() == ' ')) t.pop_back();
  return t;
}

}  // namespace

MeasuredTime evaluate_external(const AnnotatedVariant& variant, const CommandConfig& config) {
  if (config.compile.empty() && config.run.empty()) throw EnvironmentError("no compile or run command configured");
  std::error_code ec;
  fs::path base = fs::temp_directory_path(ec);
  if (ec) throw EnvironmentError("no temporary directory: " + ec.message());
  std::string pattern = (base / "acctune-eval-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw EnvironmentError("cannot create a work directory under " + base.string());
  fs::path workdir(pattern);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{workdir};

  std::string srcs;
  for (const auto& [file_id, text] : variant.files) {
    fs::path p = workdir / fs::path(file_id).filename();
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw EnvironmentError("cannot write " + p.string());
    if (!srcs.empty()) srcs += ' ';
    srcs += shell_quote(p.string());
  }
  fs::path bin = workdir / "variant.bin";

  if (!config.compile.empty()) {
    ProcessResult c = run_shell(expand(config.compile, srcs, bin, workdir), config.timeout_s, workdir.string());
    if (c.exit_code == 127) throw EnvironmentError("compile command not found: " + tail(c.err));
    if (c.timed_out) return MeasuredTime::failure("compile timed out");
    if (c.exit_code != 0) return MeasuredTime::failure("compile failed: " + tail(c.err));
  }
  ProcessResult r = run_shell(expand(config.run, srcs, bin, workdir), config.timeout_s, workdir.string());
  if (r.timed_out) return MeasuredTime::timeout();
  if (r.exit_code == 127) throw EnvironmentError("run command not found: " + tail(r.err));
  if (r.exit_code != 0) return MeasuredTime::failure("run failed (status " + std::to_string(r.exit_code) + "): " + tail(r.err));
  MeasuredTime m = MeasuredTime::of(std::max(r.wall_seconds, 1e-9));
  m.output = std::move(r.out);
  return m;
}

ExternalEvaluator::ExternalEvaluator(CommandConfig config, std::span<const SourceUnit> units,
                                     std::vector<EligibilityVerdict> verdicts, const LoopTable& loops,
                                     const VarRefTable& refs)
    : config_(std::move(config)),
      units_(units),
      verdicts_(std::move(verdicts)),
      genes_(gene_loops(verdicts_)),
      loops_(loops),
      refs_(refs) {}

MeasuredTime ExternalEvaluator::measure(const Genome& genome) {
  TransferPlan plan = make_transfer_plan(genome, genes_, loops_, refs_);
  AnnotatedVariant v;
  try {
    v = emit_variant(units_, genome, verdicts_, plan, loops_, refs_);
  } catch (const EmissionError& e) {
    return MeasuredTime::failure(e.what());
  }
  return evaluate_external(v, config_);
}

EvaluatorCapability ExternalEvaluator::capability() const {
  return EvaluatorCapability{std::max<std::size_t>(config_.capacity, 1), false};
}

}  // namespace acctune
