// pmmm: search, derive, train and evaluate multigraph architectures.
//
// Errors print one line "error <CODE>: <message>" to stderr and exit nonzero.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pmmm/artifacts.hpp"
#include "pmmm/bench.hpp"
#include "pmmm/config.hpp"
#include "pmmm/error.hpp"
#include "pmmm/format.hpp"
#include "pmmm/runtime.hpp"

namespace fs = std::filesystem;
using namespace pmmm;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kConfig = 3, kLoad = 4, kSchema = 5, kDiverged = 6, kInvalid = 7 };

int fail(int code, const char* tag, const std::string& message) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error " << tag << ": " << flat << "\n";
  return code;
}

// Settings gathered from the command line, applied over the config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;  // "section.key=value"
  std::vector<std::pair<std::string, std::string>> flags;

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
      apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : flags) apply_setting(c, k, v);
    if (seed) c.seed = *seed;
    if (out) c.out = *out;
    c.validate();
    return c;
  }
};

void universal(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Config file (sectioned key=value)")->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t s) { o.seed = s; }, "Run seed");
  cmd->add_option_function<std::string>("--out", [&o](const std::string& s) { o.out = s; }, "Output directory");
  cmd->add_option("--set", o.sets, "Override a config key: section.key=value");
}

// Flag bound to a config key; the raw string is validated by apply_setting.
void keyed(CLI::App* cmd, Overrides& o, const std::string& flag, const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&o, key](const std::string& v) { o.flags.emplace_back(key, v); }, help + " [" + key + "]");
}

std::string run_dir(std::uint64_t seed) { return "run_" + std::to_string(seed); }

int cmd_search(const RunConfig& c) {
  const LoadedData data = load_data(c);
  const std::vector<SearchOutcome> outcomes = run_searches(c.search_config(), data.graph, data.splits);
  const std::string hash = c.hash();
  for (const auto& o : outcomes) {
    const fs::path dir = c.out / run_dir(o.seed);
    write_text(dir / "alpha.json", alpha_to_json(alpha_artifact(o, c.task, hash)));
    write_text(dir / "search_log.csv", search_log_csv(o));
    std::cout << run_dir(o.seed) << " val_metric=" << format_double(o.best_val_metric)
              << " val_loss=" << format_double(o.best_val_loss) << "\n";
  }
  const SearchOutcome& best = multi_run_select(outcomes, c.search.select_by);
  write_text(c.out / "best_run.txt", run_dir(best.seed) + "\n");
  std::cout << "best " << run_dir(best.seed) << "\n";
  return kOk;
}

fs::path default_alpha(const RunConfig& c) {
  const fs::path pointer = c.out / "best_run.txt";
  std::string dir = read_text(pointer);
  while (!dir.empty() && (dir.back() == '\n' || dir.back() == '\r')) dir.pop_back();
  if (dir.empty()) throw LoadError(pointer.string(), 1, "empty run pointer");
  return c.out / dir / "alpha.json";
}

int cmd_derive(const RunConfig& c, const std::string& alpha_path, bool single_path) {
  const fs::path src = alpha_path.empty() ? default_alpha(c) : fs::path(alpha_path);
  const AlphaArtifact a = alpha_from_json(read_text(src));
  MetaMultigraph arch = single_path ? derive_single_path(a.alpha) : derive_multigraph(a.alpha, c.derive);
  write_text(c.out / "architecture.json", architecture_to_json(arch, c.hash()));
  for (std::size_t e = 0; e < arch.edges.size(); ++e) {
    std::cout << arch.edges[e].from << "->" << arch.edges[e].to << ":";
    for (const auto& p : arch.retained[e]) std::cout << " " << candidate_name(p, arch.relation_names);
    std::cout << "\n";
  }
  return kOk;
}

int cmd_eval(const RunConfig& c, const std::string& arch_path, std::size_t seeds) {
  const LoadedData data = load_data(c);
  const fs::path src = arch_path.empty() ? c.out / "architecture.json" : fs::path(arch_path);
  std::vector<std::string> names;
  for (const auto& r : data.graph.relations()) names.push_back(r.name);
  const MetaMultigraph arch = architecture_from_json(read_text(src), std::span<const std::string>(names));
  const EvalReport report = repeat_eval(arch, data.graph, data.splits, seeds, c.target, c.seed);
  write_text(c.out / "eval_report.json", eval_report_to_json(report, c.hash()));
  const MeanStd h = report.headline();
  std::cout << (c.task == Task::Classification ? "micro_f1" : "auc") << " mean=" << format_double(h.mean)
            << " std=" << format_double(h.std) << "\n";
  return kOk;
}

int cmd_synth(const RunConfig& c) {
  write_synth(generate_hin(c.synth), c.out);
  std::cout << "wrote " << c.out.string() << "\n";
  return kOk;
}

int cmd_bench(const RunConfig& c, BenchPlan plan, const std::string& seeds, const std::string& steps,
              const std::string& modes) {
  try {
    plan.seeds = parse_range(seeds);
    if (steps.empty()) {
      plan.depths = {c.search.depth};
    } else {
      for (std::uint64_t n : parse_range(steps)) plan.depths.push_back(n);
    }
    plan.modes.clear();
    std::stringstream ss(modes);
    for (std::string m; std::getline(ss, m, ',');) plan.modes.push_back(search_mode_from_string(m));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const fs::path csv = c.out / "stability.csv";
  const std::vector<BenchRow> rows = bench_stability(c, plan, csv);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status == "ok" ? 0 : 1;
  std::cout << "wrote " << csv.string() << " (" << rows.size() << " rows, " << failed << " not ok)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Architecture search, derivation and evaluation on typed graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;

  auto* search = app.add_subcommand("search", "Run the architecture search");
  universal(search, o);
  keyed(search, o, "--mode", "search.mode", "partial, onepath or full");
  keyed(search, o, "--epochs", "search.epochs", "Search epochs");
  keyed(search, o, "--depth,-N", "search.depth", "Number of hyper-node steps");
  keyed(search, o, "--runs", "search.runs", "Independent runs");
  keyed(search, o, "--p", "search.p", "Sampling ratio");

  auto* derive = app.add_subcommand("derive", "Derive an architecture from searched logits");
  universal(derive, o);
  std::string alpha_path;
  bool single_path = false;
  derive->add_option("--alpha", alpha_path, "alpha.json to read (default: best run under --out)");
  keyed(derive, o, "--lambda-seq", "derive.lambda_seq", "Threshold mix on sequential edges");
  keyed(derive, o, "--lambda-res", "derive.lambda_res", "Threshold mix on residual edges");
  derive->add_flag("--single-path", single_path, "Keep only the strongest path per edge");

  std::string arch_path;
  auto* train = app.add_subcommand("train", "Train the derived architecture with the run seed");
  universal(train, o);
  train->add_option("--arch", arch_path, "architecture.json (default: under --out)");
  keyed(train, o, "--epochs", "eval.epochs", "Training epochs");

  auto* eval = app.add_subcommand("eval", "Train and test the derived architecture over several seeds");
  universal(eval, o);
  eval->add_option("--arch", arch_path, "architecture.json (default: under --out)");
  keyed(eval, o, "--seeds", "eval.seeds", "Number of training seeds");
  keyed(eval, o, "--epochs", "eval.epochs", "Training epochs");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset to --out");
  universal(synth, o);
  keyed(synth, o, "--kind", "synth.kind", "single_chain or multi_chain");
  keyed(synth, o, "--noise", "synth.noise", "Label noise");
  keyed(synth, o, "--synth-seed", "synth.seed", "Generator seed");

  auto* bench = app.add_subcommand("bench-stability", "Seed and step sweep; appends to stability.csv under --out");
  universal(bench, o);
  std::string seeds = "0-9", steps, modes = "partial,onepath";
  BenchPlan plan;
  plan.threads = std::max(1u, std::thread::hardware_concurrency());
  bench->add_option("--seeds", seeds, "Search seeds, e.g. 0-9")->capture_default_str();
  bench->add_option("--steps", steps, "Depths N, e.g. 2,3,4 (default: search.depth)");
  bench->add_option("--modes", modes, "Search modes")->capture_default_str();
  bench->add_option("--train-seeds", plan.train_seeds, "Retraining seeds per tuple")->capture_default_str();
  bench->add_option("--threads", plan.threads, "Worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "E_USAGE", e.what());
  }

  try {
    const RunConfig c = o.resolve();
    if (search->parsed()) return cmd_search(c);
    if (derive->parsed()) return cmd_derive(c, alpha_path, single_path);
    if (train->parsed()) return cmd_eval(c, arch_path, 1);
    if (eval->parsed()) return cmd_eval(c, arch_path, c.eval_seeds);
    if (synth->parsed()) return cmd_synth(c);
    if (bench->parsed()) return cmd_bench(c, plan, seeds, steps, modes);
    return fail(kUsage, "E_USAGE", "no subcommand");
  } catch (const ConfigError& e) {
    return fail(kConfig, "E_CONFIG", e.what());
  } catch (const SchemaError& e) {
    return fail(kSchema, "E_SCHEMA", e.what());
  } catch (const LoadError& e) {
    return fail(kLoad, "E_LOAD", e.what());
  } catch (const DivergenceError& e) {
    return fail(kDiverged, "E_DIVERGED", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kInvalid, "E_INVALID", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "E_INTERNAL", e.what());
  }
}
