#include "pmmm/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "pmmm/format.hpp"
#include "pmmm/rng.hpp"

namespace pmmm {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": malformed number '" + value + "'");
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  return parse_number<std::size_t>(key, value);
}

std::optional<bool> parse_switch(const std::string& key, const std::string& value) {
  if (value == "auto") return std::nullopt;
  if (value == "on" || value == "true") return true;
  if (value == "off" || value == "false") return false;
  throw ConfigError(key + ": expected auto, on or off, got '" + value + "'");
}

std::string switch_name(const std::optional<bool>& v) { return v ? (*v ? "on" : "off") : "auto"; }

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["run.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.seed = parse_number<std::uint64_t>(k, v);
    };
    t["run.out"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; };

    t["data.task"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      try {
        c.task = task_from_string(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(k + ": " + e.what());
      }
    };
    t["data.dataset"] = [](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; };
    t["data.splits"] = [](RunConfig& c, const std::string&, const std::string& v) { c.splits = v; };

    t["synth.kind"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      SynthKind kind;
      try {
        kind = synth_kind_from_string(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(k + ": " + e.what());
      }
      const SynthSpec old = c.synth;
      c.synth = kind == SynthKind::SingleChain ? SynthSpec::single_chain() : SynthSpec::multi_chain();
      c.synth.seed = old.seed;
      c.synth.label_noise = old.label_noise;
    };
    auto synth_count = [](std::size_t SynthSpec::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v) { c.synth.*field = parse_count(k, v); };
    };
    auto synth_real = [](double SynthSpec::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.synth.*field = parse_number<double>(k, v);
      };
    };
    t["synth.noise"] = synth_real(&SynthSpec::label_noise);
    t["synth.affinity"] = synth_real(&SynthSpec::affinity);
    t["synth.distractor_degree"] = synth_real(&SynthSpec::distractor_degree);
    t["synth.targets"] = synth_count(&SynthSpec::num_targets);
    t["synth.mid"] = synth_count(&SynthSpec::num_mid);
    t["synth.aux"] = synth_count(&SynthSpec::num_aux);
    t["synth.classes"] = synth_count(&SynthSpec::num_classes);
    t["synth.links"] = synth_count(&SynthSpec::links_per_target);
    t["synth.distractors"] = synth_count(&SynthSpec::distractors);
    t["synth.depth"] = synth_count(&SynthSpec::depth);
    t["synth.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.synth.seed = parse_number<std::uint64_t>(k, v);
    };

    t["search.mode"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      try {
        c.search.mode = search_mode_from_string(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(k + ": " + e.what());
      }
    };
    auto search_count = [](std::size_t SearchConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v) { c.search.*field = parse_count(k, v); };
    };
    auto search_real = [](double SearchConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.search.*field = parse_number<double>(k, v);
      };
    };
    t["search.epochs"] = search_count(&SearchConfig::epochs);
    t["search.p"] = search_count(&SearchConfig::p);
    t["search.depth"] = search_count(&SearchConfig::depth);
    t["search.runs"] = search_count(&SearchConfig::runs);
    t["search.hidden_dim"] = search_count(&SearchConfig::hidden_dim);
    t["search.lr_weights"] = search_real(&SearchConfig::lr_weights);
    t["search.lr_alpha"] = search_real(&SearchConfig::lr_alpha);
    t["search.weight_decay"] = search_real(&SearchConfig::weight_decay);
    t["search.transform"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.search.use_transform = parse_switch(k, v);
    };
    t["search.onepath_sampling"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v != "uniform" && v != "strength") throw ConfigError(k + ": expected uniform or strength, got '" + v + "'");
      c.search.onepath_strength_biased = v == "strength";
    };
    t["search.select_by"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v != "metric" && v != "loss") throw ConfigError(k + ": expected metric or loss, got '" + v + "'");
      c.search.select_by = v == "metric" ? SelectBy::Metric : SelectBy::Loss;
    };

    t["derive.lambda_seq"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.derive.lambda_seq = parse_number<double>(k, v);
    };
    t["derive.lambda_res"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.derive.lambda_res = parse_number<double>(k, v);
    };

    t["eval.seeds"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.eval_seeds = parse_count(k, v); };
    t["eval.epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target.epochs = parse_count(k, v);
    };
    t["eval.patience"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target.patience = parse_count(k, v);
    };
    t["eval.hidden_dim"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target.hidden_dim = parse_count(k, v);
    };
    t["eval.lr"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target.adam.lr = parse_number<double>(k, v);
    };
    t["eval.weight_decay"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target.adam.weight_decay = parse_number<double>(k, v);
    };
    t["eval.transform"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target.use_transform = parse_switch(k, v);
    };
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(config, key, value);
}

std::string RunConfig::canonical() const {
  std::ostringstream s;
  auto line = [&](const char* key, const std::string& v) { s << key << " = " << v << "\n"; };
  auto num = [](double v) { return format_double(v); };
  line("run.seed", std::to_string(seed));
  line("data.task", to_string(task));
  line("data.dataset", dataset.string());
  line("data.splits", splits.string());
  if (dataset.empty()) {
    line("synth.kind", to_string(synth.kind));
    line("synth.targets", std::to_string(synth.num_targets));
    line("synth.mid", std::to_string(synth.num_mid));
    line("synth.aux", std::to_string(synth.num_aux));
    line("synth.classes", std::to_string(synth.num_classes));
    line("synth.links", std::to_string(synth.links_per_target));
    line("synth.affinity", num(synth.affinity));
    line("synth.noise", num(synth.label_noise));
    line("synth.distractors", std::to_string(synth.distractors));
    line("synth.distractor_degree", num(synth.distractor_degree));
    line("synth.feature_dim", std::to_string(synth.feature_dim));
    line("synth.feature_signal", num(synth.feature_signal));
    line("synth.feature_noise", num(synth.feature_noise));
    line("synth.depth", std::to_string(synth.depth));
    line("synth.train_fraction", num(synth.train_fraction));
    line("synth.val_fraction", num(synth.val_fraction));
    line("synth.seed", std::to_string(synth.seed));
  }
  line("search.mode", to_string(search.mode));
  line("search.epochs", std::to_string(search.epochs));
  line("search.p", std::to_string(search.p));
  line("search.depth", std::to_string(search.depth));
  line("search.runs", std::to_string(search.runs));
  line("search.hidden_dim", std::to_string(search.hidden_dim));
  line("search.lr_weights", num(search.lr_weights));
  line("search.lr_alpha", num(search.lr_alpha));
  line("search.weight_decay", num(search.weight_decay));
  line("search.transform", switch_name(search.use_transform));
  line("search.onepath_sampling", search.onepath_strength_biased ? "strength" : "uniform");
  line("search.select_by", search.select_by == SelectBy::Metric ? "metric" : "loss");
  line("derive.lambda_seq", num(derive.lambda_seq));
  line("derive.lambda_res", num(derive.lambda_res));
  line("eval.seeds", std::to_string(eval_seeds));
  line("eval.epochs", std::to_string(target.epochs));
  line("eval.patience", std::to_string(target.patience));
  line("eval.hidden_dim", std::to_string(target.hidden_dim));
  line("eval.lr", num(target.adam.lr));
  line("eval.weight_decay", num(target.adam.weight_decay));
  line("eval.transform", switch_name(target.use_transform));
  return s.str();
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

SearchConfig RunConfig::search_config() const {
  SearchConfig c = search;
  c.seed = seed;
  return c;
}

void RunConfig::validate() const {
  try {
    search.validate();
    derive.validate();
    if (dataset.empty()) synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (eval_seeds == 0) throw ConfigError("eval.seeds must be >= 1");
  if (target.hidden_dim == 0) throw ConfigError("eval.hidden_dim must be >= 1");
  if (!(target.adam.lr > 0.0)) throw ConfigError("eval.lr must be positive");
  if (dataset.empty() && task != Task::Classification) {
    throw ConfigError("synthetic data supports data.task = classification only");
  }
}

RunConfig parse_run_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  std::vector<std::pair<std::string, std::string>> settings;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body) settings.emplace_back(section + "." + key, value.data());
  }
  // The synth kind resets the other synth keys to that kind's defaults.
  std::stable_partition(settings.begin(), settings.end(), [](const auto& s) { return s.first == "synth.kind"; });
  RunConfig c;
  for (const auto& [k, v] : settings) apply_setting(c, k, v);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_run_config(s.str());
}

LoadedData load_data(const RunConfig& config) {
  if (config.dataset.empty()) {
    SynthDataset d = generate_hin(config.synth);
    return {std::move(d.graph), std::move(d.splits)};
  }
  if (!std::filesystem::is_directory(config.dataset)) {
    throw ConfigError("dataset directory " + config.dataset.string() + " does not exist");
  }
  const std::filesystem::path splits = config.splits.empty() ? config.dataset / "splits.json" : config.splits;
  if (!std::filesystem::exists(splits)) throw ConfigError("splits file " + splits.string() + " does not exist");
  HinGraph graph = load_hin(config.dataset);
  SplitSpec s = read_splits(splits);
  if (s.task != config.task) {
    throw ConfigError("splits are for task " + to_string(s.task) + " but data.task is " + to_string(config.task));
  }
  s.validate_against(graph);
  return {std::move(graph), std::move(s)};
}

}  // namespace pmmm
