#pragma once

// Run configuration: a sectioned key=value file (INI syntax). Keys, with
// their defaults:
//
//   [run]     seed = 0            out = out
//   [data]    task = classification
//             dataset =           (graph directory; empty: generate [synth])
//             splits =            (default: <dataset>/splits.json)
//   [synth]   kind = single_chain noise = 0.05  seed = 0
//             targets, mid, aux, classes, links, affinity, distractors,
//             distractor_degree, depth (defaults of the chosen kind)
//   [search]  mode = partial      epochs = 30   p = 2      depth = 4
//             runs = 3            hidden_dim = 64
//             lr_weights = 0.01   lr_alpha = 0.003   weight_decay = 0.0005
//             transform = auto    onepath_sampling = uniform
//             select_by = metric
//   [derive]  lambda_seq = 0.9    lambda_res = 0.9
//   [eval]    seeds = 10          epochs = 100  patience = 10
//             hidden_dim = 64     lr = 0.01     weight_decay = 0.0005
//             transform = auto
//
// The search and training seeds both come from run.seed: search runs use
// seed .. seed + runs - 1, training uses seed .. seed + eval.seeds - 1.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "pmmm/derive.hpp"
#include "pmmm/graph.hpp"
#include "pmmm/search.hpp"
#include "pmmm/synth.hpp"
#include "pmmm/targetnet.hpp"

namespace pmmm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  Task task = Task::Classification;
  std::filesystem::path dataset;
  std::filesystem::path splits;
  SynthSpec synth = SynthSpec::single_chain();
  SearchConfig search;
  DeriveConfig derive;
  TargetConfig target;
  std::size_t eval_seeds = 10;

  // One "section.key = value" line per key in a fixed order. The output
  // directory is left out: it does not influence any result.
  std::string canonical() const;
  // FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
  // SearchConfig with the seed filled in.
  SearchConfig search_config() const;
  void validate() const;
};

// Applies one "section.key" setting; throws ConfigError on unknown keys or
// malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& file);

// The graph and splits a configuration refers to.
struct LoadedData {
  HinGraph graph;
  SplitSpec splits;
};
LoadedData load_data(const RunConfig& config);

}  // namespace pmmm
