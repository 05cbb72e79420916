#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmmm/derive.hpp"
#include "pmmm/net.hpp"
#include "pmmm/optim.hpp"
#include "pmmm/supernet.hpp"

namespace pmmm {

enum class SearchMode { Partial, OnePath, FullCoupled };
std::string to_string(SearchMode m);
SearchMode search_mode_from_string(const std::string& s);

// Criterion for picking the best of several runs.
enum class SelectBy { Metric, Loss };

struct SearchConfig {
  SearchMode mode = SearchMode::Partial;
  std::size_t epochs = 30;
  std::size_t p = 2;
  double lr_weights = 0.01;
  double lr_alpha = 0.003;
  double weight_decay = 5e-4;  // weights only
  std::size_t depth = 4;
  std::size_t hidden_dim = 64;
  std::uint64_t seed = 0;
  std::size_t runs = 3;  // seeds seed .. seed + runs - 1
  std::optional<bool> use_transform;
  bool onepath_strength_biased = false;
  SelectBy select_by = SelectBy::Metric;

  void validate() const;
  // Active candidates per edge for this mode.
  std::size_t gate_count(std::size_t num_candidates) const;
};

struct SearchState {
  SuperNet net;
  AdamState weight_opt;
  AdamState alpha_opt;
  std::size_t epoch = 0;
  GateMask last_weight_gates;
  GateMask last_alpha_gates;
};

struct StepRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;  // of the gated forward used for the alpha update
};

SearchState init_search(const SearchConfig& config, const HinGraph& graph, Task task);

// Gate draws for one (epoch, phase); every edge has its own stream.
// phase 0 drives the weight update, phase 1 the alpha update.
GateMask draw_gates(const SearchConfig& config, const SuperNet& net, std::size_t epoch, int phase);

// Transform matrices feeding hyper-nodes without any active non-zero input
// are frozen; everything else in the weights takes part.
ParamMask weight_update_mask(const SuperNet& net, const GateMask& gates);
ParamMask alpha_update_mask(const GateMask& gates);

// Single phases, exposed for inspection. Both throw DivergenceError.
double weight_phase(SearchState& state, const SearchConfig& config, const MessageContext& ctx,
                    const TaskBinding& task, const GateMask& gates);
StepRecord alpha_phase(SearchState& state, const SearchConfig& config, const MessageContext& ctx,
                       const TaskBinding& task, const GateMask& gates);

// One epoch: weight update on the train loss, then alpha update on the
// validation loss, each with its own gate draw.
StepRecord search_step(SearchState& state, const SearchConfig& config, const MessageContext& ctx,
                       const TaskBinding& task);

struct SearchOutcome {
  std::uint64_t seed = 0;
  SearchMode mode = SearchMode::Partial;
  AlphaSnapshot alpha;
  std::vector<double> train_loss, val_loss, val_metric;  // per epoch
  double best_val_metric = 0.0;  // full forward after the last epoch
  double best_val_loss = 0.0;
  // Full-forward train loss before the first and after the last epoch.
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
};

// One run with config.seed.
SearchOutcome run_search(const SearchConfig& config, const HinGraph& graph, const SplitSpec& splits);
// config.runs independent runs, one thread each.
std::vector<SearchOutcome> run_searches(const SearchConfig& config, const HinGraph& graph, const SplitSpec& splits);

// Highest validation metric (or lowest loss); ties go to the lower seed.
const SearchOutcome& multi_run_select(const std::vector<SearchOutcome>& outcomes,
                                      SelectBy by = SelectBy::Metric);

// CSV with header epoch,train_loss,val_loss,val_metric.
std::string search_log_csv(const SearchOutcome& outcome);

}  // namespace pmmm
