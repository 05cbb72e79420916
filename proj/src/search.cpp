#include "pmmm/search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pmmm/error.hpp"
#include "pmmm/format.hpp"

namespace pmmm {

namespace {

constexpr double kLossCeiling = 1e6;

void check_loss(double v, std::size_t epoch, const char* which) {
  if (!std::isfinite(v)) throw DivergenceError(epoch, std::string(which) + " loss is not finite");
  if (v > kLossCeiling) throw DivergenceError(epoch, std::string(which) + " loss exceeded 1e6");
}

double full_loss(const SuperNet& net, const MessageContext& ctx, const TaskBinding& task, const SplitBatch& batch) {
  Tape tape;
  SuperNetVars vars = bind_supernet(tape, net, false, false);
  auto prop = forward_full(tape, net, ctx, vars);
  Var out = task_output(tape, prop.output(), task, batch, vars.weights, net.weights().shape);
  return tape.value(task_loss(tape, out, task, batch))(0, 0);
}

std::vector<DenseMat> grads_of(Tape& tape, const std::vector<Var>& vars) {
  std::vector<DenseMat> g;
  g.reserve(vars.size());
  for (Var v : vars) g.push_back(tape.grad(v));
  return g;
}

}  // namespace

std::string to_string(SearchMode m) {
  switch (m) {
    case SearchMode::Partial:
      return "partial";
    case SearchMode::OnePath:
      return "onepath";
    case SearchMode::FullCoupled:
      return "full";
  }
  return "partial";
}

SearchMode search_mode_from_string(const std::string& s) {
  if (s == "partial") return SearchMode::Partial;
  if (s == "onepath") return SearchMode::OnePath;
  if (s == "full") return SearchMode::FullCoupled;
  throw std::invalid_argument("unknown search mode '" + s + "' (expected partial, onepath or full)");
}

void SearchConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("search epochs must be >= 1");
  if (p == 0) throw std::invalid_argument("sampling denominator p must be >= 1");
  if (runs == 0) throw std::invalid_argument("search runs must be >= 1");
  if (depth == 0) throw std::invalid_argument("depth must be >= 1");
  if (hidden_dim == 0) throw std::invalid_argument("hidden dimension must be >= 1");
  if (!(lr_weights > 0.0) || !(lr_alpha > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
}

std::size_t SearchConfig::gate_count(std::size_t num_candidates) const {
  switch (mode) {
    case SearchMode::Partial:
      return gates_per_edge(num_candidates, p);
    case SearchMode::OnePath:
      return 1;
    case SearchMode::FullCoupled:
      return num_candidates;
  }
  return num_candidates;
}

SearchState init_search(const SearchConfig& config, const HinGraph& graph, Task task) {
  config.validate();
  SuperNet net = build_supernet(graph, task, config.depth, config.hidden_dim, config.seed, config.use_transform);
  AdamState w(AdamConfig{config.lr_weights, 0.9, 0.999, 1e-8, config.weight_decay}, net.weights().tensors);
  AdamState a(AdamConfig{config.lr_alpha, 0.9, 0.999, 1e-8, 0.0}, net.alpha());
  return SearchState{std::move(net), std::move(w), std::move(a), 0, {}, {}};
}

GateMask draw_gates(const SearchConfig& config, const SuperNet& net, std::size_t epoch, int phase) {
  const std::size_t k = net.num_candidates();
  if (config.mode == SearchMode::FullCoupled) return GateMask::all_active(net.edges().size(), k);
  const std::size_t count = config.gate_count(k);
  GateMask m;
  for (std::size_t e = 0; e < net.edges().size(); ++e) {
    Rng rng(config.seed, {fnv1a64("search-gates"), epoch, static_cast<std::uint64_t>(phase), e});
    if (config.mode == SearchMode::OnePath && config.onepath_strength_biased) {
      m.active.push_back(sample_edge_gate_weighted(path_strengths(net.alpha()[e].data()), rng));
    } else {
      m.active.push_back(sample_edge_gates(k, count, rng));
    }
  }
  return m;
}

ParamMask weight_update_mask(const SuperNet& net, const GateMask& gates) {
  const auto& w = net.weights();
  ParamMask mask;
  for (const auto& t : w.tensors) mask.emplace_back(t.data().size(), true);
  if (!w.shape.transforms) return mask;
  for (std::size_t j = 1; j <= w.shape.depth; ++j) {
    bool fed = false;
    for (std::size_t e = 0; e < net.edges().size() && !fed; ++e) {
      if (net.edges()[e].to != j) continue;
      for (std::size_t r = 0; r < net.num_candidates(); ++r) {
        if (gates.active[e][r] && net.candidates()[r].kind != PathKind::Zero) {
          fed = true;
          break;
        }
      }
    }
    if (!fed) std::fill(mask[w.shape.transform(j)].begin(), mask[w.shape.transform(j)].end(), false);
  }
  return mask;
}

ParamMask alpha_update_mask(const GateMask& gates) { return gates.active; }

double weight_phase(SearchState& state, const SearchConfig& config, const MessageContext& ctx,
                    const TaskBinding& task, const GateMask& gates) {
  (void)config;
  Tape tape;
  SuperNetVars vars = bind_supernet(tape, state.net, false, true);
  auto prop = forward_partial(tape, state.net, ctx, vars, gates);
  const auto& shape = state.net.weights().shape;
  Var loss = task_loss(tape, task_output(tape, prop.output(), task, task.train, vars.weights, shape), task, task.train);
  const double lv = tape.value(loss)(0, 0);
  check_loss(lv, state.epoch, "train");
  tape.backward(loss);
  const ParamMask mask = weight_update_mask(state.net, gates);
  state.weight_opt.step(state.net.weights().tensors, grads_of(tape, vars.weights), &mask);
  state.last_weight_gates = gates;
  return lv;
}

StepRecord alpha_phase(SearchState& state, const SearchConfig& config, const MessageContext& ctx,
                       const TaskBinding& task, const GateMask& gates) {
  (void)config;
  Tape tape;
  SuperNetVars vars = bind_supernet(tape, state.net, true, false);
  auto prop = forward_partial(tape, state.net, ctx, vars, gates);
  const auto& shape = state.net.weights().shape;
  Var out = task_output(tape, prop.output(), task, task.val, vars.weights, shape);
  Var loss = task_loss(tape, out, task, task.val);
  StepRecord rec;
  rec.val_loss = tape.value(loss)(0, 0);
  check_loss(rec.val_loss, state.epoch, "validation");
  rec.val_metric = task_metric(tape.value(out), task, task.val);
  tape.backward(loss);
  const ParamMask mask = alpha_update_mask(gates);
  state.alpha_opt.step(state.net.alpha(), grads_of(tape, vars.alpha), &mask);
  state.last_alpha_gates = gates;
  return rec;
}

StepRecord search_step(SearchState& state, const SearchConfig& config, const MessageContext& ctx,
                       const TaskBinding& task) {
  const GateMask g1 = draw_gates(config, state.net, state.epoch, 0);
  const double train_loss = weight_phase(state, config, ctx, task, g1);
  const GateMask g2 = draw_gates(config, state.net, state.epoch, 1);
  StepRecord rec = alpha_phase(state, config, ctx, task, g2);
  rec.train_loss = train_loss;
  ++state.epoch;
  return rec;
}

SearchOutcome run_search(const SearchConfig& config, const HinGraph& graph, const SplitSpec& splits) {
  config.validate();
  const TaskBinding task = bind_task(graph, splits);
  if (task.train.size() == 0 || task.val.size() == 0) throw std::invalid_argument("search needs train and val splits");
  const MessageContext ctx(graph);
  SearchState state = init_search(config, graph, splits.task);

  SearchOutcome out;
  out.seed = config.seed;
  out.mode = config.mode;
  out.initial_train_loss = full_loss(state.net, ctx, task, task.train);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const StepRecord rec = search_step(state, config, ctx, task);
    out.train_loss.push_back(rec.train_loss);
    out.val_loss.push_back(rec.val_loss);
    out.val_metric.push_back(rec.val_metric);
  }
  for (const auto& a : state.net.alpha()) {
    if (!a.all_finite()) throw DivergenceError(config.epochs, "architecture logits are not finite");
  }

  Tape tape;
  SuperNetVars vars = bind_supernet(tape, state.net, false, false);
  auto prop = forward_full(tape, state.net, ctx, vars);
  Var final_out = task_output(tape, prop.output(), task, task.val, vars.weights, state.net.weights().shape);
  out.best_val_metric = task_metric(tape.value(final_out), task, task.val);
  out.best_val_loss = tape.value(task_loss(tape, final_out, task, task.val))(0, 0);
  out.final_train_loss = full_loss(state.net, ctx, task, task.train);
  out.alpha = AlphaSnapshot::of(state.net);
  return out;
}

std::vector<SearchOutcome> run_searches(const SearchConfig& config, const HinGraph& graph, const SplitSpec& splits) {
  config.validate();
  std::vector<SearchOutcome> outcomes(config.runs);
  std::vector<std::exception_ptr> errors(config.runs);
  std::vector<std::thread> workers;
  for (std::size_t k = 0; k < config.runs; ++k) {
    workers.emplace_back([&, k] {
      try {
        SearchConfig c = config;
        c.seed = config.seed + k;
        outcomes[k] = run_search(c, graph, splits);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outcomes;
}

const SearchOutcome& multi_run_select(const std::vector<SearchOutcome>& outcomes, SelectBy by) {
  if (outcomes.empty()) throw std::invalid_argument("no search outcomes to select from");
  const SearchOutcome* best = &outcomes.front();
  for (const auto& o : outcomes) {
    bool better = false;
    bool tie = false;
    if (by == SelectBy::Metric) {
      better = o.best_val_metric > best->best_val_metric;
      tie = o.best_val_metric == best->best_val_metric;
    } else {
      better = o.best_val_loss < best->best_val_loss;
      tie = o.best_val_loss == best->best_val_loss;
    }
    if (better || (tie && o.seed < best->seed)) best = &o;
  }
  return *best;
}

std::string search_log_csv(const SearchOutcome& outcome) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,val_metric\n";
  for (std::size_t e = 0; e < outcome.train_loss.size(); ++e) {
    os << e << ',' << format_double(outcome.train_loss[e]) << ',' << format_double(outcome.val_loss[e]) << ','
       << format_double(outcome.val_metric[e]) << '\n';
  }
  return os.str();
}

}  // namespace pmmm
