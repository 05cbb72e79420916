#include "pmmm/targetnet.hpp"

#include <cmath>
#include <stdexcept>

#include "pmmm/error.hpp"

namespace pmmm {

namespace {

constexpr double kLossCeiling = 1e6;

CandidatePath to_graph_path(const CandidatePath& c, const MetaMultigraph& arch, const HinGraph& graph) {
  if (c.kind != PathKind::Relation) return c;
  if (c.relation >= arch.relation_names.size()) {
    throw std::invalid_argument("architecture references relation index out of range");
  }
  const std::string& name = arch.relation_names[c.relation];
  auto idx = graph.relation_index(name);
  if (!idx) throw std::invalid_argument("unknown relation '" + name + "' in architecture");
  return CandidatePath::of_relation(*idx);
}

}  // namespace

TargetNet build_target(const MetaMultigraph& arch, const HinGraph& graph, Task task, std::size_t hidden_dim,
                       std::uint64_t seed, std::optional<bool> use_transform) {
  if (arch.depth == 0) throw std::invalid_argument("architecture depth must be >= 1");
  if (arch.retained.size() != arch.edges.size()) {
    throw std::invalid_argument("architecture retained sets do not match its edges");
  }
  std::vector<PathTerm> plan;
  for (std::size_t e = 0; e < arch.edges.size(); ++e) {
    const auto& edge = arch.edges[e];
    if (edge.from >= edge.to || edge.to > arch.depth) throw std::invalid_argument("architecture edge out of order");
    for (const auto& c : arch.retained[e]) {
      if (c.kind == PathKind::Zero) continue;
      plan.push_back({edge.from, edge.to, to_graph_path(c, arch, graph), Var{}});
    }
  }

  NetShape shape;
  shape.num_types = graph.types().size();
  shape.depth = arch.depth;
  shape.hidden_dim = hidden_dim;
  shape.transforms = use_transform.value_or(task == Task::Classification);
  if (task == Task::Classification) {
    if (!graph.labels()) throw std::invalid_argument("classification target-net needs node labels");
    shape.num_classes = graph.labels()->num_classes();
  }
  Rng rng(seed, {fnv1a64("target-weights")});
  NetWeights w = init_weights(graph, shape, rng, "target-weights:" + std::to_string(seed));
  return TargetNet(arch, std::move(plan), std::move(w), task);
}

Propagation target_forward(Tape& tape, const TargetNet& net, const MessageContext& ctx,
                           const std::vector<Var>& weight_vars) {
  const auto& shape = net.weights().shape;
  Var h0 = input_layer(tape, ctx, weight_vars, shape);
  return propagate(tape, ctx, h0, net.plan(), weight_vars, shape);
}

DenseMat target_output(const TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                       const SplitBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("cannot evaluate an empty split");
  Tape tape;
  auto vars = bind_weights(tape, net.weights(), false);
  auto prop = target_forward(tape, net, ctx, vars);
  return tape.value(task_output(tape, prop.output(), task, batch, vars, net.weights().shape));
}

TrainResult train_target(TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                         const TargetConfig& config) {
  if (task.train.size() == 0) throw std::invalid_argument("train split is empty");
  if (task.val.size() == 0) throw std::invalid_argument("validation split is empty");
  const auto& shape = net.weights().shape;
  AdamState adam(config.adam, net.weights().tensors);

  TrainResult result;
  NetWeights best = net.weights();
  result.best_val_metric = -1.0;

  for (std::size_t epoch = 0;; ++epoch) {
    Tape tape;
    auto vars = bind_weights(tape, net.weights(), epoch < config.epochs);
    auto prop = target_forward(tape, net, ctx, vars);

    const double val_metric =
        task_metric(tape.value(task_output(tape, prop.output(), task, task.val, vars, shape)), task, task.val);
    if (val_metric > result.best_val_metric) {
      result.best_val_metric = val_metric;
      result.best_epoch = epoch;
      best = net.weights();
    }
    if (epoch == config.epochs) break;
    if (task.task == Task::Classification && epoch - result.best_epoch >= config.patience) break;

    Var loss = task_loss(tape, task_output(tape, prop.output(), task, task.train, vars, shape), task, task.train);
    const double lv = tape.value(loss)(0, 0);
    if (!std::isfinite(lv) || lv > kLossCeiling) throw DivergenceError(epoch, "target-net training loss diverged");
    result.train_loss.push_back(lv);
    tape.backward(loss);

    std::vector<DenseMat> grads;
    grads.reserve(vars.size());
    for (Var v : vars) grads.push_back(tape.grad(v));
    adam.step(net.weights().tensors, grads);
    ++result.epochs_run;
  }
  net.weights() = std::move(best);
  return result;
}

F1Scores evaluate_classification(const TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                                 const SplitBatch& batch) {
  if (task.task != Task::Classification) throw std::invalid_argument("F1 needs a classification task");
  DenseMat out = target_output(net, ctx, task, batch);
  auto pred = argmax_rows(out.data(), out.cols());
  return f1_scores(batch.classes, pred, task.class_universe);
}

double evaluate_auc(const TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                    const SplitBatch& batch) {
  if (task.task != Task::Recommendation) throw std::invalid_argument("AUC needs a recommendation task");
  DenseMat out = target_output(net, ctx, task, batch);
  std::vector<int> labels(batch.labels.begin(), batch.labels.end());
  return auc(out.data(), labels);
}

EvalReport repeat_eval(const MetaMultigraph& arch, const HinGraph& graph, const SplitSpec& splits,
                       std::size_t n_seeds, const TargetConfig& config, std::uint64_t first_seed) {
  if (n_seeds == 0) throw std::invalid_argument("repeat_eval needs at least one seed");
  const TaskBinding task = bind_task(graph, splits);
  const MessageContext ctx(graph);
  EvalReport report;
  report.task = splits.task;
  std::vector<double> macro, micro, aucs;
  for (std::size_t k = 0; k < n_seeds; ++k) {
    const std::uint64_t seed = first_seed + k;
    TargetNet net = build_target(arch, graph, splits.task, config.hidden_dim, seed, config.use_transform);
    SeedMetrics m;
    m.seed = seed;
    m.val_metric = train_target(net, ctx, task, config).best_val_metric;
    if (splits.task == Task::Classification) {
      const auto f1 = evaluate_classification(net, ctx, task, task.test);
      m.macro_f1 = f1.macro;
      m.micro_f1 = f1.micro;
      macro.push_back(m.macro_f1);
      micro.push_back(m.micro_f1);
    } else {
      m.auc = evaluate_auc(net, ctx, task, task.test);
      aucs.push_back(m.auc);
    }
    report.runs.push_back(m);
  }
  if (!macro.empty()) {
    report.macro_f1 = mean_std(macro);
    report.micro_f1 = mean_std(micro);
  }
  if (!aucs.empty()) report.auc = mean_std(aucs);
  return report;
}

}  // namespace pmmm
