#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pmmm/derive.hpp"
#include "pmmm/metrics.hpp"
#include "pmmm/net.hpp"
#include "pmmm/optim.hpp"

namespace pmmm {

// A derived architecture built as a fixed network: every retained path is
// summed unweighted, and no architecture logits exist.
class TargetNet {
 public:
  TargetNet(MetaMultigraph arch, std::vector<PathTerm> plan, NetWeights weights, Task task)
      : arch_(std::move(arch)), plan_(std::move(plan)), weights_(std::move(weights)), task_(task) {}

  const MetaMultigraph& architecture() const noexcept { return arch_; }
  // Unweighted terms in graph relation ids. Zero paths are not present.
  const std::vector<PathTerm>& plan() const noexcept { return plan_; }
  NetWeights& weights() noexcept { return weights_; }
  const NetWeights& weights() const noexcept { return weights_; }
  Task task() const noexcept { return task_; }

 private:
  MetaMultigraph arch_;
  std::vector<PathTerm> plan_;
  NetWeights weights_;
  Task task_;
};

struct TargetConfig {
  std::size_t hidden_dim = 64;
  std::optional<bool> use_transform;  // default: on for classification
  std::size_t epochs = 100;
  std::size_t patience = 10;  // classification early stopping
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8, 5e-4};
};

// Fresh weights from the "target-weights" stream of `seed`. Throws
// std::invalid_argument if the architecture names a relation the graph lacks.
TargetNet build_target(const MetaMultigraph& arch, const HinGraph& graph, Task task, std::size_t hidden_dim,
                       std::uint64_t seed, std::optional<bool> use_transform = std::nullopt);

Propagation target_forward(Tape& tape, const TargetNet& net, const MessageContext& ctx,
                           const std::vector<Var>& weight_vars);

struct TrainResult {
  double best_val_metric = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<double> train_loss;
};

// Full-batch Adam on the train split. Keeps the weights with the best
// validation metric (strict improvement); classification stops after
// `patience` epochs without improvement. On return `net` holds the best
// checkpoint. Throws DivergenceError on a non-finite or exploding loss.
TrainResult train_target(TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                         const TargetConfig& config);

DenseMat target_output(const TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                       const SplitBatch& batch);
F1Scores evaluate_classification(const TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                                 const SplitBatch& batch);
double evaluate_auc(const TargetNet& net, const MessageContext& ctx, const TaskBinding& task,
                    const SplitBatch& batch);

struct SeedMetrics {
  std::uint64_t seed = 0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double auc = 0.0;
  double val_metric = 0.0;
};

struct EvalReport {
  Task task = Task::Classification;
  std::vector<SeedMetrics> runs;
  MeanStd macro_f1, micro_f1, auc;

  // Headline test metric of one run: micro-F1 (accuracy) or AUC.
  static double headline(Task task, const SeedMetrics& m) {
    return task == Task::Classification ? m.micro_f1 : m.auc;
  }
  MeanStd headline() const { return task == Task::Classification ? micro_f1 : auc; }
};

// Trains and tests with training seeds first_seed .. first_seed + n - 1.
EvalReport repeat_eval(const MetaMultigraph& arch, const HinGraph& graph, const SplitSpec& splits,
                       std::size_t n_seeds, const TargetConfig& config, std::uint64_t first_seed = 0);

}  // namespace pmmm
