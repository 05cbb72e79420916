#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmmm/graph.hpp"
#include "pmmm/net.hpp"
#include "pmmm/rng.hpp"
#include "pmmm/tape.hpp"

namespace pmmm {

// The searchable space: a DAG over hyper-nodes H^(0..N) whose every ordered
// pair (i < j) is a multi-edge carrying all candidate paths, one
// architecture logit per (edge, candidate), plus the shared weights.
class SuperNet {
 public:
  SuperNet(const HinGraph& graph, Task task, std::size_t depth, std::size_t hidden_dim, bool use_transform,
           std::uint64_t seed);

  std::size_t depth() const noexcept { return depth_; }
  const std::vector<EdgeSlot>& edges() const noexcept { return edges_; }
  const std::vector<CandidatePath>& candidates() const noexcept { return candidates_; }
  std::size_t num_candidates() const noexcept { return candidates_.size(); }
  const std::vector<std::string>& relation_names() const noexcept { return relation_names_; }
  Task task() const noexcept { return task_; }

  // One 1xK row per edge, in edges() order.
  std::vector<DenseMat>& alpha() noexcept { return alpha_; }
  const std::vector<DenseMat>& alpha() const noexcept { return alpha_; }
  NetWeights& weights() noexcept { return weights_; }
  const NetWeights& weights() const noexcept { return weights_; }

 private:
  Task task_;
  std::size_t depth_;
  std::vector<EdgeSlot> edges_;
  std::vector<CandidatePath> candidates_;
  std::vector<std::string> relation_names_;
  std::vector<DenseMat> alpha_;
  NetWeights weights_;
};

// Transforms default on for classification, off for recommendation.
SuperNet build_supernet(const HinGraph& graph, Task task, std::size_t depth, std::size_t hidden_dim,
                        std::uint64_t seed, std::optional<bool> use_transform = std::nullopt);

// Softmax over one edge's logits.
std::vector<double> path_strengths(std::span<const double> alpha);

struct GateMask {
  std::vector<std::vector<bool>> active;  // [edge][candidate]

  std::size_t active_count(std::size_t edge) const;
  static GateMask all_active(std::size_t edges, std::size_t candidates);
};

// ceil(K / p), at least 1.
std::size_t gates_per_edge(std::size_t num_candidates, std::size_t p);

// Exactly `count` of `num_candidates` gates set, uniformly at random.
std::vector<bool> sample_edge_gates(std::size_t num_candidates, std::size_t count, Rng& rng);
// One gate set, drawn with probability proportional to `weights`.
std::vector<bool> sample_edge_gate_weighted(std::span<const double> weights, Rng& rng);

// Draws every edge's gates from `rng`, edges in order.
GateMask sample_gates(const SuperNet& net, std::size_t p, Rng& rng);

enum class StrengthMode { Softmax, Unit };

struct SuperNetVars {
  std::vector<Var> alpha;
  std::vector<Var> weights;
};
SuperNetVars bind_supernet(Tape& tape, const SuperNet& net, bool alpha_trainable, bool weights_trainable);

// Term list for the gated weighted sum. Strengths are the softmax over the
// edge's full candidate list; logits of inactive candidates enter as
// gradient-blocked values so backward touches only active paths. Throws if
// an edge has no active gate.
std::vector<PathTerm> supernet_terms(Tape& tape, const SuperNet& net, const SuperNetVars& vars,
                                     const GateMask& gates, StrengthMode mode = StrengthMode::Softmax);

Propagation forward_partial(Tape& tape, const SuperNet& net, const MessageContext& ctx, const SuperNetVars& vars,
                            const GateMask& gates, StrengthMode mode = StrengthMode::Softmax);
Propagation forward_full(Tape& tape, const SuperNet& net, const MessageContext& ctx, const SuperNetVars& vars);

}  // namespace pmmm
