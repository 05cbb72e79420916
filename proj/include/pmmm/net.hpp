#pragma once

// Pieces shared by the super-net and the derived target-net: the global
// message-passing operators, task bindings, weight families and the
// hyper-node propagation routine.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmmm/graph.hpp"
#include "pmmm/matrix.hpp"
#include "pmmm/rng.hpp"
#include "pmmm/tape.hpp"

namespace pmmm {

enum class PathKind { Relation, Identity, Zero };

// One candidate message-passing type on a multi-edge.
struct CandidatePath {
  PathKind kind = PathKind::Zero;
  std::size_t relation = 0;  // meaningful for PathKind::Relation only

  static CandidatePath of_relation(std::size_t r) { return {PathKind::Relation, r}; }
  static CandidatePath identity() { return {PathKind::Identity, 0}; }
  static CandidatePath zero() { return {PathKind::Zero, 0}; }

  friend bool operator==(const CandidatePath& a, const CandidatePath& b) {
    return a.kind == b.kind && (a.kind != PathKind::Relation || a.relation == b.relation);
  }
};

// Relations in graph order, then identity, then zero.
std::vector<CandidatePath> default_candidates(std::size_t num_relations);
std::string candidate_name(const CandidatePath& c, std::span<const std::string> relation_names);

struct EdgeSlot {
  std::size_t from = 0;
  std::size_t to = 0;
  bool sequential() const noexcept { return to == from + 1; }
  friend bool operator==(const EdgeSlot&, const EdgeSlot&) = default;
};

// All (i, j) with 0 <= i < j <= depth, ordered by j then i.
std::vector<EdgeSlot> edge_slots(std::size_t depth);

// Relation operators embedded block-wise over the disjoint union of typed
// nodes: relation r maps rows of its source type from rows of its
// destination type (mean aggregation). The graph must outlive the context.
class MessageContext {
 public:
  explicit MessageContext(const HinGraph& graph);

  const HinGraph& graph() const noexcept { return *graph_; }
  std::size_t total_nodes() const noexcept { return graph_->total_nodes(); }
  const SparseMat& relation_operator(std::size_t r) const { return operators_.at(r); }
  std::size_t num_relations() const noexcept { return operators_.size(); }

 private:
  const HinGraph* graph_;
  std::vector<SparseMat> operators_;
};

// Global row indices + targets for one split.
struct SplitBatch {
  std::vector<std::size_t> rows;  // classification
  std::vector<int> classes;
  std::vector<std::size_t> src_rows, dst_rows;  // recommendation
  std::vector<double> labels;
  std::size_t size() const noexcept { return rows.empty() ? labels.size() : rows.size(); }
};

struct TaskBinding {
  Task task = Task::Classification;
  std::size_t num_classes = 0;
  std::vector<int> class_universe;
  SplitBatch train, val, test;
};

TaskBinding bind_task(const HinGraph& graph, const SplitSpec& splits);

// Weight families. Layout of `tensors`:
//   [projection per node type][transform per hyper-node 1..depth, if enabled][head, head bias, if classification]
struct NetShape {
  std::size_t num_types = 0;
  std::size_t depth = 0;
  std::size_t hidden_dim = 0;
  bool transforms = false;
  std::size_t num_classes = 0;  // 0: no classification head

  std::size_t projection(std::size_t type) const { return type; }
  std::size_t transform(std::size_t hyper_node) const { return num_types + hyper_node - 1; }
  std::size_t head() const { return num_types + (transforms ? depth : 0); }
  std::size_t head_bias() const { return head() + 1; }
  std::size_t count() const { return head() + (num_classes ? 2 : 0); }
};

struct NetWeights {
  NetShape shape;
  std::vector<DenseMat> tensors;
  // Which stream initialized these weights (provenance only).
  std::string init_source;
};

// He-uniform projections and transforms; zero classification head and bias.
NetWeights init_weights(const HinGraph& graph, const NetShape& shape, Rng& rng, std::string init_source);

// One term of the hyper-node sum: coeff * f(path, H[from]) into H[to].
// An invalid coeff means an unweighted term.
struct PathTerm {
  std::size_t from = 0;
  std::size_t to = 0;
  CandidatePath path;
  Var coeff;
};

struct Propagation {
  std::vector<Var> hyper_nodes;  // H^(0) .. H^(N)
  Var output() const { return hyper_nodes.back(); }
};

Var input_layer(Tape& tape, const MessageContext& ctx, std::span<const Var> weight_vars, const NetShape& shape);

// H^(j) = sum over terms into j, in the order given; then relu(H^(j) W_j)
// when transforms are enabled. Zero paths contribute nothing; a hyper-node
// with no terms is all-zero.
Propagation propagate(Tape& tape, const MessageContext& ctx, Var h0, std::span<const PathTerm> terms,
                      std::span<const Var> weight_vars, const NetShape& shape);

std::vector<Var> bind_weights(Tape& tape, const NetWeights& w, bool trainable);

// Logits (classification) or pair scores (recommendation) for one split.
Var task_output(Tape& tape, Var h_out, const TaskBinding& task, const SplitBatch& batch,
                std::span<const Var> weight_vars, const NetShape& shape);
Var task_loss(Tape& tape, Var output, const TaskBinding& task, const SplitBatch& batch);
// Macro-F1 for classification, AUC for recommendation.
double task_metric(const DenseMat& output, const TaskBinding& task, const SplitBatch& batch);

}  // namespace pmmm
