#include "pmmm/net.hpp"

#include <cmath>
#include <stdexcept>

#include "pmmm/error.hpp"
#include "pmmm/metrics.hpp"

namespace pmmm {

std::vector<CandidatePath> default_candidates(std::size_t num_relations) {
  std::vector<CandidatePath> c;
  c.reserve(num_relations + 2);
  for (std::size_t r = 0; r < num_relations; ++r) c.push_back(CandidatePath::of_relation(r));
  c.push_back(CandidatePath::identity());
  c.push_back(CandidatePath::zero());
  return c;
}

std::string candidate_name(const CandidatePath& c, std::span<const std::string> relation_names) {
  switch (c.kind) {
    case PathKind::Identity:
      return "identity";
    case PathKind::Zero:
      return "zero";
    case PathKind::Relation:
      break;
  }
  if (c.relation >= relation_names.size()) throw std::out_of_range("candidate references unknown relation");
  return relation_names[c.relation];
}

std::vector<EdgeSlot> edge_slots(std::size_t depth) {
  std::vector<EdgeSlot> out;
  for (std::size_t j = 1; j <= depth; ++j) {
    for (std::size_t i = 0; i < j; ++i) out.push_back({i, j});
  }
  return out;
}

MessageContext::MessageContext(const HinGraph& graph) : graph_(&graph) {
  const std::size_t n = graph.total_nodes();
  for (std::size_t r = 0; r < graph.relations().size(); ++r) {
    const auto& rel = graph.relations()[r];
    operators_.push_back(normalized_adjacency(graph, r)
                             .embedded(n, n, graph.type_offset(rel.src_type), graph.type_offset(rel.dst_type)));
  }
}

TaskBinding bind_task(const HinGraph& graph, const SplitSpec& splits) {
  splits.validate_against(graph);
  TaskBinding b;
  b.task = splits.task;
  if (splits.task == Task::Classification) {
    const auto& labels = *graph.labels();
    b.num_classes = labels.num_classes();
    b.class_universe = labels.class_universe();
    const std::size_t off = graph.type_offset(labels.target_type);
    auto fill = [&](const std::vector<std::size_t>& nodes, SplitBatch& out) {
      for (std::size_t n : nodes) {
        out.rows.push_back(off + n);
        out.classes.push_back(*labels.label_of(n));
      }
    };
    fill(splits.train_nodes, b.train);
    fill(splits.val_nodes, b.val);
    fill(splits.test_nodes, b.test);
  } else {
    const auto& rel = graph.relations()[*graph.relation_index(splits.relation)];
    const std::size_t so = graph.type_offset(rel.src_type);
    const std::size_t dof = graph.type_offset(rel.dst_type);
    auto fill = [&](const std::vector<LabeledPair>& pairs, SplitBatch& out) {
      for (const auto& p : pairs) {
        out.src_rows.push_back(so + p.src);
        out.dst_rows.push_back(dof + p.dst);
        out.labels.push_back(static_cast<double>(p.label));
      }
    };
    fill(splits.train_pairs, b.train);
    fill(splits.val_pairs, b.val);
    fill(splits.test_pairs, b.test);
  }
  return b;
}

namespace {
DenseMat uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  DenseMat m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}
}  // namespace

NetWeights init_weights(const HinGraph& graph, const NetShape& shape, Rng& rng, std::string init_source) {
  if (shape.hidden_dim == 0) throw std::invalid_argument("hidden dimension must be >= 1");
  NetWeights w;
  w.shape = shape;
  w.init_source = std::move(init_source);
  w.tensors.resize(shape.count());
  const auto he = [](std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); };
  for (std::size_t t = 0; t < shape.num_types; ++t) {
    const std::size_t fan_in = graph.feature_dim(t);
    w.tensors[shape.projection(t)] = uniform_matrix(fan_in, shape.hidden_dim, he(fan_in), rng);
  }
  if (shape.transforms) {
    for (std::size_t j = 1; j <= shape.depth; ++j) {
      w.tensors[shape.transform(j)] = uniform_matrix(shape.hidden_dim, shape.hidden_dim, he(shape.hidden_dim), rng);
    }
  }
  if (shape.num_classes) {
    // Zero head: the first logits are exactly uniform.
    w.tensors[shape.head()] = DenseMat(shape.hidden_dim, shape.num_classes);
    w.tensors[shape.head_bias()] = DenseMat(1, shape.num_classes);
  }
  return w;
}

std::vector<Var> bind_weights(Tape& tape, const NetWeights& w, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(w.tensors.size());
  for (const auto& t : w.tensors) vars.push_back(trainable ? tape.parameter(t) : tape.constant(t));
  return vars;
}

Var input_layer(Tape& tape, const MessageContext& ctx, std::span<const Var> weight_vars, const NetShape& shape) {
  const HinGraph& g = ctx.graph();
  std::vector<Var> blocks;
  blocks.reserve(shape.num_types);
  for (std::size_t t = 0; t < shape.num_types; ++t) {
    const Var w = weight_vars[shape.projection(t)];
    const DenseMat* x = g.features(t);
    // One-hot identity features: X W == W.
    blocks.push_back(x ? ops::matmul(tape, tape.constant(*x), w) : w);
  }
  return ops::vstack(tape, blocks);
}

Propagation propagate(Tape& tape, const MessageContext& ctx, Var h0, std::span<const PathTerm> terms,
                      std::span<const Var> weight_vars, const NetShape& shape) {
  Propagation out;
  out.hyper_nodes.push_back(h0);
  const std::size_t n = tape.value(h0).rows();
  const std::size_t d = tape.value(h0).cols();
  for (std::size_t j = 1; j <= shape.depth; ++j) {
    std::vector<Var> summands;
    for (const auto& term : terms) {
      if (term.to != j) continue;
      if (term.from >= j) throw std::invalid_argument("path term violates hyper-node order");
      if (term.path.kind == PathKind::Zero) continue;
      const Var src = out.hyper_nodes[term.from];
      Var msg = term.path.kind == PathKind::Identity
                    ? src
                    : ops::spmm(tape, ctx.relation_operator(term.path.relation), src);
      if (term.coeff.valid()) msg = ops::scale_by(tape, term.coeff, msg);
      summands.push_back(msg);
    }
    Var h = summands.empty() ? tape.constant(DenseMat(n, d)) : ops::add_n(tape, summands);
    if (shape.transforms) h = ops::relu(tape, ops::matmul(tape, h, weight_vars[shape.transform(j)]));
    out.hyper_nodes.push_back(h);
  }
  return out;
}

Var task_output(Tape& tape, Var h_out, const TaskBinding& task, const SplitBatch& batch,
                std::span<const Var> weight_vars, const NetShape& shape) {
  if (task.task == Task::Classification) {
    Var rows = ops::row_gather(tape, h_out, batch.rows);
    return ops::add_bias(tape, ops::matmul(tape, rows, weight_vars[shape.head()]), weight_vars[shape.head_bias()]);
  }
  Var src = ops::row_gather(tape, h_out, batch.src_rows);
  Var dst = ops::row_gather(tape, h_out, batch.dst_rows);
  return ops::rowwise_dot(tape, src, dst);
}

Var task_loss(Tape& tape, Var output, const TaskBinding& task, const SplitBatch& batch) {
  if (task.task == Task::Classification) return ops::cross_entropy(tape, output, batch.classes);
  return ops::bce_logits(tape, output, batch.labels);
}

double task_metric(const DenseMat& output, const TaskBinding& task, const SplitBatch& batch) {
  if (task.task == Task::Classification) {
    auto pred = argmax_rows(output.data(), output.cols());
    return f1_scores(batch.classes, pred, task.class_universe).macro;
  }
  std::vector<int> labels(batch.labels.begin(), batch.labels.end());
  return auc(output.data(), labels);
}

}  // namespace pmmm
