#include "pmmm/supernet.hpp"

#include <algorithm>
#include <stdexcept>

namespace pmmm {

SuperNet::SuperNet(const HinGraph& graph, Task task, std::size_t depth, std::size_t hidden_dim, bool use_transform,
                   std::uint64_t seed)
    : task_(task), depth_(depth), edges_(edge_slots(depth)), candidates_(default_candidates(graph.relations().size())) {
  if (depth == 0) throw std::invalid_argument("super-net depth must be >= 1");
  if (hidden_dim == 0) throw std::invalid_argument("hidden dimension must be >= 1");
  for (const auto& r : graph.relations()) relation_names_.push_back(r.name);

  NetShape shape;
  shape.num_types = graph.types().size();
  shape.depth = depth;
  shape.hidden_dim = hidden_dim;
  shape.transforms = use_transform;
  if (task == Task::Classification) {
    if (!graph.labels()) throw std::invalid_argument("classification super-net needs node labels");
    shape.num_classes = graph.labels()->num_classes();
  }
  Rng wrng(seed, {fnv1a64("supernet-weights")});
  weights_ = init_weights(graph, shape, wrng, "supernet-weights:" + std::to_string(seed));

  Rng arng(seed, {fnv1a64("supernet-alpha")});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    DenseMat a(1, candidates_.size());
    for (double& v : a.data()) v = 1e-3 * arng.normal();
    alpha_.push_back(std::move(a));
  }
}

SuperNet build_supernet(const HinGraph& graph, Task task, std::size_t depth, std::size_t hidden_dim,
                        std::uint64_t seed, std::optional<bool> use_transform) {
  return SuperNet(graph, task, depth, hidden_dim, use_transform.value_or(task == Task::Classification), seed);
}

std::vector<double> path_strengths(std::span<const double> alpha) { return softmax(alpha); }

std::size_t GateMask::active_count(std::size_t edge) const {
  const auto& row = active.at(edge);
  return static_cast<std::size_t>(std::count(row.begin(), row.end(), true));
}

GateMask GateMask::all_active(std::size_t edges, std::size_t candidates) {
  return GateMask{std::vector<std::vector<bool>>(edges, std::vector<bool>(candidates, true))};
}

std::size_t gates_per_edge(std::size_t num_candidates, std::size_t p) {
  if (p == 0) throw std::invalid_argument("sampling denominator p must be >= 1");
  return std::max<std::size_t>(1, (num_candidates + p - 1) / p);
}

std::vector<bool> sample_edge_gates(std::size_t num_candidates, std::size_t count, Rng& rng) {
  std::vector<bool> g(num_candidates, false);
  for (std::size_t idx : rng.sample_without_replacement(num_candidates, count)) g[idx] = true;
  return g;
}

std::vector<bool> sample_edge_gate_weighted(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = rng.uniform() * total;
  std::vector<bool> g(weights.size(), false);
  double acc = 0.0;
  std::size_t pick = weights.size() - 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  g[pick] = true;
  return g;
}

GateMask sample_gates(const SuperNet& net, std::size_t p, Rng& rng) {
  const std::size_t k = net.num_candidates();
  const std::size_t count = gates_per_edge(k, p);
  GateMask m;
  for (std::size_t e = 0; e < net.edges().size(); ++e) m.active.push_back(sample_edge_gates(k, count, rng));
  return m;
}

SuperNetVars bind_supernet(Tape& tape, const SuperNet& net, bool alpha_trainable, bool weights_trainable) {
  SuperNetVars v;
  for (const auto& a : net.alpha()) v.alpha.push_back(alpha_trainable ? tape.parameter(a) : tape.constant(a));
  v.weights = bind_weights(tape, net.weights(), weights_trainable);
  return v;
}

std::vector<PathTerm> supernet_terms(Tape& tape, const SuperNet& net, const SuperNetVars& vars,
                                     const GateMask& gates, StrengthMode mode) {
  const auto& edges = net.edges();
  if (gates.active.size() != edges.size()) throw std::invalid_argument("gate mask does not match super-net edges");
  std::vector<PathTerm> terms;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& g = gates.active[e];
    if (g.size() != net.num_candidates()) throw std::invalid_argument("gate row length does not match candidates");
    if (std::none_of(g.begin(), g.end(), [](bool b) { return b; })) {
      throw std::invalid_argument("edge (" + std::to_string(edges[e].from) + "," + std::to_string(edges[e].to) +
                                  ") has no active gate");
    }
    Var strengths;
    if (mode == StrengthMode::Softmax) {
      strengths = ops::softmax_vector(tape, ops::mask_gradient(tape, vars.alpha[e], g));
    }
    for (std::size_t r = 0; r < g.size(); ++r) {
      if (!g[r]) continue;
      PathTerm t{edges[e].from, edges[e].to, net.candidates()[r], Var{}};
      if (mode == StrengthMode::Softmax) t.coeff = ops::pick(tape, strengths, r);
      terms.push_back(t);
    }
  }
  return terms;
}

Propagation forward_partial(Tape& tape, const SuperNet& net, const MessageContext& ctx, const SuperNetVars& vars,
                            const GateMask& gates, StrengthMode mode) {
  const auto& shape = net.weights().shape;
  Var h0 = input_layer(tape, ctx, vars.weights, shape);
  auto terms = supernet_terms(tape, net, vars, gates, mode);
  return propagate(tape, ctx, h0, terms, vars.weights, shape);
}

Propagation forward_full(Tape& tape, const SuperNet& net, const MessageContext& ctx, const SuperNetVars& vars) {
  return forward_partial(tape, net, ctx, vars, GateMask::all_active(net.edges().size(), net.num_candidates()));
}

}  // namespace pmmm
