#include <doctest.h>

#include <cmath>

#include "../common/toy.hpp"
#include "pmmm/derive.hpp"
#include "pmmm/supernet.hpp"
#include "pmmm/synth.hpp"
#include "pmmm/targetnet.hpp"

using namespace pmmm;
using pmmm::testing::max_abs_diff;
using pmmm::testing::random_toy_hin;
using pmmm::testing::toy_node_splits;

namespace {

AlphaSnapshot random_alpha(const SuperNet& net, Rng& rng) {
  AlphaSnapshot a = AlphaSnapshot::of(net);
  for (auto& row : a.alpha) {
    for (double& v : row) v = rng.normal();
  }
  return a;
}

// Every edge keeps exactly `paths`.
MetaMultigraph uniform_arch(const HinGraph& g, std::size_t depth, std::vector<CandidatePath> paths) {
  MetaMultigraph m;
  m.depth = depth;
  for (const auto& r : g.relations()) m.relation_names.push_back(r.name);
  m.edges = edge_slots(depth);
  m.retained.assign(m.edges.size(), paths);
  return m;
}

DenseMat target_hn(const TargetNet& net, const MessageContext& ctx) {
  Tape tape;
  auto vars = bind_weights(tape, net.weights(), false);
  return tape.value(target_forward(tape, net, ctx, vars).output());
}

SynthDataset small_planted(double noise) {
  SynthSpec spec = SynthSpec::single_chain();
  spec.num_targets = 300;
  spec.num_mid = 400;
  spec.num_aux = 12;
  spec.label_noise = noise;
  return generate_hin(spec);
}

}  // namespace

TEST_CASE("target forward equals the gated super-net with unit strengths") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const HinGraph g = random_toy_hin(rng);
    const MessageContext ctx(g);
    const std::size_t depth = 1 + rng.index(3);
    SuperNet sn = build_supernet(g, Task::Classification, depth, 4, trial, false);
    const MetaMultigraph arch = derive_multigraph(random_alpha(sn, rng), {rng.uniform(), rng.uniform()});
    TargetNet tn = build_target(arch, g, Task::Classification, 4, trial, false);
    sn.weights().tensors = tn.weights().tensors;

    GateMask gates;
    for (std::size_t e = 0; e < arch.edges.size(); ++e) {
      std::vector<bool> row(sn.num_candidates(), false);
      for (const auto& c : arch.retained[e]) {
        for (std::size_t r = 0; r < sn.num_candidates(); ++r) row[r] = row[r] || sn.candidates()[r] == c;
      }
      gates.active.push_back(row);
    }
    Tape tape;
    auto vars = bind_supernet(tape, sn, false, false);
    const DenseMat super_out = tape.value(forward_partial(tape, sn, ctx, vars, gates, StrengthMode::Unit).output());
    CHECK(max_abs_diff(super_out, target_hn(tn, ctx)) <= 1e-9);
  }
}

TEST_CASE("identity and zero architectures") {
  Rng rng(4);
  const HinGraph g = random_toy_hin(rng);
  const MessageContext ctx(g);

  TargetNet id1 = build_target(uniform_arch(g, 1, {CandidatePath::identity()}), g, Task::Classification, 5, 0, false);
  Tape tape;
  auto vars = bind_weights(tape, id1.weights(), false);
  auto prop = target_forward(tape, id1, ctx, vars);
  CHECK(tape.value(prop.output()) == tape.value(prop.hyper_nodes[0]));

  // Depth 2: H2 = H0 + H1 = 2 H0.
  TargetNet id2 = build_target(uniform_arch(g, 2, {CandidatePath::identity()}), g, Task::Classification, 5, 0, false);
  Tape t2;
  auto v2 = bind_weights(t2, id2.weights(), false);
  auto p2 = target_forward(t2, id2, ctx, v2);
  DenseMat twice = t2.value(p2.hyper_nodes[0]);
  for (double& v : twice.data()) v *= 2.0;
  CHECK(max_abs_diff(t2.value(p2.output()), twice) <= 1e-12);

  MetaMultigraph mixed = uniform_arch(g, 2, {CandidatePath::of_relation(0)});
  mixed.retained[1] = {CandidatePath::zero()};
  TargetNet tm = build_target(mixed, g, Task::Classification, 5, 0);
  CHECK(tm.plan().size() == 2);
  for (const auto& t : tm.plan()) CHECK(!(t.from == mixed.edges[1].from && t.to == mixed.edges[1].to));

  TargetNet all_zero = build_target(uniform_arch(g, 2, {CandidatePath::zero()}), g, Task::Classification, 5, 0, false);
  CHECK(all_zero.plan().empty());
  const DenseMat z = target_hn(all_zero, ctx);
  CHECK(std::all_of(z.data().begin(), z.data().end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("target weights are seeded and fresh") {
  Rng rng(6);
  const HinGraph g = random_toy_hin(rng);
  const MetaMultigraph arch = uniform_arch(g, 2, {CandidatePath::of_relation(0), CandidatePath::identity()});
  const TargetNet a = build_target(arch, g, Task::Classification, 6, 3);
  const TargetNet b = build_target(arch, g, Task::Classification, 6, 3);
  const TargetNet c = build_target(arch, g, Task::Classification, 6, 4);
  CHECK(a.weights().tensors == b.weights().tensors);
  CHECK(a.weights().tensors != c.weights().tensors);
  CHECK(a.weights().init_source == "target-weights:3");
  const SuperNet sn = build_supernet(g, Task::Classification, 2, 6, 3);
  CHECK(sn.weights().init_source != a.weights().init_source);
  CHECK(sn.weights().tensors != a.weights().tensors);
  CHECK(a.weights().shape.transforms);
}

TEST_CASE("unknown relations are rejected") {
  Rng rng(8);
  const HinGraph g = random_toy_hin(rng);
  MetaMultigraph arch = uniform_arch(g, 1, {CandidatePath::of_relation(0)});
  arch.relation_names[0] = "nope";
  try {
    (void)build_target(arch, g, Task::Classification, 4, 0);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("unknown relation 'nope'") != std::string::npos);
  }
  MetaMultigraph bad_edges = uniform_arch(g, 1, {CandidatePath::identity()});
  bad_edges.retained.clear();
  CHECK_THROWS_AS(build_target(bad_edges, g, Task::Classification, 4, 0), std::invalid_argument);
}

TEST_CASE("zero epochs keeps the initial weights") {
  Rng rng(10);
  const HinGraph g = random_toy_hin(rng);
  const MessageContext ctx(g);
  const TaskBinding task = bind_task(g, toy_node_splits(g));
  TargetNet net = build_target(uniform_arch(g, 2, {CandidatePath::of_relation(0), CandidatePath::identity()}), g,
                               Task::Classification, 4, 1);
  const auto init = net.weights().tensors;
  TargetConfig cfg;
  cfg.hidden_dim = 4;
  cfg.epochs = 0;
  const TrainResult r = train_target(net, ctx, task, cfg);
  CHECK(r.epochs_run == 0);
  CHECK(r.best_epoch == 0);
  CHECK(r.train_loss.empty());
  CHECK(net.weights().tensors == init);
  CHECK(r.best_val_metric >= 0.0);
}

TEST_CASE("target training is deterministic and keeps the best checkpoint") {
  Rng rng(12);
  const HinGraph g = random_toy_hin(rng);
  const MessageContext ctx(g);
  const TaskBinding task = bind_task(g, toy_node_splits(g));
  const MetaMultigraph arch = uniform_arch(g, 2, {CandidatePath::of_relation(0), CandidatePath::identity()});
  TargetConfig cfg;
  cfg.hidden_dim = 4;
  cfg.epochs = 30;
  TargetNet a = build_target(arch, g, Task::Classification, 4, 2);
  TargetNet b = build_target(arch, g, Task::Classification, 4, 2);
  const TrainResult ra = train_target(a, ctx, task, cfg);
  const TrainResult rb = train_target(b, ctx, task, cfg);
  CHECK(a.weights().tensors == b.weights().tensors);
  CHECK(ra.train_loss == rb.train_loss);
  CHECK(ra.best_epoch <= ra.epochs_run);
  CHECK(ra.epochs_run <= cfg.epochs);
  const DenseMat out = target_output(a, ctx, task, task.val);
  CHECK(task_metric(out, task, task.val) == ra.best_val_metric);
}

TEST_CASE("planted architecture fits noiseless planted data") {
  const SynthDataset data = small_planted(0.0);
  const MessageContext ctx(data.graph);
  const TaskBinding task = bind_task(data.graph, data.splits);
  TargetNet net = build_target(planted_architecture(data.truth, data.graph), data.graph, Task::Classification, 64, 0);
  TargetConfig cfg;
  train_target(net, ctx, task, cfg);
  const F1Scores train = evaluate_classification(net, ctx, task, task.train);
  CHECK(train.micro >= 0.99);
}

TEST_CASE("evaluation guards") {
  Rng rng(14);
  const HinGraph g = random_toy_hin(rng);
  const MessageContext ctx(g);
  const TaskBinding task = bind_task(g, toy_node_splits(g));
  const TargetNet net = build_target(uniform_arch(g, 1, {CandidatePath::identity()}), g, Task::Classification, 4, 0);
  CHECK_THROWS_AS(evaluate_auc(net, ctx, task, task.test), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_classification(net, ctx, task, SplitBatch{}), std::invalid_argument);
  const F1Scores f = evaluate_classification(net, ctx, task, task.test);
  CHECK(f.macro >= 0.0);
  CHECK(f.micro <= 1.0);
  CHECK_THROWS_AS(repeat_eval(uniform_arch(g, 1, {CandidatePath::identity()}), g, toy_node_splits(g), 0, {}),
                  std::invalid_argument);
}

TEST_CASE("recommendation target trains and reports AUC") {
  const auto toy = testing::toy_recommendation(3);
  const MetaMultigraph arch = uniform_arch(toy.graph, 2, {CandidatePath::of_relation(0), CandidatePath::of_relation(1),
                                                          CandidatePath::identity()});
  TargetConfig cfg;
  cfg.hidden_dim = 8;
  cfg.epochs = 40;
  const EvalReport rep = repeat_eval(arch, toy.graph, toy.splits, 2, cfg, 5);
  CHECK(rep.task == Task::Recommendation);
  REQUIRE(rep.runs.size() == 2);
  CHECK(rep.runs[0].seed == 5);
  CHECK(rep.runs[1].seed == 6);
  for (const auto& r : rep.runs) {
    CHECK(r.auc >= 0.0);
    CHECK(r.auc <= 1.0);
  }
  CHECK(rep.auc.std >= 0.0);
  CHECK(rep.headline().mean == rep.auc.mean);
  const TargetNet net = build_target(arch, toy.graph, Task::Recommendation, 8, 0);
  CHECK_FALSE(net.weights().shape.transforms);
  CHECK(net.weights().shape.num_classes == 0);
}

TEST_CASE("repeat evaluation aggregates per-seed results") {
  Rng rng(16);
  const HinGraph g = random_toy_hin(rng);
  TargetConfig cfg;
  cfg.hidden_dim = 4;
  cfg.epochs = 5;
  const MetaMultigraph arch = uniform_arch(g, 1, {CandidatePath::of_relation(0), CandidatePath::identity()});
  const EvalReport rep = repeat_eval(arch, g, toy_node_splits(g), 3, cfg);
  REQUIRE(rep.runs.size() == 3);
  std::vector<double> micro;
  for (const auto& r : rep.runs) micro.push_back(r.micro_f1);
  const MeanStd ms = mean_std(micro);
  CHECK(rep.micro_f1.mean == ms.mean);
  CHECK(rep.micro_f1.std == ms.std);
  CHECK(rep.headline().mean == rep.micro_f1.mean);
  const EvalReport again = repeat_eval(arch, g, toy_node_splits(g), 3, cfg);
  CHECK(again.micro_f1.mean == rep.micro_f1.mean);
}
