#include "pmmm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "pmmm/error.hpp"
#include "pmmm/rng.hpp"

namespace pmmm {

namespace {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;

Relation make_relation(std::string name, std::size_t src_type, std::size_t dst_type, std::size_t n_src,
                       std::size_t n_dst, const Edges& edges) {
  std::vector<Triplet> t;
  t.reserve(edges.size());
  for (auto [s, d] : edges) t.push_back({s, d, 1.0});
  return Relation{std::move(name), src_type, dst_type, SparseMat::from_triplets(n_src, n_dst, t)};
}

Edges reversed(const Edges& edges) {
  Edges out;
  out.reserve(edges.size());
  for (auto [s, d] : edges) out.emplace_back(d, s);
  return out;
}

// Class prototypes on the first num_classes coordinates plus Gaussian noise.
DenseMat class_features(const std::vector<int>& classes, const SynthSpec& spec, Rng& rng) {
  DenseMat x(classes.size(), spec.feature_dim);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t c = 0; c < spec.feature_dim; ++c) x(i, c) = spec.feature_noise * rng.normal();
    x(i, static_cast<std::size_t>(classes[i])) += spec.feature_signal;
  }
  return x;
}

// Uninformative types carry one all-zero feature.
DenseMat constant_features(std::size_t rows) { return DenseMat(rows, 1, 0.0); }

std::vector<int> uniform_classes(std::size_t n, std::size_t num_classes, Rng& rng) {
  std::vector<int> c(n);
  for (auto& v : c) v = static_cast<int>(rng.index(num_classes));
  return c;
}

std::vector<std::vector<std::size_t>> pools_by_class(const std::vector<int>& classes, std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> pools(num_classes);
  for (std::size_t i = 0; i < classes.size(); ++i) pools[static_cast<std::size_t>(classes[i])].push_back(i);
  return pools;
}

// `count` distinct members; each pick comes from `latent` with probability
// `affinity`, otherwise from a uniformly chosen other class.
std::vector<std::size_t> pick_linked(const std::vector<std::vector<std::size_t>>& pools, int latent,
                                     std::size_t count, double affinity, Rng& rng) {
  const std::size_t k = pools.size();
  std::vector<std::size_t> chosen;
  while (chosen.size() < count) {
    std::size_t cls = static_cast<std::size_t>(latent);
    if (k > 1 && !rng.bernoulli(affinity)) {
      cls = rng.index(k - 1);
      if (cls >= static_cast<std::size_t>(latent)) ++cls;
    }
    const auto& pool = pools[cls];
    if (pool.empty()) continue;
    const std::size_t node = pool[rng.index(pool.size())];
    if (std::find(chosen.begin(), chosen.end(), node) == chosen.end()) chosen.push_back(node);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Index of the unique maximum, or -1 when the maximum is shared.
int strict_majority(const std::vector<std::size_t>& counts) {
  const auto it = std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), *it) != 1) return -1;
  return static_cast<int>(it - counts.begin());
}

Edges distractor_edges(std::size_t n_src, std::size_t n_dst, double degree, Rng& rng) {
  const double prob = std::min(1.0, degree / static_cast<double>(n_dst));
  Edges e;
  for (std::size_t s = 0; s < n_src; ++s) {
    for (std::size_t d = 0; d < n_dst; ++d) {
      if (rng.bernoulli(prob)) e.emplace_back(s, d);
    }
  }
  return e;
}

std::vector<int> apply_label_noise(std::vector<int> labels, const SynthSpec& spec, Rng& rng) {
  for (auto& y : labels) {
    if (!rng.bernoulli(spec.label_noise)) continue;
    std::size_t other = rng.index(spec.num_classes - 1);
    if (other >= static_cast<std::size_t>(y)) ++other;
    y = static_cast<int>(other);
  }
  return labels;
}

SplitSpec stratified_splits(const std::vector<int>& labels, const SynthSpec& spec, Rng& rng) {
  SplitSpec s;
  s.task = Task::Classification;
  for (const auto& pool : pools_by_class(labels, spec.num_classes)) {
    std::vector<std::size_t> nodes = pool;
    rng.shuffle(nodes);
    const auto n = static_cast<double>(nodes.size());
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
    const auto n_val = std::min(nodes.size() - n_train, static_cast<std::size_t>(std::llround(spec.val_fraction * n)));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      auto& dst = i < n_train ? s.train_nodes : (i < n_train + n_val ? s.val_nodes : s.test_nodes);
      dst.push_back(nodes[i]);
    }
  }
  std::sort(s.train_nodes.begin(), s.train_nodes.end());
  std::sort(s.val_nodes.begin(), s.val_nodes.end());
  std::sort(s.test_nodes.begin(), s.test_nodes.end());
  return s;
}

NodeLabels make_labels(const std::vector<int>& labels) {
  NodeLabels l;
  l.target_type = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) l.entries.emplace_back(i, labels[i]);
  return l;
}

SynthDataset single_chain(const SynthSpec& spec) {
  Rng rng(spec.seed, {fnv1a64("synth-single-chain")});
  const std::size_t nA = spec.num_targets, nP = spec.num_mid, nC = spec.num_aux;

  std::vector<int> venue_class(nC);
  for (std::size_t c = 0; c < nC; ++c) venue_class[c] = static_cast<int>(c % spec.num_classes);
  const auto venue_pools = pools_by_class(venue_class, spec.num_classes);

  // Each paper appears in one venue; its class is that venue's class.
  const std::vector<int> paper_class = uniform_classes(nP, spec.num_classes, rng);
  Edges pc;
  for (std::size_t p = 0; p < nP; ++p) {
    const auto& pool = venue_pools[static_cast<std::size_t>(paper_class[p])];
    pc.emplace_back(p, pool[rng.index(pool.size())]);
  }
  const auto paper_pools = pools_by_class(paper_class, spec.num_classes);

  Edges ap;
  std::vector<int> labels(nA);
  for (std::size_t a = 0; a < nA; ++a) {
    const int latent = static_cast<int>(rng.index(spec.num_classes));
    for (;;) {
      auto papers = pick_linked(paper_pools, latent, spec.links_per_target, spec.affinity, rng);
      std::vector<std::size_t> counts(spec.num_classes, 0);
      for (std::size_t p : papers) ++counts[static_cast<std::size_t>(paper_class[p])];
      const int y = strict_majority(counts);
      if (y < 0) continue;
      labels[a] = y;
      for (std::size_t p : papers) ap.emplace_back(a, p);
      break;
    }
  }
  labels = apply_label_noise(std::move(labels), spec, rng);

  std::vector<NodeType> types{{"A", nA}, {"P", nP}, {"C", nC}};
  std::vector<Relation> rels;
  rels.push_back(make_relation("AP", 0, 1, nA, nP, ap));
  rels.push_back(make_relation("PA", 1, 0, nP, nA, reversed(ap)));
  rels.push_back(make_relation("PC", 1, 2, nP, nC, pc));
  rels.push_back(make_relation("CP", 2, 1, nC, nP, reversed(pc)));
  const std::pair<std::size_t, std::size_t> ends[] = {{0, 1}, {1, 2}};
  for (std::size_t k = 0; k < spec.distractors; ++k) {
    auto [s, d] = ends[k % 2];
    rels.push_back(make_relation("noise" + std::to_string(k), s, d, types[s].count, types[d].count,
                                 distractor_edges(types[s].count, types[d].count, spec.distractor_degree, rng)));
  }

  std::vector<std::optional<DenseMat>> features;
  features.emplace_back(constant_features(nA));
  features.emplace_back(constant_features(nP));
  features.emplace_back(class_features(venue_class, spec, rng));

  SplitSpec splits = stratified_splits(labels, spec, rng);
  HinGraph graph(std::move(types), std::move(rels), std::move(features), make_labels(labels));

  PlantedTruth truth;
  truth.depth = spec.depth;
  truth.chains = {{"AP", "PC"}};
  truth.required = {{{spec.depth - 2, spec.depth - 1}, "PC"}, {{spec.depth - 1, spec.depth}, "AP"}};
  return SynthDataset{std::move(graph), std::move(splits), std::move(truth)};
}

SynthDataset multi_chain(const SynthSpec& spec) {
  Rng rng(spec.seed, {fnv1a64("synth-multi-chain")});
  const std::size_t nA = spec.num_targets, nP = spec.num_mid, nI = spec.num_aux;

  const std::vector<int> paper_class = uniform_classes(nP, spec.num_classes, rng);
  const std::vector<int> inst_class = uniform_classes(nI, spec.num_classes, rng);
  const auto paper_pools = pools_by_class(paper_class, spec.num_classes);
  const auto inst_pools = pools_by_class(inst_class, spec.num_classes);

  Edges ap, ai;
  std::vector<int> labels(nA);
  for (std::size_t a = 0; a < nA; ++a) {
    const int latent = static_cast<int>(rng.index(spec.num_classes));
    for (;;) {
      auto papers = pick_linked(paper_pools, latent, spec.links_per_target, spec.affinity, rng);
      auto insts = pick_linked(inst_pools, latent, spec.links_per_target, spec.affinity, rng);
      std::vector<std::size_t> counts(spec.num_classes, 0);
      for (std::size_t p : papers) ++counts[static_cast<std::size_t>(paper_class[p])];
      for (std::size_t i : insts) ++counts[static_cast<std::size_t>(inst_class[i])];
      const int y = strict_majority(counts);
      if (y < 0) continue;
      labels[a] = y;
      for (std::size_t p : papers) ap.emplace_back(a, p);
      for (std::size_t i : insts) ai.emplace_back(a, i);
      break;
    }
  }
  labels = apply_label_noise(std::move(labels), spec, rng);

  std::vector<NodeType> types{{"A", nA}, {"P", nP}, {"I", nI}};
  std::vector<Relation> rels;
  rels.push_back(make_relation("AP", 0, 1, nA, nP, ap));
  rels.push_back(make_relation("PA", 1, 0, nP, nA, reversed(ap)));
  rels.push_back(make_relation("AI", 0, 2, nA, nI, ai));
  rels.push_back(make_relation("IA", 2, 0, nI, nA, reversed(ai)));
  const std::pair<std::size_t, std::size_t> ends[] = {{0, 1}, {0, 2}};
  for (std::size_t k = 0; k < spec.distractors; ++k) {
    auto [s, d] = ends[k % 2];
    rels.push_back(make_relation("noise" + std::to_string(k), s, d, types[s].count, types[d].count,
                                 distractor_edges(types[s].count, types[d].count, spec.distractor_degree, rng)));
  }

  std::vector<std::optional<DenseMat>> features;
  features.emplace_back(constant_features(nA));
  features.emplace_back(class_features(paper_class, spec, rng));
  features.emplace_back(class_features(inst_class, spec, rng));

  SplitSpec splits = stratified_splits(labels, spec, rng);
  HinGraph graph(std::move(types), std::move(rels), std::move(features), make_labels(labels));

  PlantedTruth truth;
  truth.depth = spec.depth;
  truth.chains = {{"AP"}, {"AI"}};
  truth.required = {{{spec.depth - 1, spec.depth}, "AP"}, {{spec.depth - 1, spec.depth}, "AI"}};
  return SynthDataset{std::move(graph), std::move(splits), std::move(truth)};
}

}  // namespace

std::string to_string(SynthKind k) { return k == SynthKind::SingleChain ? "single_chain" : "multi_chain"; }

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "single_chain") return SynthKind::SingleChain;
  if (s == "multi_chain") return SynthKind::MultiChain;
  throw std::invalid_argument("unknown synth kind '" + s + "' (expected single_chain or multi_chain)");
}

SynthSpec SynthSpec::single_chain() { return SynthSpec{}; }

SynthSpec SynthSpec::multi_chain() {
  SynthSpec s;
  s.kind = SynthKind::MultiChain;
  s.num_targets = 1200;
  s.num_mid = 800;
  s.num_aux = 300;
  s.links_per_target = 2;
  s.depth = 1;
  return s;
}

void SynthSpec::validate() const {
  if (num_targets == 0 || num_mid == 0 || num_aux == 0) throw std::invalid_argument("synth node counts must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("synth needs at least 2 classes");
  if (links_per_target == 0) throw std::invalid_argument("links per target must be >= 1");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) throw std::invalid_argument("label noise must be in [0, 0.5)");
  if (!(affinity >= 0.0 && affinity <= 1.0)) throw std::invalid_argument("affinity must be in [0, 1]");
  if (feature_dim < num_classes) throw std::invalid_argument("feature dimension must cover the class prototypes");
  if (distractor_degree < 0.0) throw std::invalid_argument("distractor degree must be >= 0");
  if (train_fraction <= 0.0 || val_fraction <= 0.0 || train_fraction + val_fraction >= 1.0) {
    throw std::invalid_argument("split fractions must be positive and leave a test split");
  }
  const std::size_t chain_len = kind == SynthKind::SingleChain ? 2 : 1;
  if (depth < chain_len) throw std::invalid_argument("depth is shorter than the planted chain");
  if (kind == SynthKind::SingleChain && num_aux < num_classes) {
    throw std::invalid_argument("single chain needs at least one venue per class");
  }
  const std::size_t per_class_floor = links_per_target;
  if (num_mid < num_classes * per_class_floor || num_aux < per_class_floor) {
    throw std::invalid_argument("too few linked nodes for the requested links per target");
  }
}

SynthDataset generate_hin(const SynthSpec& spec) {
  spec.validate();
  return spec.kind == SynthKind::SingleChain ? single_chain(spec) : multi_chain(spec);
}

double planted_recovery_score(const MetaMultigraph& arch, const PlantedTruth& truth) {
  if (arch.depth != truth.depth) {
    throw std::invalid_argument("architecture depth " + std::to_string(arch.depth) + " does not match planted depth " +
                                std::to_string(truth.depth));
  }
  if (truth.required.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& req : truth.required) {
    for (std::size_t e = 0; e < arch.edges.size(); ++e) {
      if (!(arch.edges[e] == req.edge)) continue;
      for (const auto& c : arch.retained[e]) {
        if (c.kind == PathKind::Relation && c.relation < arch.relation_names.size() &&
            arch.relation_names[c.relation] == req.relation) {
          ++hit;
          break;
        }
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(truth.required.size());
}

MetaMultigraph planted_architecture(const PlantedTruth& truth, const HinGraph& graph) {
  MetaMultigraph m;
  m.depth = truth.depth;
  for (const auto& r : graph.relations()) m.relation_names.push_back(r.name);
  m.edges = edge_slots(truth.depth);
  m.retained.resize(m.edges.size());
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    for (const auto& req : truth.required) {
      if (!(req.edge == m.edges[e])) continue;
      auto idx = graph.relation_index(req.relation);
      if (!idx) throw std::invalid_argument("unknown relation '" + req.relation + "' in planted truth");
      m.retained[e].push_back(CandidatePath::of_relation(*idx));
    }
    std::sort(m.retained[e].begin(), m.retained[e].end(),
              [](const CandidatePath& a, const CandidatePath& b) { return a.relation < b.relation; });
    if (m.retained[e].empty()) m.retained[e].push_back(CandidatePath::zero());
  }
  return m;
}

std::string planted_truth_to_json(const PlantedTruth& truth) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["depth"] = truth.depth;
  j["chains"] = truth.chains;
  auto req = nlohmann::ordered_json::array();
  for (const auto& r : truth.required) {
    nlohmann::ordered_json e;
    e["from"] = r.edge.from;
    e["to"] = r.edge.to;
    e["relation"] = r.relation;
    req.push_back(e);
  }
  j["required"] = req;
  return j.dump(2) + "\n";
}

PlantedTruth planted_truth_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) throw SchemaError("/format_version", "unsupported artifact version");
    PlantedTruth t;
    t.depth = j.at("depth").get<std::size_t>();
    t.chains = j.at("chains").get<std::vector<std::vector<std::string>>>();
    for (const auto& r : j.at("required")) {
      t.required.push_back({{r.at("from").get<std::size_t>(), r.at("to").get<std::size_t>()},
                            r.at("relation").get<std::string>()});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("", e.what());
  }
}

void write_synth(const SynthDataset& data, const std::filesystem::path& dir) {
  write_hin(data.graph, dir);
  write_splits(data.splits, dir / "splits.json");
  std::ofstream out(dir / "planted_truth.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "planted_truth.json").string());
  out << planted_truth_to_json(data.truth);
}

}  // namespace pmmm
