#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "pmmm/error.hpp"
#include "pmmm/synth.hpp"
#include "pmmm/targetnet.hpp"

using namespace pmmm;
namespace fs = std::filesystem;

namespace {

// Class of every node of `type`, read back from its one-hot features.
std::vector<int> feature_classes(const HinGraph& g, std::size_t type) {
  const DenseMat* x = g.features(type);
  REQUIRE(x != nullptr);
  std::vector<int> out;
  for (std::size_t r = 0; r < x->rows(); ++r) {
    const auto row = x->row(r);
    out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

const SparseMat& adjacency(const HinGraph& g, const std::string& name) {
  return g.relations()[*g.relation_index(name)].adjacency;
}

// Brute-force walk oracle: for every target node, count the classes of every
// endpoint reached along each chain, then take the strict majority (-1 on ties).
std::vector<int> walk_oracle(const HinGraph& g, const std::vector<std::vector<std::string>>& chains) {
  const std::size_t k = g.labels()->num_classes();
  const std::size_t n = g.types()[0].count;
  std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(k, 0));
  for (const auto& chain : chains) {
    const std::size_t end_type = g.relations()[*g.relation_index(chain.back())].dst_type;
    const std::vector<int> cls = feature_classes(g, end_type);
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::size_t> frontier{a};
      for (const auto& rel : chain) {
        std::vector<std::size_t> next;
        for (std::size_t v : frontier) {
          for (std::size_t w : adjacency(g, rel).row_cols(v)) next.push_back(w);
        }
        frontier = std::move(next);
      }
      for (std::size_t v : frontier) ++counts[a][static_cast<std::size_t>(cls[v])];
    }
  }
  std::vector<int> out;
  for (const auto& c : counts) {
    const auto it = std::max_element(c.begin(), c.end());
    out.push_back(std::count(c.begin(), c.end(), *it) == 1 ? static_cast<int>(it - c.begin()) : -1);
  }
  return out;
}

double oracle_agreement(const SynthDataset& d) {
  const auto oracle = walk_oracle(d.graph, d.truth.chains);
  std::size_t agree = 0;
  for (const auto& [node, label] : d.graph.labels()->entries) agree += oracle[node] == label ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(oracle.size());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("pmmm_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

MetaMultigraph arch_with(const HinGraph& g, std::size_t depth, std::vector<std::vector<std::string>> per_edge) {
  MetaMultigraph m;
  m.depth = depth;
  for (const auto& r : g.relations()) m.relation_names.push_back(r.name);
  m.edges = edge_slots(depth);
  for (const auto& names : per_edge) {
    std::vector<CandidatePath> kept;
    for (const auto& n : names) kept.push_back(CandidatePath::of_relation(*g.relation_index(n)));
    if (kept.empty()) kept.push_back(CandidatePath::zero());
    m.retained.push_back(kept);
  }
  return m;
}

}  // namespace

TEST_CASE("noiseless labels match the walk oracle exactly") {
  for (auto spec : {SynthSpec::single_chain(), SynthSpec::multi_chain()}) {
    spec.label_noise = 0.0;
    const SynthDataset d = generate_hin(spec);
    CHECK(oracle_agreement(d) == 1.0);
  }
}

TEST_CASE("label noise flips the expected fraction") {
  // 99.9% binomial band for n = 1200: +-3.29 sd, sd = sqrt(p (1-p) / n).
  for (double noise : {0.05, 0.1}) {
    SynthSpec spec = SynthSpec::single_chain();
    spec.label_noise = noise;
    const SynthDataset d = generate_hin(spec);
    const double sd = std::sqrt(noise * (1.0 - noise) / static_cast<double>(spec.num_targets));
    CHECK(std::abs(oracle_agreement(d) - (1.0 - noise)) <= 3.29 * sd);
  }
}

TEST_CASE("synthetic graphs are deterministic") {
  SynthSpec spec = SynthSpec::single_chain();
  spec.num_targets = 200;
  spec.num_mid = 300;
  const fs::path a = scratch("synth_a"), b = scratch("synth_b"), c = scratch("synth_c");
  write_synth(generate_hin(spec), a);
  write_synth(generate_hin(spec), b);
  spec.seed = 1;
  write_synth(generate_hin(spec), c);
  std::size_t files = 0;
  bool any_diff = false;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    CHECK(slurp(a / name) == slurp(b / name));
    any_diff = any_diff || slurp(a / name) != slurp(c / name);
    ++files;
  }
  CHECK(files >= 9);  // schema, 6 edge files, features, labels, splits, truth
  CHECK(fs::exists(a / "planted_truth.json"));
  CHECK(any_diff);
}

TEST_CASE("synthetic layout") {
  const SynthDataset s = generate_hin(SynthSpec::single_chain());
  CHECK(s.graph.types().size() == 3);
  CHECK(s.graph.relations().size() == 6);
  CHECK(s.graph.relation_index("noise0").has_value());
  CHECK(s.graph.relation_index("noise1").has_value());
  CHECK(s.graph.total_nodes() == 1200 + 1600 + 40);
  CHECK(s.truth.depth == 2);
  CHECK(s.truth.required.size() == 2);
  CHECK(s.splits.train_nodes.size() + s.splits.val_nodes.size() + s.splits.test_nodes.size() == 1200);
  CHECK_NOTHROW(s.splits.validate_against(s.graph));

  // Stratified: every class is present in every split in its global proportion (+-2 nodes).
  const auto& labels = *s.graph.labels();
  for (int cls : labels.class_universe()) {
    std::size_t total = 0, train = 0;
    for (const auto& [n, y] : labels.entries) total += y == cls ? 1 : 0;
    for (std::size_t n : s.splits.train_nodes) train += *labels.label_of(n) == cls ? 1 : 0;
    CHECK(std::abs(static_cast<double>(train) - 0.3 * static_cast<double>(total)) <= 2.0);
  }

  const SynthDataset m = generate_hin(SynthSpec::multi_chain());
  CHECK(m.truth.depth == 1);
  CHECK(m.truth.required.size() == 2);
  CHECK(m.truth.required[0].edge == m.truth.required[1].edge);
}

TEST_CASE("synth spec validation") {
  auto broken = [](void (*f)(SynthSpec&)) {
    SynthSpec s;
    f(s);
    return s;
  };
  CHECK_THROWS_AS(generate_hin(broken([](SynthSpec& s) { s.label_noise = 0.5; })), std::invalid_argument);
  CHECK_THROWS_AS(generate_hin(broken([](SynthSpec& s) { s.depth = 1; })), std::invalid_argument);
  CHECK_THROWS_AS(generate_hin(broken([](SynthSpec& s) { s.num_classes = 1; })), std::invalid_argument);
  CHECK_THROWS_AS(generate_hin(broken([](SynthSpec& s) { s.feature_dim = 2; })), std::invalid_argument);
  CHECK_THROWS_AS(generate_hin(broken([](SynthSpec& s) { s.train_fraction = 0.9; })), std::invalid_argument);
  CHECK_THROWS_AS(synth_kind_from_string("triple"), std::invalid_argument);
  CHECK(synth_kind_from_string(to_string(SynthKind::MultiChain)) == SynthKind::MultiChain);
}

TEST_CASE("planted recovery score") {
  const SynthDataset s = generate_hin(SynthSpec::single_chain());
  CHECK(planted_recovery_score(planted_architecture(s.truth, s.graph), s.truth) == 1.0);
  CHECK(planted_recovery_score(arch_with(s.graph, 2, {{}, {}, {}}), s.truth) == 0.0);
  CHECK(planted_recovery_score(arch_with(s.graph, 2, {{"PC", "noise1"}, {}, {"AP"}}), s.truth) == 1.0);
  CHECK(planted_recovery_score(arch_with(s.graph, 2, {{"PC"}, {}, {"PA"}}), s.truth) == 0.5);
  CHECK_THROWS_AS(planted_recovery_score(arch_with(s.graph, 1, {{"AP"}}), s.truth), std::invalid_argument);

  const SynthDataset m = generate_hin(SynthSpec::multi_chain());
  CHECK(planted_recovery_score(arch_with(m.graph, 1, {{"AP"}}), m.truth) == 0.5);
  CHECK(planted_recovery_score(arch_with(m.graph, 1, {{"AP", "AI"}}), m.truth) == 1.0);
}

TEST_CASE("planted truth json round trip") {
  const SynthDataset s = generate_hin(SynthSpec::single_chain());
  const std::string text = planted_truth_to_json(s.truth);
  CHECK(planted_truth_from_json(text) == s.truth);
  CHECK_THROWS_AS(planted_truth_from_json("{\"format_version\": 2}"), SchemaError);
  CHECK_THROWS_AS(planted_truth_from_json("not json"), SchemaError);
  CHECK_THROWS_AS(planted_truth_from_json("{\"format_version\": 1, \"depth\": 2}"), SchemaError);
}

TEST_CASE("both planted chains beat either chain alone") {
  SynthSpec spec = SynthSpec::multi_chain();
  spec.label_noise = 0.0;
  const SynthDataset m = generate_hin(spec);
  TargetConfig cfg;
  const double both = repeat_eval(arch_with(m.graph, 1, {{"AP", "AI"}}), m.graph, m.splits, 1, cfg).micro_f1.mean;
  const double papers = repeat_eval(arch_with(m.graph, 1, {{"AP"}}), m.graph, m.splits, 1, cfg).micro_f1.mean;
  const double insts = repeat_eval(arch_with(m.graph, 1, {{"AI"}}), m.graph, m.splits, 1, cfg).micro_f1.mean;
  CHECK(both > papers);
  CHECK(both > insts);
}
