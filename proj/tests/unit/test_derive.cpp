#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmmm/derive.hpp"
#include "pmmm/rng.hpp"

using namespace pmmm;

namespace {

AlphaSnapshot snapshot(std::size_t depth, std::size_t num_relations, std::vector<std::vector<double>> alpha) {
  AlphaSnapshot s;
  s.depth = depth;
  for (std::size_t r = 0; r < num_relations; ++r) s.relation_names.push_back("r" + std::to_string(r));
  s.candidates = default_candidates(num_relations);
  s.edges = edge_slots(depth);
  s.alpha = std::move(alpha);
  return s;
}

AlphaSnapshot random_snapshot(Rng& rng, std::size_t depth, std::size_t num_relations, double scale = 1.0) {
  std::vector<std::vector<double>> a(edge_slots(depth).size(), std::vector<double>(num_relations + 2));
  for (auto& row : a) {
    for (double& v : row) v = scale * rng.normal();
  }
  return snapshot(depth, num_relations, std::move(a));
}

std::vector<double> logs(std::initializer_list<double> p) {
  std::vector<double> out;
  for (double v : p) out.push_back(std::log(v));
  return out;
}

bool subset(const std::vector<CandidatePath>& a, const std::vector<CandidatePath>& b) {
  return std::all_of(a.begin(), a.end(), [&](const CandidatePath& c) { return std::find(b.begin(), b.end(), c) != b.end(); });
}

}  // namespace

TEST_CASE("threshold interpolates between min and max") {
  const std::vector<double> s{0.5, 0.3, 0.2};
  CHECK(std::abs(threshold(s, 0.9) - 0.47) < 1e-12);
  CHECK(threshold(s, 1.0) == 0.5);
  CHECK(threshold(s, 0.0) == 0.2);
  CHECK(std::abs(threshold(s, 0.3) - 0.29) < 1e-12);
  CHECK_THROWS_AS(threshold(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST_CASE("retained set uses a closed threshold") {
  const std::vector<double> s{0.5, 0.3, 0.2};
  CHECK(retained_set(s, 0.47) == std::vector<std::size_t>{0});
  CHECK(retained_set(s, 0.29) == std::vector<std::size_t>{0, 1});
  CHECK(retained_set(s, 0.3) == std::vector<std::size_t>{0, 1});
  const std::vector<double> flat{0.25, 0.25, 0.25, 0.25};
  for (double lambda : {0.0, 0.3, 0.9, 1.0}) CHECK(retained_set(flat, threshold(flat, lambda)).size() == 4);
  const std::vector<double> close{0.41, 0.40, 0.19};
  CHECK(retained_set(close, threshold(close, 0.9)) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("derived multigraph keeps paths above the threshold") {
  // One relation: candidates r0, identity, zero.
  const AlphaSnapshot a = snapshot(1, 1, {logs({0.5, 0.3, 0.2})});
  MetaMultigraph m = derive_multigraph(a, {0.9, 0.9});
  REQUIRE(m.retained.size() == 1);
  CHECK(m.retained[0] == std::vector<CandidatePath>{CandidatePath::of_relation(0)});
  CHECK(std::abs(m.strengths[0][0] - 0.5) < 1e-12);
  CHECK(m.alpha == a.alpha);
  CHECK(m.lambda_seq == 0.9);

  m = derive_multigraph(a, {0.3, 0.3});
  CHECK(m.retained[0] == std::vector<CandidatePath>{CandidatePath::of_relation(0), CandidatePath::identity()});
  m = derive_multigraph(a, {0.0, 0.0});
  CHECK(m.retained[0].size() == 3);
}

TEST_CASE("sequential and residual edges use their own lambda") {
  Rng rng(5);
  const AlphaSnapshot a = random_snapshot(rng, 3, 2);
  const MetaMultigraph m = derive_multigraph(a, {1.0, 0.0});
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    if (m.edges[e].sequential()) {
      CHECK(m.retained[e].size() == 1);
    } else {
      CHECK(m.retained[e].size() == a.candidates.size());
    }
  }
}

TEST_CASE("single-path derivation takes the argmax") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const AlphaSnapshot a = random_snapshot(rng, 1 + rng.index(4), 1 + rng.index(4));
    const MetaMultigraph single = derive_single_path(a);
    const MetaMultigraph one = derive_multigraph(a, {1.0, 1.0});
    for (std::size_t e = 0; e < a.edges.size(); ++e) {
      CHECK(single.retained[e].size() == 1);
      const auto best = std::max_element(a.alpha[e].begin(), a.alpha[e].end()) - a.alpha[e].begin();
      CHECK(single.retained[e][0] == a.candidates[static_cast<std::size_t>(best)]);
    }
    CHECK(single.retained == one.retained);
  }

  const AlphaSnapshot tied = snapshot(1, 2, {{0.1, 0.7, 0.7, -0.2}});
  CHECK(derive_single_path(tied).retained[0] == std::vector<CandidatePath>{CandidatePath::of_relation(1)});
  CHECK(derive_multigraph(tied, {1.0, 1.0}).retained[0].size() == 2);
}

TEST_CASE("derivation properties over random logits") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const AlphaSnapshot a = random_snapshot(rng, 1 + rng.index(4), 1 + rng.index(5), 2.0);
    AlphaSnapshot shifted = a;
    for (auto& row : shifted.alpha) {
      const double c = 5.0 * rng.normal();
      for (double& v : row) v += c;
    }
    const std::vector<double> lambdas{0.0, 0.25, 0.5, 0.9, 1.0};
    std::vector<MetaMultigraph> ms;
    for (double l : lambdas) {
      ms.push_back(derive_multigraph(a, {l, l}));
      CHECK(derive_multigraph(shifted, {l, l}).retained == ms.back().retained);
      for (const auto& kept : ms.back().retained) CHECK(!kept.empty());
    }
    for (std::size_t k = 1; k < ms.size(); ++k) {
      for (std::size_t e = 0; e < a.edges.size(); ++e) CHECK(subset(ms[k].retained[e], ms[k - 1].retained[e]));
    }
  }
}

TEST_CASE("derivation rejects malformed input") {
  const AlphaSnapshot good = snapshot(1, 1, {{0.0, 0.0, 0.0}});
  CHECK_THROWS_AS(derive_multigraph(good, {1.5, 0.9}), std::invalid_argument);
  CHECK_THROWS_AS(derive_multigraph(good, {0.9, -0.1}), std::invalid_argument);
  AlphaSnapshot bad = good;
  bad.alpha[0].push_back(0.0);
  CHECK_THROWS_AS(derive_multigraph(bad, {}), std::invalid_argument);
  bad = good;
  bad.alpha.push_back({0.0, 0.0, 0.0});
  CHECK_THROWS_AS(derive_single_path(bad), std::invalid_argument);
  bad = good;
  bad.alpha[0][1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(derive_multigraph(bad, {}), std::invalid_argument);
}
