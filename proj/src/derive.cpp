#include "pmmm/derive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmmm/supernet.hpp"

namespace pmmm {

AlphaSnapshot AlphaSnapshot::of(const SuperNet& net) {
  AlphaSnapshot s;
  s.depth = net.depth();
  s.relation_names = net.relation_names();
  s.candidates = net.candidates();
  s.edges = net.edges();
  for (const auto& a : net.alpha()) s.alpha.emplace_back(a.data().begin(), a.data().end());
  return s;
}

void DeriveConfig::validate() const {
  if (!(lambda_seq >= 0.0 && lambda_seq <= 1.0) || !(lambda_res >= 0.0 && lambda_res <= 1.0)) {
    throw std::invalid_argument("lambda values must lie in [0, 1]");
  }
}

double threshold(std::span<const double> strengths, double lambda) {
  if (strengths.empty()) throw std::invalid_argument("threshold: empty strength vector");
  const auto [lo, hi] = std::minmax_element(strengths.begin(), strengths.end());
  const double tau = lambda * *hi + (1.0 - lambda) * *lo;
  return std::clamp(tau, *lo, *hi);
}

std::vector<std::size_t> retained_set(std::span<const double> strengths, double tau) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < strengths.size(); ++r) {
    if (strengths[r] >= tau) out.push_back(r);
  }
  return out;
}

namespace {

void check_snapshot(const AlphaSnapshot& a) {
  if (a.alpha.size() != a.edges.size()) throw std::invalid_argument("alpha snapshot: edge count mismatch");
  for (const auto& row : a.alpha) {
    if (row.size() != a.candidates.size()) throw std::invalid_argument("alpha snapshot: candidate count mismatch");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("alpha snapshot: non-finite logit");
    }
  }
}

MetaMultigraph skeleton(const AlphaSnapshot& a) {
  MetaMultigraph m;
  m.depth = a.depth;
  m.relation_names = a.relation_names;
  m.edges = a.edges;
  m.alpha = a.alpha;
  for (const auto& row : a.alpha) m.strengths.push_back(path_strengths(row));
  return m;
}

}  // namespace

MetaMultigraph derive_multigraph(const AlphaSnapshot& alpha, const DeriveConfig& config) {
  config.validate();
  check_snapshot(alpha);
  MetaMultigraph m = skeleton(alpha);
  m.lambda_seq = config.lambda_seq;
  m.lambda_res = config.lambda_res;
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const double lambda = m.edges[e].sequential() ? config.lambda_seq : config.lambda_res;
    const double tau = threshold(m.strengths[e], lambda);
    std::vector<CandidatePath> kept;
    for (std::size_t r : retained_set(m.strengths[e], tau)) kept.push_back(alpha.candidates[r]);
    m.retained.push_back(std::move(kept));
  }
  return m;
}

MetaMultigraph derive_single_path(const AlphaSnapshot& alpha) {
  check_snapshot(alpha);
  MetaMultigraph m = skeleton(alpha);
  for (const auto& s : m.strengths) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < s.size(); ++r) {
      if (s[r] > s[best]) best = r;
    }
    m.retained.push_back({alpha.candidates[best]});
  }
  return m;
}

}  // namespace pmmm
