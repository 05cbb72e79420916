#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pmmm/net.hpp"

namespace pmmm {

class SuperNet;

// Searched architecture logits, detached from any graph. Candidate relation
// indices refer to `relation_names`.
struct AlphaSnapshot {
  std::size_t depth = 0;
  std::vector<std::string> relation_names;
  std::vector<CandidatePath> candidates;
  std::vector<EdgeSlot> edges;
  std::vector<std::vector<double>> alpha;  // [edge][candidate]

  static AlphaSnapshot of(const SuperNet& net);
  friend bool operator==(const AlphaSnapshot&, const AlphaSnapshot&) = default;
};

struct DeriveConfig {
  double lambda_seq = 0.9;  // edges (i, i+1)
  double lambda_res = 0.9;  // edges (i, j > i+1)
  void validate() const;
};

// Compact derived architecture: the retained paths of every multi-edge.
struct MetaMultigraph {
  std::size_t depth = 0;
  std::vector<std::string> relation_names;
  std::vector<EdgeSlot> edges;
  std::vector<std::vector<CandidatePath>> retained;  // per edge, candidate order
  std::vector<std::vector<double>> strengths;        // provenance: per-edge softmax
  std::vector<std::vector<double>> alpha;            // provenance: searched logits
  double lambda_seq = 1.0;
  double lambda_res = 1.0;

  friend bool operator==(const MetaMultigraph&, const MetaMultigraph&) = default;
};

// lambda * max + (1 - lambda) * min, clamped into [min, max]. Throws on empty input.
double threshold(std::span<const double> strengths, double lambda);

// Indices r with strengths[r] >= tau.
std::vector<std::size_t> retained_set(std::span<const double> strengths, double tau);

MetaMultigraph derive_multigraph(const AlphaSnapshot& alpha, const DeriveConfig& config);
// Argmax strength per edge, lowest candidate index on ties.
MetaMultigraph derive_single_path(const AlphaSnapshot& alpha);

}  // namespace pmmm
