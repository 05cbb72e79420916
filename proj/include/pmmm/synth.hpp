#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmmm/derive.hpp"
#include "pmmm/graph.hpp"

namespace pmmm {

enum class SynthKind {
  // Types A (target), P, C. An author's class is the majority venue class
  // over its A->P->C walks; only C carries class features.
  SingleChain,
  // Types A (target), P, I. An author's class is the majority over the
  // combined classes of its papers and institutions; P and I carry class
  // features, so both A<-P and A<-I messages are needed on one edge.
  MultiChain,
};
std::string to_string(SynthKind k);
SynthKind synth_kind_from_string(const std::string& s);

struct SynthSpec {
  SynthKind kind = SynthKind::SingleChain;
  std::size_t num_targets = 1200;   // A
  std::size_t num_mid = 1600;       // P
  std::size_t num_aux = 40;         // C (single chain) or I (multi chain)
  std::size_t num_classes = 3;
  std::size_t links_per_target = 3; // per chain
  double affinity = 0.7;            // chance a link follows the author's latent class
  double label_noise = 0.05;        // fraction of labels flipped to another class
  std::size_t distractors = 2;      // Erdos-Renyi relations named noise0, noise1, ...
  double distractor_degree = 3.0;   // expected out-degree
  // Class-carrying types get feature_signal * onehot(class) + N(0, feature_noise^2)
  // over feature_dim columns; the others a single all-zero feature.
  std::size_t feature_dim = 3;
  double feature_signal = 1.0;
  double feature_noise = 0.0;
  std::size_t depth = 2;            // depth the planted chain is laid out for
  double train_fraction = 0.3;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  static SynthSpec single_chain();
  static SynthSpec multi_chain();
  void validate() const;
};

struct RequiredPath {
  EdgeSlot edge;
  std::string relation;
  friend bool operator==(const RequiredPath&, const RequiredPath&) = default;
};

struct PlantedTruth {
  std::size_t depth = 0;
  // Relation names in walk order from the target type; the last relation
  // sits on the earliest edge.
  std::vector<std::vector<std::string>> chains;
  std::vector<RequiredPath> required;

  friend bool operator==(const PlantedTruth&, const PlantedTruth&) = default;
};

struct SynthDataset {
  HinGraph graph;
  SplitSpec splits;
  PlantedTruth truth;
};

SynthDataset generate_hin(const SynthSpec& spec);

// Fraction of required (edge, relation) pairs retained by `arch`.
double planted_recovery_score(const MetaMultigraph& arch, const PlantedTruth& truth);

// Architecture retaining exactly the planted paths (everything else zero).
MetaMultigraph planted_architecture(const PlantedTruth& truth, const HinGraph& graph);

std::string planted_truth_to_json(const PlantedTruth& truth);
PlantedTruth planted_truth_from_json(const std::string& text);

// Graph files, splits.json and planted_truth.json.
void write_synth(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace pmmm
