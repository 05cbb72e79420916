#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pmmm/matrix.hpp"

namespace pmmm {

struct NodeType {
  std::string name;
  std::size_t count = 0;
};

// Directed relation between two node types. Adjacency rows index source-type
// nodes, columns index destination-type nodes.
struct Relation {
  std::string name;
  std::size_t src_type = 0;
  std::size_t dst_type = 0;
  SparseMat adjacency;
};

struct NodeLabels {
  std::size_t target_type = 0;
  // node index (within target type) -> class id, sorted by node index.
  std::vector<std::pair<std::size_t, int>> entries;

  std::optional<int> label_of(std::size_t node) const;
  // Sorted distinct class ids appearing in `entries`.
  std::vector<int> class_universe() const;
  std::size_t num_classes() const;  // max class id + 1
};

// Heterogeneous information network. Immutable once constructed; the
// constructor validates every invariant and throws std::invalid_argument.
class HinGraph {
 public:
  HinGraph(std::vector<NodeType> types, std::vector<Relation> relations,
           std::vector<std::optional<DenseMat>> features, std::optional<NodeLabels> labels);

  const std::vector<NodeType>& types() const noexcept { return types_; }
  const std::vector<Relation>& relations() const noexcept { return relations_; }
  const std::optional<NodeLabels>& labels() const noexcept { return labels_; }

  std::optional<std::size_t> type_index(const std::string& name) const;
  std::optional<std::size_t> relation_index(const std::string& name) const;

  // nullptr when the type uses one-hot identity features.
  const DenseMat* features(std::size_t type) const;
  std::size_t feature_dim(std::size_t type) const;

  std::size_t total_nodes() const noexcept { return total_nodes_; }
  // First row of `type` in the disjoint union of all typed nodes.
  std::size_t type_offset(std::size_t type) const { return offsets_.at(type); }

 private:
  std::vector<NodeType> types_;
  std::vector<Relation> relations_;
  std::vector<std::optional<DenseMat>> features_;
  std::optional<NodeLabels> labels_;
  std::vector<std::size_t> offsets_;
  std::size_t total_nodes_ = 0;
};

// Loads schema.tsv, edges_<relation>.tsv, optional features_<type>.tsv and
// labels.tsv. Throws LoadError naming file and line.
HinGraph load_hin(const std::filesystem::path& dir);
void write_hin(const HinGraph& graph, const std::filesystem::path& dir);

// Row-normalized adjacency of `relation`; zero rows stay zero.
SparseMat normalized_adjacency(const HinGraph& graph, std::size_t relation);

enum class Task { Classification, Recommendation };
std::string to_string(Task task);
Task task_from_string(const std::string& s);

struct LabeledPair {
  std::size_t src = 0;
  std::size_t dst = 0;
  int label = 0;
  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct SplitSpec {
  Task task = Task::Classification;
  std::vector<std::size_t> train_nodes, val_nodes, test_nodes;
  // Recommendation only: relation whose (src, dst) pairs are scored.
  std::string relation;
  std::vector<LabeledPair> train_pairs, val_pairs, test_pairs;

  // Structural checks (non-empty, disjoint, labels in {0,1}); throws std::invalid_argument.
  void validate() const;
  // Checks against a graph: index bounds, labels present, pairs absent from
  // the scored relation (and from `reverse_relation` if given).
  void validate_against(const HinGraph& graph, const std::string& reverse_relation = {}) const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

std::string splits_to_json(const SplitSpec& splits);
SplitSpec splits_from_json(const std::string& text);
void write_splits(const SplitSpec& splits, const std::filesystem::path& file);
SplitSpec read_splits(const std::filesystem::path& file);

struct Rating {
  std::size_t src = 0;
  std::size_t dst = 0;
  int value = 0;
};

struct RecommendationData {
  // Positive pairs left in the graph after the split pairs are removed.
  std::vector<std::pair<std::size_t, std::size_t>> graph_edges;
  SplitSpec splits;
};

// Ratings > 3: half sampled as labeled positives, the rest stay as graph
// edges. Ratings < 4 form the negative pool. Positives split 3:1:1 and each
// split gets the same number of negatives.
RecommendationData build_recommendation_splits(const std::vector<Rating>& ratings, const std::string& relation,
                                               std::uint64_t seed);

std::vector<Rating> load_ratings(const std::filesystem::path& file);

}  // namespace pmmm
