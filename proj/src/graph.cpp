#include "pmmm/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pmmm/error.hpp"
#include "pmmm/format.hpp"
#include "pmmm/rng.hpp"

namespace pmmm {

namespace fs = std::filesystem;

std::optional<int> NodeLabels::label_of(std::size_t node) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), node,
                             [](const auto& e, std::size_t n) { return e.first < n; });
  if (it == entries.end() || it->first != node) return std::nullopt;
  return it->second;
}

std::vector<int> NodeLabels::class_universe() const {
  std::set<int> s;
  for (const auto& [n, c] : entries) s.insert(c);
  return {s.begin(), s.end()};
}

std::size_t NodeLabels::num_classes() const {
  int mx = -1;
  for (const auto& [n, c] : entries) mx = std::max(mx, c);
  return static_cast<std::size_t>(mx + 1);
}

HinGraph::HinGraph(std::vector<NodeType> types, std::vector<Relation> relations,
                   std::vector<std::optional<DenseMat>> features, std::optional<NodeLabels> labels)
    : types_(std::move(types)),
      relations_(std::move(relations)),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (types_.empty()) throw std::invalid_argument("graph has no node types");
  if (types_.size() < 2 && relations_.size() < 2) {
    throw std::invalid_argument("schema is not heterogeneous: need more than one node type or relation");
  }
  if (features_.size() != types_.size()) features_.resize(types_.size());
  std::set<std::string> names;
  for (const auto& t : types_) {
    if (!names.insert(t.name).second) throw std::invalid_argument("duplicate node type '" + t.name + "'");
    if (t.count == 0) throw std::invalid_argument("node type '" + t.name + "' has no nodes");
  }
  names.clear();
  for (const auto& r : relations_) {
    if (!names.insert(r.name).second) throw std::invalid_argument("duplicate relation '" + r.name + "'");
    if (r.src_type >= types_.size() || r.dst_type >= types_.size()) {
      throw std::invalid_argument("relation '" + r.name + "' references an unknown node type");
    }
    if (r.adjacency.rows() != types_[r.src_type].count || r.adjacency.cols() != types_[r.dst_type].count) {
      throw std::invalid_argument("relation '" + r.name + "' adjacency shape does not match its endpoint types");
    }
  }
  for (std::size_t t = 0; t < types_.size(); ++t) {
    if (features_[t] && features_[t]->rows() != types_[t].count) {
      throw std::invalid_argument("features of type '" + types_[t].name + "' have " +
                                  std::to_string(features_[t]->rows()) + " rows, expected " +
                                  std::to_string(types_[t].count));
    }
    if (features_[t] && (features_[t]->cols() == 0 || !features_[t]->all_finite())) {
      throw std::invalid_argument("features of type '" + types_[t].name + "' are empty or non-finite");
    }
  }
  if (labels_) {
    if (labels_->target_type >= types_.size()) throw std::invalid_argument("labels reference unknown type");
    std::sort(labels_->entries.begin(), labels_->entries.end());
    for (std::size_t k = 0; k < labels_->entries.size(); ++k) {
      const auto& [n, c] = labels_->entries[k];
      if (n >= types_[labels_->target_type].count) {
        throw std::invalid_argument("label for node " + std::to_string(n) + " out of range");
      }
      if (c < 0) throw std::invalid_argument("negative class id");
      if (k > 0 && labels_->entries[k - 1].first == n) {
        throw std::invalid_argument("duplicate label for node " + std::to_string(n));
      }
    }
  }
  offsets_.resize(types_.size());
  for (std::size_t t = 0; t < types_.size(); ++t) {
    offsets_[t] = total_nodes_;
    total_nodes_ += types_[t].count;
  }
}

std::optional<std::size_t> HinGraph::type_index(const std::string& name) const {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (types_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> HinGraph::relation_index(const std::string& name) const {
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].name == name) return i;
  }
  return std::nullopt;
}

const DenseMat* HinGraph::features(std::size_t type) const {
  const auto& f = features_.at(type);
  return f ? &*f : nullptr;
}

std::size_t HinGraph::feature_dim(std::size_t type) const {
  const auto& f = features_.at(type);
  return f ? f->cols() : types_.at(type).count;
}

SparseMat normalized_adjacency(const HinGraph& graph, std::size_t relation) {
  if (relation >= graph.relations().size()) {
    throw std::out_of_range("normalized_adjacency: unknown relation id " + std::to_string(relation));
  }
  return graph.relations()[relation].adjacency.row_normalized();
}

// ---------------------------------------------------------------------------
// TSV I/O

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

struct LineReader {
  explicit LineReader(const fs::path& p) : path(p), in(p) {
    if (!in) throw LoadError(path.string(), 0, "cannot open file");
  }
  bool next(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const { throw LoadError(path.string(), lineno, what); }

  fs::path path;
  std::ifstream in;
  std::size_t lineno = 0;
};

}  // namespace

HinGraph load_hin(const fs::path& dir) {
  const fs::path schema_path = dir / "schema.tsv";
  if (!fs::exists(schema_path)) throw LoadError(schema_path.string(), 0, "schema file absent");

  std::vector<NodeType> types;
  struct SchemaRow {
    std::string name;
    std::size_t src, dst;
  };
  std::vector<SchemaRow> rows;
  {
    LineReader r(schema_path);
    std::string line;
    if (!r.next(line)) r.fail("empty schema file");
    auto header = split_tabs(line);
    const std::vector<std::string> expected{"relation", "src_type", "dst_type", "src_count", "dst_count"};
    if (header != expected) r.fail("bad header, expected 'relation\\tsrc_type\\tdst_type\\tsrc_count\\tdst_count'");
    auto intern = [&](const std::string& name, std::size_t count) -> std::size_t {
      for (std::size_t i = 0; i < types.size(); ++i) {
        if (types[i].name == name) {
          if (types[i].count != count) r.fail("inconsistent node count for type '" + name + "'");
          return i;
        }
      }
      types.push_back({name, count});
      return types.size() - 1;
    };
    while (r.next(line)) {
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 5) r.fail("expected 5 tab-separated columns, got " + std::to_string(f.size()));
      std::size_t sc = 0, dc = 0;
      if (!parse_number(f[3], sc) || !parse_number(f[4], dc)) r.fail("non-integer node count");
      if (sc == 0 || dc == 0) r.fail("node counts must be positive");
      if (f[0].empty() || f[0].find_first_of("/\\") != std::string::npos) r.fail("invalid relation name");
      for (const auto& row : rows) {
        if (row.name == f[0]) r.fail("duplicate relation '" + f[0] + "'");
      }
      const std::size_t s = intern(f[1], sc);
      const std::size_t d = intern(f[2], dc);
      rows.push_back({f[0], s, d});
    }
    if (rows.empty()) r.fail("schema lists no relations");
  }

  std::vector<Relation> relations;
  for (const auto& row : rows) {
    const fs::path p = dir / ("edges_" + row.name + ".tsv");
    if (!fs::exists(p)) throw LoadError(p.string(), 0, "edge file for relation '" + row.name + "' absent");
    LineReader r(p);
    const std::size_t nsrc = types[row.src].count;
    const std::size_t ndst = types[row.dst].count;
    std::vector<Triplet> trip;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::string line;
    while (r.next(line)) {
      if (line.empty()) continue;
      if (r.lineno == 1 && line == "src\tdst") continue;
      auto f = split_tabs(line);
      if (f.size() != 2) r.fail("expected 2 tab-separated columns, got " + std::to_string(f.size()));
      std::size_t s = 0, d = 0;
      if (!parse_number(f[0], s) || !parse_number(f[1], d)) r.fail("non-integer node index in '" + line + "'");
      if (s >= nsrc || d >= ndst) {
        r.fail("edge (" + f[0] + "," + f[1] + ") out of range for " + std::to_string(nsrc) + "x" +
               std::to_string(ndst));
      }
      if (!seen.insert({s, d}).second) r.fail("duplicate edge (" + f[0] + "," + f[1] + ")");
      trip.push_back({s, d, 1.0});
    }
    relations.push_back({row.name, row.src, row.dst, SparseMat::from_triplets(nsrc, ndst, std::move(trip))});
  }

  std::vector<std::optional<DenseMat>> features(types.size());
  for (std::size_t t = 0; t < types.size(); ++t) {
    const fs::path p = dir / ("features_" + types[t].name + ".tsv");
    if (!fs::exists(p)) continue;
    LineReader r(p);
    std::vector<double> data;
    std::size_t cols = 0, nrows = 0;
    std::string line;
    while (r.next(line)) {
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (cols == 0) cols = f.size();
      if (f.size() != cols) r.fail("row has " + std::to_string(f.size()) + " columns, expected " + std::to_string(cols));
      for (const auto& s : f) {
        double v = 0.0;
        if (!parse_number(s, v) || !std::isfinite(v)) r.fail("invalid feature value '" + s + "'");
        data.push_back(v);
      }
      ++nrows;
    }
    if (nrows != types[t].count) {
      throw LoadError(p.string(), 0,
                      "has " + std::to_string(nrows) + " rows, expected " + std::to_string(types[t].count));
    }
    features[t] = DenseMat(nrows, cols, std::move(data));
  }

  std::optional<NodeLabels> labels;
  const fs::path lp = dir / "labels.tsv";
  if (fs::exists(lp)) {
    LineReader r(lp);
    NodeLabels nl;
    std::set<std::size_t> seen;
    std::string line;
    while (r.next(line)) {
      if (line.empty()) continue;
      if (line.rfind("# target_type=", 0) == 0) {
        auto name = line.substr(14);
        auto idx = [&]() -> std::optional<std::size_t> {
          for (std::size_t i = 0; i < types.size(); ++i) {
            if (types[i].name == name) return i;
          }
          return std::nullopt;
        }();
        if (!idx) r.fail("unknown target type '" + name + "'");
        nl.target_type = *idx;
        continue;
      }
      if (line == "node_index\tclass_id") continue;
      auto f = split_tabs(line);
      if (f.size() != 2) r.fail("expected 2 tab-separated columns, got " + std::to_string(f.size()));
      std::size_t n = 0;
      int c = 0;
      if (!parse_number(f[0], n) || !parse_number(f[1], c) || c < 0) r.fail("invalid label row '" + line + "'");
      if (!seen.insert(n).second) r.fail("duplicate label for node " + f[0]);
      nl.entries.emplace_back(n, c);
    }
    for (const auto& [n, c] : nl.entries) {
      if (n >= types[nl.target_type].count) {
        throw LoadError(lp.string(), 0, "label for node " + std::to_string(n) + " out of range");
      }
    }
    labels = std::move(nl);
  }

  try {
    return HinGraph(std::move(types), std::move(relations), std::move(features), std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw LoadError(schema_path.string(), 0, e.what());
  }
}

void write_hin(const HinGraph& graph, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& types = graph.types();
  {
    std::ofstream out(dir / "schema.tsv", std::ios::binary);
    out << "relation\tsrc_type\tdst_type\tsrc_count\tdst_count\n";
    for (const auto& r : graph.relations()) {
      out << r.name << '\t' << types[r.src_type].name << '\t' << types[r.dst_type].name << '\t'
          << types[r.src_type].count << '\t' << types[r.dst_type].count << '\n';
    }
  }
  for (const auto& r : graph.relations()) {
    std::ofstream out(dir / ("edges_" + r.name + ".tsv"), std::ios::binary);
    out << "src\tdst\n";
    for (const auto& t : r.adjacency.triplets()) out << t.row << '\t' << t.col << '\n';
  }
  for (std::size_t t = 0; t < types.size(); ++t) {
    const DenseMat* f = graph.features(t);
    if (!f) continue;
    std::ofstream out(dir / ("features_" + types[t].name + ".tsv"), std::ios::binary);
    for (std::size_t i = 0; i < f->rows(); ++i) {
      for (std::size_t j = 0; j < f->cols(); ++j) {
        if (j) out << '\t';
        out << format_double((*f)(i, j));
      }
      out << '\n';
    }
  }
  if (graph.labels()) {
    std::ofstream out(dir / "labels.tsv", std::ios::binary);
    out << "# target_type=" << types[graph.labels()->target_type].name << '\n';
    out << "node_index\tclass_id\n";
    for (const auto& [n, c] : graph.labels()->entries) out << n << '\t' << c << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits

std::string to_string(Task task) {
  return task == Task::Classification ? "classification" : "recommendation";
}

Task task_from_string(const std::string& s) {
  if (s == "classification") return Task::Classification;
  if (s == "recommendation") return Task::Recommendation;
  throw std::invalid_argument("unknown task '" + s + "'");
}

void SplitSpec::validate() const {
  if (task == Task::Classification) {
    if (train_nodes.empty() || val_nodes.empty() || test_nodes.empty()) {
      throw std::invalid_argument("every classification split must be non-empty");
    }
    std::set<std::size_t> all;
    for (const auto* v : {&train_nodes, &val_nodes, &test_nodes}) {
      for (std::size_t n : *v) {
        if (!all.insert(n).second) throw std::invalid_argument("node " + std::to_string(n) + " appears in two splits");
      }
    }
  } else {
    if (train_pairs.empty() || val_pairs.empty() || test_pairs.empty()) {
      throw std::invalid_argument("every recommendation split must be non-empty");
    }
    if (relation.empty()) throw std::invalid_argument("recommendation splits need a relation name");
    std::set<std::pair<std::size_t, std::size_t>> all;
    for (const auto* v : {&train_pairs, &val_pairs, &test_pairs}) {
      bool pos = false, neg = false;
      for (const auto& p : *v) {
        if (p.label != 0 && p.label != 1) throw std::invalid_argument("pair labels must be 0 or 1");
        pos = pos || p.label == 1;
        neg = neg || p.label == 0;
        if (!all.insert({p.src, p.dst}).second) {
          throw std::invalid_argument("pair (" + std::to_string(p.src) + "," + std::to_string(p.dst) +
                                      ") appears twice");
        }
      }
      if (!pos || !neg) throw std::invalid_argument("each recommendation split needs both labels");
    }
  }
}

void SplitSpec::validate_against(const HinGraph& graph, const std::string& reverse_relation) const {
  validate();
  if (task == Task::Classification) {
    if (!graph.labels()) throw std::invalid_argument("classification splits on a graph without labels");
    const auto& labels = *graph.labels();
    for (const auto* v : {&train_nodes, &val_nodes, &test_nodes}) {
      for (std::size_t n : *v) {
        if (!labels.label_of(n)) throw std::invalid_argument("split node " + std::to_string(n) + " has no label");
      }
    }
    return;
  }
  auto rid = graph.relation_index(relation);
  if (!rid) throw std::invalid_argument("unknown relation '" + relation + "'");
  const Relation& rel = graph.relations()[*rid];
  const Relation* rev = nullptr;
  if (!reverse_relation.empty()) {
    auto rv = graph.relation_index(reverse_relation);
    if (!rv) throw std::invalid_argument("unknown relation '" + reverse_relation + "'");
    rev = &graph.relations()[*rv];
  }
  for (const auto* v : {&train_pairs, &val_pairs, &test_pairs}) {
    for (const auto& p : *v) {
      if (p.src >= rel.adjacency.rows() || p.dst >= rel.adjacency.cols()) {
        throw std::invalid_argument("pair out of range for relation '" + relation + "'");
      }
      if (rel.adjacency.contains(p.src, p.dst) || (rev && rev->adjacency.contains(p.dst, p.src))) {
        throw std::invalid_argument("split pair (" + std::to_string(p.src) + "," + std::to_string(p.dst) +
                                    ") is still an edge of the graph");
      }
    }
  }
}

std::string splits_to_json(const SplitSpec& s) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["task"] = to_string(s.task);
  if (s.task == Task::Classification) {
    j["train"] = s.train_nodes;
    j["val"] = s.val_nodes;
    j["test"] = s.test_nodes;
  } else {
    j["relation"] = s.relation;
    auto pairs = [](const std::vector<LabeledPair>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& p : v) a.push_back({p.src, p.dst, p.label});
      return a;
    };
    j["train"] = pairs(s.train_pairs);
    j["val"] = pairs(s.val_pairs);
    j["test"] = pairs(s.test_pairs);
  }
  return j.dump(1) + "\n";
}

SplitSpec splits_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  SplitSpec s;
  try {
    if (!j.contains("task")) throw SchemaError("/task", "missing");
    s.task = task_from_string(j.at("task").get<std::string>());
    for (const char* key : {"train", "val", "test"}) {
      if (!j.contains(key) || !j[key].is_array()) throw SchemaError(std::string("/") + key, "missing or not an array");
    }
    if (s.task == Task::Classification) {
      s.train_nodes = j["train"].get<std::vector<std::size_t>>();
      s.val_nodes = j["val"].get<std::vector<std::size_t>>();
      s.test_nodes = j["test"].get<std::vector<std::size_t>>();
    } else {
      if (!j.contains("relation")) throw SchemaError("/relation", "missing");
      s.relation = j["relation"].get<std::string>();
      auto pairs = [](const nlohmann::json& a, const std::string& where) {
        std::vector<LabeledPair> out;
        for (std::size_t i = 0; i < a.size(); ++i) {
          const auto& e = a[i];
          if (!e.is_array() || e.size() != 3) throw SchemaError(where + "/" + std::to_string(i), "expected [src, dst, label]");
          out.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<int>()});
        }
        return out;
      };
      s.train_pairs = pairs(j["train"], "/train");
      s.val_pairs = pairs(j["val"], "/val");
      s.test_pairs = pairs(j["test"], "/test");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("/", e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/task", e.what());
  }
  return s;
}

void write_splits(const SplitSpec& splits, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << splits_to_json(splits);
}

SplitSpec read_splits(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LoadError(file.string(), 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return splits_from_json(ss.str());
}

RecommendationData build_recommendation_splits(const std::vector<Rating>& ratings, const std::string& relation,
                                               std::uint64_t seed) {
  if (ratings.empty()) throw std::invalid_argument("no ratings");
  std::vector<std::size_t> pos_pool, neg_pool;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i];
    if (r.value < 1 || r.value > 5) throw std::invalid_argument("rating values must be integers 1..5");
    if (!seen.insert({r.src, r.dst}).second) {
      throw std::invalid_argument("duplicate rating for pair (" + std::to_string(r.src) + "," +
                                  std::to_string(r.dst) + ")");
    }
    (r.value > 3 ? pos_pool : neg_pool).push_back(i);
  }
  if (pos_pool.empty()) throw std::invalid_argument("no positive pairs (ratings > 3)");

  Rng rng(seed, {fnv1a64("recommendation-splits")});
  rng.shuffle(pos_pool);
  rng.shuffle(neg_pool);

  const std::size_t n_pos = pos_pool.size() / 2;
  const std::size_t n_val = n_pos / 5;
  const std::size_t n_test = n_pos / 5;
  const std::size_t n_train = n_pos - n_val - n_test;
  if (n_val == 0) {
    throw std::invalid_argument("too few positive pairs: need at least 10 ratings > 3 (got " +
                                std::to_string(pos_pool.size()) + ")");
  }
  if (neg_pool.size() < n_pos) {
    throw std::invalid_argument("too few negative pairs: need at least " + std::to_string(n_pos) +
                                " ratings < 4 (got " + std::to_string(neg_pool.size()) + ")");
  }

  RecommendationData out;
  out.splits.task = Task::Recommendation;
  out.splits.relation = relation;
  auto fill = [&](std::vector<LabeledPair>& dst, std::size_t pos_begin, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      const auto& p = ratings[pos_pool[pos_begin + k]];
      dst.push_back({p.src, p.dst, 1});
    }
    for (std::size_t k = 0; k < count; ++k) {
      const auto& n = ratings[neg_pool[pos_begin + k]];
      dst.push_back({n.src, n.dst, 0});
    }
    std::sort(dst.begin(), dst.end(), [](const LabeledPair& a, const LabeledPair& b) {
      return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
  };
  fill(out.splits.train_pairs, 0, n_train);
  fill(out.splits.val_pairs, n_train, n_val);
  fill(out.splits.test_pairs, n_train + n_val, n_test);

  for (std::size_t k = n_pos; k < pos_pool.size(); ++k) {
    const auto& p = ratings[pos_pool[k]];
    out.graph_edges.emplace_back(p.src, p.dst);
  }
  std::sort(out.graph_edges.begin(), out.graph_edges.end());
  return out;
}

std::vector<Rating> load_ratings(const fs::path& file) {
  LineReader r(file);
  std::vector<Rating> out;
  std::string line;
  while (r.next(line)) {
    if (line.empty()) continue;
    if (r.lineno == 1 && line == "src\tdst\trating") continue;
    auto f = split_tabs(line);
    if (f.size() != 3) r.fail("expected 3 tab-separated columns");
    Rating rt;
    if (!parse_number(f[0], rt.src) || !parse_number(f[1], rt.dst) || !parse_number(f[2], rt.value) ||
        rt.value < 1 || rt.value > 5) {
      r.fail("invalid rating row '" + line + "'");
    }
    out.push_back(rt);
  }
  return out;
}

}  // namespace pmmm
