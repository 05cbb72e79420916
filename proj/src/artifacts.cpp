#include "pmmm/artifacts.hpp"

#include <fstream>
#include <iterator>
#include <json.hpp>
#include <stdexcept>

#include "pmmm/error.hpp"
#include "pmmm/supernet.hpp"

namespace pmmm {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
}

const json& field(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(at(path, key), "missing");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  return v.get<double>();
}

std::uint64_t unsigned_int(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw SchemaError(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

const json& array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array");
  return v;
}

std::vector<double> numbers(const json& v, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(v, path).size(); ++i) out.push_back(number(v[i], at(path, i)));
  return out;
}

std::vector<std::string> strings(const json& v, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < array(v, path).size(); ++i) out.push_back(string(v[i], at(path, i)));
  return out;
}

void check_version(const json& doc) {
  const json& v = field(doc, "", "format_version");
  if (!v.is_number_integer() || v.get<long long>() != kArtifactVersion) {
    throw SchemaError("/format_version", "unsupported artifact version " + v.dump());
  }
}

ojson names_of(const std::vector<CandidatePath>& cands, std::span<const std::string> relations) {
  ojson out = ojson::array();
  for (const auto& c : cands) out.push_back(candidate_name(c, relations));
  return out;
}

CandidatePath resolve(const std::string& name, std::span<const std::string> relations, const std::string& path) {
  if (name == "identity") return CandidatePath::identity();
  if (name == "zero") return CandidatePath::zero();
  for (std::size_t r = 0; r < relations.size(); ++r) {
    if (relations[r] == name) return CandidatePath::of_relation(r);
  }
  throw SchemaError(path, "unknown relation '" + name + "'");
}

EdgeSlot edge_of(const json& e, const std::string& path, std::size_t depth) {
  const EdgeSlot slot{unsigned_int(field(e, path, "from"), at(path, "from")),
                      unsigned_int(field(e, path, "to"), at(path, "to"))};
  if (!(slot.from < slot.to && slot.to <= depth)) throw SchemaError(path, "edge outside 0 <= from < to <= depth");
  return slot;
}

void expect_slots(const std::vector<EdgeSlot>& got, std::size_t depth, const std::string& path) {
  if (got != edge_slots(depth)) throw SchemaError(path, "edges must list every (from, to) slot ordered by to, then from");
}

}  // namespace

AlphaArtifact alpha_artifact(const SearchOutcome& outcome, Task task, const std::string& config_hash) {
  return {outcome.alpha, outcome.seed, outcome.mode, task, outcome.best_val_metric, outcome.best_val_loss, config_hash};
}

std::string alpha_to_json(const AlphaArtifact& a) {
  ojson j;
  j["format_version"] = kArtifactVersion;
  j["config_hash"] = a.config_hash;
  j["task"] = to_string(a.task);
  j["mode"] = to_string(a.mode);
  j["seed"] = a.seed;
  j["depth"] = a.alpha.depth;
  j["relations"] = a.alpha.relation_names;
  j["candidates"] = names_of(a.alpha.candidates, a.alpha.relation_names);
  ojson edges = ojson::array();
  for (std::size_t e = 0; e < a.alpha.edges.size(); ++e) {
    ojson row;
    row["from"] = a.alpha.edges[e].from;
    row["to"] = a.alpha.edges[e].to;
    row["alpha"] = a.alpha.alpha.at(e);
    row["strengths"] = path_strengths(a.alpha.alpha[e]);
    edges.push_back(std::move(row));
  }
  j["edges"] = std::move(edges);
  j["val_metric"] = a.val_metric;
  j["val_loss"] = a.val_loss;
  return j.dump(2) + "\n";
}

AlphaArtifact alpha_from_json(const std::string& text) {
  const json doc = parse(text);
  check_version(doc);
  AlphaArtifact a;
  a.config_hash = string(field(doc, "", "config_hash"), "/config_hash");
  try {
    a.task = task_from_string(string(field(doc, "", "task"), "/task"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/task", e.what());
  }
  try {
    a.mode = search_mode_from_string(string(field(doc, "", "mode"), "/mode"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/mode", e.what());
  }
  a.seed = unsigned_int(field(doc, "", "seed"), "/seed");
  a.alpha.depth = unsigned_int(field(doc, "", "depth"), "/depth");
  a.alpha.relation_names = strings(field(doc, "", "relations"), "/relations");
  const std::vector<std::string> cands = strings(field(doc, "", "candidates"), "/candidates");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    a.alpha.candidates.push_back(resolve(cands[i], a.alpha.relation_names, at("/candidates", i)));
  }
  const json& edges = array(field(doc, "", "edges"), "/edges");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string path = at("/edges", e);
    a.alpha.edges.push_back(edge_of(edges[e], path, a.alpha.depth));
    std::vector<double> row = numbers(field(edges[e], path, "alpha"), at(path, "alpha"));
    if (row.size() != cands.size()) throw SchemaError(at(path, "alpha"), "expected one logit per candidate");
    a.alpha.alpha.push_back(std::move(row));
  }
  expect_slots(a.alpha.edges, a.alpha.depth, "/edges");
  a.val_metric = number(field(doc, "", "val_metric"), "/val_metric");
  a.val_loss = number(field(doc, "", "val_loss"), "/val_loss");
  return a;
}

std::string architecture_to_json(const MetaMultigraph& arch, const std::string& config_hash) {
  if (arch.retained.size() != arch.edges.size()) throw std::invalid_argument("architecture: retained/edge count mismatch");
  const bool has_strengths = !arch.strengths.empty();
  const bool has_alpha = !arch.alpha.empty();
  ojson j;
  j["format_version"] = kArtifactVersion;
  j["config_hash"] = config_hash;
  j["depth"] = arch.depth;
  j["relations"] = arch.relation_names;
  j["candidates"] = names_of(default_candidates(arch.relation_names.size()), arch.relation_names);
  ojson edges = ojson::array();
  for (std::size_t e = 0; e < arch.edges.size(); ++e) {
    ojson row;
    row["from"] = arch.edges[e].from;
    row["to"] = arch.edges[e].to;
    row["retained"] = names_of(arch.retained[e], arch.relation_names);
    row["strengths"] = has_strengths ? ojson(arch.strengths.at(e)) : ojson::array();
    row["alpha"] = has_alpha ? ojson(arch.alpha.at(e)) : ojson::array();
    edges.push_back(std::move(row));
  }
  j["edges"] = std::move(edges);
  j["lambda_seq"] = arch.lambda_seq;
  j["lambda_res"] = arch.lambda_res;
  return j.dump(2) + "\n";
}

MetaMultigraph architecture_from_json(const std::string& text, std::optional<std::span<const std::string>> vocabulary) {
  const json doc = parse(text);
  check_version(doc);
  (void)string(field(doc, "", "config_hash"), "/config_hash");
  MetaMultigraph m;
  m.depth = unsigned_int(field(doc, "", "depth"), "/depth");
  if (vocabulary) {
    m.relation_names.assign(vocabulary->begin(), vocabulary->end());
  } else {
    m.relation_names = strings(field(doc, "", "relations"), "/relations");
  }
  const std::size_t num_candidates = m.relation_names.size() + 2;

  const json& edges = array(field(doc, "", "edges"), "/edges");
  std::size_t with_strengths = 0, with_alpha = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string path = at("/edges", e);
    m.edges.push_back(edge_of(edges[e], path, m.depth));
    const json& kept = array(field(edges[e], path, "retained"), at(path, "retained"));
    if (kept.empty()) throw SchemaError(at(path, "retained"), "empty retained set");
    std::vector<CandidatePath> paths;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const std::string where = at(at(path, "retained"), k);
      paths.push_back(resolve(string(kept[k], where), m.relation_names, where));
    }
    m.retained.push_back(std::move(paths));

    auto provenance = [&](const char* key, std::size_t& seen) {
      std::vector<double> row = edges[e].contains(key) ? numbers(edges[e][key], at(path, key)) : std::vector<double>{};
      if (!row.empty()) {
        if (row.size() != num_candidates) throw SchemaError(at(path, key), "expected one value per candidate");
        ++seen;
      }
      return row;
    };
    m.strengths.push_back(provenance("strengths", with_strengths));
    m.alpha.push_back(provenance("alpha", with_alpha));
  }
  expect_slots(m.edges, m.depth, "/edges");
  // Provenance is all-or-nothing across edges.
  auto settle = [&](std::vector<std::vector<double>>& rows, std::size_t seen, const char* key) {
    if (seen == 0) {
      rows.clear();
    } else if (seen != rows.size()) {
      throw SchemaError("/edges", std::string("'") + key + "' present on some edges only");
    }
  };
  settle(m.strengths, with_strengths, "strengths");
  settle(m.alpha, with_alpha, "alpha");

  m.lambda_seq = number(field(doc, "", "lambda_seq"), "/lambda_seq");
  m.lambda_res = number(field(doc, "", "lambda_res"), "/lambda_res");
  return m;
}

std::string architecture_config_hash(const std::string& text) {
  const json doc = parse(text);
  return string(field(doc, "", "config_hash"), "/config_hash");
}

std::string eval_report_to_json(const EvalReport& report, const std::string& config_hash) {
  auto summary = [](const MeanStd& ms) {
    ojson s;
    s["mean"] = ms.mean;
    s["std"] = ms.std;
    return s;
  };
  ojson j;
  j["format_version"] = kArtifactVersion;
  j["config_hash"] = config_hash;
  j["task"] = to_string(report.task);
  j["metric"] = report.task == Task::Classification ? "micro_f1" : "auc";
  j["mean"] = report.headline().mean;
  j["std"] = report.headline().std;
  ojson metrics;
  if (report.task == Task::Classification) {
    metrics["macro_f1"] = summary(report.macro_f1);
    metrics["micro_f1"] = summary(report.micro_f1);
  } else {
    metrics["auc"] = summary(report.auc);
  }
  j["metrics"] = std::move(metrics);
  ojson runs = ojson::array();
  for (const auto& r : report.runs) {
    ojson row;
    row["seed"] = r.seed;
    if (report.task == Task::Classification) {
      row["macro_f1"] = r.macro_f1;
      row["micro_f1"] = r.micro_f1;
    } else {
      row["auc"] = r.auc;
    }
    row["val_metric"] = r.val_metric;
    runs.push_back(std::move(row));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& text) {
  const json doc = parse(text);
  check_version(doc);
  (void)string(field(doc, "", "config_hash"), "/config_hash");
  EvalReport r;
  try {
    r.task = task_from_string(string(field(doc, "", "task"), "/task"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/task", e.what());
  }
  const bool cls = r.task == Task::Classification;
  auto summary = [&](const char* key) {
    const json& metrics = field(doc, "", "metrics");
    const std::string path = at("/metrics", key);
    const json& s = field(metrics, "/metrics", key);
    return MeanStd{number(field(s, path, "mean"), at(path, "mean")), number(field(s, path, "std"), at(path, "std"))};
  };
  if (cls) {
    r.macro_f1 = summary("macro_f1");
    r.micro_f1 = summary("micro_f1");
  } else {
    r.auc = summary("auc");
  }
  const json& runs = array(field(doc, "", "runs"), "/runs");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string path = at("/runs", i);
    SeedMetrics m;
    m.seed = unsigned_int(field(runs[i], path, "seed"), at(path, "seed"));
    if (cls) {
      m.macro_f1 = number(field(runs[i], path, "macro_f1"), at(path, "macro_f1"));
      m.micro_f1 = number(field(runs[i], path, "micro_f1"), at(path, "micro_f1"));
    } else {
      m.auc = number(field(runs[i], path, "auc"), at(path, "auc"));
    }
    m.val_metric = number(field(runs[i], path, "val_metric"), at(path, "val_metric"));
    r.runs.push_back(m);
  }
  (void)number(field(doc, "", "mean"), "/mean");
  (void)number(field(doc, "", "std"), "/std");
  return r;
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LoadError(file.string(), 0, "cannot open");
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace pmmm
