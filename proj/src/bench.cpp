#include "pmmm/bench.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "pmmm/error.hpp"
#include "pmmm/format.hpp"

namespace pmmm {

std::vector<BenchTuple> BenchPlan::tuples() const {
  std::vector<BenchTuple> out;
  for (std::size_t n : depths) {
    for (std::uint64_t s : seeds) {
      for (SearchMode m : modes) out.push_back({m, s, n});
    }
  }
  return out;
}

BenchRow run_bench_tuple(const RunConfig& base, const LoadedData& data, const BenchTuple& tuple,
                         std::size_t train_seeds) {
  BenchRow row;
  row.tuple = tuple;
  row.config_hash = base.hash();
  try {
    SearchConfig sc = base.search_config();
    sc.mode = tuple.mode;
    sc.seed = tuple.seed;
    sc.depth = tuple.depth;
    const std::vector<SearchOutcome> outcomes = run_searches(sc, data.graph, data.splits);
    const MetaMultigraph arch = derive_multigraph(multi_run_select(outcomes, sc.select_by).alpha, base.derive);
    const MeanStd m = repeat_eval(arch, data.graph, data.splits, train_seeds, base.target).headline();
    row.mean = m.mean;
    row.std = m.std;
  } catch (const DivergenceError&) {
    row.status = "diverged";
  } catch (const std::exception&) {
    row.status = "failed";
  }
  if (row.status != "ok") row.mean = row.std = std::numeric_limits<double>::quiet_NaN();
  return row;
}

std::vector<BenchRow> run_bench(const RunConfig& base, const LoadedData& data, const std::vector<BenchTuple>& tuples,
                                const BenchPlan& plan) {
  std::vector<BenchRow> rows(tuples.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tuples.size(); i = next++) {
      rows[i] = run_bench_tuple(base, data, tuples[i], plan.train_seeds);
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(plan.threads, tuples.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string stability_row(const BenchRow& r) {
  std::ostringstream s;
  s << to_string(r.tuple.mode) << ',' << r.tuple.seed << ',' << r.tuple.depth << ',' << format_double(r.mean) << ','
    << format_double(r.std) << ',' << r.status << ',' << r.config_hash;
  return s.str();
}

namespace {

template <typename T>
bool parse_int(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_real(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

bool same_key(const BenchRow& a, const BenchRow& b) {
  return a.tuple == b.tuple && a.config_hash == b.config_hash;
}

}  // namespace

std::vector<BenchRow> read_stability_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LoadError(file.string(), 0, "cannot open");
  std::vector<BenchRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kStabilityHeader) throw LoadError(file.string(), 1, "unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 7) throw LoadError(file.string(), lineno, "expected 7 columns");
    BenchRow r;
    try {
      r.tuple.mode = search_mode_from_string(cells[0]);
      if (!parse_int(cells[1], r.tuple.seed) || !parse_int(cells[2], r.tuple.depth)) {
        throw std::invalid_argument("bad seed or N");
      }
      r.mean = parse_real(cells[3]);
      r.std = parse_real(cells[4]);
    } catch (const std::invalid_argument& e) {
      throw LoadError(file.string(), lineno, e.what());
    }
    r.status = cells[5];
    r.config_hash = cells[6];
    rows.push_back(r);
  }
  return rows;
}

std::vector<BenchRow> bench_stability(const RunConfig& base, const BenchPlan& plan, const std::filesystem::path& csv) {
  if (plan.seeds.empty() || plan.depths.empty() || plan.modes.empty()) {
    throw std::invalid_argument("bench-stability: seed, step and mode ranges must be non-empty");
  }
  if (plan.train_seeds == 0) throw std::invalid_argument("bench-stability: need at least one training seed");
  base.validate();
  const std::string hash = base.hash();
  const std::vector<BenchRow> existing = std::filesystem::exists(csv) ? read_stability_csv(csv) : std::vector<BenchRow>{};

  std::vector<BenchTuple> todo;
  std::vector<BenchRow> result;
  for (const BenchTuple& t : plan.tuples()) {
    BenchRow key;
    key.tuple = t;
    key.config_hash = hash;
    const auto it = std::find_if(existing.begin(), existing.end(), [&](const BenchRow& r) { return same_key(r, key); });
    if (it == existing.end()) todo.push_back(t);
  }

  std::vector<BenchRow> fresh;
  if (!todo.empty()) {
    const LoadedData data = load_data(base);
    fresh = run_bench(base, data, todo, plan);
    if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
    const bool new_file = !std::filesystem::exists(csv);
    std::ofstream out(csv, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    if (new_file) out << kStabilityHeader << '\n';
    for (const BenchRow& r : fresh) out << stability_row(r) << '\n';
  }

  for (const BenchTuple& t : plan.tuples()) {
    BenchRow key;
    key.tuple = t;
    key.config_hash = hash;
    auto match = [&](const BenchRow& r) { return same_key(r, key); };
    auto it = std::find_if(existing.begin(), existing.end(), match);
    result.push_back(it != existing.end() ? *it : *std::find_if(fresh.begin(), fresh.end(), match));
  }
  return result;
}

std::vector<std::uint64_t> parse_range(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    const auto dash = part.find('-');
    std::uint64_t lo = 0, hi = 0;
    const bool ok = dash == std::string::npos
                        ? parse_int(part, lo) && (hi = lo, true)
                        : parse_int(std::string_view(part).substr(0, dash), lo) &&
                              parse_int(std::string_view(part).substr(dash + 1), hi);
    if (!ok || hi < lo) throw std::invalid_argument("malformed range '" + text + "'");
    for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty range '" + text + "'");
  return out;
}

}  // namespace pmmm
