#pragma once

// Stability benchmark: search -> derive -> retrain for every (mode, seed,
// depth) tuple, one CSV row each.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmmm/config.hpp"

namespace pmmm {

struct BenchTuple {
  SearchMode mode = SearchMode::Partial;
  std::uint64_t seed = 0;
  std::size_t depth = 0;
  friend bool operator==(const BenchTuple&, const BenchTuple&) = default;
};

struct BenchRow {
  BenchTuple tuple;
  double mean = 0.0;  // headline test metric over the training seeds
  double std = 0.0;
  std::string status = "ok";  // "ok", "diverged" or "failed"
  std::string config_hash;
};

struct BenchPlan {
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> depths;
  std::vector<SearchMode> modes{SearchMode::Partial, SearchMode::OnePath};
  std::size_t train_seeds = 3;  // training seeds 0 .. train_seeds - 1
  std::size_t threads = 1;

  // Depth-major, then seed, then mode.
  std::vector<BenchTuple> tuples() const;
};

// One tuple. Failures are reported through the row status, never thrown.
BenchRow run_bench_tuple(const RunConfig& base, const LoadedData& data, const BenchTuple& tuple,
                         std::size_t train_seeds);

// Runs `tuples` on `plan.threads` workers; rows come back in input order.
std::vector<BenchRow> run_bench(const RunConfig& base, const LoadedData& data, const std::vector<BenchTuple>& tuples,
                                const BenchPlan& plan);

inline constexpr const char* kStabilityHeader = "mode,seed,N,mean,std,status,config_hash";
std::string stability_row(const BenchRow& row);
// Throws LoadError on a malformed file.
std::vector<BenchRow> read_stability_csv(const std::filesystem::path& file);

// Runs every planned tuple that has no row for this config hash yet and
// appends the new rows to `csv`. Returns all rows of the plan, old and new.
std::vector<BenchRow> bench_stability(const RunConfig& base, const BenchPlan& plan, const std::filesystem::path& csv);

// "3", "0-9" or "2,3,4" (ranges and lists may be mixed: "0-2,5").
std::vector<std::uint64_t> parse_range(const std::string& text);

}  // namespace pmmm
