#include "pmmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace pmmm {

F1Scores f1_scores(std::span<const int> truth, std::span<const int> predicted, std::span<const int> class_universe) {
  if (truth.empty()) throw std::invalid_argument("f1_scores: empty split");
  if (truth.size() != predicted.size()) throw std::invalid_argument("f1_scores: length mismatch");
  if (class_universe.empty()) throw std::invalid_argument("f1_scores: empty class universe");
  std::map<int, long long> tp, fp, fn;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      tp[truth[i]]++;
    } else {
      fp[predicted[i]]++;
      fn[truth[i]]++;
    }
  }
  auto get = [](const std::map<int, long long>& m, int c) {
    auto it = m.find(c);
    return it == m.end() ? 0LL : it->second;
  };
  double macro = 0.0;
  for (int c : class_universe) {
    const long long t = get(tp, c), p = get(fp, c), n = get(fn, c);
    const long long denom = 2 * t + p + n;
    macro += denom == 0 ? 0.0 : static_cast<double>(2 * t) / static_cast<double>(denom);
  }
  macro /= static_cast<double>(class_universe.size());
  long long st = 0, sp = 0, sn = 0;
  for (const auto& [c, v] : tp) st += v;
  for (const auto& [c, v] : fp) sp += v;
  for (const auto& [c, v] : fn) sn += v;
  const double micro = static_cast<double>(2 * st) / static_cast<double>(2 * st + sp + sn);
  return {macro, micro};
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  double n_pos = 0.0, n_neg = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      const int y = labels[order[k]];
      if (y == 1) {
        pos_rank_sum += midrank;
        n_pos += 1.0;
      } else if (y == 0) {
        n_neg += 1.0;
      } else {
        throw std::invalid_argument("auc: labels must be 0 or 1");
      }
    }
    i = j;
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw std::invalid_argument("auc: split must contain both labels");
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: no values");
  double s = 0.0;
  for (double v : values) s += v;
  const double mean = s / static_cast<double>(values.size());
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    return {values[0], 0.0};
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<int> argmax_rows(std::span<const double> data, std::size_t cols) {
  std::vector<int> out;
  if (cols == 0) return out;
  for (std::size_t r = 0; r * cols < data.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (data[r * cols + j] > data[r * cols + best]) best = j;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

}  // namespace pmmm
