#pragma once

#include <span>
#include <vector>

namespace pmmm {

struct F1Scores {
  double macro = 0.0;
  double micro = 0.0;
};

// Per-class F1 = 2TP / (2TP + FP + FN), 0 when the class never occurs in
// truth or prediction. Macro averages over `class_universe`; micro pools the
// counts. Throws std::invalid_argument on empty or mismatched inputs.
F1Scores f1_scores(std::span<const int> truth, std::span<const int> predicted, std::span<const int> class_universe);

// P(score_pos > score_neg) + 0.5 P(tie), via midranks. Throws
// std::invalid_argument unless both labels are present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};
MeanStd mean_std(std::span<const double> values);

// Row-wise argmax, lowest index on ties.
std::vector<int> argmax_rows(std::span<const double> data, std::size_t cols);

}  // namespace pmmm
