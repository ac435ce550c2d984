#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace freqadmm::anomaly {

inline constexpr std::size_t kScoreWindow = 10;
inline constexpr std::size_t kScoreStride = 5;

/// Counts indexed [truth][predicted].
struct Confusion {
  std::size_t classes = 2;
  std::vector<std::size_t> counts;

  explicit Confusion(std::size_t k = 2) : classes(k), counts(k * k, 0) {}
  [[nodiscard]] std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts[truth * classes + predicted];
  }
  [[nodiscard]] std::size_t total() const;

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Accuracy is exact-class agreement. Precision, recall and specificity
/// treat label 0 as negative and every other label as positive. A ratio
/// with an empty denominator is NaN.
struct Metrics {
  Confusion confusion;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
};

// With classes == 2 both streams are first collapsed to {0, non-zero}.
// Throws ContractViolation on a length mismatch, an empty stream or a label
// outside [0, classes).
Metrics score(std::span<const int> predicted, std::span<const int> truth,
              std::size_t classes = 2);

Metrics metrics_from(const Confusion& c);

// Majority label of each window; ties go to the smallest label. A stream
// shorter than one window yields nothing.
std::vector<int> window_majority(std::span<const int> labels, std::size_t window = kScoreWindow,
                                 std::size_t stride = kScoreStride);

// With classes == 2 the labels are collapsed before the windows vote.
Metrics score_windowed(std::span<const int> predicted, std::span<const int> truth,
                       std::size_t classes = 2, std::size_t window = kScoreWindow,
                       std::size_t stride = kScoreStride);

// Single-line JSON object with the four rates and the confusion matrix.
std::string to_json(const Metrics& m);

}  // namespace freqadmm::anomaly
