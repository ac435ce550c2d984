#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "freqadmm/core/budget.hpp"

namespace freqadmm {

// Slot of the normal/perturbed cycle a row belongs to. A perturbed slot with
// label 0 is a systemic (legitimate) resource adjustment.
enum class Phase : std::uint8_t { Normal = 0, Anomalous = 1 };

/// One ADMM round as seen by the gateway: the consensus z and the received
/// sums v = x + u.
struct TraceRow {
  std::int64_t iteration = 0;
  std::vector<double> z;
  std::vector<double> v;
  int label = 0;
  Phase phase = Phase::Normal;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct IterationTrace {
  std::size_t devices = 0;
  ResourceBudget budget;  // baseline budget the trace was produced under
  std::vector<TraceRow> rows;

  friend bool operator==(const IterationTrace&,
                         const IterationTrace&) = default;
};

}  // namespace freqadmm
