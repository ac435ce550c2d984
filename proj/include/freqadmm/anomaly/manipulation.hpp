#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/utility.hpp"

namespace freqadmm::anomaly {

// 0 is a legitimate systemic adjustment; 1-3 are device manipulations.
enum Label : int { kSystemic = 0, kFunctionAndInput = 1, kDataSize = 2, kInputOnly = 3 };

const char* label_name(int label);

struct FactorRanges {
  double input = 3.0;    // input_factor in [-input, input]
  double size = 1.0;     // size_factor in [-size, size]
  double mwf = 3.0;      // mwf_factor in [-mwf, mwf]
  double storage = 5.0;  // storage_factor in [-storage, storage]
  friend bool operator==(const FactorRanges&, const FactorRanges&) = default;
};

// Packets never shrink below this size (MB) under a size manipulation.
inline constexpr double kMinPacketSize = 0.1;

/// One manipulation. Only the fields that belong to the label are set:
///   0: mwf_factor, storage_factor (no target)
///   1: target, new_function, input_factor
///   2: target, size_factor
///   3: target, input_factor
struct ManipulationSpec {
  int label = kSystemic;
  std::optional<std::size_t> target;  // zero-based device index
  std::optional<double> input_factor;
  std::optional<double> size_factor;
  std::optional<double> mwf_factor;
  std::optional<double> storage_factor;
  std::optional<UtilityFunction> new_function;

  // Throws ContractViolation when fields and label disagree or a factor is
  // out of range.
  void validate(std::size_t n_devices, const FactorRanges& ranges = {}) const;

  friend bool operator==(const ManipulationSpec&, const ManipulationSpec&) = default;
};

std::string describe(const ManipulationSpec& spec);

// The optimization problem a plant is solving.
struct Problem {
  std::vector<UtilityFunction> functions;
  ResourceBudget budget;

  friend bool operator==(const Problem&, const Problem&) = default;
};

// Largest consensus value device j can take with every other device at its
// lower bound.
double feasible_ceiling(const ResourceBudget& budget, std::size_t j);

/// Applies a manipulation to `base`.
///
/// Throws ContractViolation for an invalid spec, BudgetError when a systemic
/// change empties the feasible set, and DomainError when a replacement
/// function's pole lies at or above the target's feasible ceiling (the device
/// could never agree on a feasible value).
Problem inject(const ManipulationSpec& spec, const Problem& base,
               const FactorRanges& ranges = {});

}  // namespace freqadmm::anomaly
