#pragma once

#include <cstddef>
#include <vector>

namespace freqadmm {

/// Shared resources defining the feasible polytope
///   C = { z : sum z_i <= c, sum a_i z_i <= d, z_i >= gamma_i }.
struct ResourceBudget {
  double c = 0.0;              // maximum total writing frequency (Hz)
  double d = 0.0;              // storage per packet interval (MB)
  std::vector<double> a;       // per-device write size (MB)
  std::vector<double> gamma;   // per-device minimum frequency (Hz)

  [[nodiscard]] std::size_t size() const { return a.size(); }

  // Throws BudgetError unless c, d, a_i > 0, gamma_i >= 0 and the polytope
  // is non-empty.
  void validate() const;

  [[nodiscard]] bool contains(const std::vector<double>& z,
                              double tol = 1e-9) const;

  // max(0, violation) summed over the three constraint families.
  [[nodiscard]] double violation(const std::vector<double>& z) const;

  [[nodiscard]] double total_frequency(const std::vector<double>& z) const;
  [[nodiscard]] double total_storage(const std::vector<double>& z) const;

  friend bool operator==(const ResourceBudget&,
                         const ResourceBudget&) = default;
};

}  // namespace freqadmm
