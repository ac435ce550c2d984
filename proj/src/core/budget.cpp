#include "freqadmm/core/budget.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "freqadmm/core/errors.hpp"

namespace freqadmm {

void ResourceBudget::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw BudgetError("c must be positive");
  if (!(d > 0.0) || !std::isfinite(d)) throw BudgetError("d must be positive");
  if (a.empty()) throw BudgetError("budget has no devices");
  if (gamma.size() != a.size()) {
    throw BudgetError("a and gamma differ in length");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0) || !std::isfinite(a[i])) {
      throw BudgetError("a[" + std::to_string(i) + "] must be positive");
    }
    if (!(gamma[i] >= 0.0) || !std::isfinite(gamma[i])) {
      throw BudgetError("gamma[" + std::to_string(i) + "] must be >= 0");
    }
  }
  const double sum_gamma = total_frequency(gamma);
  const double sum_storage = total_storage(gamma);
  if (sum_gamma > c * (1.0 + 1e-12)) {
    throw BudgetError("empty polytope: sum of minimum frequencies " +
                      std::to_string(sum_gamma) + " exceeds c = " +
                      std::to_string(c));
  }
  if (sum_storage > d * (1.0 + 1e-12)) {
    throw BudgetError("empty polytope: minimum storage " +
                      std::to_string(sum_storage) + " exceeds d = " +
                      std::to_string(d));
  }
}

double ResourceBudget::total_frequency(const std::vector<double>& z) const {
  return std::accumulate(z.begin(), z.end(), 0.0);
}

double ResourceBudget::total_storage(const std::vector<double>& z) const {
  return std::inner_product(a.begin(), a.end(), z.begin(), 0.0);
}

double ResourceBudget::violation(const std::vector<double>& z) const {
  if (z.size() != size()) throw ContractViolation("vector length mismatch");
  double v = std::max(0.0, total_frequency(z) - c) +
             std::max(0.0, total_storage(z) - d);
  for (std::size_t i = 0; i < z.size(); ++i) {
    v += std::max(0.0, gamma[i] - z[i]);
  }
  return v;
}

bool ResourceBudget::contains(const std::vector<double>& z, double tol) const {
  if (z.size() != size()) return false;
  if (total_frequency(z) > c + tol * std::max(1.0, c)) return false;
  if (total_storage(z) > d + tol * std::max(1.0, d)) return false;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < gamma[i] - tol * std::max(1.0, gamma[i])) return false;
  }
  return true;
}

}  // namespace freqadmm
