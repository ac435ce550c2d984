#include "freqadmm/core/catalog.hpp"

#include "freqadmm/core/errors.hpp"

namespace freqadmm::catalog {

std::vector<UtilityFunction> allocation_utilities() {
  return {
      UtilityFunction::quad_cubic(1.0, 9.0, 1.0, 900.0),
      UtilityFunction::neg_quad(4.0, 500.0),
      UtilityFunction::quad_cubic(2.0, 3.0, 1.0, 110.0),
  };
}

std::vector<UtilityFunction> anomaly_utilities() {
  return {
      UtilityFunction::quad_cubic(1.0, -9.0, 1.0, 0.0),
      UtilityFunction::quad_cubic(1.0, -4.0, 0.0, 0.0),
      UtilityFunction::quad_cubic(2.0, -6.0, 1.0, 0.0),
  };
}

std::vector<UtilityFunction> replacement_set() {
  return {
      UtilityFunction::quad_cubic(1.0, -9.0, 1.0, 0.0),
      UtilityFunction::exp(9.0),
      UtilityFunction::reciprocal(9.0),
      UtilityFunction::softplus(9.0),
  };
}

ResourceBudget allocation_budget(std::size_t n) {
  if (n < 1 || n > 3) throw BudgetError("allocation budget has 1-3 devices");
  ResourceBudget b{10.0, 15.0, {2.0, 3.0, 5.0}, {1.0, 1.0, 1.0}};
  b.a.resize(n);
  b.gamma.resize(n);
  return b;
}

ResourceBudget anomaly_budget() {
  return ResourceBudget{10.0, 20.0, {2.0, 3.0, 5.0}, {1.0, 1.0, 1.0}};
}

}  // namespace freqadmm::catalog
