#pragma once

#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/utility.hpp"

namespace freqadmm::catalog {

// Utilities of the three-device allocation experiment:
//   h1(x) = 900 - (x + 9)^2 - x^3
//   h2(x) = 500 - (x - 4)^2
//   h3(x) = 110 - (2x + 3)^2 - x^3
std::vector<UtilityFunction> allocation_utilities();

// Utilities of the manipulation experiment, convex form:
//   f1(x) = (x - 9)^2 + x^3,  f2(x) = (x - 4)^2,  f3(x) = (2x - 6)^2 + x^3
std::vector<UtilityFunction> anomaly_utilities();

// Function set a type+input manipulation draws its replacement from, in
// order: (x - 9)^2 + x^3, exp(x - 9), 1/(x - 9), log(1 + exp(x - 9)).
std::vector<UtilityFunction> replacement_set();

// c = 10, d = 15, a = (2, 3[, 5]), gamma = 1. Two devices when n == 2.
ResourceBudget allocation_budget(std::size_t n);

// c = 10, d = 20, a = (2, 3, 5), gamma = 1.
ResourceBudget anomaly_budget();

}  // namespace freqadmm::catalog
