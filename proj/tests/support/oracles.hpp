#pragma once

// Test-only oracles. Nothing here calls into the library's solver paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/utility.hpp"

namespace testsupport {

// Dense Gaussian elimination with partial pivoting. Returns nullopt when
// singular.
inline std::optional<std::vector<double>> solve_dense(
    std::vector<std::vector<double>> m, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-12) return std::nullopt;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t k = col; k < n; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= m[i][k] * x[k];
    x[i] = s / m[i][i];
  }
  return x;
}

// Exact Euclidean projection onto {sum z <= c, a.z <= d, z >= gamma} by
// enumerating every subset of constraints as the active (equality) set and
// solving the equality-constrained KKT system. The unique subset whose
// solution is feasible with nonnegative multipliers is the projection.
inline std::vector<double> exhaustive_projection(
    const std::vector<double>& v, const freqadmm::ResourceBudget& b) {
  const std::size_t n = v.size();
  const std::size_t m = n + 2;
  // Constraint rows as G z <= h; lower bounds written -z_i <= -gamma_i.
  std::vector<std::vector<double>> g(m, std::vector<double>(n, 0.0));
  std::vector<double> h(m);
  for (std::size_t i = 0; i < n; ++i) {
    g[0][i] = 1.0;
    g[1][i] = b.a[i];
    g[2 + i][i] = -1.0;
    h[2 + i] = -b.gamma[i];
  }
  h[0] = b.c;
  h[1] = b.d;

  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<std::size_t> act;
    for (std::size_t k = 0; k < m; ++k) {
      if (mask & (1u << k)) act.push_back(k);
    }
    if (act.size() > n) continue;
    // [I  G_A^T; G_A 0] [z; mu] = [v; h_A]
    const std::size_t dim = n + act.size();
    std::vector<std::vector<double>> kkt(dim, std::vector<double>(dim, 0.0));
    std::vector<double> rhs(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      kkt[i][i] = 1.0;
      rhs[i] = v[i];
    }
    for (std::size_t r = 0; r < act.size(); ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        kkt[i][n + r] = g[act[r]][i];
        kkt[n + r][i] = g[act[r]][i];
      }
      rhs[n + r] = h[act[r]];
    }
    const auto sol = solve_dense(kkt, rhs);
    if (!sol) continue;
    std::vector<double> z(sol->begin(), sol->begin() + n);
    bool ok = true;
    for (std::size_t r = 0; r < act.size() && ok; ++r) {
      ok = (*sol)[n + r] >= -1e-10;
    }
    for (std::size_t k = 0; k < m && ok; ++k) {
      double lhs = 0.0;
      for (std::size_t i = 0; i < n; ++i) lhs += g[k][i] * z[i];
      ok = lhs <= h[k] + 1e-10 * std::max(1.0, std::abs(h[k]));
    }
    if (!ok) continue;
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) dist += (z[i] - v[i]) * (z[i] - v[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = z;
    }
  }
  return best;
}

inline double central_difference(const freqadmm::UtilityFunction& f, double x,
                                 double step = 1e-5) {
  return (freqadmm::eval_utility(f, x + step) -
          freqadmm::eval_utility(f, x - step)) /
         (2.0 * step);
}

struct Instance {
  std::vector<freqadmm::UtilityFunction> functions;
  freqadmm::ResourceBudget budget;
};

// Strictly concave utilities on x >= 0 with a mix of binding patterns.
inline freqadmm::UtilityFunction random_concave(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pick = u(rng);
  if (pick < 0.6) {
    return freqadmm::UtilityFunction::quad_cubic(
        0.5 + 1.5 * u(rng), -(0.5 + 7.5 * u(rng)), u(rng) < 0.5 ? 0.0 : u(rng),
        100.0 * u(rng));
  }
  if (pick < 0.8) {
    // h = -exp(x - center) is decreasing; pair it with a positive slope term
    // by shifting the center so the device still wants some bandwidth.
    return freqadmm::UtilityFunction::exp(1.0 + 4.0 * u(rng));
  }
  return freqadmm::UtilityFunction::softplus(1.0 + 4.0 * u(rng));
}

inline Instance random_instance(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance inst;
  for (std::size_t i = 0; i < n; ++i) {
    inst.functions.push_back(random_concave(rng));
    inst.budget.a.push_back(1.0 + 4.0 * u(rng));
    inst.budget.gamma.push_back(0.5 + u(rng));
  }
  const double min_c = inst.budget.total_frequency(inst.budget.gamma);
  const double min_d = inst.budget.total_storage(inst.budget.gamma);
  inst.budget.c = min_c + (0.5 + 12.0 * u(rng));
  inst.budget.d = min_d + (1.0 + 40.0 * u(rng));
  return inst;
}

}  // namespace testsupport
