#include "freqadmm/core/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "freqadmm/core/errors.hpp"

namespace freqadmm {

namespace {

struct Problem {
  const std::vector<double>& v;
  const ResourceBudget& b;
  std::size_t max_bisections;

  [[nodiscard]] std::size_t n() const { return v.size(); }

  [[nodiscard]] double coord(std::size_t i, double l1, double l2) const {
    return std::max(b.gamma[i], v[i] - l1 - l2 * b.a[i]);
  }

  [[nodiscard]] std::vector<double> point(double l1, double l2) const {
    std::vector<double> z(n());
    for (std::size_t i = 0; i < n(); ++i) z[i] = coord(i, l1, l2);
    return z;
  }

  [[nodiscard]] double freq_excess(double l1, double l2) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) s += coord(i, l1, l2);
    return s - b.c;
  }

  [[nodiscard]] double storage_excess(double l1, double l2) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) s += b.a[i] * coord(i, l1, l2);
    return s - b.d;
  }

  [[nodiscard]] std::vector<bool> free_set(double l1, double l2) const {
    std::vector<bool> f(n());
    for (std::size_t i = 0; i < n(); ++i) {
      f[i] = v[i] - l1 - l2 * b.a[i] > b.gamma[i];
    }
    return f;
  }
};

// Root of a non-increasing function with fn(lo) >= 0 >= fn(hi).
template <class Fn>
double bisect_decreasing(Fn&& fn, double lo, double hi, std::size_t max_it) {
  for (std::size_t it = 0; it < max_it; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (fn(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Sums {
  double count = 0, sa = 0, saa = 0, sv = 0, sav = 0;
  double fixed_freq = 0, fixed_storage = 0;
};

Sums free_sums(const Problem& p, const std::vector<bool>& free) {
  Sums s;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double a = p.b.a[i];
    if (free[i]) {
      s.count += 1;
      s.sa += a;
      s.saa += a * a;
      s.sv += p.v[i];
      s.sav += a * p.v[i];
    } else {
      s.fixed_freq += p.b.gamma[i];
      s.fixed_storage += a * p.b.gamma[i];
    }
  }
  return s;
}

struct Multipliers {
  double l1 = 0.0;
  double l2 = 0.0;
};

// Replace bisection multipliers by the exact solution of the linear system on
// the free coordinates when that solution keeps the same free set.
Multipliers polish(const Problem& p, Multipliers m, bool use_l1, bool use_l2) {
  const auto free = p.free_set(m.l1, m.l2);
  const Sums s = free_sums(p, free);
  if (s.count == 0) return m;
  const double rhs1 = s.sv - (p.b.c - s.fixed_freq);
  const double rhs2 = s.sav - (p.b.d - s.fixed_storage);
  Multipliers exact = m;
  if (use_l1 && use_l2) {
    const double det = s.count * s.saa - s.sa * s.sa;
    if (std::abs(det) <= 1e-12 * std::max(1.0, s.count * s.saa)) return m;
    exact.l1 = (rhs1 * s.saa - s.sa * rhs2) / det;
    exact.l2 = (s.count * rhs2 - s.sa * rhs1) / det;
  } else if (use_l1) {
    exact.l1 = rhs1 / s.count;
  } else if (use_l2) {
    exact.l2 = rhs2 / s.saa;
  }
  if (p.free_set(exact.l1, exact.l2) != free) return m;
  return exact;
}

struct Candidate {
  Multipliers m;
  ActivePattern pattern;
  bool valid = false;
};

}  // namespace

Projection project_detailed(const std::vector<double>& v,
                            const ResourceBudget& budget,
                            const SolverConfig& cfg) {
  if (v.size() != budget.size()) {
    throw ContractViolation("projection: vector length mismatch");
  }
  budget.validate();
  const Problem p{v, budget, std::max<std::size_t>(cfg.max_bisections, 200)};
  const double tol_c = cfg.projection_tol * std::max(1.0, budget.c);
  const double tol_d = cfg.projection_tol * std::max(1.0, budget.d);

  const double min_freq = budget.total_frequency(budget.gamma);
  const double min_storage = budget.total_storage(budget.gamma);
  const bool freq_pinned = min_freq >= budget.c * (1.0 - 1e-12);
  const bool storage_pinned = min_storage >= budget.d * (1.0 - 1e-12);
  if (freq_pinned || storage_pinned) {
    // Single-point polytope.
    Projection out;
    out.z = budget.gamma;
    out.pattern = freq_pinned && storage_pinned ? ActivePattern::Both
                  : freq_pinned                 ? ActivePattern::Frequency
                                                : ActivePattern::Storage;
    return out;
  }

  auto finish = [&](const Multipliers& m, ActivePattern pattern) {
    Projection out;
    out.lambda_frequency = std::max(0.0, m.l1);
    out.lambda_storage = std::max(0.0, m.l2);
    out.z = p.point(out.lambda_frequency, out.lambda_storage);
    out.pattern = pattern;
    return out;
  };

  std::vector<Candidate> tried;

  // Neither coupling binds.
  {
    Candidate cand{{0.0, 0.0}, ActivePattern::None};
    cand.valid = p.freq_excess(0, 0) <= tol_c && p.storage_excess(0, 0) <= tol_d;
    if (cand.valid) return finish(cand.m, cand.pattern);
    tried.push_back(cand);
  }

  // Frequency budget binds.
  if (p.freq_excess(0, 0) > 0.0) {
    double hi = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
      hi = std::max(hi, v[i] - budget.gamma[i]);
    }
    Multipliers m;
    m.l1 = bisect_decreasing([&](double l) { return p.freq_excess(l, 0); },
                             0.0, hi, p.max_bisections);
    m = polish(p, m, true, false);
    Candidate cand{m, ActivePattern::Frequency};
    cand.valid = m.l1 >= 0.0 && p.storage_excess(m.l1, 0) <= tol_d;
    if (cand.valid) return finish(cand.m, cand.pattern);
    tried.push_back(cand);
  }

  // Storage budget binds.
  if (p.storage_excess(0, 0) > 0.0) {
    double hi = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
      hi = std::max(hi, (v[i] - budget.gamma[i]) / budget.a[i]);
    }
    Multipliers m;
    m.l2 = bisect_decreasing([&](double l) { return p.storage_excess(0, l); },
                             0.0, hi, p.max_bisections);
    m = polish(p, m, false, true);
    Candidate cand{m, ActivePattern::Storage};
    cand.valid = m.l2 >= 0.0 && p.freq_excess(0, m.l2) <= tol_c;
    if (cand.valid) return finish(cand.m, cand.pattern);
    tried.push_back(cand);
  }

  // Both bind: for each l2 the frequency multiplier is pinned by
  // sum z = c; the storage residual along that curve is non-increasing in l2.
  {
    auto l1_of = [&](double l2) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.n(); ++i) {
        const double t = v[i] - l2 * budget.a[i] - budget.gamma[i];
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
      lo -= budget.c;
      return bisect_decreasing([&](double l1) { return p.freq_excess(l1, l2); },
                               lo, hi, p.max_bisections);
    };
    auto storage_along = [&](double l2) {
      return p.storage_excess(l1_of(l2), l2);
    };
    double hi = 1.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
      hi = std::max(hi, std::abs(v[i] - budget.gamma[i]) / budget.a[i] + 1.0);
    }
    bool bracketed = storage_along(0.0) > 0.0;
    for (int k = 0; bracketed && storage_along(hi) > 0.0; ++k) {
      if (k == 64) bracketed = false;
      hi *= 2.0;
    }
    if (bracketed) {
      Multipliers m;
      m.l2 = bisect_decreasing(storage_along, 0.0, hi, p.max_bisections);
      m.l1 = l1_of(m.l2);
      m = polish(p, m, true, true);
      const double eps = cfg.projection_tol;
      Candidate cand{m, ActivePattern::Both};
      cand.valid = m.l1 >= -eps && m.l2 >= -eps;
      if (cand.valid) return finish(cand.m, cand.pattern);
      tried.push_back(cand);
    }
  }

  // Numerical corner case: every pattern failed its acceptance test by a
  // hair. Return the least infeasible candidate.
  std::optional<Projection> best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (const auto& cand : tried) {
    Projection out = finish(cand.m, cand.pattern);
    const double viol = budget.violation(out.z);
    if (viol < best_violation) {
      best_violation = viol;
      best = std::move(out);
    }
  }
  return *best;
}

std::vector<double> project_onto_feasible(const std::vector<double>& v,
                                          const ResourceBudget& budget,
                                          const SolverConfig& cfg) {
  return project_detailed(v, budget, cfg).z;
}

}  // namespace freqadmm
