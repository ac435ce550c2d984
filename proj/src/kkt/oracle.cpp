#include "freqadmm/kkt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "freqadmm/core/errors.hpp"

namespace freqadmm::kkt {

const char* situation_name(Situation s) {
  switch (s) {
    case Situation::Interior: return "interior";
    case Situation::G1Active: return "g1_active";
    case Situation::G2Active: return "g2_active";
    case Situation::BothActive: return "both_active";
  }
  return "?";
}

KktCertificate check_kkt(const std::vector<double>& x,
                         const std::vector<UtilityFunction>& functions,
                         const ResourceBudget& budget, double tol) {
  const std::size_t n = x.size();
  if (functions.size() != n || budget.size() != n) {
    throw ContractViolation("check_kkt: length mismatch");
  }
  if (!budget.contains(x, tol)) {
    throw ContractViolation("check_kkt: point is infeasible");
  }

  KktCertificate cert;
  cert.g1 = budget.total_frequency(x) - budget.c;
  cert.g2 = budget.total_storage(x) - budget.d;
  const double act = std::max(tol, 1e-6);
  const bool g1_active = std::abs(cert.g1) <= act * std::max(1.0, budget.c);
  const bool g2_active = std::abs(cert.g2) <= act * std::max(1.0, budget.d);
  cert.situation = g1_active && g2_active ? Situation::BothActive
                   : g1_active            ? Situation::G1Active
                   : g2_active            ? Situation::G2Active
                                          : Situation::Interior;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > budget.gamma[i] + tol * std::max(1.0, budget.gamma[i])) {
      rows.push_back(i);
    } else {
      cert.active_lower_bounds.push_back(i);
    }
  }

  std::vector<double> target(n);
  for (std::size_t i : rows) target[i] = eval_derivative(functions[i], x[i]);

  auto sse = [&](double l1, double l2) {
    double s = 0.0;
    for (std::size_t i : rows) {
      const double r = target[i] - l1 - l2 * budget.a[i];
      s += r * r;
    }
    return s;
  };

  // Nonnegative least squares over the multipliers of active constraints.
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i : rows) {
    const double a = budget.a[i];
    s11 += 1.0;
    s12 += a;
    s22 += a * a;
    b1 += target[i];
    b2 += a * target[i];
  }
  struct Fit {
    double l1, l2;
  };
  std::vector<Fit> fits{{0.0, 0.0}};
  if (!rows.empty()) {
    if (g1_active) fits.push_back({std::max(0.0, b1 / s11), 0.0});
    if (g2_active) fits.push_back({0.0, std::max(0.0, b2 / s22)});
    if (g1_active && g2_active) {
      const double det = s11 * s22 - s12 * s12;
      if (std::abs(det) > 1e-12 * std::max(1.0, s11 * s22)) {
        const double l1 = (b1 * s22 - s12 * b2) / det;
        const double l2 = (s11 * b2 - s12 * b1) / det;
        if (l1 >= 0.0 && l2 >= 0.0) fits.push_back({l1, l2});
      }
    }
  }
  Fit best = fits.front();
  for (const Fit& f : fits) {
    if (sse(f.l1, f.l2) < sse(best.l1, best.l2)) best = f;
  }
  cert.lambda1 = best.l1;
  cert.lambda2 = best.l2;
  for (std::size_t i : rows) {
    cert.stationarity_residual =
        std::max(cert.stationarity_residual,
                 std::abs(target[i] - best.l1 - best.l2 * budget.a[i]));
  }
  return cert;
}

ResponsePrediction predict_response_direction(Situation situation,
                                              std::size_t manipulated,
                                              std::size_t n_devices) {
  if (manipulated >= n_devices) {
    throw ContractViolation("manipulated device index out of range");
  }
  ResponsePrediction out;
  const Direction others = situation == Situation::Interior
                               ? Direction::Unchanged
                               : Direction::DownOrEqual;
  out.devices.assign(n_devices, others);
  out.devices[manipulated] = Direction::Target;
  out.degenerate = situation == Situation::BothActive;
  return out;
}

namespace {

void project_halfspace(std::vector<double>& x, const std::vector<double>& normal,
                       double bound) {
  double dot = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += normal[i] * x[i];
    nn += normal[i] * normal[i];
  }
  if (dot <= bound) return;
  const double t = (dot - bound) / nn;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= t * normal[i];
}

}  // namespace

std::vector<double> dykstra_project(const std::vector<double>& v,
                                    const ResourceBudget& budget, double tol,
                                    std::size_t max_sweeps) {
  const std::size_t n = v.size();
  if (budget.size() != n) throw ContractViolation("dykstra: length mismatch");
  const std::vector<double> ones(n, 1.0);
  std::vector<double> x = v;
  std::vector<std::vector<double>> incr(3, std::vector<double>(n, 0.0));
  std::vector<double> y(n);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (int set = 0; set < 3; ++set) {
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + incr[set][i];
      std::vector<double> p = y;
      if (set == 0) {
        project_halfspace(p, ones, budget.c);
      } else if (set == 1) {
        project_halfspace(p, budget.a, budget.d);
      } else {
        for (std::size_t i = 0; i < n; ++i) p[i] = std::max(p[i], budget.gamma[i]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        incr[set][i] = y[i] - p[i];
        change = std::max(change, std::abs(p[i] - x[i]));
        x[i] = p[i];
      }
    }
    if (change <= tol && sweep > 0) break;
  }
  return x;
}

namespace {

struct DualProblem {
  const std::vector<UtilityFunction>& f;
  const ResourceBudget& b;
  std::vector<double> upper;

  DualProblem(const std::vector<UtilityFunction>& fs, const ResourceBudget& bud)
      : f(fs), b(bud), upper(bud.size()) {
    const double sum_gamma = b.total_frequency(b.gamma);
    const double sum_storage = b.total_storage(b.gamma);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double by_freq = b.c - (sum_gamma - b.gamma[i]);
      const double by_storage =
          (b.d - (sum_storage - b.a[i] * b.gamma[i])) / b.a[i];
      upper[i] = std::min(by_freq, by_storage);
    }
  }

  [[nodiscard]] std::size_t n() const { return b.size(); }

  // argmax over [gamma_i, upper_i] of h_i(x) - price * x.
  [[nodiscard]] double coord(std::size_t i, double price) const {
    double lo = b.gamma[i];
    double hi = upper[i];
    if (eval_derivative(f[i], lo) - price <= 0.0) return lo;
    if (eval_derivative(f[i], hi) - price >= 0.0) return hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (eval_derivative(f[i], mid) - price > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  [[nodiscard]] std::vector<double> point(double l1, double l2) const {
    std::vector<double> x(n());
    for (std::size_t i = 0; i < n(); ++i) x[i] = coord(i, l1 + l2 * b.a[i]);
    return x;
  }

  [[nodiscard]] double freq_excess(double l1, double l2) const {
    return b.total_frequency(point(l1, l2)) - b.c;
  }
  [[nodiscard]] double storage_excess(double l1, double l2) const {
    return b.total_storage(point(l1, l2)) - b.d;
  }

  [[nodiscard]] double max_price_at_floor(bool per_unit_storage) const {
    double m = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      const double p = eval_derivative(f[i], b.gamma[i]);
      m = std::max(m, per_unit_storage ? p / b.a[i] : p);
    }
    return m;
  }
};

template <class Fn>
double bisect_down(Fn&& fn, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (fn(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct DualCandidate {
  std::vector<double> x;
  double l1 = 0.0;
  double l2 = 0.0;
};

std::optional<DualCandidate> dual_polish(const DualProblem& p) {
  const double tol_c = 1e-9 * std::max(1.0, p.b.c);
  const double tol_d = 1e-9 * std::max(1.0, p.b.d);
  auto make = [&](double l1, double l2) {
    return DualCandidate{p.point(l1, l2), l1, l2};
  };

  if (p.freq_excess(0, 0) <= tol_c && p.storage_excess(0, 0) <= tol_d) {
    return make(0, 0);
  }
  if (p.freq_excess(0, 0) > 0.0) {
    const double l1 = bisect_down([&](double l) { return p.freq_excess(l, 0); },
                                  0.0, p.max_price_at_floor(false));
    if (p.storage_excess(l1, 0) <= tol_d) return make(l1, 0);
  }
  if (p.storage_excess(0, 0) > 0.0) {
    const double l2 = bisect_down([&](double l) { return p.storage_excess(0, l); },
                                  0.0, p.max_price_at_floor(true));
    if (p.freq_excess(0, l2) <= tol_c) return make(0, l2);
  }

  auto l1_of = [&](double l2) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.n(); ++i) {
      lo = std::min(lo, eval_derivative(p.f[i], p.upper[i]) - l2 * p.b.a[i]);
      hi = std::max(hi, eval_derivative(p.f[i], p.b.gamma[i]) - l2 * p.b.a[i]);
    }
    return bisect_down([&](double l1) { return p.freq_excess(l1, l2); },
                       lo - 1.0, hi + 1.0);
  };
  auto storage_along = [&](double l2) {
    return p.storage_excess(l1_of(l2), l2);
  };
  if (storage_along(0.0) <= 0.0) return std::nullopt;
  double hi = std::max(1.0, p.max_price_at_floor(true));
  for (int k = 0; storage_along(hi) > 0.0; ++k) {
    if (k == 64) return std::nullopt;
    hi *= 2.0;
  }
  const double l2 = bisect_down(storage_along, 0.0, hi);
  const double l1 = l1_of(l2);
  if (l1 < -1e-9) return std::nullopt;
  return make(std::max(0.0, l1), l2);
}

double objective(const std::vector<UtilityFunction>& f,
                 const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += eval_utility(f[i], x[i]);
  return s;
}

}  // namespace

ReferenceSolution reference_solve(const std::vector<UtilityFunction>& functions,
                                  const ResourceBudget& budget,
                                  const ReferenceOptions& options) {
  budget.validate();
  if (functions.size() != budget.size()) {
    throw ContractViolation("reference_solve: one utility per device");
  }
  const std::size_t n = budget.size();
  const DualProblem problem(functions, budget);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> ascent_best;
  double ascent_value = -std::numeric_limits<double>::infinity();
  std::vector<double> grad(n);
  for (std::size_t s = 0; s < options.starts; ++s) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = budget.gamma[i] + unit(rng) * (problem.upper[i] - budget.gamma[i]);
    }
    x = dykstra_project(x, budget, 1e-12);
    for (std::size_t k = 0; k < options.ascent_steps; ++k) {
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        grad[i] = eval_derivative(functions[i], x[i]);
        norm += grad[i] * grad[i];
      }
      const double step = 1.0 / (1.0 + 0.05 * static_cast<double>(k)) /
                          std::max(1.0, std::sqrt(norm));
      for (std::size_t i = 0; i < n; ++i) x[i] += step * grad[i];
      x = dykstra_project(x, budget, 1e-12);
    }
    const double value = objective(functions, x);
    if (value > ascent_value) {
      ascent_value = value;
      ascent_best = x;
    }
  }

  ReferenceSolution out;
  out.x = ascent_best;
  out.objective = ascent_value;
  const auto polished = dual_polish(problem);
  if (polished && budget.contains(polished->x, 1e-9)) {
    const double value = objective(functions, polished->x);
    for (std::size_t i = 0; i < n; ++i) {
      out.spread = std::max(out.spread, std::abs(polished->x[i] - ascent_best[i]));
    }
    out.disagreement =
        ascent_value > value + options.disagreement_tol * (1.0 + std::abs(value));
    if (value >= ascent_value - options.disagreement_tol * (1.0 + std::abs(value))) {
      out.x = polished->x;
      out.objective = value;
      out.lambda1 = polished->l1;
      out.lambda2 = polished->l2;
    }
  } else {
    out.disagreement = true;
  }
  return out;
}

}  // namespace freqadmm::kkt
