#include <gtest/gtest.h>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>
#include <random>

#include "freqadmm/core/admm.hpp"
#include "freqadmm/core/catalog.hpp"
#include "freqadmm/core/errors.hpp"
#include "freqadmm/core/projection.hpp"
#include "freqadmm/kkt/oracle.hpp"
#include "support/oracles.hpp"

using namespace freqadmm;
using freqadmm::kkt::Direction;
using freqadmm::kkt::Situation;

namespace {

std::vector<UtilityFunction> first_n(std::vector<UtilityFunction> fs,
                                     std::size_t n) {
  fs.resize(n);
  return fs;
}

double objective(const testsupport::Instance& inst, const std::vector<double>& x) {
  return total_utility(inst.functions, x);
}

std::vector<double> upper_box(const ResourceBudget& b) {
  std::vector<double> up(b.size());
  const double sg = b.total_frequency(b.gamma);
  const double sa = b.total_storage(b.gamma);
  for (std::size_t i = 0; i < b.size(); ++i) {
    up[i] = std::min(b.c - (sg - b.gamma[i]),
                     (b.d - (sa - b.a[i] * b.gamma[i])) / b.a[i]);
  }
  return up;
}

}  // namespace

TEST(ReferenceSolve, AllocationScenarios) {
  const auto two = kkt::reference_solve(
      first_n(catalog::allocation_utilities(), 2), catalog::allocation_budget(2));
  EXPECT_NEAR(two.x[0], 1.0, 1e-6);
  EXPECT_NEAR(two.x[1], 4.0, 1e-6);
  EXPECT_FALSE(two.disagreement);

  const auto three = kkt::reference_solve(catalog::allocation_utilities(),
                                          catalog::allocation_budget(3));
  EXPECT_NEAR(three.x[0], 1.0, 1e-6);
  EXPECT_NEAR(three.x[1], 8.0 / 3.0, 1e-6);
  EXPECT_NEAR(three.x[2], 1.0, 1e-6);
}

TEST(ReferenceSolve, SlackCouplingsGiveClampedVertices) {
  // Vertices 2, 3 and 1.5 (clamped to gamma=2) cost 7 Hz and 21.5 MB.
  std::vector<UtilityFunction> fs{UtilityFunction::neg_quad(2.0, 0.0),
                                  UtilityFunction::neg_quad(3.0, 0.0),
                                  UtilityFunction::neg_quad(1.5, 0.0)};
  ResourceBudget b{20.0, 40.0, {1.0, 2.5, 3.0}, {1.0, 1.0, 2.0}};
  const auto r = kkt::reference_solve(fs, b);
  EXPECT_NEAR(r.x[0], 2.0, 1e-6);
  EXPECT_NEAR(r.x[1], 3.0, 1e-6);
  EXPECT_NEAR(r.x[2], 2.0, 1e-6);
}

TEST(CheckKkt, SufficientScenarioIsInterior) {
  const auto fs = first_n(catalog::allocation_utilities(), 2);
  const auto cert = kkt::check_kkt({1.0, 4.0}, fs, catalog::allocation_budget(2));
  EXPECT_EQ(cert.situation, Situation::Interior);
  EXPECT_EQ(cert.lambda1, 0.0);
  EXPECT_EQ(cert.lambda2, 0.0);
  EXPECT_EQ(cert.active_lower_bounds, (std::vector<std::size_t>{0}));
  EXPECT_NEAR(cert.stationarity_residual, 0.0, 1e-12);
}

TEST(CheckKkt, InsufficientScenarioHasStorageActive) {
  const auto cert = kkt::check_kkt({1.0, 8.0 / 3.0, 1.0},
                                   catalog::allocation_utilities(),
                                   catalog::allocation_budget(3));
  EXPECT_EQ(cert.situation, Situation::G2Active);
  EXPECT_GT(cert.lambda2, 0.0);
  EXPECT_EQ(cert.lambda1, 0.0);
  // h2'(8/3) / a2 = (8/3) / 3
  EXPECT_NEAR(cert.lambda2, 8.0 / 9.0, 1e-9);
  EXPECT_NEAR(cert.stationarity_residual, 0.0, 1e-9);
}

TEST(CheckKkt, InfeasiblePointIsRejected) {
  EXPECT_THROW(kkt::check_kkt({5.0, 5.0}, first_n(catalog::allocation_utilities(), 2),
                              catalog::allocation_budget(2)),
               ContractViolation);
}

TEST(CheckKkt, ReferenceSolutionsCertify) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 40; ++t) {
    const auto inst = testsupport::random_instance(rng, 2 + t % 3);
    const auto ref = kkt::reference_solve(inst.functions, inst.budget);
    const auto cert = kkt::check_kkt(ref.x, inst.functions, inst.budget, 1e-8);
    EXPECT_LE(cert.stationarity_residual, 1e-5);
    EXPECT_GE(cert.lambda1, -1e-9);
    EXPECT_GE(cert.lambda2, -1e-9);
    EXPECT_NEAR(cert.lambda1 * cert.g1, 0.0, 1e-6);
    EXPECT_NEAR(cert.lambda2 * cert.g2, 0.0, 1e-6);
  }
}

TEST(Predict, Directions) {
  auto p = kkt::predict_response_direction(Situation::G1Active, 0, 3);
  EXPECT_EQ(p.devices, (std::vector<Direction>{Direction::Target, Direction::DownOrEqual,
                                               Direction::DownOrEqual}));
  p = kkt::predict_response_direction(Situation::Interior, 1, 3);
  EXPECT_EQ(p.devices, (std::vector<Direction>{Direction::Unchanged, Direction::Target,
                                               Direction::Unchanged}));
  p = kkt::predict_response_direction(Situation::G2Active, 1, 2);
  EXPECT_EQ(p.devices[0], Direction::DownOrEqual);
  EXPECT_FALSE(p.degenerate);
  p = kkt::predict_response_direction(Situation::BothActive, 0, 2);
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.devices[1], Direction::DownOrEqual);
  EXPECT_THROW(kkt::predict_response_direction(Situation::Interior, 3, 3),
               ContractViolation);
}

TEST(Dykstra, AgreesWithExhaustiveOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 20.0);
  for (int t = 0; t < 200; ++t) {
    const auto inst = testsupport::random_instance(rng, 1 + t % 5);
    std::vector<double> v(inst.budget.size());
    for (auto& x : v) x = u(rng);
    const auto z = kkt::dykstra_project(v, inst.budget, 1e-12);
    const auto o = testsupport::exhaustive_projection(v, inst.budget);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(z[i], o[i], 1e-7);
  }
}

TEST(ReferenceSolve, NoSobolPointBeatsTheOracle) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 4;
    const auto inst = testsupport::random_instance(rng, n);
    const auto ref = kkt::reference_solve(inst.functions, inst.budget);
    ASSERT_TRUE(inst.budget.contains(ref.x, 1e-9));
    const auto up = upper_box(inst.budget);
    boost::random::sobol qrng(n);
    boost::random::uniform_01<double> unit;
    double best = -1e300;
    std::vector<double> x(n);
    for (int k = 0; k < 100000; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = inst.budget.gamma[i] + unit(qrng) * (up[i] - inst.budget.gamma[i]);
      }
      if (!inst.budget.contains(x, 0.0)) continue;
      best = std::max(best, objective(inst, x));
    }
    EXPECT_LE(best, ref.objective + 1e-5) << "instance " << t;
  }
}

TEST(Marginals, EqualAndWeightedLaws) {
  std::mt19937_64 rng(123);
  int g1_cases = 0;
  int g2_cases = 0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = testsupport::random_instance(rng, 2 + t % 3);
    const auto ref = kkt::reference_solve(inst.functions, inst.budget);
    const auto cert = kkt::check_kkt(ref.x, inst.functions, inst.budget, 1e-8);
    if (!cert.active_lower_bounds.empty()) continue;
    std::vector<double> marg;
    for (std::size_t i = 0; i < ref.x.size(); ++i) {
      const double h = eval_derivative(inst.functions[i], ref.x[i]);
      marg.push_back(cert.situation == Situation::G2Active ? h / inst.budget.a[i] : h);
    }
    if (cert.situation == Situation::G1Active) ++g1_cases;
    else if (cert.situation == Situation::G2Active) ++g2_cases;
    else continue;
    for (double m : marg) EXPECT_NEAR(m, marg.front(), 1e-4);
  }
  EXPECT_GT(g1_cases + g2_cases, 0);
}

TEST(Response, InputShiftNeverRaisesOtherDevicesUnderActiveCoupling) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    auto inst = testsupport::random_instance(rng, 3);
    for (auto& f : inst.functions) f = UtilityFunction::quad_cubic(1.0, -(2 + 6 * u(rng)), 0.5 * u(rng), 0.0);
    const auto base = kkt::reference_solve(inst.functions, inst.budget);
    const auto cert = kkt::check_kkt(base.x, inst.functions, inst.budget, 1e-8);
    const std::size_t j = t % 3;
    auto shifted = inst.functions;
    shifted[j] = shifted[j].shifted(-(0.5 + 2.5 * u(rng)));
    const auto after = kkt::reference_solve(shifted, inst.budget);
    const auto pred = kkt::predict_response_direction(cert.situation, j, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      if (i == j) continue;
      if (pred.devices[i] == Direction::DownOrEqual) {
        EXPECT_LE(after.x[i], base.x[i] + 1e-4);
        ++checked;
      } else {
        // Unchanged holds while the manipulated optimum stays interior; a
        // large shift can push the point onto a coupling face.
        const auto post = kkt::check_kkt(after.x, shifted, inst.budget, 1e-8);
        if (post.situation == Situation::Interior) {
          EXPECT_NEAR(after.x[i], base.x[i], 1e-4);
        } else {
          EXPECT_LE(after.x[i], base.x[i] + 1e-4);
        }
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(AdmmVsOracle, RandomConcaveInstances) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 60; ++t) {
    const auto inst = testsupport::random_instance(rng, 1 + t % 4);
    const auto ref = kkt::reference_solve(inst.functions, inst.budget);
    const auto r = admm_solve(inst.functions, inst.budget);
    ASSERT_TRUE(r.converged) << "instance " << t;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      EXPECT_NEAR(r.x[i], ref.x[i], 1e-3) << "instance " << t;
    }
  }
}
