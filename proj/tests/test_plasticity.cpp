#include <gtest/gtest.h>

#include "fracdmg/driver.hpp"
#include "fracdmg/plasticity.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace {

using fracdmg::FractionalOrder;
using fracdmg::MaterialParams;

MaterialParams monotone_params(double beta_K) {
  MaterialParams p;
  p.E_pseudo = 50;
  p.beta_E = FractionalOrder(0.5);
  p.K_pseudo = 10;
  p.beta_K = FractionalOrder(beta_K);
  p.H = 0;
  p.tau_Y = 1;
  p.S = 1e-4;
  p.s_exp = 1;
  return p;
}

MaterialParams cyclic_params(double beta) {
  MaterialParams p;
  p.E_pseudo = 25;
  p.beta_E = FractionalOrder(beta);
  p.K_pseudo = 10;
  p.beta_K = FractionalOrder(beta);
  p.tau_Y = 1;
  p.S = 1;
  p.s_exp = 1;
  return p;
}

TEST(MaterialParams, ValidationNamesTheField) {
  auto p = monotone_params(0.3);
  EXPECT_NO_THROW(p.validate());
  p.S = 0;
  try {
    p.validate();
    FAIL() << "expected a parameter error";
  } catch (const fracdmg::ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("S_pa"), std::string::npos);
  }
  p = monotone_params(0.3);
  p.H = -1;
  EXPECT_THROW(p.validate(), fracdmg::ParameterError);
  p = monotone_params(0.3);
  p.beta_E = FractionalOrder(1.0);
  EXPECT_THROW(p.validate(), fracdmg::ParameterError);
}

TEST(TrialState, FirstStepHandValues) {
  const auto p = monotone_params(0.5);
  const double dt = 1.0 / 1024;
  fracdmg::StateHistory h;
  const auto zero = fracdmg::trial_state(h, p, 0.0, dt);
  EXPECT_EQ(zero.tau_trial, 0.0);
  EXPECT_EQ(zero.f_trial, -p.tau_Y);

  const double eps = 1e-5;
  const auto tr = fracdmg::trial_state(h, p, eps, dt);
  const double want = p.E_pseudo * eps / (std::pow(dt, 0.5) * std::tgamma(1.5));
  EXPECT_NEAR(tr.tau_trial, want, 1e-15 * want);
  EXPECT_NEAR(tr.f_trial, want - p.tau_Y, 1e-15);
  EXPECT_LE(tr.f_trial, 0.0);
}

TEST(PlasticSlip, HandValues) {
  MaterialParams p = monotone_params(0.5);
  const double g = std::tgamma(1.5);
  const double dg = fracdmg::plastic_slip_increment(g * 60.0, 0.0, p, 1.0);
  EXPECT_NEAR(dg, g * g, 1e-15);
  EXPECT_NEAR(fracdmg::plastic_slip_increment(g * 60.0, 0.5, p, 1.0), 2 * dg, 1e-15);
  EXPECT_GT(fracdmg::plastic_slip_increment(1e-300, 0.0, p, 1.0), 0.0);
  EXPECT_THROW(fracdmg::plastic_slip_increment(0.0, 0.0, p, 1.0), fracdmg::ContractViolation);
  EXPECT_THROW(fracdmg::plastic_slip_increment(-1.0, 0.0, p, 1.0), fracdmg::ContractViolation);
  EXPECT_THROW(fracdmg::plastic_slip_increment(1.0, 1.0, p, 1.0), fracdmg::MaterialFailure);
}

TEST(StressUpdate, HandValues) {
  const auto p = monotone_params(0.5);
  EXPECT_EQ(fracdmg::stress_update(3.5, 0.0, 0.2, p, 0.01), 3.5);
  const double tau = fracdmg::stress_update(-3.5, 0.001, 0.2, p, 0.01);
  EXPECT_LT(tau, 0.0);
  EXPECT_NEAR(tau, -3.5 + 0.8 * 50 * 0.001 / (std::pow(0.01, 0.5) * std::tgamma(1.5)), 1e-14);
}

TEST(StressUpdate, ReturnsToYieldSurface) {
  // K = 0, H = 0 leaves only tau_Y; pick a trial state well outside and check f_{n+1} = 0.
  MaterialParams p = monotone_params(0.5);
  p.K_pseudo = 1e-12;
  const double dt = 1e-3, D = 0.3;
  const double tau_trial = 7.0;
  const double f = std::abs(tau_trial) - (1 - D) * p.tau_Y;
  const double dg = fracdmg::plastic_slip_increment(f, D, p, dt);
  const double tau = fracdmg::stress_update(tau_trial, dg, D, p, dt);
  const std::vector<double> alpha{0.0, dg};
  EXPECT_NEAR(fracdmg::yield_function(tau, alpha, D, p, dt), 0.0, 1e-10 * p.tau_Y);
}

TEST(YieldFunction, HandValue) {
  const auto p = monotone_params(0.5);
  EXPECT_EQ(fracdmg::yield_function(0.0, std::vector<double>{0.0, 0.0}, 0.0, p, 0.1), -p.tau_Y);
}

TEST(YieldFunction, SampledJensenConvexity) {
  // f(tau, R) = |tau| - (1 - D)(tau_Y + R) with R = K D^beta(alpha) + H alpha is convex in (tau, alpha).
  auto p = monotone_params(0.4);
  p.H = 3.0;
  const double dt = 0.01;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> tau_dist(-5, 5), alpha_dist(0, 0.2), unit(0, 1);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const double D = 0.9 * unit(rng);
    const double xi = unit(rng);
    const double t1 = tau_dist(rng), t2 = tau_dist(rng);
    std::vector<double> a1{0.0, 0.05, alpha_dist(rng)}, a2{0.0, 0.01, alpha_dist(rng)}, am(3);
    for (int k = 0; k < 3; ++k) am[k] = xi * a1[k] + (1 - xi) * a2[k];
    const double lhs = fracdmg::yield_function(xi * t1 + (1 - xi) * t2, am, D, p, dt);
    const double rhs =
        xi * fracdmg::yield_function(t1, a1, D, p, dt) + (1 - xi) * fracdmg::yield_function(t2, a2, D, p, dt);
    // Allow only floating-point rounding of the affine part.
    if (lhs > rhs + 1e-13 * (1 + std::abs(rhs))) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(DamageNewton, HandValues) {
  const auto zero = fracdmg::damage_newton(0.3, 0.0, -5.0, 1.0, 1.0);
  EXPECT_EQ(zero.D, 0.3);
  EXPECT_EQ(zero.iterations, 1);
  // drive = dgamma (-Y/S)^s = 0.09
  const auto sol = fracdmg::damage_newton(0.0, 0.09, -1.0, 1.0, 1.0);
  EXPECT_NEAR(sol.D, 0.1, 1e-12);
  EXPECT_NEAR(sol.D, (1 - std::sqrt(1 - 0.36)) / 2, 1e-12);
}

TEST(DamageNewton, MatchesQuadraticRootOracle) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 5000; ++trial) {
    const double D_n = 0.95 * unit(rng);
    const double Y = -(0.01 + 3 * unit(rng));
    const double S = 0.1 + unit(rng);
    const double s = 0.5 + 2 * unit(rng);
    // Drives up to just below the double root (1 - D_n)^2 / 4.
    const double drive = 0.2499 * unit(rng) * (1 - D_n) * (1 - D_n);
    const double dg = drive / std::pow(-Y / S, s);
    const double want = oracle::damage_root(D_n, drive);
    if (want >= 1 - 1e-6) continue;
    const auto sol = fracdmg::damage_newton(D_n, dg, Y, S, s);
    ASSERT_NEAR(sol.D, want, 1e-12) << D_n << ' ' << drive;
    ASSERT_GE(sol.D, D_n);
    ASSERT_NEAR(fracdmg::damage_quadratic_root(D_n, drive), want, 1e-12);
  }
}

TEST(DamageNewton, SignalsFailureWithoutRoot) {
  // (1 - D_n)^2 < 4 drive: the damage equation has no admissible root.
  EXPECT_THROW(fracdmg::damage_newton(0.5, 1.0, -1.0, 1.0, 1.0), fracdmg::MaterialFailure);
  EXPECT_THROW(fracdmg::damage_quadratic_root(0.5, 1.0), fracdmg::MaterialFailure);
  EXPECT_THROW(fracdmg::damage_newton(0.0, 0.1, 1.0, 1.0, 1.0), fracdmg::ParameterError);
  EXPECT_THROW(fracdmg::damage_newton(1.0, 0.1, -1.0, 1.0, 1.0), fracdmg::ParameterError);
}

TEST(DamageNewton, NonConvergenceCarriesLastIterate) {
  try {
    fracdmg::damage_newton(0.0, 0.2, -1.0, 1.0, 1.0, 1e-300, 2);
    FAIL() << "expected a numerical error";
  } catch (const fracdmg::NumericalError& e) {
    EXPECT_GT(e.last_iterate(), 0.0);
    EXPECT_LT(e.last_iterate(), 1.0);
  }
}

TEST(Step, ZeroStrainStaysZero) {
  const auto p = monotone_params(0.5);
  fracdmg::ReturnMapper mapper(p, 0.01, 50);
  fracdmg::StateHistory h;
  for (int n = 0; n < 50; ++n) mapper.step(h, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const auto r = h.row(k);
    for (double v : {r.eps_total, r.eps_vp, r.eps_ve, r.alpha, r.gamma_increment, r.D, r.tau, r.Y_ve}) ASSERT_EQ(v, 0.0);
  }
}

TEST(Step, FreeFunctionExtendsCopy) {
  const auto p = monotone_params(0.5);
  const fracdmg::StateHistory h0;
  const auto h1 = fracdmg::step(h0, 1e-3, p, 1e-3);
  EXPECT_EQ(h0.size(), 1u);
  EXPECT_EQ(h1.size(), 2u);
  EXPECT_EQ(h1.eps_total()[1], 1e-3);
}

TEST(Step, ElasticRegimeIsScottBlairElement) {
  auto p = monotone_params(0.5);
  p.tau_Y = 1e9;
  const double dt = 0.01;
  const fracdmg::LoadProgram load = fracdmg::Sinusoid{0.02, 3.0};
  const fracdmg::TimeGrid grid{2.0, 200};
  const auto report = fracdmg::simulate(p, grid, load, fracdmg::EnergyMode::direct);
  ASSERT_TRUE(report.status.completed());
  const auto eps = fracdmg::sample(load, grid);
  for (std::size_t n = 1; n <= grid.N; ++n) {
    const std::vector<double> head(eps.begin(), eps.begin() + static_cast<std::ptrdiff_t>(n + 1));
    const double want = p.E_pseudo * static_cast<double>(oracle::caputo_l1(head, 0.5L, dt));
    ASSERT_NEAR(report.history.tau()[n], want, 1e-12 * std::max(1.0, std::abs(want))) << "n=" << n;
    ASSERT_EQ(report.history.D()[n], 0.0);
    ASSERT_EQ(report.history.alpha()[n], 0.0);
  }
}

TEST(Step, StrainReversalBelowYieldStaysElastic) {
  auto p = monotone_params(0.5);
  p.tau_Y = 1e9;
  const double dt = 0.01;
  fracdmg::ReturnMapper mapper(p, dt, 4);
  fracdmg::StateHistory h;
  const std::vector<double> eps{0.0, 0.01, -0.005, 0.002};
  for (std::size_t n = 1; n < eps.size(); ++n) {
    mapper.step(h, eps[n]);
    const std::vector<double> head(eps.begin(), eps.begin() + static_cast<std::ptrdiff_t>(n + 1));
    EXPECT_NEAR(h.tau()[n], p.E_pseudo * fracdmg::caputo_l1(head, p.beta_E, dt), 1e-12);
  }
}

void check_invariants(const fracdmg::StateHistory& h, const MaterialParams& p, double dt) {
  fracdmg::ReturnMapper mapper(p, dt, h.size());
  for (std::size_t k = 1; k < h.size(); ++k) {
    // eps_ve is defined as eps - eps_vp; the sum then reproduces eps to the last bit of rounding.
    ASSERT_EQ(h.eps_ve()[k], h.eps_total()[k] - h.eps_vp()[k]) << "k=" << k;
    ASSERT_LE(std::abs(h.eps_ve()[k] + h.eps_vp()[k] - h.eps_total()[k]),
              std::numeric_limits<double>::epsilon() * std::max(std::abs(h.eps_total()[k]), std::abs(h.eps_vp()[k])));
    ASSERT_GE(h.gamma_increments()[k], 0.0);
    ASSERT_GE(h.alpha()[k], h.alpha()[k - 1]);
    ASSERT_GE(h.D()[k], h.D()[k - 1]);
    ASSERT_LT(h.D()[k], 1.0);
    ASSERT_LE(h.Y_ve()[k], 0.0);
    ASSERT_GE(-h.Y_ve()[k] * (h.D()[k] - h.D()[k - 1]), 0.0);
    if (h.gamma_increments()[k] > 0.0) {
      // Stress and yield use the damage of the previous step.
      const double f = mapper.yield(h.tau()[k], h.alpha().first(k + 1), h.D()[k - 1]);
      ASSERT_LE(std::abs(f), 1e-10 * p.tau_Y) << "k=" << k;
      // sign(tau) = sign(tau_trial): eps_vp moved in the direction of the stress.
      ASSERT_EQ(fracdmg::sign_of(h.eps_vp()[k] - h.eps_vp()[k - 1]), fracdmg::sign_of(h.tau()[k]));
      ASSERT_GT(h.f_trial()[k], 0.0);
    } else {
      ASSERT_LE(h.f_trial()[k], 0.0);
      ASSERT_EQ(h.D()[k], h.D()[k - 1]);
    }
  }
}

TEST(Step, InvariantsMonotone) {
  for (double bK : {0.3, 0.5, 0.7}) {
    const auto p = monotone_params(bK);
    const fracdmg::TimeGrid grid{0.03125, 512};
    const auto r = fracdmg::simulate(p, grid, fracdmg::LinearRamp{0.64});
    ASSERT_TRUE(r.status.completed());
    check_invariants(r.history, p, grid.dt());
    EXPECT_GT(r.history.D().back(), 0.0);
  }
}

TEST(Step, InvariantsCyclicUntilFailure) {
  for (double beta : {0.3, 0.5, 0.7}) {
    const auto p = cyclic_params(beta);
    const fracdmg::TimeGrid grid{2.0, 1600};
    const auto r = fracdmg::simulate(p, grid, fracdmg::TriangleWave{0.1, 2 * std::numbers::pi});
    check_invariants(r.history, p, grid.dt());
  }
}

TEST(Step, SignSymmetry) {
  const auto p = cyclic_params(0.5);
  const fracdmg::TimeGrid grid{1.0, 400};
  const auto up = fracdmg::simulate(p, grid, fracdmg::TriangleWave{0.1, 2 * std::numbers::pi});
  const auto down = fracdmg::simulate(p, grid, fracdmg::TriangleWave{-0.1, 2 * std::numbers::pi});
  ASSERT_EQ(up.history.size(), down.history.size());
  for (std::size_t k = 0; k < up.history.size(); ++k) {
    ASSERT_EQ(up.history.tau()[k], -down.history.tau()[k]);
    ASSERT_EQ(up.history.D()[k], down.history.D()[k]);
  }
}

TEST(Step, HugeSKeepsMaterialUndamaged) {
  auto p = monotone_params(0.5);
  p.S = 1e30;
  const auto r = fracdmg::simulate(p, fracdmg::TimeGrid{0.03125, 256}, fracdmg::LinearRamp{0.64});
  ASSERT_TRUE(r.status.completed());
  for (double D : r.history.D()) {
    ASSERT_LT(D, 1e-30);
    ASSERT_EQ(1.0 - D, 1.0);
  }
  EXPECT_GT(r.history.alpha().back(), 0.0);
}

TEST(Step, FirstYieldingStepIsPlastic) {
  const auto p = monotone_params(0.5);
  const fracdmg::TimeGrid grid{0.03125, 256};
  const auto r = fracdmg::simulate(p, grid, fracdmg::LinearRamp{0.64});
  std::size_t first = 0;
  for (std::size_t k = 1; k < r.history.size() && first == 0; ++k) {
    if (r.history.f_trial()[k] > 0.0) first = k;
  }
  ASSERT_GT(first, 0u);
  EXPECT_GT(r.history.gamma_increments()[first], 0.0);
  for (std::size_t k = 1; k < first; ++k) EXPECT_EQ(r.history.gamma_increments()[k], 0.0);
}

TEST(Step, DamageGrowsWithHardeningOrder) {
  double prev_D = -1.0, prev_Y = 0.0;
  for (double bK : {0.3, 0.5, 0.7}) {
    const auto r = fracdmg::simulate(monotone_params(bK), fracdmg::TimeGrid{0.03125, 512}, fracdmg::LinearRamp{0.64});
    ASSERT_TRUE(r.status.completed());
    EXPECT_GT(r.history.D().back(), prev_D) << "beta_K=" << bK;
    EXPECT_GT(-r.history.Y_ve().back(), prev_Y) << "beta_K=" << bK;
    prev_D = r.history.D().back();
    prev_Y = -r.history.Y_ve().back();
  }
}

TEST(Step, DirectAndFftPathsAgree) {
  const auto p = monotone_params(0.5);
  const fracdmg::TimeGrid grid{0.03125, 300};
  const auto a = fracdmg::simulate(p, grid, fracdmg::LinearRamp{0.64}, fracdmg::EnergyMode::direct);
  const auto b = fracdmg::simulate(p, grid, fracdmg::LinearRamp{0.64}, fracdmg::EnergyMode::fft);
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    ASSERT_NEAR(a.history.tau()[k], b.history.tau()[k], 1e-10);
    ASSERT_NEAR(a.history.D()[k], b.history.D()[k], 1e-10);
  }
}

TEST(Step, FailureLeavesHistoryUnchanged) {
  auto p = cyclic_params(0.7);
  const fracdmg::TimeGrid grid{10.0, 32000};
  fracdmg::ReturnMapper mapper(p, grid.dt(), grid.N);
  fracdmg::StateHistory h;
  const fracdmg::LoadProgram load = fracdmg::TriangleWave{0.1, 8 * std::numbers::pi};
  bool failed = false;
  for (std::size_t n = 0; n < grid.N && !failed; ++n) {
    const auto before = h;
    try {
      mapper.step(h, fracdmg::strain_at(load, grid.t(n + 1)));
    } catch (const fracdmg::MaterialFailure&) {
      failed = true;
      EXPECT_TRUE(h == before);
      EXPECT_LT(h.D().back(), 1.0);
    }
    if (n > 3000) break;
  }
  EXPECT_TRUE(failed);
}

}  // namespace
