#include "ssmlab/refinement_harness.hpp"
#include "ssmlab/signals.hpp"
#include "ssmlab/ssm_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace ssmlab;

namespace {

std::vector<double> grid_samples(const ChebyshevSignal& sig, double tau) {
  const auto n = static_cast<std::size_t>(std::llround(1.0 / tau));
  std::vector<double> u(n + 1);
  for (std::size_t k = 0; k <= n; ++k) u[k] = sig(static_cast<double>(k) * tau);
  return u;
}

ContinuousSSM random_s6(std::uint64_t seed, std::size_t n = 8) {
  CounterRng rng(seed, Stream::Fixture);
  std::vector<cplx> b(n), c(n);
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = rng.normal();
  return ContinuousSSM::s6(default_a_diag(n), b, c, 0.0, rng.normal(), softplus_inv(0.01));
}

}  // namespace

TEST(EvalMaps, S4ReturnsConstants) {
  const auto sys = ContinuousSSM::s4({{-1.0, 0.0}}, {{1.0, 0.0}}, {{2.0, 0.0}}, 0.0, 0.01);
  const auto m = eval_maps(sys, 5.0);
  EXPECT_EQ(m.b_of_u[0], cplx(1.0, 0.0));
  EXPECT_EQ(m.c_of_u[0], cplx(2.0, 0.0));
  EXPECT_EQ(m.delta_of_u, 0.01);
}

TEST(EvalMaps, S6AtZeroInput) {
  const auto sys = ContinuousSSM::s6({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 1.0, 0.0);
  const auto m = eval_maps(sys, 0.0);
  EXPECT_EQ(m.b_of_u[0], cplx(0.0, 0.0));
  EXPECT_EQ(m.c_of_u[0], cplx(0.0, 0.0));
  EXPECT_NEAR(m.delta_of_u, std::numbers::ln2, 1e-15);
}

TEST(EvalMaps, S6WithDefaultGateBias) {
  const auto sys =
      ContinuousSSM::s6({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 0.0, softplus_inv(0.01));
  const auto m = eval_maps(sys, 2.0);
  EXPECT_EQ(m.b_of_u[0], cplx(2.0, 0.0));
  EXPECT_NEAR(m.delta_of_u, 0.01, 1e-15);
}

TEST(Softplus, OverflowSafeAndInvertible) {
  EXPECT_EQ(softplus(1000.0), 1000.0);
  EXPECT_NEAR(softplus(-40.0), std::exp(-40.0), 1e-30);
  for (double y : {1e-12, 1e-3, 0.01, 1.0, 20.0, 50.0})
    EXPECT_NEAR(softplus(softplus_inv(y)), y, 1e-12 * std::max(1.0, y));
  EXPECT_THROW(softplus_inv(0.0), InvalidArgument);
}

TEST(Discretize, ZohHalfLife) {
  const auto sys =
      ContinuousSSM::s4({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, std::numbers::ln2);
  const std::vector<double> u{1.0};
  const auto d = discretize(sys, u, 1.0, Method::ZOH);
  EXPECT_NEAR(std::abs(d.abar[0][0] - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d.bbar[0][0] - 0.5), 0.0, 1e-15);
}

TEST(Discretize, BilinearExample) {
  const auto sys = ContinuousSSM::s4({{-2.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 1.0);
  const std::vector<double> u{1.0};
  const auto d = discretize(sys, u, 1.0, Method::Bilinear);
  EXPECT_NEAR(std::abs(d.abar[0][0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d.bbar[0][0] - 0.5), 0.0, 1e-15);
}

// Recomputes the first three S6 steps with real arithmetic only.
TEST(Discretize, S6FirstStepsMatchScalarRecomputation) {
  const std::uint64_t seed = 11;
  const auto pair = sample_pair(seed, 0, StudyConfig{});
  const auto& sys = pair.s6;
  const double tau = 1.0 / 16.0;
  const auto u = grid_samples(pair.input, tau);
  const std::vector<double> head(u.begin(), u.begin() + 3);
  const auto& gate = std::get<S6Gate>(sys.delta_params);

  for (Method method : {Method::ZOH, Method::Bilinear}) {
    const auto d = discretize(sys, head, tau, method);
    for (std::size_t k = 0; k < 3; ++k) {
      const double pre = gate.w_delta * head[k] + gate.b_delta;
      const double step = tau * std::log(1.0 + std::exp(pre));
      for (std::size_t j = 0; j < sys.order(); ++j) {
        const double ar = sys.a_diag[j].real(), ai = sys.a_diag[j].imag();
        const double br = sys.b[j].real() * head[k], bi = sys.b[j].imag() * head[k];
        double abar_r, abar_i, bbar_r, bbar_i;
        if (method == Method::ZOH) {
          const double mag = std::exp(step * ar);
          abar_r = mag * std::cos(step * ai);
          abar_i = mag * std::sin(step * ai);
          // (abar - 1) / a
          const double nr = abar_r - 1.0, ni = abar_i;
          const double den = ar * ar + ai * ai;
          const double qr = (nr * ar + ni * ai) / den, qi = (ni * ar - nr * ai) / den;
          bbar_r = qr * br - qi * bi;
          bbar_i = qr * bi + qi * br;
        } else {
          const double hr = 0.5 * step * ar, hi = 0.5 * step * ai;
          const double dr = 1.0 - hr, di = -hi;
          const double den = dr * dr + di * di;
          const double pr = 1.0 + hr, pi = hi;
          abar_r = (pr * dr + pi * di) / den;
          abar_i = (pi * dr - pr * di) / den;
          const double sr = step * br, si = step * bi;
          bbar_r = (sr * dr + si * di) / den;
          bbar_i = (si * dr - sr * di) / den;
        }
        EXPECT_NEAR(d.abar[k][j].real(), abar_r, 1e-13);
        EXPECT_NEAR(d.abar[k][j].imag(), abar_i, 1e-13);
        EXPECT_NEAR(d.bbar[k][j].real(), bbar_r, 1e-13);
        EXPECT_NEAR(d.bbar[k][j].imag(), bbar_i, 1e-13);
        EXPECT_NEAR(std::abs(d.cbar[k][j] - sys.c[j] * head[k]), 0.0, 1e-15);
      }
    }
    EXPECT_EQ(d.dbar, sys.d);
  }
}

TEST(Discretize, Errors) {
  const std::vector<double> u{1.0};
  const auto zero_pole = ContinuousSSM::s4({{0.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 1.0);
  EXPECT_THROW(discretize(zero_pole, u, 0.1, Method::ZOH), DegeneratePoleError);
  EXPECT_NO_THROW(discretize(zero_pole, u, 0.1, Method::Bilinear));
  const auto resonant = ContinuousSSM::s4({{2.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 1.0);
  EXPECT_THROW(discretize(resonant, u, 1.0, Method::Bilinear), SingularResolventError);
  const auto ok = ContinuousSSM::s4({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 1.0);
  EXPECT_THROW(discretize(ok, u, 0.0, Method::ZOH), InvalidArgument);
  EXPECT_THROW(discretize(ok, std::vector<double>{}, 0.1, Method::ZOH), InvalidArgument);
  EXPECT_THROW(ContinuousSSM::s4({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 0.0),
               InvalidArgument);
  EXPECT_THROW(ContinuousSSM::s4({}, {}, {}, 0.0, 1.0), InvalidArgument);
}

TEST(Discretize, ZohIsContractiveForStablePoles) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sys = random_s6(seed);
    ASSERT_TRUE(sys.is_stable());
    const auto u = grid_samples(sample_signal(seed).scaled(32.0), 1.0 / 64.0);
    const auto d = discretize(sys, u, 1.0 / 64.0, Method::ZOH);
    // |exp(delta a)| rounds to 1 once softplus underflows delta.
    for (std::size_t k = 0; k < d.abar.size(); ++k)
      for (std::size_t i = 0; i < d.abar[k].size(); ++i) {
        const double v = std::abs(d.abar[k][i]);
        EXPECT_LE(v, 1.0);
        const double step = d.tau * map_scales(sys, u[k]).delta;
        if (step * std::abs(sys.a_diag[i].real()) > 1e-12) EXPECT_LT(v, 1.0);
      }
  }
}

TEST(RunDiscrete, HandRecursion) {
  DiscreteSSM d;
  d.abar.assign(2, {cplx(0.5)});
  d.bbar.assign(2, {cplx(0.5)});
  d.cbar.assign(2, {cplx(1.0)});
  d.dbar = 0.0;
  d.tau = 0.25;
  const std::vector<double> u{1.0, 1.0};
  const auto y = run_discrete(d, u);
  EXPECT_EQ(y.values, (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(y.times, (std::vector<double>{0.0, 0.25}));
}

TEST(RunDiscrete, PureFeedthrough) {
  DiscreteSSM d;
  d.abar.assign(2, {cplx(0.0)});
  d.bbar.assign(2, {cplx(0.0)});
  d.cbar.assign(2, {cplx(0.0)});
  d.dbar = 1.0;
  const std::vector<double> u{3.0, -2.0};
  EXPECT_EQ(run_discrete(d, u).values, (std::vector<double>{3.0, -2.0}));
}

TEST(RunDiscrete, LengthMismatchThrows) {
  DiscreteSSM d;
  d.abar.assign(2, {cplx(0.0)});
  d.bbar.assign(2, {cplx(0.0)});
  d.cbar.assign(2, {cplx(0.0)});
  const std::vector<double> u{1.0};
  EXPECT_THROW(run_discrete(d, u), InvalidArgument);
}

TEST(RunDiscrete, MatchesCumulativeProductSum) {
  const std::size_t len = 20, n = 4;
  CounterRng rng(3, Stream::Fixture);
  auto rc = [&] { return cplx(rng.uniform(-0.9, 0.9), rng.uniform(-0.4, 0.4)); };
  DiscreteSSM d;
  d.abar.assign(len, std::vector<cplx>(n));
  d.bbar = d.abar;
  d.cbar = d.abar;
  for (std::size_t k = 0; k < len; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      d.abar[k][j] = rc();
      d.bbar[k][j] = rc();
      d.cbar[k][j] = rc();
    }
  d.dbar = 0.7;
  std::vector<double> u(len);
  for (auto& v : u) v = rng.normal();

  const auto y = run_discrete(d, u).values;
  for (std::size_t k = 0; k < len; ++k) {
    cplx acc{};
    for (std::size_t j = 0; j < n; ++j) {
      cplx state{};
      for (std::size_t m = 0; m < k; ++m) {
        cplx prod(1.0);
        for (std::size_t i = m + 1; i < k; ++i) prod *= d.abar[i][j];
        state += prod * d.bbar[m][j] * u[m];
      }
      acc += d.cbar[k][j] * state;
    }
    EXPECT_NEAR(y[k], acc.real() + d.dbar * u[k], 1e-12);
  }
}

TEST(RunDiscrete, ConjugatePairsGiveRealOutput) {
  const cplx a1(-0.5, 2.0), b1(0.3, -1.1), c1(1.4, 0.2);
  const auto sys = ContinuousSSM::s6({a1, std::conj(a1), cplx(-1.0)},
                                     {b1, std::conj(b1), cplx(0.8)},
                                     {c1, std::conj(c1), cplx(-0.6)}, 0.2, 0.7, 0.1);
  const auto u = grid_samples(sample_signal(5), 1.0 / 128.0);
  for (Method m : {Method::ZOH, Method::Bilinear}) {
    const auto yc = run_discrete_complex(discretize(sys, u, 1.0 / 128.0, m), u);
    for (cplx v : yc) EXPECT_LT(std::abs(v.imag()), 1e-12);
  }
}

TEST(SimulateContinuous, ScalarStepResponse) {
  const auto sys = ContinuousSSM::s4({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.0, 1.0);
  const auto traj = simulate_continuous(sys, [](double) { return 1.0; }, std::ldexp(1.0, -14));
  EXPECT_EQ(traj.size(), (std::size_t{1} << 14) + 1);
  EXPECT_NEAR(traj.values.back(), 1.0 - std::exp(-1.0), 1e-8);
  EXPECT_NO_THROW(traj.check());
}

TEST(SimulateContinuous, ZeroInputGivesZero) {
  const auto sys = random_s6(2);
  const auto traj = simulate_continuous(sys, [](double) { return 0.0; }, 1.0 / 1024.0);
  for (double v : traj.values) EXPECT_EQ(v, 0.0);
}

TEST(SimulateContinuous, FourthOrderSelfCheck) {
  // Degree-20 inputs need h well below 1/400 before the asymptotic regime kicks in.
  for (std::uint64_t seed : {2, 3, 4, 6}) {
    const auto sys = random_s6(seed);
    const auto sig = sample_signal(seed);
    const double y1 = simulate_continuous(sys, sig, std::ldexp(1.0, -9)).values.back();
    const double y2 = simulate_continuous(sys, sig, std::ldexp(1.0, -10)).values.back();
    const double y3 = simulate_continuous(sys, sig, std::ldexp(1.0, -11)).values.back();
    const double ratio = (y1 - y2) / (y2 - y3);
    EXPECT_GT(ratio, 12.0) << seed;
    EXPECT_LT(ratio, 20.0) << seed;
  }
}

TEST(SimulateContinuous, RejectsNonDivisibleHorizon) {
  const auto sys = random_s6(1);
  EXPECT_THROW(simulate_continuous(sys, [](double) { return 0.0; }, 0.3), InvalidArgument);
}

TEST(SampleAt, GridHitsOnly) {
  const Trajectory traj{{0.0, 0.5, 1.0}, {3.0, 4.0, 5.0}};
  const std::vector<double> ends{0.0, 1.0};
  EXPECT_EQ(sample_at(traj, ends), (std::vector<double>{3.0, 5.0}));
  const std::vector<double> off{0.25};
  EXPECT_THROW(sample_at(traj, off), OffGridError);
}

TEST(SampleAt, CoarseGridPicksEveryStrideValue) {
  const auto sys = random_s6(8);
  const auto ref = simulate_continuous(sys, sample_signal(8), std::ldexp(1.0, -14));
  std::vector<double> ts;
  for (int k = 0; k <= 16; ++k) ts.push_back(k / 16.0);
  const auto got = sample_at(ref, ts);
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k], ref.values[k << 10]);
}

// Breakpoints only at multiples of τ: ZOH reproduces the continuous solution.
TEST(ZohExactness, HeldInputsMatchReference) {
  const double tau_fine = std::ldexp(1.0, -14);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (Flavor flavor : {Flavor::S4, Flavor::S6}) {
      const auto pair = sample_pair(seed, 0, StudyConfig{});
      const auto& sys = flavor == Flavor::S4 ? pair.s4 : pair.s6;
      const double tau = 1.0 / 32.0;
      const auto held = hold(pair.input, tau);
      const auto ref = simulate_continuous(sys, held, tau_fine);
      std::vector<double> u, ts;
      for (int k = 0; k <= 32; ++k) {
        ts.push_back(k * tau);
        u.push_back(held(k * tau));
      }
      const auto y = run_discrete(discretize(sys, u, tau, Method::ZOH), u).values;
      const auto yr = sample_at(ref, ts);
      for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(y[k], yr[k], 1e-8);
    }
  }
}

// Slope of log error vs log τ over τ ∈ {2^-10..2^-4} for one seeded pair.
TEST(Convergence, FirstOrderForBothMethodsAndFlavors) {
  StudyConfig cfg;
  const auto pair = sample_pair(7, 1, cfg);
  const auto ref_s4 = simulate_continuous(pair.s4, pair.input, cfg.tau_ref);
  const auto ref_s6 = simulate_continuous(pair.s6, pair.input, cfg.tau_ref);
  for (Flavor flavor : {Flavor::S4, Flavor::S6}) {
    const auto& sys = flavor == Flavor::S4 ? pair.s4 : pair.s6;
    const auto& ref = flavor == Flavor::S4 ? ref_s4 : ref_s6;
    for (Method m : {Method::ZOH, Method::Bilinear}) {
      std::vector<double> taus, errs;
      for (int e = -10; e <= -4; ++e) {
        const double tau = std::ldexp(1.0, e);
        const auto u = grid_samples(pair.input, tau);
        std::vector<double> ts;
        for (std::size_t k = 0; k < u.size(); ++k) ts.push_back(static_cast<double>(k) * tau);
        const auto y = run_discrete(discretize(sys, u, tau, m), u).values;
        taus.push_back(tau);
        errs.push_back(rel_max_error(y, sample_at(ref, ts)));
      }
      const double slope = fit_order(taus, errs);
      EXPECT_GE(slope, 0.85) << to_string(flavor) << "/" << to_string(m);
      EXPECT_LE(slope, 1.3) << to_string(flavor) << "/" << to_string(m);
    }
  }
}
