#include "ssmlab/signals.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ssmlab;

namespace {

ChebyshevSignal unit_coeff(std::size_t j) {
  ChebyshevSignal sig;
  sig.coeffs[j - 1] = 1.0;
  return sig;
}

}  // namespace

TEST(SampleSignal, Deterministic) {
  EXPECT_EQ(sample_signal(9).coeffs, sample_signal(9).coeffs);
  EXPECT_NE(sample_signal(9).coeffs, sample_signal(10).coeffs);
  EXPECT_EQ(sample_signal(9).scale, 1.0);
}

TEST(SampleSignal, LeadingCoefficientIsStandardNormal) {
  const int n = 10'000;
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < n; ++s) {
    const double c = sample_signal(static_cast<std::uint64_t>(s)).coeffs[0];
    sum += c;
    sq += c * c;
  }
  const double mean = sum / n;
  const double var = (sq - n * mean * mean) / (n - 1);
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(Eval, UnitCoefficients) {
  EXPECT_DOUBLE_EQ(eval(unit_coeff(1), 0.75), 0.5);
  EXPECT_DOUBLE_EQ(eval(unit_coeff(2), 1.0), 1.0);
  EXPECT_THROW(eval(unit_coeff(1), 1.5), InvalidArgument);
  EXPECT_THROW(eval(unit_coeff(1), -0.01), InvalidArgument);
}

TEST(Eval, MatchesTrigonometricForm) {
  const auto sig = sample_signal(21);
  for (int i = 0; i < 100; ++i) {
    const double t = (i + 0.5) / 100.0;
    const double s = 2.0 * t - 1.0;
    double direct = 0.0;
    for (int j = 1; j <= 20; ++j) direct += sig.coeffs[j - 1] * std::cos(j * std::acos(s));
    EXPECT_NEAR(eval(sig, t), direct, 1e-10);
  }
}

TEST(Eval, LinearInScale) {
  const auto sig = sample_signal(22);
  for (int i = 0; i <= 50; ++i) {
    const double t = i / 50.0;
    EXPECT_DOUBLE_EQ(eval(sig.scaled(32.0), t), 32.0 * eval(sig, t));
  }
}

TEST(Derivative, MatchesCentralDifference) {
  const auto sig = sample_signal(23);
  const double h = 1e-6;
  for (int i = 1; i < 40; ++i) {
    const double t = i / 40.0;
    const double fd = (sig(t + h) - sig(t - h)) / (2.0 * h);
    EXPECT_NEAR(sig.derivative(t), fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Hold, FirstIntervalUsesInitialValue) {
  const auto sig = sample_signal(24);
  const auto v = hold(sig, 0.1);
  for (double t : {0.0, 0.03, 0.0999}) EXPECT_EQ(v(t), sig(0.0));
}

TEST(Hold, DeviationWithinLipschitzTimesTau) {
  const auto sig = sample_signal(25);
  const double l_u = lipschitz_bound(sig);
  CounterRng rng(25, Stream::Fixture);
  for (double tau : {1.0 / 8, 1.0 / 64, 1.0 / 1000}) {
    const auto v = hold(sig, tau);
    for (int i = 0; i < 1000; ++i) {
      const double t = rng.uniform();
      EXPECT_LE(std::abs(sig(t) - v(t)), l_u * tau);
    }
  }
}

TEST(Hold, UnitTauIsConstantOnInterval) {
  const auto sig = sample_signal(26);
  const auto v = hold(sig, 1.0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(v(i / 100.0), sig(0.0));
}

TEST(Hold, ExactAtGridPoints) {
  const auto sig = sample_signal(27);
  const double tau = 1.0 / 64.0;
  const auto v = hold(sig, tau);
  for (int k = 0; k <= 64; ++k) EXPECT_EQ(v(k * tau), sig(k * tau));
  EXPECT_THROW(hold(sig, 0.0), InvalidArgument);
  EXPECT_THROW(hold(sig, 1.5), InvalidArgument);
}

TEST(LipschitzBound, LinearTerm) {
  EXPECT_DOUBLE_EQ(lipschitz_bound(unit_coeff(1)), 2.02);
}

TEST(LipschitzBound, ExactlyLinearInScale) {
  const auto sig = sample_signal(28);
  EXPECT_EQ(lipschitz_bound(sig.scaled(32.0)), 32.0 * lipschitz_bound(sig));
}

TEST(LipschitzBound, StableUnderGridRefinement) {
  const auto sig = sample_signal(29);
  const double coarse = lipschitz_bound(sig);
  const double fine = lipschitz_bound(sig, 10 * (std::size_t{1} << 14));
  EXPECT_NEAR(coarse / fine, 1.0, 0.01);
}

TEST(LipschitzBound, DominatesDifferenceQuotients) {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const auto sig = sample_signal(seed);
    const double l_u = lipschitz_bound(sig);
    CounterRng rng(seed, Stream::Fixture);
    for (int i = 0; i < 2000; ++i) {
      const double t1 = rng.uniform(), t2 = rng.uniform();
      if (t1 == t2) continue;
      EXPECT_LE(std::abs(sig(t1) - sig(t2)) / std::abs(t1 - t2), l_u);
    }
  }
}

TEST(MaxModulus, BoundsSamples) {
  const auto sig = sample_signal(36);
  const double m = max_modulus(sig);
  for (int i = 0; i <= 997; ++i) EXPECT_LE(std::abs(sig(i / 997.0)), m);
}
