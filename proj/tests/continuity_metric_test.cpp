#include "ssmlab/continuity_metric.hpp"
#include "ssmlab/dynsys.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace ssmlab;

namespace {

SequenceSample alternating(std::size_t len) {
  std::vector<double> data;
  for (std::size_t k = 0; k < len; ++k) {
    data.push_back(k % 2 == 0 ? 1.0 : 0.0);
    data.push_back(k % 2 == 0 ? 0.0 : 1.0);
  }
  return SequenceSample(2, std::move(data));
}

SequenceSample sphere_tokens(std::size_t len, std::size_t dim, std::uint64_t seed) {
  CounterRng rng(seed, Stream::Fixture);
  std::vector<double> data;
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> z(dim);
    double n = 0.0;
    for (double& v : z) {
      v = rng.normal();
      n += v * v;
    }
    for (double v : z) data.push_back(v / std::sqrt(n));
  }
  return SequenceSample(dim, std::move(data));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(KernelCosine, Examples) {
  const std::vector<double> x{1.0, 2.0, -0.5}, nx{-1.0, -2.0, 0.5};
  const std::vector<double> e1{1.0, 0.0}, e2{0.0, 3.0}, zero{0.0, 0.0};
  EXPECT_DOUBLE_EQ(kernel_cosine(x, x), 1.0);
  EXPECT_DOUBLE_EQ(kernel_cosine(e1, e2), 0.5);
  EXPECT_NEAR(kernel_cosine(x, nx), 0.0, 1e-15);
  EXPECT_EQ(kernel_cosine(zero, e1), 0.5);
}

TEST(MuLag, AlternatingFixture) {
  const std::vector<SequenceSample> data{alternating(2048)};
  MetricConfig cfg;
  cfg.max_lag = 2;
  cfg.gap = 64;
  cfg.far_pair_samples = 200'000;
  const auto p = continuity_profile(data, cfg, 7, 2);
  EXPECT_EQ(p.lag_similarity[0], 0.5);
  EXPECT_EQ(p.lag_similarity[1], 1.0);
  EXPECT_NEAR(p.beta, 0.75, 0.003);
  EXPECT_NEAR(p.mu[0], -1.0, 0.02);
  EXPECT_NEAR(p.mu[1], 1.0, 0.02);
  EXPECT_NEAR(mu_aggregate(data, cfg, 7), 0.0, 0.02);
  EXPECT_EQ(mu_lag(data, 1, cfg, 7), p.mu[0]);
}

TEST(MuLag, ConstantSequenceIsDegenerate) {
  const std::vector<double> ones(200, 1.0);
  const std::vector<SequenceSample> data{SequenceSample::from_scalars(ones)};
  MetricConfig cfg;
  EXPECT_THROW(mu_lag(data, 1, cfg, 1), DegenerateSimilarityError);
}

TEST(MuLag, IidTokensHaveNoContinuity) {
  const std::vector<SequenceSample> data{sphere_tokens(4096, 16, 3)};
  EXPECT_LT(std::abs(mu_lag(data, 1, MetricConfig{}, 3)), 0.05);
}

TEST(MuLag, InvariantUnderPositiveScaling) {
  const auto spec = make_embedding_spec(4);
  const auto traj = generate(DynSysSpec{VanDerPolParams{1.0}, 0.5, 0.0, 10.0, 0.01}, 0);
  const std::vector<SequenceSample> data{embed_trajectory(traj, 0.5, spec)};
  const std::vector<SequenceSample> scaled{data[0].scaled(7.3)};
  MetricConfig cfg;
  const auto a = continuity_profile(data, cfg, 4, 16);
  const auto b = continuity_profile(scaled, cfg, 4, 16);
  for (int t = 0; t < 16; ++t) EXPECT_NEAR(a.mu[t], b.mu[t], 1e-12);
}

TEST(MuLag, RejectsShortSequencesAndBadLags) {
  const std::vector<SequenceSample> data{alternating(17)};
  MetricConfig cfg;
  EXPECT_THROW(mu_lag(data, 1, cfg, 0), InvalidArgument);
  cfg.max_lag = 2;
  cfg.gap = 8;
  EXPECT_THROW(mu_lag(data, 0, cfg, 0), InvalidArgument);
  EXPECT_NO_THROW(mu_lag(data, 1, cfg, 0));
}

TEST(MuLag, ThreadCountDoesNotChangeResult) {
  std::vector<SequenceSample> data;
  for (std::uint64_t s = 0; s < 6; ++s) data.push_back(sphere_tokens(300, 4, s));
  MetricConfig one, four;
  four.threads = 4;
  EXPECT_EQ(mu_aggregate(data, one, 5), mu_aggregate(data, four, 5));
}

TEST(MuAggregate, WeightsSelectAndAverage) {
  const std::vector<SequenceSample> data{sphere_tokens(1000, 3, 9)};
  MetricConfig cfg;
  cfg.max_lag = 4;
  const auto p = continuity_profile(data, cfg, 9, 4);
  cfg.weights = {1.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(mu_aggregate(data, cfg, 9), p.mu[0]);
  cfg.weights = {0.25, 0.25, 0.25, 0.25};
  double mean = 0.0;
  for (double m : p.mu) mean += 0.25 * m;
  EXPECT_NEAR(mu_aggregate(data, cfg, 9), mean, 1e-15);
}

// Rotation by a quarter turn per step: every lag that is a multiple of the
// period has μ_t = 1 regardless of β.
TEST(MuAggregate, PeriodicLagsScoreOne) {
  std::vector<double> d2;
  for (std::size_t k = 0; k < 512; ++k) {
    const double phase = 0.5 * std::numbers::pi * static_cast<double>(k);
    d2.push_back(std::cos(phase));
    d2.push_back(std::sin(phase));
  }
  const std::vector<SequenceSample> circle{SequenceSample(2, d2)};
  MetricConfig cfg;
  cfg.max_lag = 8;
  cfg.gap = 32;
  cfg.weights = {0, 0, 0, 0.5, 0, 0, 0, 0.5};
  EXPECT_NEAR(mu_aggregate(circle, cfg, 2), 1.0, 1e-12);
}

TEST(Embed, Examples) {
  const auto spec = make_embedding_spec(10);
  for (double x : embed(0.0, 1.0, spec)) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(embed(-1.0, 0.0, spec), spec.basis[0]);
  const auto e = embed(0.3, 0.5, spec);
  for (std::size_t i = 0; i < kEmbedDim; ++i)
    EXPECT_NEAR(e[i], 0.15 * spec.v[i] + 0.5 * spec.basis[10][i], 1e-15);
  EXPECT_THROW(embed(1.01, 0.5, spec), InvalidArgument);
  EXPECT_THROW(embed(0.0, 1.5, spec), InvalidArgument);
}

TEST(Embed, BinBoundaries) {
  EXPECT_EQ(EmbeddingSpec::bin(-1.0), 0u);
  EXPECT_EQ(EmbeddingSpec::bin(-0.875), 1u);
  EXPECT_EQ(EmbeddingSpec::bin(-0.8750000000000001), 0u);
  EXPECT_EQ(EmbeddingSpec::bin(0.0), 8u);
  EXPECT_EQ(EmbeddingSpec::bin(0.3), 10u);
  EXPECT_EQ(EmbeddingSpec::bin(0.99), 15u);
  EXPECT_EQ(EmbeddingSpec::bin(1.0), 15u);
}

TEST(Embed, SpecIsOrthonormal) {
  const auto spec = make_embedding_spec(11);
  EXPECT_NEAR(dot(spec.v, spec.v), 1.0, 1e-12);
  for (std::size_t i = 0; i < kEmbedDim; ++i)
    for (std::size_t j = 0; j < kEmbedDim; ++j)
      EXPECT_NEAR(dot(spec.basis[i], spec.basis[j]), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Embed, LinearInEta) {
  const auto spec = make_embedding_spec(12);
  for (double u : {-0.7, 0.1, 0.95}) {
    const auto e0 = embed(u, 0.0, spec), e1 = embed(u, 1.0, spec);
    for (double eta : {0.1, 0.4, 0.75}) {
      const auto e = embed(u, eta, spec);
      for (std::size_t i = 0; i < kEmbedDim; ++i)
        EXPECT_NEAR(e[i], (1.0 - eta) * e0[i] + eta * e1[i], 1e-15);
    }
  }
}

TEST(EmbedTrajectory, Examples) {
  const auto spec = make_embedding_spec(13);
  const Trajectory flat{{0.0, 0.1, 0.2}, {4.0, 4.0, 4.0}};
  const auto s = embed_trajectory(flat, 0.0, spec);
  for (std::size_t k = 0; k < s.length(); ++k)
    for (std::size_t i = 0; i < kEmbedDim; ++i) EXPECT_EQ(s.token(k)[i], spec.basis[8][i]);

  const Trajectory ramp{{0.0, 0.1, 0.2, 0.3}, {2.0, -1.0, 5.0, 3.0}};
  const auto norm = normalize_minmax(ramp.values);
  EXPECT_EQ(norm[1], -1.0);
  EXPECT_EQ(norm[2], 1.0);
  const auto c = embed_trajectory(ramp, 1.0, spec);
  for (std::size_t k = 0; k < c.length(); ++k)
    for (std::size_t i = 0; i < kEmbedDim; ++i) EXPECT_NEAR(c.token(k)[i], norm[k] * spec.v[i], 1e-15);
}

TEST(Spearman, RanksWithTies) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{10, 20, 30, 40, 50}, z{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, y), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, z), -1.0);
  const std::vector<double> a{1, 2, 2, 3}, b{1, 3, 2, 4};
  // Ranks a: 1, 2.5, 2.5, 4; b: 1, 3, 2, 4.
  const double ra[] = {1, 2.5, 2.5, 4}, rb[] = {1, 3, 2, 4};
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (ra[i] - 2.5) * (rb[i] - 2.5);
    sxx += (ra[i] - 2.5) * (ra[i] - 2.5);
    syy += (rb[i] - 2.5) * (rb[i] - 2.5);
  }
  EXPECT_NEAR(spearman(a, b), sxy / std::sqrt(sxx * syy), 1e-15);
}

TEST(MuEta, IncreasesWithEtaOnVanDerPol) {
  const auto data = sample_dataset(DynSysKind::VanDerPol, 16, 21);
  const auto spec = make_embedding_spec(21);
  const std::vector<double> etas{0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1};
  std::vector<double> mu1;
  for (double eta : etas) {
    std::vector<SequenceSample> seqs;
    for (const auto& d : data) seqs.push_back(embed_trajectory(d.trajectory, eta, spec));
    mu1.push_back(mu_lag(seqs, 1, MetricConfig{}, 21));
  }
  EXPECT_GT(spearman(etas, mu1), 0.9);
}
