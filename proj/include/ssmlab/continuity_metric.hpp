#pragma once

// Lag-similarity continuity score of a sequence dataset.
//
//   μ_t = (E[K(u_k, u_{k+t})] - β) / (E[K(u_k, u_k)] - β)
//   β   = E[K(u_k, u_k')] over pairs with |k - k'| > ϱ
//   μ   = Σ_t w_t μ_t
//
// Lag and self similarities are enumerated exactly; β is a seeded Monte-Carlo
// mean over far pairs drawn inside each sequence.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/error.hpp"
#include "ssmlab/parallel.hpp"
#include "ssmlab/random.hpp"
#include "ssmlab/ssm_core.hpp"

namespace ssmlab {

/// L tokens of dimension d, stored row-major.
class SequenceSample {
 public:
  SequenceSample(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) throw InvalidArgument("SequenceSample: dimension must be >= 1");
    if (data_.empty() || data_.size() % dim_ != 0)
      throw InvalidArgument("SequenceSample: data size must be a positive multiple of dim");
  }

  static SequenceSample from_scalars(std::span<const double> values) {
    return SequenceSample(1, std::vector<double>(values.begin(), values.end()));
  }

  std::size_t dim() const { return dim_; }
  std::size_t length() const { return data_.size() / dim_; }
  std::span<const double> token(std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
  std::span<double> token(std::size_t k) { return {data_.data() + k * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

  SequenceSample scaled(double factor) const {
    SequenceSample out = *this;
    for (double& v : out.data_) v *= factor;
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

enum class Kernel { Cosine };

/// (1 + cos∠(x, y)) / 2, or 0.5 when either vector is (numerically) zero.
inline double kernel_cosine(std::span<const double> x, std::span<const double> y) {
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  const double nx = std::sqrt(xx);
  const double ny = std::sqrt(yy);
  if (nx < 1e-15 || ny < 1e-15) return 0.5;
  const double cosine = std::clamp(xy / (nx * ny), -1.0, 1.0);
  return 0.5 * (1.0 + cosine);
}

inline double kernel(Kernel k, std::span<const double> x, std::span<const double> y) {
  switch (k) {
    case Kernel::Cosine: return kernel_cosine(x, y);
  }
  return kernel_cosine(x, y);
}

struct MetricConfig {
  int max_lag = 16;
  /// Empty means uniform 1/T.
  std::vector<double> weights;
  /// Empty means max(4T, L/4) clamped to L - 2 (L = shortest sequence).
  std::optional<int> gap;
  /// Far pairs drawn per sequence.
  std::size_t far_pair_samples = 10'000;
  Kernel kernel = Kernel::Cosine;
  unsigned threads = 1;

  double weight(int t) const {
    if (weights.empty()) return 1.0 / max_lag;
    return weights.at(static_cast<std::size_t>(t - 1));
  }

  int resolved_gap(std::size_t min_length) const {
    if (gap) return *gap;
    const int len = static_cast<int>(min_length);
    return std::min(std::max(4 * max_lag, len / 4), len - 2);
  }
};

/// Result of one metric evaluation: β and μ_t for t = 1..T.
struct ContinuityProfile {
  double beta;
  double self_similarity;
  std::vector<double> lag_similarity;  // index t-1
  std::vector<double> mu;              // index t-1
};

namespace detail {

inline std::size_t min_length(std::span<const SequenceSample> data) {
  std::size_t m = data.front().length();
  for (const auto& s : data) m = std::min(m, s.length());
  return m;
}

inline void check_dataset(std::span<const SequenceSample> data, const MetricConfig& cfg,
                          int max_t) {
  if (data.empty()) throw InvalidArgument("continuity metric: empty dataset");
  const std::size_t d = data.front().dim();
  for (const auto& s : data)
    if (s.dim() != d) throw InvalidArgument("continuity metric: token dimensions differ");
  if (max_t < 1) throw InvalidArgument("continuity metric: lag must be >= 1");
  if (cfg.max_lag < 1) throw InvalidArgument("continuity metric: max_lag must be >= 1");
  if (!cfg.weights.empty() && cfg.weights.size() != static_cast<std::size_t>(cfg.max_lag))
    throw InvalidArgument("continuity metric: need exactly max_lag weights");
  for (double w : cfg.weights)
    if (!(w >= 0.0)) throw InvalidArgument("continuity metric: weights must be nonnegative");
  if (cfg.far_pair_samples == 0)
    throw InvalidArgument("continuity metric: far_pair_samples must be positive");
  const std::size_t len = min_length(data);
  const int gap = cfg.resolved_gap(len);
  if (gap <= max_t || gap <= cfg.max_lag)
    throw InvalidArgument("continuity metric: gap " + std::to_string(gap) +
                          " must exceed the maximum lag");
  if (len < 2 || static_cast<std::size_t>(gap) + 1 >= len || static_cast<std::size_t>(max_t) >= len)
    throw InvalidArgument("continuity metric: sequences of length " + std::to_string(len) +
                          " are too short for gap " + std::to_string(gap));
}

inline double far_pair_mean(const SequenceSample& seq, int gap, std::size_t samples, Kernel k,
                            CounterRng rng) {
  const std::uint64_t len = seq.length();
  double sum = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::uint64_t i, j;
    do {
      i = rng.below(len);
      j = rng.below(len);
    } while ((i > j ? i - j : j - i) <= static_cast<std::uint64_t>(gap));
    sum += kernel(k, seq.token(i), seq.token(j));
  }
  return sum / static_cast<double>(samples);
}

inline double lag_mean(const SequenceSample& seq, int t, Kernel k) {
  const std::size_t count = seq.length() - static_cast<std::size_t>(t);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += kernel(k, seq.token(i), seq.token(i + t));
  return sum / static_cast<double>(count);
}

}  // namespace detail

/// β: mean far-pair similarity; far pairs are drawn within each sequence.
inline double background_similarity(std::span<const SequenceSample> data, const MetricConfig& cfg,
                                    std::uint64_t rng_seed) {
  detail::check_dataset(data, cfg, 1);
  const int gap = cfg.resolved_gap(detail::min_length(data));
  std::vector<double> per_seq(data.size());
  parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
    per_seq[i] = detail::far_pair_mean(data[i], gap, cfg.far_pair_samples, cfg.kernel,
                                       CounterRng(rng_seed, Stream::FarPairs, i));
  });
  return std::accumulate(per_seq.begin(), per_seq.end(), 0.0) / static_cast<double>(data.size());
}

/// β and μ_t for every t in 1..max_t, sharing one β.
inline ContinuityProfile continuity_profile(std::span<const SequenceSample> data,
                                            const MetricConfig& cfg, std::uint64_t rng_seed,
                                            int max_t) {
  detail::check_dataset(data, cfg, max_t);
  ContinuityProfile p;
  p.beta = background_similarity(data, cfg, rng_seed);

  const std::size_t lags = static_cast<std::size_t>(max_t) + 1;  // slot 0 holds self-similarity
  std::vector<std::vector<double>> per_seq(data.size(), std::vector<double>(lags));
  parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
    per_seq[i][0] = detail::lag_mean(data[i], 0, cfg.kernel);
    for (int t = 1; t <= max_t; ++t) per_seq[i][t] = detail::lag_mean(data[i], t, cfg.kernel);
  });
  std::vector<double> mean(lags, 0.0);
  for (const auto& row : per_seq)
    for (std::size_t t = 0; t < lags; ++t) mean[t] += row[t];
  for (double& m : mean) m /= static_cast<double>(data.size());

  p.self_similarity = mean[0];
  const double denom = p.self_similarity - p.beta;
  if (std::abs(denom) < 1e-9)
    throw DegenerateSimilarityError(
        "continuity metric: self similarity equals background similarity");
  for (int t = 1; t <= max_t; ++t) {
    p.lag_similarity.push_back(mean[t]);
    p.mu.push_back((mean[t] - p.beta) / denom);
  }
  return p;
}

inline double mu_lag(std::span<const SequenceSample> data, int t, const MetricConfig& cfg,
                     std::uint64_t rng_seed) {
  return continuity_profile(data, cfg, rng_seed, t).mu.back();
}

inline double mu_aggregate(std::span<const SequenceSample> data, const MetricConfig& cfg,
                           std::uint64_t rng_seed) {
  const auto p = continuity_profile(data, cfg, rng_seed, cfg.max_lag);
  double total = 0.0;
  for (int t = 1; t <= cfg.max_lag; ++t) total += cfg.weight(t) * p.mu[t - 1];
  return total;
}

// --- η-interpolated embedding -------------------------------------------------

inline constexpr std::size_t kEmbedDim = 16;
using EmbedVector = std::array<double, kEmbedDim>;

struct EmbeddingSpec {
  EmbedVector v{};
  std::array<EmbedVector, kEmbedDim> basis{};

  /// 0-based index of the bin containing u: bins are [-1 + i/8, -1 + (i+1)/8),
  /// the last one closed at 1.
  static std::size_t bin(double u) {
    if (!(u >= -1.0 && u <= 1.0)) throw InvalidArgument("embed: u outside [-1, 1]");
    const auto i = static_cast<std::size_t>(std::floor((u + 1.0) * (kEmbedDim / 2.0)));
    return std::min(i, kEmbedDim - 1);
  }
};

/// Random unit v and random orthonormal basis (QR of a Gaussian matrix).
inline EmbeddingSpec make_embedding_spec(std::uint64_t rng_seed) {
  CounterRng rng(rng_seed, Stream::Embedding);
  EmbeddingSpec spec;
  double norm = 0.0;
  for (double& x : spec.v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : spec.v) x /= norm;

  Eigen::Matrix<double, kEmbedDim, kEmbedDim> g;
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = rng.normal();
  const Eigen::Matrix<double, kEmbedDim, kEmbedDim> q =
      Eigen::HouseholderQR<Eigen::Matrix<double, kEmbedDim, kEmbedDim>>(g).householderQ();
  for (std::size_t i = 0; i < kEmbedDim; ++i)
    for (std::size_t r = 0; r < kEmbedDim; ++r)
      spec.basis[i][r] = q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
  return spec;
}

/// η u v + (1 - η) q_{bin(u)}.
inline EmbedVector embed(double u, double eta, const EmbeddingSpec& spec) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("embed: eta outside [0, 1]");
  const auto& q = spec.basis[EmbeddingSpec::bin(u)];
  EmbedVector out;
  for (std::size_t i = 0; i < kEmbedDim; ++i) out[i] = eta * u * spec.v[i] + (1.0 - eta) * q[i];
  return out;
}

/// Affine map of [min, max] onto [-1, 1]; constant input maps to 0.
inline std::vector<double> normalize_minmax(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = std::clamp(2.0 * ((values[i] - *lo) / range) - 1.0, -1.0, 1.0);
  return out;
}

/// Normalizes the trajectory values, then embeds each one.
inline SequenceSample embed_trajectory(const Trajectory& traj, double eta,
                                       const EmbeddingSpec& spec) {
  const auto normalized = normalize_minmax(traj.values);
  std::vector<double> data;
  data.reserve(normalized.size() * kEmbedDim);
  for (double u : normalized) {
    const auto e = embed(u, eta, spec);
    data.insert(data.end(), e.begin(), e.end());
  }
  return SequenceSample(kEmbedDim, std::move(data));
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("spearman: need two equal-length samples of size >= 2");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ssmlab
