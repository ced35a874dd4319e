#pragma once

// Stage-wise training on temporally subsampled sequences.
//
// Stage s trains on inputs subsampled by stride r_s (r_1 > ... > r_S = 1) and
// rescales the model step by r_s / r_{s-1} (r_0 = r_1), so the final stage sees
// full-resolution data with Δ_init / r_1.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/continuity_metric.hpp"
#include "ssmlab/dynsys.hpp"
#include "ssmlab/error.hpp"
#include "ssmlab/parallel.hpp"
#include "ssmlab/random.hpp"
#include "ssmlab/ssm_core.hpp"

namespace ssmlab {

enum class SubsampleStrategy { Indexing, Pooling };

inline const char* to_string(SubsampleStrategy s) {
  return s == SubsampleStrategy::Indexing ? "indexing" : "pooling";
}

inline SubsampleStrategy parse_strategy(const std::string& name) {
  if (name == "indexing") return SubsampleStrategy::Indexing;
  if (name == "pooling") return SubsampleStrategy::Pooling;
  throw InvalidArgument("unknown subsampling strategy '" + name + "'");
}

struct StageSchedule {
  std::vector<int> strides;
  std::vector<int> epochs;
  SubsampleStrategy strategy = SubsampleStrategy::Indexing;

  /// Equal epoch budget per stage.
  static StageSchedule uniform(std::vector<int> strides, int epochs_per_stage = 1,
                               SubsampleStrategy strategy = SubsampleStrategy::Indexing) {
    StageSchedule s{std::move(strides), {}, strategy};
    s.epochs.assign(s.strides.size(), epochs_per_stage);
    s.check();
    return s;
  }

  std::size_t stages() const { return strides.size(); }

  void check() const {
    if (strides.empty()) throw InvalidArgument("StageSchedule: need at least one stage");
    if (epochs.size() != strides.size())
      throw InvalidArgument("StageSchedule: one epoch count per stage required");
    for (std::size_t s = 0; s < strides.size(); ++s) {
      if (strides[s] < 1) throw InvalidArgument("StageSchedule: strides must be >= 1");
      if (s > 0 && strides[s] >= strides[s - 1])
        throw InvalidArgument("StageSchedule: strides must be strictly decreasing");
      if (epochs[s] < 1) throw InvalidArgument("StageSchedule: epochs must be positive");
    }
    if (strides.back() != 1) throw InvalidArgument("StageSchedule: last stride must be 1");
  }

  /// m_s = r_s / r_{s-1} with r_0 = r_1.
  std::vector<double> delta_multipliers() const {
    check();
    std::vector<double> m(strides.size());
    for (std::size_t s = 0; s < strides.size(); ++s) {
      const int prev = s == 0 ? strides[0] : strides[s - 1];
      m[s] = static_cast<double>(strides[s]) / static_cast<double>(prev);
    }
    return m;
  }
};

/// Step size used in each stage, Δ_s = Δ_init Π_{j<=s} m_j.
inline std::vector<double> delta_schedule(const StageSchedule& sched, double delta_init) {
  if (!(delta_init > 0.0)) throw InvalidArgument("delta_schedule: delta_init must be positive");
  std::vector<double> out;
  double delta = delta_init;
  for (double m : sched.delta_multipliers()) {
    delta *= m;
    out.push_back(delta);
  }
  return out;
}

// --- subsampling -------------------------------------------------------------

/// Elements 0, r, 2r, ..., ⌊(L-1)/r⌋ r.
template <class T>
std::vector<T> subsample_index(std::span<const T> seq, std::size_t r) {
  if (r < 1) throw InvalidArgument("subsample_index: stride must be >= 1");
  std::vector<T> out;
  if (seq.empty()) return out;
  out.reserve((seq.size() - 1) / r + 1);
  for (std::size_t i = 0; i < seq.size(); i += r) out.push_back(seq[i]);
  return out;
}

/// Means of consecutive length-r blocks; a trailing partial block is averaged
/// over its own length.
inline std::vector<double> subsample_pool(std::span<const double> seq, std::size_t r) {
  if (r < 1) throw InvalidArgument("subsample_pool: stride must be >= 1");
  std::vector<double> out;
  out.reserve((seq.size() + r - 1) / r);
  for (std::size_t start = 0; start < seq.size(); start += r) {
    const std::size_t end = std::min(seq.size(), start + r);
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += seq[i];
    out.push_back(sum / static_cast<double>(end - start));
  }
  return out;
}

inline SequenceSample subsample_index(const SequenceSample& seq, std::size_t r) {
  if (r < 1) throw InvalidArgument("subsample_index: stride must be >= 1");
  std::vector<double> data;
  for (std::size_t k = 0; k < seq.length(); k += r) {
    const auto tok = seq.token(k);
    data.insert(data.end(), tok.begin(), tok.end());
  }
  return SequenceSample(seq.dim(), std::move(data));
}

inline SequenceSample subsample_pool(const SequenceSample& seq, std::size_t r) {
  if (r < 1) throw InvalidArgument("subsample_pool: stride must be >= 1");
  const std::size_t d = seq.dim();
  std::vector<double> data;
  for (std::size_t start = 0; start < seq.length(); start += r) {
    const std::size_t end = std::min(seq.length(), start + r);
    std::vector<double> mean(d, 0.0);
    for (std::size_t k = start; k < end; ++k)
      for (std::size_t i = 0; i < d; ++i) mean[i] += seq.token(k)[i];
    for (double& m : mean) m /= static_cast<double>(end - start);
    data.insert(data.end(), mean.begin(), mean.end());
  }
  return SequenceSample(d, std::move(data));
}

inline std::vector<double> subsample(std::span<const double> seq, std::size_t r,
                                     SubsampleStrategy strategy) {
  return strategy == SubsampleStrategy::Indexing ? subsample_index(seq, r)
                                                 : subsample_pool(seq, r);
}

// --- training ----------------------------------------------------------------

struct LabeledSequence {
  std::vector<double> values;
  double target = 0.0;
};

/// What run_stagewise needs from a model: a settable step size, one training
/// epoch over a dataset, and a mean-squared-error evaluation.
template <class T>
concept StageTrainer = requires(T& t, const T& ct, double delta,
                                std::span<const LabeledSequence> data) {
  t.set_delta(delta);
  t.train_epoch(data);
  { ct.mse(data) } -> std::convertible_to<double>;
};

struct DatasetSplit {
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> validation;
};

/// Seeded shuffle, then the first ⌈train_fraction · N⌉ samples go to training.
inline DatasetSplit split_dataset(std::span<const LabeledSequence> data, std::uint64_t seed,
                                  double train_fraction = 0.9) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(seed, Stream::DataSplit);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  const auto n_train =
      static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(data.size())));
  DatasetSplit out;
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_train ? out.train : out.validation).push_back(data[idx[i]]);
  return out;
}

struct StageReport {
  int stage = 0;
  int stride = 1;
  double delta = 0.0;
  int epochs = 0;
  double cum_wall_time_s = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

namespace detail {
inline std::vector<LabeledSequence> subsample_all(std::span<const LabeledSequence> data, int r,
                                                  SubsampleStrategy strategy) {
  std::vector<LabeledSequence> out;
  out.reserve(data.size());
  for (const auto& s : data)
    out.push_back({subsample(s.values, static_cast<std::size_t>(r), strategy), s.target});
  return out;
}
}  // namespace detail

template <StageTrainer Trainer>
std::vector<StageReport> run_stagewise(std::span<const LabeledSequence> dataset,
                                       const StageSchedule& sched, double delta_init,
                                       Trainer& trainer, std::uint64_t rng_seed) {
  sched.check();
  const auto split = split_dataset(dataset, rng_seed);
  if (split.train.empty() || split.validation.empty())
    throw InvalidArgument("run_stagewise: training and validation sets must be nonempty");
  const auto deltas = delta_schedule(sched, delta_init);

  std::vector<StageReport> reports;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t s = 0; s < sched.stages(); ++s) {
    const int r = sched.strides[s];
    trainer.set_delta(deltas[s]);
    const auto train = detail::subsample_all(split.train, r, sched.strategy);
    const auto val = detail::subsample_all(split.validation, r, sched.strategy);
    for (int e = 0; e < sched.epochs[s]; ++e) trainer.train_epoch(train);

    StageReport rep;
    rep.stage = static_cast<int>(s) + 1;
    rep.stride = r;
    rep.delta = deltas[s];
    rep.epochs = sched.epochs[s];
    rep.train_mse = trainer.mse(train);
    rep.val_mse = trainer.mse(val);
    rep.cum_wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(rep.train_mse) || !std::isfinite(rep.val_mse))
      throw Error("run_stagewise: trainer diverged at stage " + std::to_string(rep.stage));
    reports.push_back(rep);
  }
  return reports;
}

/// Frozen random S4 feature map followed by a closed-form ridge readout.
///
/// Features are the real and imaginary parts of the final ZOH state after the
/// whole sequence, the normalized modal energies |x_j|² / Σ|x|², and a
/// constant. The energies make the features invariant to the sign of the
/// trajectory, which a purely linear readout cannot achieve. An epoch solves
///   min ‖X w - y‖² + λ ‖w - w_prev‖²
/// so each stage starts from the previous stage's weights.
class RidgeFeatureTrainer {
 public:
  explicit RidgeFeatureTrainer(std::uint64_t seed, std::size_t n_states = 32,
                               double lambda = 1e-3, unsigned threads = 1)
      : a_(default_a_diag(n_states)), b_(n_states), lambda_(lambda), threads_(threads) {
    CounterRng rng(seed, Stream::FeatureMap);
    for (auto& v : b_) v = rng.normal();
    weights_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feature_dim()));
    set_delta(1.0);
  }

  std::size_t feature_dim() const { return 3 * a_.size() + 1; }
  double delta() const { return delta_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  void set_delta(double delta) {
    if (!(delta > 0.0)) throw InvalidArgument("RidgeFeatureTrainer: delta must be positive");
    delta_ = delta;
    abar_.resize(a_.size());
    bbar_.resize(a_.size());
    for (std::size_t j = 0; j < a_.size(); ++j) {
      const cplx z = delta * a_[j];
      abar_[j] = std::exp(z);
      bbar_[j] = expm1(z) / a_[j] * b_[j];
    }
  }

  /// [Re x, Im x, |x|² / Σ|x|², 1] for the final state x.
  std::vector<double> features(std::span<const double> seq) const {
    const std::size_t n = a_.size();
    std::vector<cplx> x(n, cplx{});
    for (double u : seq)
      for (std::size_t j = 0; j < n; ++j) x[j] = abar_[j] * x[j] + bbar_[j] * u;
    std::vector<double> f(feature_dim());
    double energy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      f[j] = x[j].real();
      f[n + j] = x[j].imag();
      energy += std::norm(x[j]);
    }
    if (energy > 0.0)
      for (std::size_t j = 0; j < n; ++j) f[2 * n + j] = std::norm(x[j]) / energy;
    f.back() = 1.0;
    return f;
  }

  void train_epoch(std::span<const LabeledSequence> data) {
    if (data.empty()) throw InvalidArgument("RidgeFeatureTrainer: empty training set");
    const Eigen::MatrixXd x = design(data);
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) y(static_cast<Eigen::Index>(i)) = data[i].target;
    const auto p = x.cols();
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += lambda_;
    const Eigen::VectorXd rhs = x.transpose() * y + lambda_ * weights_;
    weights_ = gram.ldlt().solve(rhs);
    if (weights_.size() != p || !weights_.allFinite())
      throw Error("RidgeFeatureTrainer: ridge solve failed");
  }

  double mse(std::span<const LabeledSequence> data) const {
    if (data.empty()) throw InvalidArgument("RidgeFeatureTrainer: empty evaluation set");
    const Eigen::MatrixXd x = design(data);
    const Eigen::VectorXd pred = x * weights_;
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double e = pred(static_cast<Eigen::Index>(i)) - data[i].target;
      sum += e * e;
    }
    return sum / static_cast<double>(data.size());
  }

 private:
  Eigen::MatrixXd design(std::span<const LabeledSequence> data) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()),
                      static_cast<Eigen::Index>(feature_dim()));
    parallel_for(data.size(), threads_, [&](std::size_t i) {
      const auto f = features(data[i].values);
      for (std::size_t c = 0; c < f.size(); ++c)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f[c];
    });
    return x;
  }

  std::vector<cplx> a_;
  std::vector<cplx> b_;
  std::vector<cplx> abar_;
  std::vector<cplx> bbar_;
  Eigen::VectorXd weights_;
  double delta_ = 1.0;
  double lambda_;
  unsigned threads_;
};

static_assert(StageTrainer<RidgeFeatureTrainer>);

/// Damped-harmonic trajectories labelled with their natural frequency ω.
inline std::vector<LabeledSequence> frequency_recovery_task(std::size_t count, std::uint64_t seed,
                                                            const DatasetOptions& opts = {}) {
  const auto samples = sample_dataset(DynSysKind::DampedHarmonic, count, seed, opts);
  std::vector<LabeledSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back({s.trajectory.values, std::get<DampedHarmonicParams>(s.spec.params).omega});
  return out;
}

}  // namespace ssmlab
