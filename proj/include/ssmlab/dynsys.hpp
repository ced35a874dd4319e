#pragma once

// Trajectory generators for four benchmark dynamical systems:
//   Van der Pol        x'' - μ(1 - x²)x' + x = 0
//   damped harmonic    x'' + 2ζωx' + ω²x = 0
//   Ornstein-Uhlenbeck dX = -θX dt + σ dW
//   forced Duffing     x'' + δx' + αx + βx³ = γ cos(ω_f t)
// Only the position x(t) is emitted, at multiples of τ₀.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ssmlab/csv.hpp"
#include "ssmlab/error.hpp"
#include "ssmlab/random.hpp"
#include "ssmlab/ssm_core.hpp"

namespace ssmlab {

enum class DynSysKind { VanDerPol, DampedHarmonic, OrnsteinUhlenbeck, ForcedDuffing };

inline const char* to_string(DynSysKind k) {
  switch (k) {
    case DynSysKind::VanDerPol: return "vdp";
    case DynSysKind::DampedHarmonic: return "harmonic";
    case DynSysKind::OrnsteinUhlenbeck: return "ou";
    case DynSysKind::ForcedDuffing: return "duffing";
  }
  return "?";
}

inline DynSysKind parse_dynsys_kind(const std::string& name) {
  if (name == "vdp" || name == "vanderpol") return DynSysKind::VanDerPol;
  if (name == "harmonic" || name == "damped-harmonic") return DynSysKind::DampedHarmonic;
  if (name == "ou" || name == "ornstein-uhlenbeck") return DynSysKind::OrnsteinUhlenbeck;
  if (name == "duffing") return DynSysKind::ForcedDuffing;
  throw InvalidArgument("unknown dynamical system kind '" + name + "'");
}

struct VanDerPolParams {
  double mu;
};
struct DampedHarmonicParams {
  double omega;
  double zeta;
};
struct OrnsteinUhlenbeckParams {
  double theta;
  double sigma;
};
struct DuffingParams {
  double delta;
  double alpha;
  double beta;
  double gamma;
  double omega_f;
};

using DynSysParams =
    std::variant<VanDerPolParams, DampedHarmonicParams, OrnsteinUhlenbeckParams, DuffingParams>;

struct DynSysSpec {
  DynSysParams params;
  double x0 = 1.0;
  double v0 = 0.0;  // unused by the first-order OU process
  double horizon = 10.0;
  double tau0 = 0.01;

  DynSysKind kind() const { return static_cast<DynSysKind>(params.index()); }

  /// Number of emitted samples, ⌊horizon/τ₀⌋ + 1.
  std::size_t sample_count() const {
    return static_cast<std::size_t>(std::floor(horizon / tau0 + 1e-9)) + 1;
  }

  void check() const {
    if (!(tau0 > 0.0)) throw InvalidArgument("DynSysSpec: tau0 must be positive");
    if (!(horizon >= tau0)) throw InvalidArgument("DynSysSpec: horizon must be >= tau0");
    std::visit(
        [](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, VanDerPolParams>) {
            if (!(p.mu > 0.0)) throw InvalidArgument("Van der Pol: mu must be positive");
          } else if constexpr (std::is_same_v<P, DampedHarmonicParams>) {
            if (!(p.omega > 0.0)) throw InvalidArgument("damped harmonic: omega must be positive");
            if (!(p.zeta >= 0.0)) throw InvalidArgument("damped harmonic: zeta must be >= 0");
          } else if constexpr (std::is_same_v<P, OrnsteinUhlenbeckParams>) {
            if (!(p.theta > 0.0)) throw InvalidArgument("OU: theta must be positive");
            if (!(p.sigma >= 0.0)) throw InvalidArgument("OU: sigma must be >= 0");
          }
        },
        params);
  }
};

/// Compact "key=value;..." description of parameters and initial conditions.
inline std::string describe(const DynSysSpec& spec) {
  std::string s = std::visit(
      [](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, VanDerPolParams>) {
          return "mu=" + format_double(p.mu);
        } else if constexpr (std::is_same_v<P, DampedHarmonicParams>) {
          return "omega=" + format_double(p.omega) + ";zeta=" + format_double(p.zeta);
        } else if constexpr (std::is_same_v<P, OrnsteinUhlenbeckParams>) {
          return "theta=" + format_double(p.theta) + ";sigma=" + format_double(p.sigma);
        } else {
          return "delta=" + format_double(p.delta) + ";alpha=" + format_double(p.alpha) +
                 ";beta=" + format_double(p.beta) + ";gamma=" + format_double(p.gamma) +
                 ";omega_f=" + format_double(p.omega_f);
        }
      },
      spec.params);
  s += ";x0=" + format_double(spec.x0);
  if (spec.kind() != DynSysKind::OrnsteinUhlenbeck) s += ";v0=" + format_double(spec.v0);
  return s;
}

namespace detail {

constexpr int kSubsteps = 10;

using State2 = std::array<double, 2>;

inline State2 second_order_rhs(const DynSysParams& params, double t, const State2& s) {
  const double x = s[0];
  const double v = s[1];
  return std::visit(
      [&](const auto& p) -> State2 {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, VanDerPolParams>) {
          return {v, p.mu * (1.0 - x * x) * v - x};
        } else if constexpr (std::is_same_v<P, DampedHarmonicParams>) {
          return {v, -2.0 * p.zeta * p.omega * v - p.omega * p.omega * x};
        } else if constexpr (std::is_same_v<P, DuffingParams>) {
          return {v, -p.delta * v - p.alpha * x - p.beta * x * x * x +
                         p.gamma * std::cos(p.omega_f * t)};
        } else {
          return {0.0, 0.0};
        }
      },
      params);
}

inline State2 rk4_step(const DynSysParams& params, double t, const State2& s, double h) {
  auto axpy = [](const State2& a, double c, const State2& b) {
    return State2{a[0] + c * b[0], a[1] + c * b[1]};
  };
  const State2 k1 = second_order_rhs(params, t, s);
  const State2 k2 = second_order_rhs(params, t + 0.5 * h, axpy(s, 0.5 * h, k1));
  const State2 k3 = second_order_rhs(params, t + 0.5 * h, axpy(s, 0.5 * h, k2));
  const State2 k4 = second_order_rhs(params, t + h, axpy(s, h, k3));
  return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
          s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

}  // namespace detail

/// Simulates `spec` and emits x at multiples of τ₀. Deterministic kinds use
/// RK4 with `substeps` internal steps per emission interval; OU uses
/// Euler-Maruyama noise increments σ√h ξ at the same internal step, with the
/// linear drift advanced by an RK4 step so the σ = 0 path is the RK4 decay.
inline Trajectory generate(const DynSysSpec& spec, std::uint64_t rng_seed,
                           int substeps = detail::kSubsteps) {
  spec.check();
  if (substeps < 1) throw InvalidArgument("generate: substeps must be >= 1");
  const std::size_t count = spec.sample_count();
  const double h = spec.tau0 / substeps;

  Trajectory out;
  out.times.resize(count);
  out.values.resize(count);

  if (const auto* ou = std::get_if<OrnsteinUhlenbeckParams>(&spec.params)) {
    CounterRng rng(rng_seed, Stream::DynSysNoise);
    const double noise = ou->sigma * std::sqrt(h);
    const double z = ou->theta * h;
    const double decay = 1.0 - z * (1.0 - z / 2.0 * (1.0 - z / 3.0 * (1.0 - z / 4.0)));
    double x = spec.x0;
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) * spec.tau0;
      if (!std::isfinite(x)) throw DivergenceError("OU state became non-finite", t);
      out.times[i] = t;
      out.values[i] = x;
      if (i + 1 == count) break;
      for (int s = 0; s < substeps; ++s) x = decay * x + noise * rng.normal();
    }
    return out;
  }

  detail::State2 state{spec.x0, spec.v0};
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * spec.tau0;
    if (!std::isfinite(state[0]) || !std::isfinite(state[1]))
      throw DivergenceError(std::string(to_string(spec.kind())) + " state became non-finite", t);
    out.times[i] = t;
    out.values[i] = state[0];
    if (i + 1 == count) break;
    for (int s = 0; s < substeps; ++s)
      state = detail::rk4_step(spec.params, t + s * h, state, h);
  }
  return out;
}

/// Fixed values replacing sampled ones. Draws still happen, so the remaining
/// parameters and initial conditions are the same as without overrides.
struct ParamOverrides {
  std::optional<double> mu, omega, zeta, theta, sigma, gamma, x0, v0;
};

struct DatasetOptions {
  double horizon = 10.0;
  double tau0 = 0.01;
  ParamOverrides overrides{};
};

struct LabeledTrajectory {
  Trajectory trajectory;
  DynSysSpec spec;
};

/// Draws parameters from the documented ranges and initial conditions from
/// [-1, 1]², then generates the trajectory.
inline DynSysSpec sample_spec(DynSysKind kind, CounterRng& rng, const DatasetOptions& opts) {
  DynSysSpec spec;
  spec.horizon = opts.horizon;
  spec.tau0 = opts.tau0;
  switch (kind) {
    case DynSysKind::VanDerPol:
      spec.params = VanDerPolParams{rng.uniform(0.5, 3.0)};
      break;
    case DynSysKind::DampedHarmonic: {
      const double omega = rng.uniform(std::numbers::pi, 4.0 * std::numbers::pi);
      spec.params = DampedHarmonicParams{omega, rng.uniform(0.05, 0.5)};
      break;
    }
    case DynSysKind::OrnsteinUhlenbeck: {
      const double theta = rng.uniform(0.5, 3.0);
      spec.params = OrnsteinUhlenbeckParams{theta, rng.uniform(0.1, 1.0)};
      break;
    }
    case DynSysKind::ForcedDuffing:
      spec.params = DuffingParams{0.3, -1.0, 1.0, rng.uniform(0.2, 0.65), 1.2};
      break;
  }
  spec.x0 = rng.uniform(-1.0, 1.0);
  spec.v0 = rng.uniform(-1.0, 1.0);

  const auto& o = opts.overrides;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, VanDerPolParams>) {
          p.mu = o.mu.value_or(p.mu);
        } else if constexpr (std::is_same_v<P, DampedHarmonicParams>) {
          p.omega = o.omega.value_or(p.omega);
          p.zeta = o.zeta.value_or(p.zeta);
        } else if constexpr (std::is_same_v<P, OrnsteinUhlenbeckParams>) {
          p.theta = o.theta.value_or(p.theta);
          p.sigma = o.sigma.value_or(p.sigma);
        } else {
          p.gamma = o.gamma.value_or(p.gamma);
        }
      },
      spec.params);
  spec.x0 = o.x0.value_or(spec.x0);
  spec.v0 = o.v0.value_or(spec.v0);
  return spec;
}

inline std::vector<LabeledTrajectory> sample_dataset(DynSysKind kind, std::size_t count,
                                                     std::uint64_t rng_seed,
                                                     const DatasetOptions& opts = {}) {
  constexpr std::uint64_t kAttempts = 10;
  if (count < 1) throw InvalidArgument("sample_dataset: count must be >= 1");
  std::vector<LabeledTrajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      const std::uint64_t index = i * kAttempts + attempt;
      CounterRng rng(rng_seed, Stream::DynSysParams, index);
      DynSysSpec spec = sample_spec(kind, rng, opts);
      try {
        Trajectory traj = generate(spec, stream_key(rng_seed, Stream::DynSysNoise, index));
        out.push_back({std::move(traj), spec});
        break;
      } catch (const DivergenceError& e) {
        if (attempt + 1 == kAttempts)
          throw DivergenceError("sample_dataset: sample " + std::to_string(i) +
                                    " diverged after retries: " + e.what(),
                                e.time());
      }
    }
  }
  return out;
}

}  // namespace ssmlab
