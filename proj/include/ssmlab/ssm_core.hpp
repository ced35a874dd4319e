#pragma once

// Single-input single-output diagonal state-space systems.
//
// Continuous dynamics (diagonal A = diag(a)):
//   x'(t) = Δ(u) (a ⊙ x + B(u) u),   y = Re(C(u) · x) + D u,   x(0) = 0
// with the S4 maps B(u) = b, C(u) = c, Δ(u) = Δ and the S6 maps
// B(u) = b u, C(u) = c u, Δ(u) = softplus(w_Δ u + b_Δ).
//
// Discretization with an explicit sampling step τ uses δ_k = τ Δ(u_k) in
// place of Δ. Because A is diagonal, ZOH and bilinear rules are elementwise
// closed forms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssmlab/error.hpp"

namespace ssmlab {

using cplx = std::complex<double>;

enum class Flavor { S4, S6 };
enum class Method { ZOH, Bilinear };

inline const char* to_string(Flavor f) { return f == Flavor::S4 ? "S4" : "S6"; }
inline const char* to_string(Method m) { return m == Method::ZOH ? "ZOH" : "Bilinear"; }

/// ln(1 + e^x); returns x itself once e^-x is below double resolution.
inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

/// Inverse of softplus on (0, inf).
inline double softplus_inv(double y) {
  if (!(y > 0.0)) throw InvalidArgument("softplus_inv: argument must be positive");
  if (y < 1e-10) return std::log(y);  // e^y - 1 ~ y
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

/// e^z - 1 without cancellation for small |z|.
inline cplx expm1(cplx z) {
  const double x = z.real();
  const double y = z.imag();
  const double s = std::sin(0.5 * y);
  const double re = std::expm1(x) * std::cos(y) - 2.0 * s * s;
  const double im = std::exp(x) * std::sin(y);
  return {re, im};
}

/// S4D-Lin style diagonal: a_j = -1/2 + iπj, j = 0..n-1.
inline std::vector<cplx> default_a_diag(std::size_t n) {
  std::vector<cplx> a(n);
  for (std::size_t j = 0; j < n; ++j) a[j] = {-0.5, std::numbers::pi * static_cast<double>(j)};
  return a;
}

struct S4Step {
  double delta;
};

struct S6Gate {
  double w_delta;
  double b_delta;
};

/// Continuous-time S4 or S6 system with diagonal state matrix.
///
/// Aggregate on purpose: `check()` enforces the structural invariants and
/// `is_stable()` the Hurwitz condition, which the discretizers do not need.
struct ContinuousSSM {
  std::vector<cplx> a_diag;
  std::vector<cplx> b;
  std::vector<cplx> c;
  double d = 0.0;
  std::variant<S4Step, S6Gate> delta_params = S4Step{1.0};

  static ContinuousSSM s4(std::vector<cplx> a, std::vector<cplx> b, std::vector<cplx> c,
                          double d, double delta) {
    ContinuousSSM sys{std::move(a), std::move(b), std::move(c), d, S4Step{delta}};
    sys.check();
    return sys;
  }

  static ContinuousSSM s6(std::vector<cplx> a, std::vector<cplx> b, std::vector<cplx> c,
                          double d, double w_delta, double b_delta) {
    ContinuousSSM sys{std::move(a), std::move(b), std::move(c), d, S6Gate{w_delta, b_delta}};
    sys.check();
    return sys;
  }

  Flavor flavor() const {
    return std::holds_alternative<S4Step>(delta_params) ? Flavor::S4 : Flavor::S6;
  }

  std::size_t order() const { return a_diag.size(); }

  void check() const {
    if (a_diag.empty()) throw InvalidArgument("ContinuousSSM: state dimension must be >= 1");
    if (b.size() != a_diag.size() || c.size() != a_diag.size())
      throw InvalidArgument("ContinuousSSM: a, b, c must have equal length");
    if (const auto* s4 = std::get_if<S4Step>(&delta_params); s4 && !(s4->delta > 0.0))
      throw InvalidArgument("ContinuousSSM: S4 step Δ must be positive");
  }

  bool is_stable() const {
    return std::all_of(a_diag.begin(), a_diag.end(), [](cplx a) { return a.real() < 0.0; });
  }

  /// ‖A‖₂ for diagonal A.
  double a_norm() const {
    double m = 0.0;
    for (cplx a : a_diag) m = std::max(m, std::abs(a));
    return m;
  }
};

/// Scalar factors such that B(u) = b * b_scale, C(u) = c * c_scale.
struct MapScales {
  double b_scale;
  double c_scale;
  double delta;
};

inline MapScales map_scales(const ContinuousSSM& sys, double u) {
  if (const auto* s4 = std::get_if<S4Step>(&sys.delta_params)) return {1.0, 1.0, s4->delta};
  const auto& g = std::get<S6Gate>(sys.delta_params);
  return {u, u, softplus(g.w_delta * u + g.b_delta)};
}

struct MapValues {
  std::vector<cplx> b_of_u;
  std::vector<cplx> c_of_u;
  double delta_of_u;
};

/// Evaluates (B(u), C(u), Δ(u)).
inline MapValues eval_maps(const ContinuousSSM& sys, double u) {
  const MapScales s = map_scales(sys, u);
  MapValues out{sys.b, sys.c, s.delta};
  for (auto& v : out.b_of_u) v *= s.b_scale;
  for (auto& v : out.c_of_u) v *= s.c_scale;
  return out;
}

/// Per-step discrete matrices. Entry k of abar/bbar/cbar holds the diagonal
/// of Ā_k and the vectors B̄_k, C̄_k.
struct DiscreteSSM {
  std::vector<std::vector<cplx>> abar;
  std::vector<std::vector<cplx>> bbar;
  std::vector<std::vector<cplx>> cbar;
  double dbar = 0.0;
  double tau = 1.0;

  std::size_t length() const { return abar.size(); }
};

inline DiscreteSSM discretize(const ContinuousSSM& sys, std::span<const double> u_samples,
                              double tau, Method method) {
  sys.check();
  if (!(tau > 0.0)) throw InvalidArgument("discretize: tau must be positive");
  if (u_samples.empty()) throw InvalidArgument("discretize: empty input");
  if (method == Method::ZOH) {
    for (cplx a : sys.a_diag)
      if (a == cplx{0.0, 0.0})
        throw DegeneratePoleError("discretize: ZOH requires nonzero diagonal entries of A");
  }

  const std::size_t n = sys.order();
  const std::size_t len = u_samples.size();
  DiscreteSSM out;
  out.abar.assign(len, std::vector<cplx>(n));
  out.bbar.assign(len, std::vector<cplx>(n));
  out.cbar.assign(len, std::vector<cplx>(n));
  out.dbar = sys.d;
  out.tau = tau;

  for (std::size_t k = 0; k < len; ++k) {
    const MapScales s = map_scales(sys, u_samples[k]);
    const double step = tau * s.delta;
    for (std::size_t j = 0; j < n; ++j) {
      const cplx a = sys.a_diag[j];
      const cplx bu = sys.b[j] * s.b_scale;
      if (method == Method::ZOH) {
        const cplx z = step * a;
        out.abar[k][j] = std::exp(z);
        out.bbar[k][j] = expm1(z) / a * bu;
      } else {
        const cplx half = 0.5 * step * a;
        const cplx denom = 1.0 - half;
        if (denom == cplx{0.0, 0.0})
          throw SingularResolventError("discretize: bilinear resolvent is singular");
        out.abar[k][j] = (1.0 + half) / denom;
        out.bbar[k][j] = step * bu / denom;
      }
      out.cbar[k][j] = sys.c[j] * s.c_scale;
    }
  }
  return out;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  void check() const {
    if (times.size() != values.size())
      throw InvalidArgument("Trajectory: times and values differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw InvalidArgument("Trajectory: times must be strictly increasing");
  }
};

/// Complex outputs C̄_k · x_k + D̄ u_k of the discrete recursion.
inline std::vector<cplx> run_discrete_complex(const DiscreteSSM& dsys,
                                              std::span<const double> u_samples) {
  if (u_samples.size() != dsys.length())
    throw InvalidArgument("run_discrete: input length " + std::to_string(u_samples.size()) +
                          " does not match system length " + std::to_string(dsys.length()));
  const std::size_t n = dsys.length() ? dsys.abar[0].size() : 0;
  std::vector<cplx> x(n, cplx{});
  std::vector<cplx> y(u_samples.size());
  for (std::size_t k = 0; k < u_samples.size(); ++k) {
    cplx acc{};
    for (std::size_t j = 0; j < n; ++j) acc += dsys.cbar[k][j] * x[j];
    y[k] = acc + dsys.dbar * u_samples[k];
    for (std::size_t j = 0; j < n; ++j)
      x[j] = dsys.abar[k][j] * x[j] + dsys.bbar[k][j] * u_samples[k];
  }
  return y;
}

/// x₀ = 0, x_{k+1} = Ā_k x_k + B̄_k u_k, y_k = Re(C̄_k · x_k) + D̄ u_k at t = kτ.
inline Trajectory run_discrete(const DiscreteSSM& dsys, std::span<const double> u_samples) {
  const auto yc = run_discrete_complex(dsys, u_samples);
  Trajectory out;
  out.times.resize(yc.size());
  out.values.resize(yc.size());
  for (std::size_t k = 0; k < yc.size(); ++k) {
    out.times[k] = static_cast<double>(k) * dsys.tau;
    out.values[k] = yc[k].real();
  }
  return out;
}

template <class F>
concept ScalarSignal = requires(const F& f, double t) {
  { f(t) } -> std::convertible_to<double>;
};

/// Integrates the continuous system on [0, t_end] with classical RK4 at a
/// fixed step and returns y on the step grid.
///
/// The last RK4 stage of each step evaluates the input just left of the step
/// end, so inputs held constant between grid points are integrated without
/// seeing the next hold value.
template <ScalarSignal Signal>
Trajectory simulate_continuous(const ContinuousSSM& sys, const Signal& u, double tau_fine,
                               double t_end = 1.0) {
  sys.check();
  if (!(tau_fine > 0.0)) throw InvalidArgument("simulate_continuous: tau_fine must be positive");
  const double steps_real = t_end / tau_fine;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (steps == 0 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real)
    throw InvalidArgument("simulate_continuous: t_end must be a multiple of tau_fine");

  const std::size_t n = sys.order();
  const auto& a = sys.a_diag;
  const auto& b = sys.b;
  std::vector<cplx> x(n, cplx{}), k1(n), k2(n), k3(n), k4(n), tmp(n);

  auto rhs = [&](double uval, const std::vector<cplx>& state, std::vector<cplx>& dx) {
    const MapScales s = map_scales(sys, uval);
    const double forcing = s.b_scale * uval;
    for (std::size_t j = 0; j < n; ++j) dx[j] = s.delta * (a[j] * state[j] + b[j] * forcing);
  };
  auto output = [&](double uval) {
    const MapScales s = map_scales(sys, uval);
    cplx acc{};
    for (std::size_t j = 0; j < n; ++j) acc += sys.c[j] * x[j];
    return (acc * s.c_scale).real() + sys.d * uval;
  };

  Trajectory out;
  out.times.resize(steps + 1);
  out.values.resize(steps + 1);
  const double h = tau_fine;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t0 = static_cast<double>(i) * h;
    const double u0 = static_cast<double>(u(t0));
    out.times[i] = t0;
    out.values[i] = output(u0);
    if (!std::isfinite(out.values[i]))
      throw DivergenceError("simulate_continuous: non-finite output", t0);
    if (i == steps) break;

    const double t1 = static_cast<double>(i + 1) * h;
    const double um = static_cast<double>(u(t0 + 0.5 * h));
    const double u1 = static_cast<double>(u(std::nextafter(t1, t0)));
    rhs(u0, x, k1);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
    rhs(um, tmp, k2);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
    rhs(um, tmp, k3);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + h * k3[j];
    rhs(u1, tmp, k4);
    for (std::size_t j = 0; j < n; ++j)
      x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return out;
}

/// Values of `traj` at the requested timestamps. Exact grid hits only.
inline std::vector<double> sample_at(const Trajectory& traj, std::span<const double> timestamps) {
  std::vector<double> out;
  out.reserve(timestamps.size());
  for (double t : timestamps) {
    const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    std::size_t idx = traj.times.size();
    if (it != traj.times.end() && std::abs(*it - t) <= tol) {
      idx = static_cast<std::size_t>(it - traj.times.begin());
    } else if (it != traj.times.begin() && std::abs(*(it - 1) - t) <= tol) {
      idx = static_cast<std::size_t>(it - traj.times.begin()) - 1;
    }
    if (idx == traj.times.size())
      throw OffGridError("sample_at: timestamp " + std::to_string(t) + " is not on the grid");
    out.push_back(traj.values[idx]);
  }
  return out;
}

}  // namespace ssmlab
