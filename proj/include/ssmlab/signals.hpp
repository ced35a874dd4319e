#pragma once

// Smooth random inputs on [0, 1]: scaled shifted-Chebyshev expansions
//   u(t) = scale * Σ_{j=1}^{20} C_j T_j(2t - 1).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "ssmlab/error.hpp"
#include "ssmlab/random.hpp"

namespace ssmlab {

struct ChebyshevSignal {
  static constexpr std::size_t kTerms = 20;

  /// coeffs[j-1] multiplies T_j.
  std::array<double, kTerms> coeffs{};
  double scale = 1.0;

  double operator()(double t) const {
    if (!(t >= 0.0 && t <= 1.0))
      throw InvalidArgument("ChebyshevSignal: t = " + std::to_string(t) + " outside [0, 1]");
    const double s = 2.0 * t - 1.0;
    double prev = 1.0;  // T_0
    double cur = s;     // T_1
    double sum = coeffs[0] * cur;
    for (std::size_t j = 2; j <= kTerms; ++j) {
      const double next = 2.0 * s * cur - prev;
      prev = cur;
      cur = next;
      sum += coeffs[j - 1] * cur;
    }
    return scale * sum;
  }

  /// du/dt using T_j'(s) = j U_{j-1}(s) and ds/dt = 2.
  double derivative(double t) const {
    const double s = 2.0 * t - 1.0;
    double prev = 1.0;     // U_0
    double cur = 2.0 * s;  // U_1
    double sum = coeffs[0] * 1.0 * prev + coeffs[1] * 2.0 * cur;
    for (std::size_t j = 3; j <= kTerms; ++j) {
      const double next = 2.0 * s * cur - prev;  // U_{j-1}
      prev = cur;
      cur = next;
      sum += coeffs[j - 1] * static_cast<double>(j) * cur;
    }
    return 2.0 * scale * sum;
  }

  ChebyshevSignal scaled(double factor) const {
    ChebyshevSignal out = *this;
    out.scale *= factor;
    return out;
  }
};

/// Twenty i.i.d. standard normal coefficients, scale 1.
inline ChebyshevSignal sample_signal(std::uint64_t seed, std::uint64_t index = 0) {
  CounterRng rng(seed, Stream::ChebyshevCoeffs, index);
  ChebyshevSignal sig;
  for (double& c : sig.coeffs) c = rng.normal();
  return sig;
}

inline double eval(const ChebyshevSignal& sig, double t) { return sig(t); }

/// Zero-order hold v(t) = u(τ⌊t/τ⌋).
template <class Signal>
struct HeldSignal {
  Signal signal;
  double tau;

  double operator()(double t) const {
    const double k = std::floor(t / tau);
    return signal(std::min(k * tau, 1.0));
  }
};

template <class Signal>
HeldSignal<Signal> hold(Signal sig, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("hold: tau must lie in (0, 1]");
  return HeldSignal<Signal>{std::move(sig), tau};
}

namespace detail {
constexpr std::size_t kScanIntervals = std::size_t{1} << 14;
constexpr double kSafety = 1.01;

template <class F>
double grid_max_abs(F&& f, std::size_t intervals) {
  double m = 0.0;
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(intervals);
    m = std::max(m, std::abs(f(t)));
  }
  return m;
}
}  // namespace detail

/// Grid-estimated Lipschitz constant (max |u'| over 2^14 + 1 points, times 1.01).
inline double lipschitz_bound(const ChebyshevSignal& sig,
                              std::size_t intervals = detail::kScanIntervals) {
  return detail::kSafety *
         detail::grid_max_abs([&](double t) { return sig.derivative(t); }, intervals);
}

/// Grid-estimated sup |u| with the same grid and safety factor.
inline double max_modulus(const ChebyshevSignal& sig,
                          std::size_t intervals = detail::kScanIntervals) {
  return detail::kSafety * detail::grid_max_abs([&](double t) { return sig(t); }, intervals);
}

}  // namespace ssmlab
