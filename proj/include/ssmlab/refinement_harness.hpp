#pragma once

// Convergence of discrete S4/S6 outputs to the continuous trajectory under
// refinement of the sampling step, plus first-order error-bound calculators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ssmlab/csv.hpp"
#include "ssmlab/error.hpp"
#include "ssmlab/parallel.hpp"
#include "ssmlab/random.hpp"
#include "ssmlab/signals.hpp"
#include "ssmlab/ssm_core.hpp"

namespace ssmlab {

// --- bounds ----------------------------------------------------------------

/// Lipschitz constants and maximum moduli entering the first-order bound.
struct BoundInputs {
  double l_u = 0.0;
  double l_b = 0.0;
  double l_c = 0.0;
  double l_delta = 0.0;
  double m_u = 0.0;
  double m_b = 0.0;
  double m_c = 0.0;
  double m_delta = 1.0;
  double a_norm = 1.0;

  void check() const {
    for (double v : {l_u, l_b, l_c, l_delta, m_u, m_b, m_c, m_delta, a_norm})
      if (!(std::isfinite(v) && v >= 0.0))
        throw InvalidArgument("BoundInputs: constants must be finite and nonnegative");
    if (!(m_delta > 0.0)) throw InvalidArgument("BoundInputs: m_delta must be positive");
    if (!(a_norm > 0.0)) throw InvalidArgument("BoundInputs: a_norm must be positive");
  }
};

/// Coefficient of τ in the general first-order bound:
///   M_C [M_Δ(L_B M_u + M_B) L_u + L_Δ L_u M_B M_u e^{M_Δ‖A‖}] (e^{M_Δ‖A‖} - 1) / (M_Δ‖A‖)
/// May be +inf when M_Δ‖A‖ overflows the exponential.
inline double bound_general(const BoundInputs& in) {
  in.check();
  if (in.l_u == 0.0 || in.m_c == 0.0) return 0.0;
  const double x = in.m_delta * in.a_norm;
  const double growth = std::exp(x);
  const double smooth = in.m_delta * (in.l_b * in.m_u + in.m_b) * in.l_u;
  const double gate = in.l_delta * in.l_u * in.m_b * in.m_u;
  const double bracket = gate == 0.0 ? smooth : smooth + gate * growth;
  return in.m_c * bracket / x * std::expm1(x);
}

/// ‖C‖‖B‖ L_u (e^{Δ‖A‖} - 1) / ‖A‖.
inline double bound_s4_from_norms(double b_norm, double c_norm, double delta, double a_norm,
                                  double l_u) {
  if (!(a_norm > 0.0) || !(delta > 0.0))
    throw InvalidArgument("bound_s4: need positive ‖A‖ and Δ");
  return c_norm * b_norm * l_u * std::expm1(delta * a_norm) / a_norm;
}

/// ‖W_C‖‖W_B‖ M_u² L_u (2M_Δ + |w_Δ| M_u e^{M_Δ‖A‖}) (e^{M_Δ‖A‖} - 1) / (M_Δ‖A‖),
/// with M_Δ = softplus(|w_Δ| M_u + b_Δ).
inline double bound_s6_from_norms(double wb_norm, double wc_norm, double w_delta,
                                  double b_delta, double a_norm, double l_u, double m_u) {
  if (!(a_norm > 0.0)) throw InvalidArgument("bound_s6: need positive ‖A‖");
  if (l_u == 0.0 || m_u == 0.0 || wb_norm == 0.0 || wc_norm == 0.0) return 0.0;
  const double m_delta = softplus(std::abs(w_delta) * m_u + b_delta);
  const double x = m_delta * a_norm;
  const double gate = std::abs(w_delta) == 0.0 ? 0.0 : std::abs(w_delta) * m_u * std::exp(x);
  return wc_norm * wb_norm * m_u * m_u * l_u * (2.0 * m_delta + gate) / x * std::expm1(x);
}

inline double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (cplx z : v) s += std::norm(z);
  return std::sqrt(s);
}

inline double bound_s4(const ContinuousSSM& sys, double l_u) {
  if (sys.flavor() != Flavor::S4) throw InvalidArgument("bound_s4: system is not S4");
  return bound_s4_from_norms(norm2(sys.b), norm2(sys.c), std::get<S4Step>(sys.delta_params).delta,
                             sys.a_norm(), l_u);
}

inline double bound_s6(const ContinuousSSM& sys, double l_u, double m_u) {
  if (sys.flavor() != Flavor::S6) throw InvalidArgument("bound_s6: system is not S6");
  const auto& g = std::get<S6Gate>(sys.delta_params);
  return bound_s6_from_norms(norm2(sys.b), norm2(sys.c), g.w_delta, g.b_delta, sys.a_norm(), l_u,
                             m_u);
}

// --- errors ----------------------------------------------------------------

namespace detail {
inline void check_error_inputs(std::span<const double> y_disc, std::span<const double> y_ref) {
  if (y_disc.size() != y_ref.size() || y_disc.empty())
    throw InvalidArgument("error metric: sequences must be nonempty and of equal length");
}
}  // namespace detail

/// max_{k>=1} |y_disc[k] - y_ref[k]|.
inline double abs_max_error(std::span<const double> y_disc, std::span<const double> y_ref) {
  detail::check_error_inputs(y_disc, y_ref);
  double m = 0.0;
  for (std::size_t k = 1; k < y_ref.size(); ++k) m = std::max(m, std::abs(y_disc[k] - y_ref[k]));
  return m;
}

/// max_{k>=1} |y_disc[k] - y_ref[k]| / max_{k>=1} |y_ref[k]|.
inline double rel_max_error(std::span<const double> y_disc, std::span<const double> y_ref) {
  detail::check_error_inputs(y_disc, y_ref);
  double ref = 0.0;
  for (std::size_t k = 1; k < y_ref.size(); ++k) ref = std::max(ref, std::abs(y_ref[k]));
  if (!(ref > 0.0)) throw DegenerateReferenceError("rel_max_error: reference is identically zero");
  return abs_max_error(y_disc, y_ref) / ref;
}

/// Least-squares slope of log(error) against log(tau).
inline double fit_order(std::span<const double> taus, std::span<const double> errors) {
  if (taus.size() != errors.size()) throw InvalidArgument("fit_order: size mismatch");
  std::vector<double> distinct(taus.begin(), taus.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw InvalidArgument("fit_order: need at least 3 distinct tau values");
  const double n = static_cast<double>(taus.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0 && errors[i] > 0.0))
      throw InvalidArgument("fit_order: tau and error must be positive");
    mx += std::log(taus[i]);
    my += std::log(errors[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double dx = std::log(taus[i]) - mx;
    sxy += dx * (std::log(errors[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// --- convergence study -----------------------------------------------------

struct ConvergenceRecord {
  int pair_id = 0;
  Flavor flavor = Flavor::S4;
  Method method = Method::ZOH;
  double tau = 0.0;
  double scale = 1.0;
  double rel_max_error = 0.0;
  double abs_max_error = 0.0;
  /// First-order bound coefficient times tau (comparable with abs_max_error).
  double bound = 0.0;
  /// Records sharing (pair, flavor, method, scale) share a group id.
  int order_fit_group = 0;
  bool diverged = false;
};

inline double fit_order(std::span<const ConvergenceRecord> records) {
  std::vector<double> taus, errs;
  for (const auto& r : records) {
    if (r.diverged) continue;
    taus.push_back(r.tau);
    errs.push_back(r.rel_max_error);
  }
  return fit_order(taus, errs);
}

inline std::vector<double> dyadic_taus(int finest_exp, int coarsest_exp) {
  std::vector<double> taus;
  for (int e = finest_exp; e <= coarsest_exp; ++e) taus.push_back(std::ldexp(1.0, e));
  return taus;
}

struct StudyConfig {
  int n_pairs = 20;
  std::vector<double> taus = dyadic_taus(-10, -2);
  std::vector<double> scales = {1, 2, 4, 8, 16, 32};
  std::vector<Flavor> flavors = {Flavor::S4, Flavor::S6};
  std::vector<Method> methods = {Method::ZOH, Method::Bilinear};
  std::size_t n_states = 8;
  double tau_ref = std::ldexp(1.0, -14);
  double s4_delta = 0.01;
  /// Δ(0) of the S6 gate; b_Δ = softplus⁻¹(s6_delta_at_zero).
  double s6_delta_at_zero = 0.01;
  unsigned threads = 1;

  void check() const {
    if (n_pairs < 1) throw InvalidArgument("convergence study: need at least one pair");
    if (taus.empty() || scales.empty() || flavors.empty() || methods.empty())
      throw InvalidArgument("convergence study: empty grid");
    if (!(tau_ref > 0.0)) throw InvalidArgument("convergence study: tau_ref must be positive");
    for (double tau : taus) {
      const double ratio = tau / tau_ref;
      const double inv = 1.0 / tau;
      if (!(tau > 0.0 && tau < 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio ||
          std::abs(inv - std::round(inv)) > 1e-9 * inv)
        throw InvalidArgument("convergence study: tau " + format_double(tau) +
                              " must divide 1 and be a multiple of tau_ref");
    }
    for (double s : scales)
      if (!(s > 0.0)) throw InvalidArgument("convergence study: scales must be positive");
  }
};

/// One random input and the S4/S6 systems sharing its B and C.
struct SystemPair {
  ChebyshevSignal input;
  ContinuousSSM s4;
  ContinuousSSM s6;

  const ContinuousSSM& system(Flavor f) const { return f == Flavor::S4 ? s4 : s6; }
};

/// B, C ~ N(0, I_n) (real), w_Δ ~ N(0, 1), A = default_a_diag(n).
inline SystemPair sample_pair(std::uint64_t seed, int pair_id, const StudyConfig& cfg = {}) {
  const auto index = static_cast<std::uint64_t>(pair_id);
  CounterRng rng(seed, Stream::SystemParams, index);
  const std::size_t n = cfg.n_states;
  std::vector<cplx> b(n), c(n);
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = rng.normal();
  const double w_delta = rng.normal();
  const auto a = default_a_diag(n);
  return SystemPair{
      sample_signal(seed, index),
      ContinuousSSM::s4(a, b, c, 0.0, cfg.s4_delta),
      ContinuousSSM::s6(a, b, c, 0.0, w_delta, softplus_inv(cfg.s6_delta_at_zero)),
  };
}

/// Samples of `u` at k τ for k = 0..round(t_end/τ).
template <ScalarSignal Signal>
std::vector<double> sample_grid(const Signal& u, double tau, double t_end = 1.0) {
  const auto steps = static_cast<std::size_t>(std::llround(t_end / tau));
  std::vector<double> out(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) out[k] = u(static_cast<double>(k) * tau);
  return out;
}

inline std::vector<double> grid_times(double tau, double t_end = 1.0) {
  const auto steps = static_cast<std::size_t>(std::llround(t_end / tau));
  std::vector<double> out(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) out[k] = static_cast<double>(k) * tau;
  return out;
}

/// First-order bound coefficient for a system driven by `u`.
inline double bound_for(const ContinuousSSM& sys, const ChebyshevSignal& u) {
  const double l_u = lipschitz_bound(u);
  if (sys.flavor() == Flavor::S4) return bound_s4(sys, l_u);
  return bound_s6(sys, l_u, max_modulus(u));
}

namespace detail {

inline bool record_less(const ConvergenceRecord& a, const ConvergenceRecord& b) {
  return std::make_tuple(a.pair_id, static_cast<int>(a.flavor), static_cast<int>(a.method), a.tau,
                         a.scale) < std::make_tuple(b.pair_id, static_cast<int>(b.flavor),
                                                    static_cast<int>(b.method), b.tau, b.scale);
}

inline std::vector<ConvergenceRecord> study_pair(const StudyConfig& cfg, std::uint64_t seed,
                                                 int pair_id) {
  const SystemPair pair = sample_pair(seed, pair_id, cfg);
  const int n_methods = 2;
  const auto n_scales = static_cast<int>(cfg.scales.size());
  std::vector<ConvergenceRecord> out;

  for (Flavor flavor : cfg.flavors) {
    const ContinuousSSM& sys = pair.system(flavor);
    for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
      const double scale = cfg.scales[si];
      const ChebyshevSignal u = pair.input.scaled(scale);
      const double coeff = bound_for(sys, u);

      Trajectory ref;
      bool ref_ok = true;
      try {
        ref = simulate_continuous(sys, u, cfg.tau_ref);
      } catch (const DivergenceError&) {
        ref_ok = false;
      }

      for (Method method : cfg.methods) {
        const int group =
            ((pair_id * 2 + static_cast<int>(flavor)) * n_methods + static_cast<int>(method)) *
                n_scales +
            static_cast<int>(si);
        for (double tau : cfg.taus) {
          ConvergenceRecord rec{pair_id, flavor, method, tau, scale, 0.0, 0.0, coeff * tau, group,
                                false};
          if (!ref_ok) {
            rec.diverged = true;
          } else {
            const auto u_k = sample_grid(u, tau);
            const auto y = run_discrete(discretize(sys, u_k, tau, method), u_k).values;
            const auto y_ref = sample_at(ref, grid_times(tau));
            rec.abs_max_error = abs_max_error(y, y_ref);
            rec.rel_max_error = rel_max_error(y, y_ref);
            rec.diverged = !std::isfinite(rec.rel_max_error);
          }
          if (rec.diverged) {
            rec.rel_max_error = std::nan("");
            rec.abs_max_error = std::nan("");
          }
          out.push_back(rec);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Runs every (pair, flavor, method, τ, scale) combination. Rows come back
/// sorted by (pair_id, flavor, method, τ, scale) independent of `threads`.
inline std::vector<ConvergenceRecord> run_convergence_study(const StudyConfig& cfg,
                                                            std::uint64_t seed) {
  cfg.check();
  std::vector<std::vector<ConvergenceRecord>> per_pair(static_cast<std::size_t>(cfg.n_pairs));
  parallel_for(per_pair.size(), cfg.threads, [&](std::size_t p) {
    per_pair[p] = detail::study_pair(cfg, seed, static_cast<int>(p));
  });
  std::vector<ConvergenceRecord> out;
  for (auto& v : per_pair) out.insert(out.end(), v.begin(), v.end());
  std::stable_sort(out.begin(), out.end(), detail::record_less);
  return out;
}

inline std::size_t count_diverged(std::span<const ConvergenceRecord> records) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.diverged; }));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

/// Median rel_max_error across pairs for the given configuration.
inline double median_error(std::span<const ConvergenceRecord> records, Flavor flavor,
                           Method method, double tau, double scale) {
  std::vector<double> v;
  for (const auto& r : records)
    if (!r.diverged && r.flavor == flavor && r.method == method && r.tau == tau &&
        r.scale == scale)
      v.push_back(r.rel_max_error);
  return median(std::move(v));
}

inline void write_convergence_csv(std::ostream& os, std::span<const ConvergenceRecord> records) {
  CsvWriter w(os);
  w.header({"pair_id", "flavor", "method", "tau", "scale", "rel_max_error", "abs_max_error",
            "bound", "order_fit_group"});
  for (const auto& r : records) {
    w.field(r.pair_id)
        .field(to_string(r.flavor))
        .field(to_string(r.method))
        .field(r.tau)
        .field(r.scale)
        .field(r.rel_max_error)
        .field(r.abs_max_error)
        .field(r.bound)
        .field(r.order_fit_group);
    w.end_row();
  }
}

}  // namespace ssmlab
