#pragma once

// Lock-in range estimation: the closed-form expressions for the classical
// and folding loops, and a simulation-based estimator that bisects on the
// frequency step and checks for cycle slips (the only route available for
// the fourth-power loop).

#include <cmath>
#include <stdexcept>
#include <string>

#include "costas/loop.hpp"
#include "costas/pd.hpp"

namespace costas::lockin {

enum class Regime { node, critical, focus };

inline const char* regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::node: return "i";
    case Regime::critical: return "ii";
    case Regime::focus: return "iii";
  }
  return "?";
}

namespace detail {
inline void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string("lockin: ") + name + " must be > 0");
}
}  // namespace detail

// Damping constants and the resulting estimate.
struct LockinParams {
  double a;
  double d_minus;
  double d_plus;
  double omega_l;
  Regime regime;
};

// Classical loop: w_l = 2 (a sqrt(pi)/tau2) exp( a/(2 d-) ln((d+ + d-)/(d+ - d-)) )
// with a = sqrt(4 K_vco tau2^2 / tau1), d- = |a|, d+ = sqrt(a^2 + 4 pi).
inline LockinParams classical_params(double k_vco, double tau1, double tau2) {
  detail::require_positive(k_vco, "k_vco");
  detail::require_positive(tau1, "tau1");
  detail::require_positive(tau2, "tau2");
  const double a = std::sqrt(4.0 * k_vco * tau2 * tau2 / tau1);
  const double d_minus = std::abs(a);
  const double d_plus = std::sqrt(a * a + 4.0 * pd::pi);
  const double omega_l =
      2.0 * (a * std::sqrt(pd::pi) / tau2) *
      std::exp(a / (2.0 * d_minus) * std::log((d_plus + d_minus) / (d_plus - d_minus)));
  return {a, d_minus, d_plus, omega_l, Regime::node};
}

inline double classical(double k_vco, double tau1, double tau2) {
  return classical_params(k_vco, tau1, tau2).omega_l;
}

struct FoldingLockin {
  double omega_l;
  Regime regime;
};

// Folding loop, three cases by the sign of a^2 - 2 pi, with
// a = sqrt(4 K_vco K_pd tau2^2 / tau1), d- = sqrt(|a^2 - 2 pi|),
// d+ = sqrt(|a^2 - 4 pi|).  Case (i) needs d+ > d-; parameter sets with
// 3 pi <= a^2 are rejected as singular (at a^2 = 4 pi the log argument
// degenerates entirely).
inline LockinParams folding_params(double k_vco, double k_pd, double tau1, double tau2) {
  detail::require_positive(k_vco, "k_vco");
  detail::require_positive(k_pd, "k_pd");
  detail::require_positive(tau1, "tau1");
  detail::require_positive(tau2, "tau2");
  const double a_sq = 4.0 * k_vco * k_pd * tau2 * tau2 / tau1;
  const double a = std::sqrt(a_sq);
  const double prefactor = 2.0 * a * std::sqrt(pd::pi) / tau2;
  const double d_minus = std::sqrt(std::abs(a_sq - 2.0 * pd::pi));
  const double d_plus = std::sqrt(std::abs(a_sq - 4.0 * pd::pi));
  if (std::abs(a_sq - 2.0 * pd::pi) < 1e-12 * a_sq)
    return {a, d_minus, d_plus, prefactor * std::exp(a / d_plus), Regime::critical};
  if (a_sq > 2.0 * pd::pi) {
    if (d_plus <= d_minus)
      throw std::domain_error(
          "lockin::folding: case (i) is singular for these parameters (d+ <= d-)");
    return {a, d_minus, d_plus,
            prefactor * std::exp(a / (2.0 * d_minus) *
                                 std::log((d_plus + d_minus) / (d_plus - d_minus))),
            Regime::node};
  }
  return {a, d_minus, d_plus, prefactor * std::exp(a / d_minus * std::atan(d_minus / d_plus)),
          Regime::focus};
}

inline FoldingLockin folding(double k_vco, double k_pd, double tau1, double tau2) {
  const LockinParams p = folding_params(k_vco, k_pd, tau1, tau2);
  return {p.omega_l, p.regime};
}

// Simulation-based lock-in estimate.  A loop resting in the equilibrium
// for detuning -w is switched abruptly to +w; w lies inside the lock-in
// range iff the loop re-locks without a cycle slip.  Bisection on w >= 0
// assuming the pass/fail predicate is monotone over the bracket; returns
// the bracket midpoint once it is narrower than `tolerance`.  The result
// is a deterministic function of (params, tolerance).
inline double numeric(const LoopParams& params, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("lockin::numeric: tolerance must be > 0");
  const double tau1 = params.filter.tau1;
  const double tau2 = params.filter.tau2;
  const double lock = lock_offset(params.kind);

  // local slope of the oriented characteristic, for time scales
  const double delta = 1e-6;
  const double slope = params.k_pd *
                       std::abs(pd::normalized(params.kind, lock + delta) -
                                pd::normalized(params.kind, lock - delta)) /
                       (2.0 * delta);
  const double omega_n = std::sqrt(params.k_vco * slope / tau1);

  const double a = std::sqrt(4.0 * params.k_vco * params.k_pd * tau2 * tau2 / tau1);
  const double hi0 = (tau2 > 0.0 && a > 0.0) ? 100.0 * a / tau2 : 100.0 * params.k_vco;

  const double dt = std::min({0.01 * std::min({tau1, tau2 > 0.0 ? tau2 : tau1, 1.0 / params.k_vco}),
                              0.05 / omega_n, pd::pi / (40.0 * hi0)});
  const double t_max = 400.0 / omega_n + 20.0 * tau1;

  const auto relocks = [&](double w) -> bool {
    LoopParams p = params;
    p.omega_ref = p.omega_free + w;  // step from the -w equilibrium to +w
    PhaseState s{lock, -w / (p.k_vco * p.filter.c()), 0.0};
    const auto n_steps = static_cast<std::size_t>(t_max / dt);
    for (std::size_t i = 0; i < n_steps; ++i) {
      s = rk4_step(p, s, dt);
      if (!std::isfinite(s.theta_e) || !std::isfinite(s.x))
        throw NumericError("lockin::numeric: state diverged");
      if (std::abs(s.theta_e - lock) >= pd::period) return false;  // cycle slip
      if (std::abs(s.theta_e - lock) < lock_tolerance &&
          std::abs(phase_ode_rhs(p, s).d_theta_e) < lock_tolerance * p.k_vco)
        return true;
    }
    return std::abs(s.theta_e - lock) < lock_tolerance;
  };

  double lo = 0.0;
  double hi = hi0;
  if (relocks(hi))
    throw std::runtime_error("lockin::numeric: upper bracket never slips; degenerate parameters");
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (relocks(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace costas::lockin
