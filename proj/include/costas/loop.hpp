#pragma once

// Slow (phase-domain) model of the carrier recovery loops: PI loop filter
// in state-space form, the nonlinear phase ODE, a fixed-step RK4
// integrator with cycle-slip bookkeeping, and the 2pi-periodic change of
// variables theta~ = 4 theta_e.
//
// Model orientation: the detector output Psi = K_pd * phi enters the loop
// negated,
//     x'       = -b Psi(theta_e)
//     theta_e' = (w_ref - w_free) - K_vco (c x - h Psi(theta_e)),
// which places the attracting equilibria at theta_e = -stable_zero(kind)
// mod pi/2 (0 for classical and fourth-power, -theta* for folding).

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "costas/pd.hpp"

namespace costas {

// Thrown when a simulation state stops being finite (parameter blow-up,
// bad input samples).  The CLI maps this to its own exit code.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// PI filter H(s) = (1 + tau2 s) / (tau1 s), realized with A = 0,
// b = 1/tau1, c = 1, h = tau2/tau1 (scalar state).
struct PiFilter {
  double tau1;
  double tau2;

  PiFilter(double tau1_, double tau2_) : tau1(tau1_), tau2(tau2_) {
    if (!(tau1 > 0.0)) throw std::invalid_argument("PiFilter: tau1 must be > 0");
    if (!(tau2 >= 0.0)) throw std::invalid_argument("PiFilter: tau2 must be >= 0");
  }

  double a() const noexcept { return 0.0; }
  double b() const noexcept { return 1.0 / tau1; }
  double c() const noexcept { return 1.0; }
  double h() const noexcept { return tau2 / tau1; }

  // -c (A - s I)^-1 b + h
  std::complex<double> transfer(std::complex<double> s) const {
    return -c() * b() / (a() - s) + h();
  }
};

struct LoopParams {
  pd::Kind kind;
  double k_vco;       // rad/s per unit control
  double k_pd;        // characteristic amplitude seen by the loop
  double omega_ref;   // rad/s
  double omega_free;  // rad/s
  PiFilter filter;

  LoopParams(pd::Kind kind_, double k_vco_, double k_pd_, double omega_ref_,
             double omega_free_, PiFilter filter_)
      : kind(kind_),
        k_vco(k_vco_),
        k_pd(k_pd_),
        omega_ref(omega_ref_),
        omega_free(omega_free_),
        filter(filter_) {
    if (!(k_vco > 0.0)) throw std::invalid_argument("LoopParams: k_vco must be > 0");
    if (!(k_pd > 0.0)) throw std::invalid_argument("LoopParams: k_pd must be > 0");
  }

  double detuning() const noexcept { return omega_ref - omega_free; }
};

// Phase-only parameter set: carrier frequencies matter only through the
// detuning, k_pd defaults to the amplitude the signal chain realizes.
inline LoopParams make_loop_params(pd::Kind kind, double k_vco, double tau1, double tau2,
                                   double detuning = 0.0, double k_pd = -1.0) {
  if (k_pd <= 0.0) k_pd = pd::signal_amplitude(kind);
  return LoopParams(kind, k_vco, k_pd, detuning, 0.0, PiFilter(tau1, tau2));
}

struct PhaseState {
  double theta_e = 0.0;  // unwrapped, so cycle slips stay observable
  double x = 0.0;        // filter state
  double t = 0.0;        // seconds
};

struct Derivatives {
  double d_theta_e;
  double d_x;
};

inline double pd_output(const LoopParams& p, double theta_e) noexcept {
  return p.k_pd * pd::normalized(p.kind, theta_e);
}

// Loop filter output g = c x - h Psi.
inline double control_signal(const LoopParams& p, const PhaseState& s) noexcept {
  return p.filter.c() * s.x - p.filter.h() * pd_output(p, s.theta_e);
}

inline Derivatives phase_ode_rhs(const LoopParams& p, const PhaseState& s) noexcept {
  const double psi = pd_output(p, s.theta_e);
  const double g = p.filter.c() * s.x - p.filter.h() * psi;
  return {p.detuning() - p.k_vco * g, -p.filter.b() * psi};
}

inline PhaseState rk4_step(const LoopParams& p, const PhaseState& s, double dt) noexcept {
  const Derivatives k1 = phase_ode_rhs(p, s);
  const Derivatives k2 =
      phase_ode_rhs(p, {s.theta_e + 0.5 * dt * k1.d_theta_e, s.x + 0.5 * dt * k1.d_x, s.t});
  const Derivatives k3 =
      phase_ode_rhs(p, {s.theta_e + 0.5 * dt * k2.d_theta_e, s.x + 0.5 * dt * k2.d_x, s.t});
  const Derivatives k4 =
      phase_ode_rhs(p, {s.theta_e + dt * k3.d_theta_e, s.x + dt * k3.d_x, s.t});
  PhaseState next;
  next.theta_e =
      s.theta_e + dt / 6.0 * (k1.d_theta_e + 2.0 * (k2.d_theta_e + k3.d_theta_e) + k4.d_theta_e);
  next.x = s.x + dt / 6.0 * (k1.d_x + 2.0 * (k2.d_x + k3.d_x) + k4.d_x);
  next.t = s.t + dt;
  return next;
}

// Phase offset the loop settles at (attracting equilibrium nearest zero).
inline double lock_offset(pd::Kind kind) { return -pd::stable_zero(kind); }

// Attracting equilibrium nearest to theta (they repeat every pi/2).
inline double nearest_lock(pd::Kind kind, double theta) {
  const double base = lock_offset(kind);
  return base + pd::period * std::round((theta - base) / pd::period);
}

inline constexpr double lock_tolerance = 1e-3;  // rad

inline bool is_locked(const LoopParams& p, const PhaseState& s) {
  if (std::abs(s.theta_e - nearest_lock(p.kind, s.theta_e)) >= lock_tolerance) return false;
  return std::abs(phase_ode_rhs(p, s).d_theta_e) < lock_tolerance * p.k_vco;
}

struct Trajectory {
  std::vector<PhaseState> samples;
  bool locked = false;
  bool slipped = false;
};

// Fixed-step RK4 over [initial.t, initial.t + t_end_rel], recording every
// record_stride-th state (the final state is always recorded).
//
// Step-size guideline: dt <= 0.01 * min(tau1, tau2 > 0 ? tau2 : tau1,
// 1/k_vco).  slipped = the excursion from the initial lock point reached a
// full detector period (pi/2); locked = final state within 1e-3 rad of an
// attracting equilibrium with |theta_e'| < 1e-3 * k_vco.
inline Trajectory integrate(const LoopParams& params, const PhaseState& initial, double dt,
                            double t_end_rel, std::size_t record_stride = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (record_stride == 0) record_stride = 1;
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end_rel / dt));

  Trajectory traj;
  traj.samples.reserve(n_steps / record_stride + 2);
  PhaseState s = initial;
  const double slip_ref = nearest_lock(params.kind, initial.theta_e);
  traj.samples.push_back(s);
  for (std::size_t i = 0; i < n_steps; ++i) {
    s = rk4_step(params, s, dt);
    if (!std::isfinite(s.theta_e) || !std::isfinite(s.x))
      throw NumericError("integrate: state diverged at t = " + std::to_string(s.t));
    if (std::abs(s.theta_e - slip_ref) >= pd::period) traj.slipped = true;
    if ((i + 1) % record_stride == 0) traj.samples.push_back(s);
  }
  if (n_steps % record_stride != 0) traj.samples.push_back(s);
  traj.locked = is_locked(params, s);
  return traj;
}

// 2pi-periodic coordinates: theta~ = 4 theta_e, omega~ = detuning / 4.
struct TransformedState {
  double theta_tilde;
  double omega_tilde;
};

inline TransformedState transform_coordinates(const PhaseState& s, const LoopParams& p) noexcept {
  return {4.0 * s.theta_e, p.detuning() / 4.0};
}

// Right-hand side of the transformed system,
//   x'      = -b Psi(theta~/4)
//   theta~' = 4 detuning - 4 K_vco (c x - h Psi(theta~/4)).
inline Derivatives transformed_ode_rhs(const LoopParams& p, double theta_tilde,
                                       double x) noexcept {
  const double psi = pd_output(p, theta_tilde / 4.0);
  const double g = p.filter.c() * x - p.filter.h() * psi;
  return {4.0 * p.detuning() - 4.0 * p.k_vco * g, -p.filter.b() * psi};
}

struct TransformedSample {
  double t;
  double theta_tilde;
  double x;
};

inline std::vector<TransformedSample> integrate_transformed(const LoopParams& params,
                                                            double theta_tilde0, double x0,
                                                            double dt, double t_end_rel) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_transformed: dt must be > 0");
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end_rel / dt));
  std::vector<TransformedSample> out;
  out.reserve(n_steps + 1);
  double th = theta_tilde0;
  double x = x0;
  double t = 0.0;
  out.push_back({t, th, x});
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Derivatives k1 = transformed_ode_rhs(params, th, x);
    const Derivatives k2 =
        transformed_ode_rhs(params, th + 0.5 * dt * k1.d_theta_e, x + 0.5 * dt * k1.d_x);
    const Derivatives k3 =
        transformed_ode_rhs(params, th + 0.5 * dt * k2.d_theta_e, x + 0.5 * dt * k2.d_x);
    const Derivatives k4 = transformed_ode_rhs(params, th + dt * k3.d_theta_e, x + dt * k3.d_x);
    th += dt / 6.0 * (k1.d_theta_e + 2.0 * (k2.d_theta_e + k3.d_theta_e) + k4.d_theta_e);
    x += dt / 6.0 * (k1.d_x + 2.0 * (k2.d_x + k3.d_x) + k4.d_x);
    t += dt;
    if (!std::isfinite(th) || !std::isfinite(x))
      throw NumericError("integrate_transformed: state diverged at t = " +
                         std::to_string(t));
    out.push_back({t, th, x});
  }
  return out;
}

}  // namespace costas
