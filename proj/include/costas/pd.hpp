#pragma once

// Phase-detector characteristics of the three QPSK Costas loop variants
// (classical, fourth-power, folding) plus the reference shapes they are
// compared against (sawtooth, triangular, sinusoid).  All characteristics
// are total functions of the phase error, pi/2-periodic, and come in two
// forms: value() = K_pd * phi (the dimensional output) and normalized()
// = phi (unit amplitude).

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace costas::pd {

inline constexpr double pi = std::numbers::pi;
inline constexpr double period = pi / 2.0;
inline constexpr double quarter_pi = pi / 4.0;
inline constexpr double sqrt2 = std::numbers::sqrt2;

enum class Kind {
  classical,
  fourth_power,
  folding,
  sinusoidal_ref,
  sawtooth_ref,
  triangular_ref,
};

// Amplitude of the classical piecewise characteristic.
inline constexpr double k_pd_classical = 0.5;
// Amplitude of the folding characteristic, sqrt(2 - sqrt(2))/2 = sin(pi/8);
// the sine form keeps the peak of the evaluated curve exactly on K_pd.
inline const double k_pd_folding = std::sin(pi / 8.0);

inline double sign(double x) noexcept { return x < 0.0 ? -1.0 : 1.0; }

// Reduce theta into (-pi/4, pi/4].  Arguments that land exactly on the
// branch boundary take the left-limit value (theta = pi/4 side).
inline double wrap_quarter(double theta) noexcept {
  double r = std::remainder(theta, period);
  if (r <= -quarter_pi) r += period;
  return r;
}

// Classical loop: K_pd * phi, the four-branch piecewise curve with
// K_pd = 1/2.  Equals -sin(theta)/sqrt(2) on the principal branch.
inline double classical(double theta_e) noexcept {
  return -std::sin(wrap_quarter(theta_e)) / sqrt2;
}

// Fourth-power loop: phi = -sin(4 theta), unit amplitude (K_pd = 1).
inline double fourth_power(double theta_e) noexcept {
  return -std::sin(4.0 * theta_e);
}

// Folding loop: sqrt(2 - sqrt(2)(|sin(t+pi/4)| + |cos(t+pi/4)|)) - c0 with
// c0 = sqrt(2 - sqrt 2)/2.  On the wrapped branch |sin(t+pi/4)| +
// |cos(t+pi/4)| = sqrt(2) cos(w), so the radical collapses exactly to
// 2 |sin(w/2)|; evaluating it that way avoids the cancellation (and the
// slightly negative radicand) the raw form suffers near theta = 0 mod pi/2.
inline double folding(double theta_e) noexcept {
  return 2.0 * std::abs(std::sin(0.5 * wrap_quarter(theta_e))) - k_pd_folding;
}

// The raw radical, kept as written; agrees with folding() but loses
// half the significant digits near its minimum.
inline double folding_radical_route(double theta_e) noexcept {
  const double s =
      std::abs(std::sin(theta_e + quarter_pi)) + std::abs(std::cos(theta_e + quarter_pi));
  const double radicand = std::max(0.0, 2.0 - sqrt2 * s);
  return std::sqrt(radicand) - k_pd_folding;
}

// Same curve written as the magnitude of the centered complex signal
// (|cos|-cos(pi/4)) + j(|sin|-sin(pi/4)).  Kept as an independent route;
// the two must agree everywhere.
inline double folding_complex_route(double theta_e) noexcept {
  const double re = std::abs(std::cos(theta_e + quarter_pi)) - std::cos(quarter_pi);
  const double im = std::abs(std::sin(theta_e + quarter_pi)) - std::sin(quarter_pi);
  return std::abs(std::complex<double>(re, im)) - k_pd_folding;
}

inline double sawtooth(double theta_e) noexcept {
  return -(4.0 / pi) * wrap_quarter(theta_e);
}

inline double triangular(double theta_e) noexcept {
  return (8.0 / pi) * std::abs(wrap_quarter(theta_e)) - 1.0;
}

inline double sinusoidal(double theta_e) noexcept { return -std::sin(4.0 * theta_e); }

// K_pd * phi for any kind.
inline double value(Kind kind, double theta_e) noexcept {
  switch (kind) {
    case Kind::classical: return classical(theta_e);
    case Kind::fourth_power: return fourth_power(theta_e);
    case Kind::folding: return folding(theta_e);
    case Kind::sinusoidal_ref: return sinusoidal(theta_e);
    case Kind::sawtooth_ref: return sawtooth(theta_e);
    case Kind::triangular_ref: return triangular(theta_e);
  }
  return 0.0;
}

// K_pd of the stored characteristic (1/2 classical, c0 folding, 1 otherwise).
inline double gain(Kind kind) noexcept {
  switch (kind) {
    case Kind::classical: return k_pd_classical;
    case Kind::folding: return k_pd_folding;
    default: return 1.0;
  }
}

// phi: unit-amplitude form.
inline double normalized(Kind kind, double theta_e) noexcept {
  return value(kind, theta_e) / gain(kind);
}

// Amplitude of the averaged loop-filter input actually produced by the
// signal-level chain.  For the classical circuit I*sign(Q) - Q*sign(I)
// built from unit-amplitude I/Q has amplitude 1, not K_pd = 1/2; the
// fourth-power and folding chains match their stored K_pd.
inline double signal_amplitude(Kind kind) noexcept {
  return kind == Kind::folding ? k_pd_folding : 1.0;
}

// Reference shape each loop characteristic is approximated by.
inline Kind reference_for(Kind kind) noexcept {
  switch (kind) {
    case Kind::classical: return Kind::sawtooth_ref;
    case Kind::fourth_power: return Kind::sinusoidal_ref;
    case Kind::folding: return Kind::triangular_ref;
    default: return kind;
  }
}

// Max |phi_a - phi_b| of the normalized curves over one period, sampled on
// a uniform grid.  Points on a discontinuity evaluate to the left limit on
// both curves, so the comparison there is between matching one-sided limits.
inline double max_deviation(Kind kind_a, Kind kind_b, int n_samples) {
  if (n_samples < 1000)
    throw std::invalid_argument("max_deviation: need at least 1000 samples");
  double worst = 0.0;
  const double step = period / static_cast<double>(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double theta = -quarter_pi + step * static_cast<double>(i);
    worst = std::max(worst, std::abs(normalized(kind_a, theta) - normalized(kind_b, theta)));
  }
  return worst;
}

// Zero crossing of the characteristic in [-pi/4, pi/4) used as the lock
// reference.  Odd characteristics (classical, fourth-power, sawtooth,
// sinusoid) cross at 0.  The even ones (folding, triangular) cross at
// +theta* in (0, pi/4), located by bisection; the closed loop settles at
// -theta* and the demodulator compensates by rotating with -theta*.
inline double stable_zero(Kind kind) {
  if (kind != Kind::folding && kind != Kind::triangular_ref) return 0.0;
  double lo = 1e-12;
  double hi = quarter_pi - 1e-12;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (value(kind, mid) < 0.0 ? lo : hi) = mid;
  }
  const double zero = 0.5 * (lo + hi);
  if (std::abs(value(kind, zero)) >= 1e-12)
    throw std::runtime_error("stable_zero: bisection did not converge");
  return zero;
}

// Decision table: (I>0,Q>0) -> 1, (I<0,Q>0) -> 3, (I<0,Q<0) -> 5,
// (I>0,Q<0) -> 7, with sign(0) = +1.
inline int decide_symbol(double i_val, double q_val) noexcept {
  if (q_val >= 0.0) return i_val >= 0.0 ? 1 : 3;
  return i_val >= 0.0 ? 7 : 5;
}

// Sampled characteristic over one period, [-pi/4, pi/4), half-open grid.
struct PdCurve {
  Kind kind;
  std::vector<double> thetas;
  std::vector<double> values;
  double k_pd;
};

inline PdCurve sample_curve(Kind kind, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("sample_curve: need at least 2 samples");
  PdCurve curve{kind, {}, {}, gain(kind)};
  curve.thetas.reserve(static_cast<std::size_t>(n_samples));
  curve.values.reserve(static_cast<std::size_t>(n_samples));
  const double step = period / static_cast<double>(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double theta = -quarter_pi + step * static_cast<double>(i);
    curve.thetas.push_back(theta);
    curve.values.push_back(value(kind, theta));
  }
  return curve;
}

inline const char* kind_name(Kind kind) noexcept {
  switch (kind) {
    case Kind::classical: return "classical";
    case Kind::fourth_power: return "fourth-power";
    case Kind::folding: return "folding";
    case Kind::sinusoidal_ref: return "sinusoid";
    case Kind::sawtooth_ref: return "sawtooth";
    case Kind::triangular_ref: return "triangular";
  }
  return "?";
}

}  // namespace costas::pd
