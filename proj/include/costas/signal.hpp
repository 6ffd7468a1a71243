#pragma once

// Waveform-level simulation: QPSK generator with additive white noise,
// sample-by-sample Costas loop circuits for the three variants,
// integrate-and-dump demodulation with pi/2-ambiguity resolution, and
// Monte-Carlo symbol-error-rate measurement.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "costas/loop.hpp"
#include "costas/pd.hpp"
#include "costas/rng.hpp"

namespace costas::signal {

struct ModemConfig {
  double carrier_freq = 0.0;  // rad/s
  double sample_rate = 0.0;   // samples/s
  double symbol_rate = 0.0;   // symbols/s
  double lpf_cutoff = 0.0;    // rad/s; 0 selects the geometric-mean default
  double noise_sigma = 0.0;   // std of the per-sample additive noise
  std::uint64_t seed = 0;
  bool tx_prefilter = false;  // one-pole baseband smoothing before upconversion

  double carrier_hz() const noexcept { return carrier_freq / (2.0 * pd::pi); }

  void validate() const {
    if (!(carrier_freq > 0.0) || !(sample_rate > 0.0) || !(symbol_rate > 0.0))
      throw std::invalid_argument("ModemConfig: rates must be > 0");
    if (sample_rate < 20.0 * carrier_hz())
      throw std::invalid_argument("ModemConfig: need >= 20 samples per carrier cycle");
    if (4.0 * symbol_rate > carrier_hz())
      throw std::invalid_argument("ModemConfig: symbol rate too close to the carrier");
    const double cutoff = effective_lpf_cutoff();
    if (!(cutoff > 2.0 * pd::pi * symbol_rate) || !(cutoff < 2.0 * carrier_freq))
      throw std::invalid_argument(
          "ModemConfig: lpf_cutoff must lie strictly between 2*pi*symbol_rate and "
          "2*carrier_freq");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("ModemConfig: noise_sigma < 0");
    const double ratio = sample_rate / symbol_rate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw std::invalid_argument("ModemConfig: sample_rate must be a multiple of symbol_rate");
  }

  double effective_lpf_cutoff() const noexcept {
    if (lpf_cutoff > 0.0) return lpf_cutoff;
    return 2.0 * pd::pi * std::sqrt(symbol_rate * carrier_hz());
  }

  std::size_t samples_per_symbol() const noexcept {
    return static_cast<std::size_t>(std::llround(sample_rate / symbol_rate));
  }
};

inline bool valid_symbol(int n) noexcept { return n == 1 || n == 3 || n == 5 || n == 7; }

class OnePole {
 public:
  OnePole(double cutoff, double dt) noexcept : alpha_(1.0 - std::exp(-cutoff * dt)) {}
  double operator()(double x) noexcept {
    y_ += alpha_ * (x - y_);
    return y_;
  }
  double value() const noexcept { return y_; }

 private:
  double alpha_;
  double y_ = 0.0;
};

// Streams sqrt(2) sin(w_ref t + n(t) pi/4) + noise sample by sample, in
// quadrature form so the optional baseband prefilter has somewhere to act.
// Rectangular symbol pulses by default.
class QpskSource {
 public:
  explicit QpskSource(const ModemConfig& cfg)
      : cfg_(cfg),
        dt_(1.0 / cfg.sample_rate),
        noise_(cfg.seed, 0),
        fi_(4.0 * pd::pi * cfg.symbol_rate, 1.0 / cfg.sample_rate),
        fq_(4.0 * pd::pi * cfg.symbol_rate, 1.0 / cfg.sample_rate) {}

  double next(int symbol_n) {
    if (!valid_symbol(symbol_n)) throw std::invalid_argument("QpskSource: symbol not in {1,3,5,7}");
    double ib = std::cos(symbol_n * pd::quarter_pi);
    double qb = std::sin(symbol_n * pd::quarter_pi);
    if (cfg_.tx_prefilter) {
      ib = fi_(ib);
      qb = fq_(qb);
    }
    const double t = static_cast<double>(k_) * dt_;
    double s = pd::sqrt2 * (ib * std::sin(cfg_.carrier_freq * t) +
                            qb * std::cos(cfg_.carrier_freq * t));
    if (cfg_.noise_sigma > 0.0) s += cfg_.noise_sigma * noise_.gaussian(k_);
    ++k_;
    return s;
  }

 private:
  ModemConfig cfg_;
  double dt_;
  rng::Stream noise_;
  OnePole fi_, fq_;
  std::uint64_t k_ = 0;
};

inline std::vector<double> generate_qpsk(const ModemConfig& cfg, std::span<const int> symbols) {
  cfg.validate();
  if (symbols.empty()) throw std::invalid_argument("generate_qpsk: empty symbol stream");
  const std::size_t sps = cfg.samples_per_symbol();
  QpskSource source(cfg);
  std::vector<double> wave;
  wave.reserve(symbols.size() * sps);
  for (const int n : symbols)
    for (std::size_t j = 0; j < sps; ++j) wave.push_back(source.next(n));
  return wave;
}

// Loop-filter inputs per variant.  Each is the negated form of the raw
// detector combination, matching the loop orientation in loop.hpp.
inline double classical_error(double i, double q) noexcept {
  return q * pd::sign(i) - i * pd::sign(q);
}

inline double fourth_power_error(double i, double q) noexcept {
  const std::complex<double> z{i, q};
  const std::complex<double> z2 = z * z;
  return -(z2 * z2).imag();  // quadrature component of (I + jQ)^4, negated
}

inline double folding_magnitude(double abs_i, double abs_q) noexcept {
  const double re = abs_i - std::cos(pd::quarter_pi);
  const double im = abs_q - std::sin(pd::quarter_pi);
  return std::sqrt(re * re + im * im);
}

// Simplified folding chain: |I|, |Q| taken directly.
inline double folding_error(double i, double q) noexcept {
  return pd::k_pd_folding - folding_magnitude(std::abs(i), std::abs(q));
}

// Original folding chain: the limiter-multiplier products feed the abs
// blocks.  Must produce the same loop-filter input as folding_error.
inline double folding_error_original(double i, double q) noexcept {
  return pd::k_pd_folding -
         folding_magnitude(std::abs(i * pd::sign(q)), std::abs(q * pd::sign(i)));
}

inline double loop_error(pd::Kind kind, double i, double q) {
  switch (kind) {
    case pd::Kind::classical: return classical_error(i, q);
    case pd::Kind::fourth_power: return fourth_power_error(i, q);
    case pd::Kind::folding: return folding_error(i, q);
    default: throw std::invalid_argument("loop_error: reference shapes are not circuits");
  }
}

struct StepResult {
  double i;
  double q;
  double g;
  double vco_phase;  // phase after this sample's update
};

// One Costas loop operating on raw waveform samples: quadrature mixers,
// two one-pole front-end filters, the variant detector combination, the
// PI loop filter, and the VCO phase accumulator.
class LoopCircuit {
 public:
  LoopCircuit(const LoopParams& params, const ModemConfig& modem)
      : params_(params),
        dt_(1.0 / modem.sample_rate),
        lpf_i_(modem.effective_lpf_cutoff(), dt_),
        lpf_q_(modem.effective_lpf_cutoff(), dt_) {
    if (params.kind != pd::Kind::classical && params.kind != pd::Kind::fourth_power &&
        params.kind != pd::Kind::folding)
      throw std::invalid_argument("LoopCircuit: variant must be a loop circuit kind");
  }

  // VCO phase at the next sample instant (the phase step() will mix with).
  double vco_phase() const noexcept { return vco_phase_; }
  double filter_state() const noexcept { return filter_state_; }
  const LoopParams& params() const noexcept { return params_; }

  StepResult step(double sample) {
    if (!std::isfinite(sample)) throw NumericError("LoopCircuit::step: non-finite sample");
    const double q_mix = sample * pd::sqrt2 * std::cos(vco_phase_);
    const double i_mix = sample * pd::sqrt2 * std::sin(vco_phase_);
    const double q = lpf_q_(q_mix);
    const double i = lpf_i_(i_mix);
    const double u = loop_error(params_.kind, i, q);
    filter_state_ += dt_ * params_.filter.b() * u;
    const double g = params_.filter.c() * filter_state_ + params_.filter.h() * u;
    vco_phase_ += dt_ * (params_.omega_free + params_.k_vco * g);
    return {i, q, g, vco_phase_};
  }

 private:
  LoopParams params_;
  double dt_;
  OnePole lpf_i_, lpf_q_;
  double filter_state_ = 0.0;
  double vco_phase_ = 0.0;
};

// Integrate-and-dump against the recovered carrier.  vco_phase[k] must be
// the VCO phase at sample instant k; `rotation` is added to compensate a
// constant lock offset (folding locks at -stable_zero, so rotation is
// -stable_zero(kind)).
inline std::vector<int> demodulate(const ModemConfig& cfg, std::span<const double> waveform,
                                   std::span<const double> vco_phase, double rotation) {
  if (waveform.size() != vco_phase.size())
    throw std::invalid_argument("demodulate: waveform/phase length mismatch");
  const std::size_t sps = cfg.samples_per_symbol();
  if (sps == 0 || waveform.size() % sps != 0)
    throw std::invalid_argument("demodulate: waveform length is not a whole number of symbols");
  std::vector<int> decisions;
  decisions.reserve(waveform.size() / sps);
  for (std::size_t m = 0; m < waveform.size() / sps; ++m) {
    double i_sum = 0.0;
    double q_sum = 0.0;
    for (std::size_t j = 0; j < sps; ++j) {
      const std::size_t k = m * sps + j;
      const double ph = vco_phase[k] + rotation;
      i_sum += waveform[k] * pd::sqrt2 * std::sin(ph);
      q_sum += waveform[k] * pd::sqrt2 * std::cos(ph);
    }
    decisions.push_back(pd::decide_symbol(i_sum, q_sum));
  }
  return decisions;
}

// QPSK Costas loops lock modulo pi/2; a decided symbol maps to the true
// one through n -> n + 2k (mod 8) for a fixed k in {0..3}.
inline int rotate_symbol(int n, int k) noexcept { return ((n - 1 + 2 * k) & 7) + 1; }

inline int resolve_rotation(std::span<const int> decided, std::span<const int> truth,
                            std::size_t limit) {
  limit = std::min({limit, decided.size(), truth.size()});
  int best_k = 0;
  std::size_t best_err = limit + 1;
  for (int k = 0; k < 4; ++k) {
    std::size_t err = 0;
    for (std::size_t m = 0; m < limit; ++m)
      if (rotate_symbol(decided[m], k) != truth[m]) ++err;
    if (err < best_err) {
      best_err = err;
      best_k = k;
    }
  }
  return best_k;
}

struct WilsonInterval {
  double low;
  double high;
};

inline WilsonInterval wilson95(long long errors, long long n) {
  if (n <= 0 || errors < 0 || errors > n) throw std::invalid_argument("wilson95: bad counts");
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(errors) / nn;
  const double z2n = z * z / nn;
  const double denom = 1.0 + z2n;
  const double center = (p + 0.5 * z2n) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + 0.25 * z2n / nn) / denom;
  WilsonInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (errors == 0) ci.low = 0.0;  // boundary cases collapse exactly
  if (errors == n) ci.high = 1.0;
  return ci;
}

// SNR convention: the input sine has unit power; the noise power is the
// white per-sample noise that falls inside the front-end filter's
// noise-equivalent bandwidth (pi * fc for a one-pole filter).  Hence
// sigma^2 = sample_rate / (snr * pi * fc_hz).  This choice only shifts
// SER curves horizontally but must be kept in mind when comparing against
// other conventions.
inline double noise_sigma_for_snr(const ModemConfig& cfg, double snr_db) {
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double fc_hz = cfg.effective_lpf_cutoff() / (2.0 * pd::pi);
  return std::sqrt(cfg.sample_rate / (snr * pd::pi * fc_hz));
}

struct SerPoint {
  double snr_db = 0.0;
  long long symbols = 0;  // counted after the warm-up block
  long long errors = 0;
  double ser = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool locked = true;  // false when the loop failed to acquire during warm-up
};

// Loop design for the waveform chains: pick the natural frequency and
// damping, then divide the VCO gain by the detector slope at lock so all
// variants close the loop with the same small-signal bandwidth.
inline LoopParams design_loop(pd::Kind kind, const ModemConfig& modem, double omega_n = 0.0,
                              double zeta = 1.0) {
  if (omega_n <= 0.0) omega_n = 2.0 * pd::pi * modem.symbol_rate / 10.0;
  const double k_pd = pd::signal_amplitude(kind);
  const double lock = lock_offset(kind);
  const double delta = 1e-6;
  const double slope = k_pd *
                       std::abs(pd::normalized(kind, lock + delta) -
                                pd::normalized(kind, lock - delta)) /
                       (2.0 * delta);
  const double tau1 = 1.0 / omega_n;
  const double tau2 = 2.0 * zeta / omega_n;
  const double k_vco = omega_n * omega_n * tau1 / slope;
  return LoopParams(kind, k_vco, k_pd, modem.carrier_freq, modem.carrier_freq,
                    PiFilter(tau1, tau2));
}

// Full chain Monte-Carlo at one SNR point.  Generator, loop, and
// demodulator run fused sample by sample; symbols and noise come from
// counter-based streams keyed by the modem seed, so the result is a pure
// function of its arguments.  The first `warmup` symbols resolve the
// pi/2 ambiguity against known data and are excluded from error counts.
inline SerPoint measure_ser(const ModemConfig& modem, const LoopParams& loop, double snr_db,
                            long long n_symbols, long long warmup = 200) {
  if (n_symbols < 1000) throw std::invalid_argument("measure_ser: need at least 1000 symbols");
  if (warmup < 100 || warmup >= n_symbols)
    throw std::invalid_argument("measure_ser: warmup must be in [100, n_symbols)");
  ModemConfig cfg = modem;
  cfg.noise_sigma = noise_sigma_for_snr(modem, snr_db);
  cfg.validate();

  const std::size_t sps = cfg.samples_per_symbol();
  const rng::Stream data(cfg.seed, 1);
  QpskSource source(cfg);
  LoopCircuit circuit(loop, cfg);
  const double rotation = -pd::stable_zero(loop.kind);

  std::vector<int> truth(static_cast<std::size_t>(n_symbols));
  std::vector<int> decided(static_cast<std::size_t>(n_symbols));
  for (long long m = 0; m < n_symbols; ++m) {
    const int n = data.symbol(static_cast<std::uint64_t>(m));
    truth[static_cast<std::size_t>(m)] = n;
    double i_sum = 0.0;
    double q_sum = 0.0;
    for (std::size_t j = 0; j < sps; ++j) {
      const double ph = circuit.vco_phase() + rotation;
      const double s = source.next(n);
      i_sum += s * pd::sqrt2 * std::sin(ph);
      q_sum += s * pd::sqrt2 * std::cos(ph);
      circuit.step(s);
    }
    decided[static_cast<std::size_t>(m)] = pd::decide_symbol(i_sum, q_sum);
  }

  const int k = resolve_rotation(decided, truth, static_cast<std::size_t>(warmup));
  long long warm_err = 0;
  for (long long m = 0; m < warmup; ++m)
    if (rotate_symbol(decided[static_cast<std::size_t>(m)], k) !=
        truth[static_cast<std::size_t>(m)])
      ++warm_err;

  long long errors = 0;
  for (long long m = warmup; m < n_symbols; ++m)
    if (rotate_symbol(decided[static_cast<std::size_t>(m)], k) !=
        truth[static_cast<std::size_t>(m)])
      ++errors;

  SerPoint point;
  point.snr_db = snr_db;
  point.symbols = n_symbols - warmup;
  point.errors = errors;
  point.ser = static_cast<double>(errors) / static_cast<double>(point.symbols);
  const WilsonInterval ci = wilson95(errors, point.symbols);
  point.ci_low = ci.low;
  point.ci_high = ci.high;
  point.locked = warm_err * 4 <= warmup;
  return point;
}

}  // namespace costas::signal
