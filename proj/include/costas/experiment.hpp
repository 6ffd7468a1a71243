#pragma once

// Declarative experiment configs (strict key = value files) and the
// runners behind the CLI subcommands.  Unknown or duplicate keys are
// rejected so a typo cannot silently change an experiment.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "costas/csv.hpp"
#include "costas/lockin.hpp"
#include "costas/loop.hpp"
#include "costas/pd.hpp"
#include "costas/signal.hpp"
#include "costas/svg.hpp"

namespace costas::experiment {

enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,
  exit_slip = 2,
  exit_numeric = 3,
  exit_config = 4,
};

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& message, int line_ = 0, std::string key_ = {})
      : std::runtime_error(message), line(line_), key(std::move(key_)) {}
  int line;
  std::string key;
};

namespace detail {
inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}
}  // namespace detail

class Config {
 public:
  static Config from_stream(std::istream& in) {
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string text = detail::trim(line);
      if (text.empty() || text[0] == '#') continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected 'key = value' (line " + std::to_string(line_no) + ")",
                          line_no);
      const std::string key = detail::trim(text.substr(0, eq));
      const std::string value = detail::trim(text.substr(eq + 1));
      if (key.empty())
        throw ConfigError("empty key (line " + std::to_string(line_no) + ")", line_no);
      if (cfg.entries_.count(key))
        throw ConfigError("duplicate key '" + key + "' (line " + std::to_string(line_no) + ")",
                          line_no, key);
      cfg.entries_[key] = {value, line_no};
    }
    return cfg;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return from_stream(in);
  }

  static Config from_string(const std::string& text) {
    std::istringstream in(text);
    return from_stream(in);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  // CLI flags override or add values.
  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto* e = take(key);
    return e ? e->value : fallback;
  }

  std::string require_string(const std::string& key) {
    const auto* e = take(key);
    if (!e) throw ConfigError("missing required key '" + key + "'", 0, key);
    return e->value;
  }

  double get_double(const std::string& key, double fallback) {
    const auto* e = take(key);
    return e ? parse_double(*e, key) : fallback;
  }

  double require_double(const std::string& key) {
    const auto* e = take(key);
    if (!e) throw ConfigError("missing required key '" + key + "'", 0, key);
    return parse_double(*e, key);
  }

  long long get_int(const std::string& key, long long fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("key '" + key + "': expected integer, got '" + e->value + "' (line " +
                            std::to_string(e->line) + ")",
                        e->line, key);
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    const std::string& v = e->value;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected boolean (line " + std::to_string(e->line) + ")",
                      e->line, key);
  }

  std::vector<double> require_double_list(const std::string& key) {
    const auto* e = take(key);
    if (!e) throw ConfigError("missing required key '" + key + "'", 0, key);
    std::vector<double> out;
    std::stringstream ss(e->value);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string t = detail::trim(cell);
      if (t.empty()) continue;
      try {
        out.push_back(csv::parse_double(t));
      } catch (...) {
        throw ConfigError("key '" + key + "': expected number list (line " +
                              std::to_string(e->line) + ")",
                          e->line, key);
      }
    }
    if (out.empty())
      throw ConfigError("key '" + key + "': empty list (line " + std::to_string(e->line) + ")",
                        e->line, key);
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(e->value);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string t = detail::trim(cell);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  // Every key must have been consumed by a getter.
  void reject_unknown() const {
    for (const auto& [key, entry] : entries_)
      if (!consumed_.count(key))
        throw ConfigError("unknown key '" + key + "' (line " + std::to_string(entry.line) + ")",
                          entry.line, key);
  }

 private:
  struct Entry {
    std::string value;
    int line;
  };

  const Entry* take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  double parse_double(const Entry& e, const std::string& key) const {
    try {
      return csv::parse_double(e.value);
    } catch (...) {
      throw ConfigError("key '" + key + "': expected number, got '" + e.value + "' (line " +
                            std::to_string(e.line) + ")",
                        e.line, key);
    }
  }

  std::map<std::string, Entry> entries_;
  std::set<std::string> consumed_;
};

inline pd::Kind parse_variant(const std::string& name) {
  if (name == "classical") return pd::Kind::classical;
  if (name == "fourth-power") return pd::Kind::fourth_power;
  if (name == "folding") return pd::Kind::folding;
  if (name == "sinusoid") return pd::Kind::sinusoidal_ref;
  if (name == "sawtooth") return pd::Kind::sawtooth_ref;
  if (name == "triangular") return pd::Kind::triangular_ref;
  throw ConfigError("unknown variant '" + name + "'", 0, "variant");
}

// --- pd-curve -------------------------------------------------------------

inline int run_pd_curve(Config cfg, std::ostream& report = std::cout) {
  const pd::Kind kind = parse_variant(cfg.require_string("variant"));
  const long long samples = cfg.get_int("samples", 1000);
  const std::string out = cfg.get_string("out", "pd_curve.csv");
  const bool plot = cfg.get_bool("plot", false);
  cfg.reject_unknown();

  const pd::PdCurve curve = pd::sample_curve(kind, static_cast<int>(samples));
  csv::Writer writer(out, {"theta_e", "value", "normalized_value"});
  for (std::size_t i = 0; i < curve.thetas.size(); ++i)
    writer.row({csv::format_double(curve.thetas[i]), csv::format_double(curve.values[i]),
                csv::format_double(curve.values[i] / curve.k_pd)});
  writer.close();

  const pd::Kind ref = pd::reference_for(kind);
  if (ref != kind) {
    const double deviation = pd::max_deviation(kind, ref, 100000);
    report << "max deviation " << pd::kind_name(kind) << " vs " << pd::kind_name(ref) << " = "
           << csv::format_double(deviation) << '\n';
  }

  if (plot) {
    svg::Series main{pd::kind_name(kind), curve.thetas, {}};
    for (std::size_t i = 0; i < curve.thetas.size(); ++i)
      main.y.push_back(curve.values[i] / curve.k_pd);
    std::vector<svg::Series> series{main};
    if (ref != kind) {
      svg::Series rs{pd::kind_name(ref), curve.thetas, {}};
      for (const double th : curve.thetas) rs.y.push_back(pd::normalized(ref, th));
      series.push_back(rs);
    }
    svg::write_chart(out + ".svg", "Normalized phase detector characteristic", "theta_e (rad)",
                     "phi", series);
  }
  return exit_ok;
}

// --- simulate ---------------------------------------------------------------

inline int run_simulate(Config cfg, std::ostream& report = std::cout) {
  const std::string mode = cfg.get_string("mode", "phase");
  const pd::Kind kind = parse_variant(cfg.require_string("variant"));
  const std::string out = cfg.get_string("out", "trajectory.csv");
  const bool plot = cfg.get_bool("plot", false);

  if (mode == "phase") {
    const double k_vco = cfg.require_double("k_vco");
    const double tau1 = cfg.require_double("tau1");
    const double tau2 = cfg.require_double("tau2");
    const double detuning = cfg.get_double("detuning", 0.0);
    const double k_pd = cfg.get_double("k_pd", pd::signal_amplitude(kind));
    const double t_end = cfg.require_double("t_end");
    const bool step_protocol = cfg.get_bool("step_protocol", false);
    LoopParams params = make_loop_params(kind, k_vco, tau1, tau2, detuning, k_pd);
    const double dt_default =
        0.005 * std::min({tau1, tau2 > 0.0 ? tau2 : tau1, 1.0 / k_vco});
    const double dt = cfg.get_double("dt", dt_default);
    PhaseState init;
    init.theta_e = cfg.get_double("theta0", step_protocol ? lock_offset(kind) : 0.0);
    init.x = cfg.get_double("x0", step_protocol ? -detuning / k_vco : 0.0);
    const long long stride = cfg.get_int("stride", 1);
    cfg.reject_unknown();

    const Trajectory traj =
        integrate(params, init, dt, t_end, static_cast<std::size_t>(std::max(1LL, stride)));
    csv::Writer writer(out, {"t", "theta_e", "x", "g"});
    for (const PhaseState& s : traj.samples)
      writer.row({csv::format_double(s.t), csv::format_double(s.theta_e),
                  csv::format_double(s.x), csv::format_double(control_signal(params, s))});
    writer.close();
    report << (traj.slipped ? "slipped" : traj.locked ? "locked" : "undecided") << '\n';

    if (plot) {
      svg::Series s{"theta_e", {}, {}};
      for (const PhaseState& st : traj.samples) {
        s.x.push_back(st.t);
        s.y.push_back(st.theta_e);
      }
      svg::write_chart(out + ".svg", "Phase error trajectory", "t (s)", "theta_e (rad)", {s});
    }
    if (traj.slipped) return exit_slip;
    return traj.locked ? exit_ok : exit_error;
  }

  if (mode == "signal") {
    signal::ModemConfig modem;
    modem.carrier_freq = 2.0 * pd::pi * cfg.require_double("carrier_hz");
    modem.sample_rate = cfg.require_double("sample_rate");
    modem.symbol_rate = cfg.require_double("symbol_rate");
    modem.lpf_cutoff = 2.0 * pd::pi * cfg.get_double("lpf_cutoff_hz", 0.0);
    modem.noise_sigma = cfg.get_double("noise_sigma", 0.0);
    modem.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    modem.tx_prefilter = cfg.get_bool("tx_prefilter", false);
    const long long n_symbols = cfg.get_int("n_symbols", 200);
    const double detuning = cfg.get_double("detuning", 0.0);
    const double wn = 2.0 * pd::pi * cfg.get_double("loop_wn_hz", 0.0);
    const double zeta = cfg.get_double("loop_zeta", 1.0);
    cfg.reject_unknown();
    modem.validate();

    LoopParams params = signal::design_loop(kind, modem, wn, zeta);
    params.omega_free = modem.carrier_freq - detuning;

    const rng::Stream data(modem.seed, 1);
    signal::QpskSource source(modem);
    signal::LoopCircuit circuit(params, modem);
    const std::size_t sps = modem.samples_per_symbol();
    csv::Writer writer(out, {"t", "input", "I", "Q", "g", "vco_phase"});
    const double dt = 1.0 / modem.sample_rate;
    for (long long m = 0; m < n_symbols; ++m) {
      const int n = data.symbol(static_cast<std::uint64_t>(m));
      for (std::size_t j = 0; j < sps; ++j) {
        const double t = static_cast<double>(m * sps + j) * dt;
        const double s = source.next(n);
        const signal::StepResult r = circuit.step(s);
        writer.row({csv::format_double(t), csv::format_double(s), csv::format_double(r.i),
                    csv::format_double(r.q), csv::format_double(r.g),
                    csv::format_double(r.vco_phase)});
      }
    }
    writer.close();
    return exit_ok;
  }

  throw ConfigError("mode must be 'phase' or 'signal', got '" + mode + "'", 0, "mode");
}

// --- lockin -----------------------------------------------------------------

inline int run_lockin(Config cfg, std::ostream& report = std::cout) {
  const pd::Kind kind = parse_variant(cfg.require_string("variant"));
  const std::vector<double> sweep = cfg.require_double_list("sweep");
  const double tau1 = cfg.require_double("tau1");
  const double tau2 = cfg.require_double("tau2");
  const double k_pd = cfg.get_double("k_pd", pd::signal_amplitude(kind));
  const double tolerance = cfg.get_double("tolerance", 0.0);
  const std::string out = cfg.get_string("out", "lockin.csv");
  const bool plot = cfg.get_bool("plot", false);
  cfg.reject_unknown();

  csv::Writer writer(out, {"parameter", "omega_l_formula", "omega_l_numeric", "regime"});
  std::vector<double> xs, formula_ys, numeric_ys;
  for (const double k_vco : sweep) {
    double formula = std::numeric_limits<double>::quiet_NaN();
    std::string regime = "-";
    if (kind == pd::Kind::classical) {
      formula = lockin::classical(k_vco, tau1, tau2);
    } else if (kind == pd::Kind::folding) {
      try {
        const lockin::FoldingLockin fl = lockin::folding(k_vco, k_pd, tau1, tau2);
        formula = fl.omega_l;
        regime = lockin::regime_name(fl.regime);
      } catch (const std::domain_error&) {
        regime = "singular";
      }
    }
    const LoopParams params = make_loop_params(kind, k_vco, tau1, tau2, 0.0, k_pd);
    const double a = std::sqrt(4.0 * k_vco * k_pd * tau2 * tau2 / tau1);
    const double tol = tolerance > 0.0 ? tolerance : 0.01 * a / tau2;
    const double numeric = lockin::numeric(params, tol);
    writer.row({csv::format_double(k_vco), csv::format_double(formula),
                csv::format_double(numeric), regime});
    xs.push_back(k_vco);
    formula_ys.push_back(formula);
    numeric_ys.push_back(numeric);
    report << "k_vco=" << csv::format_double(k_vco)
           << " formula=" << csv::format_double(formula)
           << " numeric=" << csv::format_double(numeric) << " regime=" << regime << '\n';
  }
  writer.close();
  if (plot)
    svg::write_chart(out + ".svg", "Lock-in range sweep", "K_vco (rad/s)", "omega_l (rad/s)",
                     {{"formula", xs, formula_ys}, {"numeric", xs, numeric_ys}});
  return exit_ok;
}

// --- ser --------------------------------------------------------------------

inline int run_ser(Config cfg, std::ostream& report = std::cout) {
  const std::vector<std::string> variant_names =
      cfg.get_string_list("variants", {"classical", "fourth-power", "folding"});
  const std::vector<double> snrs = cfg.require_double_list("snr_db");
  const long long n_symbols = cfg.get_int("n_symbols", 100000);
  const long long warmup = cfg.get_int("warmup", 200);
  signal::ModemConfig modem;
  modem.carrier_freq = 2.0 * pd::pi * cfg.get_double("carrier_hz", 10000.0);
  modem.sample_rate = cfg.get_double("sample_rate", 200000.0);
  modem.symbol_rate = cfg.get_double("symbol_rate", 1000.0);
  modem.lpf_cutoff = 2.0 * pd::pi * cfg.get_double("lpf_cutoff_hz", 0.0);
  modem.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  modem.tx_prefilter = cfg.get_bool("tx_prefilter", false);
  const double wn = 2.0 * pd::pi * cfg.get_double("loop_wn_hz", 0.0);
  const double zeta = cfg.get_double("loop_zeta", 1.0);
  const std::string out = cfg.get_string("out", "ser.csv");
  const bool plot = cfg.get_bool("plot", false);
  cfg.reject_unknown();
  modem.validate();

  std::vector<pd::Kind> kinds;
  for (const auto& name : variant_names) kinds.push_back(parse_variant(name));

  // Monte-Carlo points are independent; run them in parallel and merge in
  // deterministic (variant, snr) order.
  std::vector<std::future<signal::SerPoint>> futures;
  for (const pd::Kind kind : kinds)
    for (const double snr : snrs)
      futures.push_back(std::async(std::launch::async, [=]() {
        const LoopParams loop = signal::design_loop(kind, modem, wn, zeta);
        return signal::measure_ser(modem, loop, snr, n_symbols, warmup);
      }));

  csv::Writer writer(out, {"variant", "snr_db", "symbols", "errors", "ser", "ci_low", "ci_high"});
  std::vector<svg::Series> series;
  std::size_t idx = 0;
  for (const pd::Kind kind : kinds) {
    svg::Series s{pd::kind_name(kind), {}, {}};
    for (const double snr : snrs) {
      const signal::SerPoint point = futures[idx++].get();
      if (!point.locked) {
        std::cerr << "warning: " << pd::kind_name(kind) << " failed to lock at "
                  << csv::format_double(snr) << " dB; point excluded\n";
        continue;
      }
      writer.row({pd::kind_name(kind), csv::format_double(point.snr_db),
                  std::to_string(point.symbols), std::to_string(point.errors),
                  csv::format_double(point.ser), csv::format_double(point.ci_low),
                  csv::format_double(point.ci_high)});
      s.x.push_back(snr);
      s.y.push_back(point.ser);
      report << pd::kind_name(kind) << " @ " << csv::format_double(snr)
             << " dB: ser=" << csv::format_double(point.ser) << " (" << point.errors << "/"
             << point.symbols << ")\n";
    }
    series.push_back(std::move(s));
  }
  writer.close();
  if (plot) svg::write_chart(out + ".svg", "Symbol error rate", "SNR (dB)", "SER", series, true);
  return exit_ok;
}

}  // namespace costas::experiment
