// Command-line front end: pd-curve, simulate, lockin, ser.
//
// Exit codes: 0 ok/locked, 1 generic error, 2 cycle slip,
// 3 numeric abort, 4 config error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "costas/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string variant;
  std::string out;
  std::uint64_t seed = 0;
  long long samples = 0;
  bool plot = false;
  bool seed_set = false;
  bool samples_set = false;
};

costas::experiment::Config load_config(const CommonFlags& flags) {
  using costas::experiment::Config;
  Config cfg = flags.config_path.empty() ? Config::from_string("")
                                         : Config::from_file(flags.config_path);
  if (!flags.variant.empty()) cfg.set("variant", flags.variant);
  if (!flags.out.empty()) cfg.set("out", flags.out);
  if (flags.seed_set) cfg.set("seed", std::to_string(flags.seed));
  if (flags.samples_set) cfg.set("samples", std::to_string(flags.samples));
  if (flags.plot) cfg.set("plot", "true");
  return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config file (key = value lines)");
  cmd->add_option("--variant", flags.variant, "loop variant (classical|fourth-power|folding)");
  cmd->add_option("--out", flags.out, "output CSV path");
  cmd->add_option("--seed", flags.seed, "random seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--samples", flags.samples, "sample count")->each([&](const std::string&) {
    flags.samples_set = true;
  });
  cmd->add_flag("--plot", flags.plot, "also render an SVG plot next to the CSV");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace costas::experiment;

  CLI::App app{"Simulation laboratory for QPSK Costas-loop carrier recovery"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* cmd_pd = app.add_subcommand("pd-curve", "export a phase detector characteristic");
  CLI::App* cmd_sim = app.add_subcommand("simulate", "run a phase-model or waveform simulation");
  CLI::App* cmd_lockin = app.add_subcommand("lockin", "lock-in range sweep (formula vs numeric)");
  CLI::App* cmd_ser = app.add_subcommand("ser", "Monte-Carlo symbol error rate sweep");
  for (CLI::App* cmd : {cmd_pd, cmd_sim, cmd_lockin, cmd_ser}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? exit_config : exit_ok;
  }

  try {
    Config cfg = load_config(flags);
    if (cmd_pd->parsed()) return run_pd_curve(std::move(cfg));
    if (cmd_sim->parsed()) return run_simulate(std::move(cfg));
    if (cmd_lockin->parsed()) return run_lockin(std::move(cfg));
    return run_ser(std::move(cfg));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const costas::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return exit_numeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_error;
  }
}
