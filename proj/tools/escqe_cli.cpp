// Command-line driver: spectrum, dissociation, validate and integrals.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "escqe/error.hpp"
#include "escqe/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string strategy;
  std::string guess;
  std::optional<int> k;
  std::string log_level = "info";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration file");
  cmd->add_option("--out", c.out, "output directory (integrals: output file)");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--strategy", c.strategy, "constraint strategy, e.g. augmented:mu=1");
  cmd->add_option("--guess", c.guess, "guess pool: sd, csf or mixed");
  cmd->add_option("--k", c.k, "number of states");
  cmd->add_option("--log-level", c.log_level, "trace, debug, info, warn, error");
}

escqe::harness::RunConfig resolve(const Common& c, std::string& base_dir) {
  using escqe::harness::RunConfig;
  RunConfig cfg;
  base_dir = ".";
  if (!c.config.empty()) {
    cfg = RunConfig::load(c.config);
    base_dir = std::filesystem::path(c.config).parent_path().string();
    if (base_dir.empty()) base_dir = ".";
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.strategy.empty()) cfg.strategy = escqe::solver::ConstraintStrategy::parse(c.strategy);
  if (!c.guess.empty()) cfg.guess = escqe::refstates::parse_pool_kind(c.guess);
  if (c.k) cfg.k = *c.k;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excited-state contracted quantum eigensolver on an exact statevector simulator"};
  app.require_subcommand(1);

  Common spectrum_opts, dissociation_opts, validate_opts, integrals_opts;
  bool fci_only = false;
  auto* spectrum = app.add_subcommand("spectrum", "k-state run with FCI comparison");
  add_common(spectrum, spectrum_opts);
  spectrum->add_flag("--fci-only", fci_only, "only write the exact spectrum");
  auto* dissociation = app.add_subcommand("dissociation", "CQE and CQE+ over a scan of side lengths");
  add_common(dissociation, dissociation_opts);
  auto* validate = app.add_subcommand("validate", "run the property battery");
  add_common(validate, validate_opts);
  auto* integrals = app.add_subcommand("integrals", "write an FCIDUMP for the configured geometry");
  add_common(integrals, integrals_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    std::string base;
    if (spectrum->parsed()) {
      spdlog::set_level(spdlog::level::from_str(spectrum_opts.log_level));
      auto cfg = resolve(spectrum_opts, base);
      return escqe::harness::cmd_spectrum(cfg, spectrum_opts.out, fci_only, base);
    }
    if (dissociation->parsed()) {
      spdlog::set_level(spdlog::level::from_str(dissociation_opts.log_level));
      auto cfg = resolve(dissociation_opts, base);
      return escqe::harness::cmd_dissociation(cfg, dissociation_opts.out, base);
    }
    if (validate->parsed()) {
      spdlog::set_level(spdlog::level::from_str(validate_opts.log_level));
      auto cfg = resolve(validate_opts, base);
      return escqe::harness::cmd_validate(cfg, validate_opts.out, base);
    }
    spdlog::set_level(spdlog::level::from_str(integrals_opts.log_level));
    auto cfg = resolve(integrals_opts, base);
    std::string out = integrals_opts.out == "out" ? "FCIDUMP" : integrals_opts.out;
    return escqe::harness::cmd_integrals(cfg, out, base);
  } catch (const escqe::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
}
