#include <iostream>

#include <CLI11.hpp>

#include "dks/errors.hpp"
#include "run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dissipative Kerr soliton simulator (GP mean field and truncated Wigner ensembles)"};
  app.require_subcommand(1);

  std::string config;
  std::string resume;
  int workers = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
  };
  auto* gp = app.add_subcommand("gp", "relax the stationary soliton");
  auto* twa = app.add_subcommand("twa", "evolve a truncated-Wigner ensemble");
  auto* sweep = app.add_subcommand("sweep", "Liouvillian-gap sweep over N~");
  auto* analyze = app.add_subcommand("analyze", "re-run the analysis on stored records");
  for (auto* s : {gp, twa, sweep, analyze}) add_common(s);
  twa->add_option("--resume", resume, "checkpoint to resume from");
  app.footer(std::string("Relative output_dir values resolve against $") + dks::cli::output_root_env +
             " (default: current directory).\nExit codes: 0 ok, 2 config, 3 divergence, 4 no signal/fit, 5 I/O.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    dks::cli::Overrides ov;
    for (auto* s : {gp, twa, sweep, analyze})
      if (s->parsed()) {
        if (s->count("--seed")) ov.seed = seed;
        if (s->count("--workers")) ov.workers = workers;
      }
    const auto cfg = dks::cli::load_config(config, ov);
    if (gp->parsed()) return dks::cli::run_gp(cfg);
    if (twa->parsed())
      return dks::cli::run_twa(cfg, resume.empty() ? std::nullopt : std::optional<std::filesystem::path>(resume));
    if (sweep->parsed()) return dks::cli::run_sweep(cfg);
    return dks::cli::run_analyze(cfg);
  } catch (const dks::Error& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return dks::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "simulate: internal error: " << e.what() << "\n";
    return 5;
  }
}
