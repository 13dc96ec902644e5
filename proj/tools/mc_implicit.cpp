#include <CLI11.hpp>
#include <iostream>

#include "mcimplicit/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gradient descent with small initialization for symmetric "
               "low-rank matrix completion: runs, sweeps, and diagnostics"};
  app.require_subcommand(1);

  mcimplicit::CliOptions opt;
  long d = 100, r = 3, trials = 50;
  double p = 0.3;
  std::uint64_t conc_seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", opt.config_path, "experiment config (JSON)")
          ->required();
    sub->add_option("--out", opt.out_dir,
                    "output root (default: $MC_IMPLICIT_OUT or ./out)");
    sub->add_option("--seed", opt.seed_override, "override the master seed");
    sub->add_option("--workers", opt.workers, "worker threads (default: cores)");
    sub->add_flag("--assert", opt.assert_mode,
                  "exit nonzero on explicit-constant violations");
  };

  CLI::App* run = app.add_subcommand("run", "execute a single configured run");
  add_common(run, true);

  CLI::App* sweep = app.add_subcommand("sweep", "execute a config grid sweep");
  add_common(sweep, true);

  CLI::App* verify =
      app.add_subcommand("verify", "re-check a stored run artifact");
  verify->add_option("artifact", opt.artifact_path, "run.json path")->required();
  add_common(verify, false);

  CLI::App* loo = app.add_subcommand("loo", "leave-one-out ghosts for an artifact");
  loo->add_option("artifact", opt.artifact_path, "run.json path")->required();
  loo->add_option("--l", opt.l_spec, "indices: comma list or sample:<k>");
  loo->add_option("--kinds", opt.kinds, "classical and/or weakly_coupled");
  add_common(loo, false);

  CLI::App* conc = app.add_subcommand(
      "concentration", "Monte-Carlo constants for the sampling bounds");
  conc->add_option("--d", d, "dimension")->capture_default_str();
  conc->add_option("--p", p, "sampling rate")->capture_default_str();
  conc->add_option("--r", r, "rank of test matrices")->capture_default_str();
  conc->add_option("--trials", trials, "Monte-Carlo trials")->capture_default_str();
  conc->add_option("--mc-seed", conc_seed, "seed for the trials");
  add_common(conc, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return mcimplicit::cli_run(opt);
    if (sweep->parsed()) return mcimplicit::cli_sweep(opt);
    if (verify->parsed()) return mcimplicit::cli_verify(opt);
    if (loo->parsed()) return mcimplicit::cli_loo(opt);
    if (conc->parsed())
      return mcimplicit::cli_concentration(opt, d, p, r, static_cast<int>(trials),
                                           conc_seed);
  } catch (const mcimplicit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;  // EX_USAGE
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
