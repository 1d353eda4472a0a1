#include <iostream>

#include <CLI11.hpp>

#include "ibmot/cli.hpp"

int main(int argc, char** argv) {
  using ibmot::cli::RunConfig;
  CLI::App app{"Information-based martingale optimal transport solver"};
  app.set_version_flag("--version", ibmot::cli::kVersion);
  app.require_subcommand(1, 1);

  RunConfig cfg;
  bool no_repair = false;
  std::int64_t max_iters = 0;
  int discretize = 0;

  auto add_pair = [&](CLI::App* sub, bool required) {
    auto* mu = sub->add_option("--mu", cfg.mu_path, "first marginal (JSON or CSV)");
    auto* nu = sub->add_option("--nu", cfg.nu_path, "second marginal (JSON or CSV)");
    if (required) {
      mu->required();
      nu->required();
    }
    sub->add_option("--discretize", discretize, "reduce each marginal to N quantile midpoints");
  };
  auto add_rap = [&](CLI::App* sub) {
    sub->add_option("--t0", cfg.t0, "bridge start time");
    sub->add_option("--t1", cfg.t1, "bridge end time");
  };
  auto add_quad = [&](CLI::App* sub) {
    sub->add_option("--hermite", cfg.n_noise, "noise quadrature nodes (rounded up to whole panels)");
    sub->add_option("--time-nodes", cfg.n_time, "time quadrature nodes");
  };
  auto add_repair = [&](CLI::App* sub) {
    sub->add_option("--alpha", cfg.alpha, "convexification exponent for mu");
    sub->add_option("--beta", cfg.beta, "convexification exponent for nu");
    sub->add_flag("--no-repair", no_repair, "fail instead of convexifying unordered marginals");
  };
  auto add_report = [&](CLI::App* sub) {
    sub->add_option("--report", cfg.report_path, "report JSON path (stdout if omitted)");
  };

  CLI::App* check = app.add_subcommand("check", "test convex order of two marginals");
  add_pair(check, true);
  add_report(check);

  CLI::App* convexify = app.add_subcommand("convexify", "repair a pair into convex order");
  add_pair(convexify, true);
  convexify->add_option("--alpha", cfg.alpha, "exponent for mu");
  convexify->add_option("--beta", cfg.beta, "exponent for nu");
  convexify->add_option("--out-mu", cfg.out_mu_path, "repaired mu (JSON)");
  convexify->add_option("--out-nu", cfg.out_nu_path, "repaired nu (JSON)");
  add_report(convexify);

  CLI::App* solve = app.add_subcommand("solve", "projected gradient ascent to an epsilon-optimal coupling");
  add_pair(solve, true);
  add_rap(solve);
  add_quad(solve);
  add_repair(solve);
  solve->add_option("--epsilon", cfg.epsilon, "target accuracy");
  solve->add_option("--seed", cfg.seed, "seed for the gradient-bound sampler");
  solve->add_option("--max-iters", max_iters, "iteration cap");
  solve->add_option("--out", cfg.out_path, "coupling CSV");
  add_report(solve);

  CLI::App* evaluate = app.add_subcommand("evaluate", "objective and diagnostics of a coupling");
  add_pair(evaluate, false);
  add_rap(evaluate);
  add_quad(evaluate);
  add_repair(evaluate);
  evaluate->add_option("--coupling", cfg.coupling_path, "coupling CSV");
  add_report(evaluate);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo paths of the filtered martingale");
  add_pair(simulate, false);
  add_rap(simulate);
  add_repair(simulate);
  simulate->add_option("--coupling", cfg.coupling_path, "coupling CSV");
  simulate->add_option("--paths", cfg.n_paths, "number of paths");
  simulate->add_option("--grid", cfg.grid, "time steps");
  simulate->add_option("--seed", cfg.seed, "master seed");
  simulate->add_option("--out", cfg.out_path, "paths CSV (path_id,t,I,M,W)");
  add_report(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ibmot::cli::kInvalidInput;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  cfg.repair = !no_repair;
  if (max_iters > 0) cfg.max_iters = max_iters;
  if (discretize > 0) cfg.discretize = discretize;
  return ibmot::cli::run(cfg, std::cout, std::cerr);
}
