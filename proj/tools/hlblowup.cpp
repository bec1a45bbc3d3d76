#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hlblowup/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulate and verify one-dimensional vorticity blow-up models"};
  app.require_subcommand(1);

  hlb::SimulateRequest sim;
  auto* s = app.add_subcommand("simulate", "Run a simulation from a YAML config");
  s->add_option("--config", sim.config_path, "Run config (YAML)")->required();
  s->add_option("--out", sim.out_dir, "Output directory (overrides output.dir)");
  s->add_option("--resolution", sim.resolution, "Override grid.N (periodic) or grid.M (log-line)");
  s->add_option("--restart", sim.restart, "Resume from a checkpoint file");

  hlb::VerifyRequest ver;
  double tol = 0;
  auto* v = app.add_subcommand("verify", "Run a property-verification suite");
  v->add_option("--suite", ver.suite, "kernels | quadforms | inequalities | all")->required();
  v->add_option("--trials", ver.trials, "Random trials per quadratic form");
  v->add_option("--seed", ver.seed, "RNG seed");
  auto* tol_opt = v->add_option("--tolerance", tol, "Override every property's tolerance");
  v->add_option("--report", ver.report_path, "Also write a CSV report");

  std::string kind, params, bounds_out;
  auto* b = app.add_subcommand("bounds", "Integrate a comparison ODE envelope");
  b->add_option("--kind", kind, "gengron | entropy | fg")->required();
  b->add_option("--params", params, "Comma-separated key=value list");
  b->add_option("--out", bounds_out, "Write the envelope CSV here instead of stdout");

  std::string sweep_config, sweep_out;
  std::vector<std::string> vary;
  std::size_t jobs = 1;
  auto* w = app.add_subcommand("sweep", "Run a config over a parameter grid");
  w->add_option("--config", sweep_config, "Base run config (YAML)")->required();
  w->add_option("--vary", vary, "KEY=a,b,c (repeatable; dotted keys such as grid.N)")->required();
  w->add_option("--out", sweep_out, "Sweep root directory");
  w->add_option("--jobs", jobs, "Parallel worker runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : hlb::exit_usage;
  }

  if (*s) {
    const auto r = hlb::simulate(sim);
    if (r.exit_code != hlb::exit_usage)
      std::cout << hlb::to_string(r.reason) << " t=" << hlb::fmt_double(r.t_final) << " steps=" << r.steps
                << " records=" << r.records << " out=" << r.out_dir.string() << "\n";
    return r.exit_code;
  }
  if (*v) {
    if (*tol_opt) ver.tolerance = tol;
    return hlb::verify(ver);
  }
  if (*b) return hlb::bounds(kind, params, bounds_out);
  return hlb::sweep(sweep_config, vary, sweep_out, jobs);
}
