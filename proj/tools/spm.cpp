// Command-line front end: simulate, analyze, sweep, reproduce-figures, validate.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spm/cli.hpp"

namespace {

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> max_steps;
  std::optional<double> eps_z;
  std::optional<double> eps_s;
};

void add_common(CLI::App* cmd, Common& c, bool needs_scenario) {
  auto* opt = cmd->add_option("--scenario", c.scenario, "scenario file");
  if (needs_scenario) opt->required();
  cmd->add_option("--out", c.out, "output path (default: stdout)");
  cmd->add_option("--max-steps", c.max_steps, "step cap")->check(CLI::PositiveNumber);
  cmd->add_option("--eps-z", c.eps_z, "absolute prevalence threshold for convergence")->check(CLI::PositiveNumber);
  cmd->add_option("--eps-s", c.eps_s, "absolute susceptible-decrement threshold for convergence")
      ->check(CLI::PositiveNumber);
}

spm::StoppingRule override_stopping(spm::StoppingRule rule, const Common& c) {
  if (c.max_steps) rule.max_steps = *c.max_steps;
  if (c.eps_z) rule.eps_z = *c.eps_z;
  if (c.eps_s) rule.eps_s = *c.eps_s;
  return rule;
}

bool has_override(const Common& c) { return c.max_steps || c.eps_z || c.eps_s; }

spm::Scenario load(const Common& c) {
  spm::Scenario s = spm::load_scenario(c.scenario);
  s.stopping = override_stopping(s.stopping, c);
  return s;
}

/// Runs `body` with the --out stream, or stdout when no path was given.
template <class F>
void with_output(const std::string& path, F&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw spm::IoError(path + ": cannot open for writing");
  body(f);
  f.flush();
  if (!f) throw spm::IoError(path + ": write failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-time staged-progression epidemic model"};
  app.require_subcommand(1);

  Common simulate_opts, analyze_opts, sweep_opts, figures_opts, validate_opts;

  auto* simulate = app.add_subcommand("simulate", "simulate a scenario and write the trajectory as CSV");
  add_common(simulate, simulate_opts, true);

  auto* analyze = app.add_subcommand("analyze", "JSON report of R0, final size, asymptotics and prevalence");
  add_common(analyze, analyze_opts, true);

  auto* sweep = app.add_subcommand("sweep", "vary one scenario parameter over a grid");
  add_common(sweep, sweep_opts, true);
  std::string sweep_param, sweep_grid;
  unsigned sweep_threads = 0;
  sweep->add_option("--param", sweep_param, "parameter path, e.g. incidence.beta[3]")->required();
  sweep->add_option("--grid", sweep_grid, "linspace:start:stop:count or v1,v2,...")->required();
  sweep->add_option("--threads", sweep_threads, "worker threads (0: hardware concurrency)");

  auto* figures = app.add_subcommand("reproduce-figures", "run the figure scenarios and check their expected shapes");
  add_common(figures, figures_opts, false);
  figures->get_option("--out")->required()->description("output directory");

  auto* validate = app.add_subcommand("validate", "check the incidence function against the regularity hypothesis");
  add_common(validate, validate_opts, true);
  std::size_t grid_density = 20;
  validate->add_option("--grid-density", grid_density, "lattice points per axis for sampled checks")
      ->check(CLI::Range(2, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? spm::cli::ok : spm::cli::invalid_input;
  }

  try {
    if (*simulate) {
      const auto s = load(simulate_opts);
      const auto traj = s.run();
      with_output(simulate_opts.out, [&](std::ostream& os) { spm::cli::write_trajectory_csv(traj, os); });
      // keep the CSV clean when it goes to stdout
      std::ostream& summary = simulate_opts.out.empty() || simulate_opts.out == "-" ? std::cerr : std::cout;
      summary << spm::cli::simulation_summary(traj);
      if (traj.stop_reason() != spm::StopReason::converged) {
        std::cerr << "warning: max_steps reached before convergence; output is partial\n";
      }
      return spm::cli::ok;
    }
    if (*analyze) {
      const auto s = load(analyze_opts);
      const auto report = spm::cli::analyze(s);
      with_output(analyze_opts.out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
      return spm::cli::ok;
    }
    if (*sweep) {
      const auto s = load(sweep_opts);
      const auto grid = spm::cli::parse_grid(sweep_grid);
      const auto rows = spm::cli::sweep(s, sweep_param, grid, sweep_threads, s.stopping);
      with_output(sweep_opts.out, [&](std::ostream& os) { spm::cli::write_sweep_csv(rows, os); });
      return spm::cli::ok;
    }
    if (*figures) {
      std::optional<spm::StoppingRule> stopping;
      if (has_override(figures_opts)) stopping = override_stopping(spm::StoppingRule::defaults(1.0), figures_opts);
      const auto verdicts = spm::cli::reproduce_figures(figures_opts.out, stopping);
      bool all = true;
      for (const auto& v : verdicts) {
        std::cout << v.label << ' ' << (v.pass ? "PASS" : "FAIL") << ' ' << v.reason << '\n';
        all = all && v.pass;
      }
      return all ? spm::cli::ok : spm::cli::verdict_failed;
    }
    if (*validate) {
      const auto s = load(validate_opts);
      const auto report = spm::cli::validate_report(s, grid_density);
      with_output(validate_opts.out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
      return report["passed"].get<bool>() ? spm::cli::ok : spm::cli::verdict_failed;
    }
  } catch (const spm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return spm::cli::io_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return spm::cli::invalid_input;
  }
  return spm::cli::invalid_input;
}
