// Command-line harness: MGRIT solves, convergence tables, figure data and
// Lyapunov sweeps for the Lorenz system. All output is CSV.

#include "chaos_mgrit/experiments.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

namespace ex = chaos_mgrit::experiments;
using chaos_mgrit::ConfigError;
using chaos_mgrit::CsvTable;

namespace {

struct Options {
  ex::ExperimentSpec spec;
  std::vector<double> u0;
  std::string fine_scheme = "fe";
  std::string spec_file;
  bool dump_spec = false;
};

void add_system_options(CLI::App* sub, Options& o) {
  sub->add_option("--system", o.spec.system, "ODE system")->check(CLI::IsMember({"lorenz"}));
  sub->add_option("--sigma", o.spec.sigma, "Lorenz sigma")->capture_default_str();
  sub->add_option("--rho", o.spec.rho, "Lorenz rho")->capture_default_str();
  sub->add_option("--beta", o.spec.beta, "Lorenz beta")->capture_default_str();
  sub->add_option("--u0", o.u0, "initial state x,y,z")->delimiter(',')->expected(3);
  sub->add_option("--out", o.spec.out, "output CSV path (stdout when omitted)");
  sub->add_option("--workers", o.spec.workers, "worker threads")->capture_default_str();
  sub->add_option("--spec", o.spec_file, "load the experiment from a JSON file");
  sub->add_flag("--dump-spec", o.dump_spec, "print the resolved experiment as JSON and exit");
}

void add_solver_options(CLI::App* sub, Options& o, bool grid_options) {
  if (grid_options) {
    sub->add_option("--tf", o.spec.tf, "final time in Lyapunov units")->capture_default_str();
    sub->add_option("--nt", o.spec.nt, "number of fine time steps")->capture_default_str();
    sub->add_option("--levels", o.spec.levels, "number of grid levels")->capture_default_str();
    sub->add_flag("--theta", o.spec.theta, "theta-method coarse propagators");
    sub->add_flag("--delta", o.spec.delta, "Delta correction");
  }
  sub->add_option("--cf", o.spec.coarsening_factor, "coarsening factor")->capture_default_str();
  sub->add_option("--fine-scheme", o.fine_scheme, "fine propagator")
      ->check(CLI::IsMember({"fe", "be"}))
      ->capture_default_str();
  sub->add_option("--tol", o.spec.tol, "residual tolerance")->capture_default_str();
  sub->add_option("--max-iters", o.spec.max_iters, "maximum V-cycles")->capture_default_str();
  sub->add_option("--stall-window", o.spec.stall_window,
                  "iterations without 1% improvement before giving up (0: never)")
      ->capture_default_str();
}

void add_lyapunov_options(CLI::App* sub, Options& o) {
  sub->add_option("--h-list", o.spec.h_list, "step sizes")->delimiter(',');
  sub->add_option("--spinup", o.spec.spinup_time, "spin-up time")->capture_default_str();
  sub->add_option("--run-time", o.spec.run_time, "averaging time")->capture_default_str();
  sub->add_option("--reorth", o.spec.reorth_interval, "steps between QR re-orthonormalizations")
      ->capture_default_str();
}

void emit(const CsvTable& t, const std::string& path) {
  const std::string text = chaos_mgrit::to_csv(t);
  if (path.empty())
    std::cout << text;
  else
    chaos_mgrit::write_text_file(path, text);
}

ex::ExperimentSpec resolve(Options& o, ex::Command cmd) {
  if (!o.spec_file.empty()) {
    auto j = nlohmann::json::parse(chaos_mgrit::read_text_file(o.spec_file));
    ex::ExperimentSpec loaded = j.get<ex::ExperimentSpec>();
    if (!o.spec.out.empty()) loaded.out = o.spec.out;
    loaded.command = cmd;
    return loaded;
  }
  ex::ExperimentSpec s = o.spec;
  s.command = cmd;
  if (!o.u0.empty()) s.u0 = {o.u0[0], o.u0[1], o.u0[2]};
  s.fine_scheme = o.fine_scheme == "be" ? chaos_mgrit::FineScheme::BackwardEuler
                                        : chaos_mgrit::FineScheme::ForwardEuler;
  return s;
}

int run(const ex::ExperimentSpec& spec) {
  using ex::Command;
  switch (spec.command) {
    case Command::Solve: {
      const auto outcome = ex::run_solve(spec);
      emit(outcome.csv, spec.out);
      const auto& r = outcome.report;
      std::fprintf(stderr, "status=%s iterations=%d residual=%.3e%s%s\n",
                   chaos_mgrit::to_string(r.status), r.iterations, r.final_residual(),
                   r.message.empty() ? "" : " note=", r.message.c_str());
      return ex::exit_code(r.status);
    }
    case Command::Table1:
    case Command::Table2:
    case Command::Table3:
      emit(ex::run_table(spec), spec.out);
      return 0;
    case Command::Fig1: {
      const auto outcome = ex::run_fig1(spec);
      emit(outcome.csv, spec.out);
      std::fprintf(stderr, "status=%s iterations=%d residual=%.3e\n",
                   chaos_mgrit::to_string(outcome.report.status), outcome.report.iterations,
                   outcome.report.final_residual());
      return 0;
    }
    case Command::Fig3:
      emit(ex::run_fig3(spec), spec.out);
      return 0;
    case Command::LyapunovSweep:
      emit(ex::run_lyapunov_sweep(spec), spec.out);
      return 0;
  }
  return ex::kConfigErrorExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multigrid-reduction-in-time experiments on the Lorenz system"};
  app.require_subcommand(1);

  std::map<std::string, Options> opts;
  std::map<CLI::App*, ex::Command> commands;

  auto sub = [&](const std::string& name, const std::string& help, ex::Command cmd) {
    CLI::App* s = app.add_subcommand(name, help);
    commands[s] = cmd;
    return std::pair<CLI::App*, Options&>{s, opts[name]};
  };

  {
    auto [s, o] = sub("solve", "run one MGRIT solve, CSV of residual per iteration",
                      ex::Command::Solve);
    add_system_options(s, o);
    add_solver_options(s, o, true);
  }
  for (auto [name, cmd] : {std::pair{"table1", ex::Command::Table1},
                           std::pair{"table2", ex::Command::Table2},
                           std::pair{"table3", ex::Command::Table3}}) {
    auto [s, o] = sub(name, std::string("iteration counts for ") + name, cmd);
    add_system_options(s, o);
    add_solver_options(s, o, false);
  }
  {
    auto [s, o] = sub("fig1", "error against sequential time-marching per iteration",
                      ex::Command::Fig1);
    o.spec.tf = 8.0;
    o.spec.nt = 8192;
    o.spec.max_iters = 30;
    add_system_options(s, o);
    add_solver_options(s, o, true);
  }
  {
    auto [s, o] = sub("fig3", "residual histories of the two-level variants", ex::Command::Fig3);
    o.spec.tf = 8.0;
    o.spec.nt = 8192;
    add_system_options(s, o);
    add_solver_options(s, o, true);
  }
  {
    auto [s, o] = sub("lyapunov-sweep", "greatest Lyapunov exponent against step size",
                      ex::Command::LyapunovSweep);
    add_system_options(s, o);
    add_lyapunov_options(s, o);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ex::kConfigErrorExit;
  }

  try {
    for (auto& [s, cmd] : commands) {
      if (!s->parsed()) continue;
      Options& o = opts[s->get_name()];
      const ex::ExperimentSpec spec = resolve(o, cmd);
      if (o.dump_spec) {
        std::cout << nlohmann::json(spec).dump(2) << "\n";
        return 0;
      }
      return run(spec);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ex::kConfigErrorExit;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: bad spec file: %s\n", e.what());
    return ex::kConfigErrorExit;
  }
  return ex::kConfigErrorExit;
}
