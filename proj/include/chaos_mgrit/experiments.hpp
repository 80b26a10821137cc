#pragma once

#include "chaos_mgrit/csv.hpp"
#include "chaos_mgrit/lyapunov.hpp"
#include "chaos_mgrit/mgrit.hpp"
#include "chaos_mgrit/odes.hpp"
#include "chaos_mgrit/parallel.hpp"
#include "chaos_mgrit/steppers.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

// Experiment drivers behind the command-line tool. Times are given in
// Lyapunov units and converted with lambda0 = 0.9, independent of any
// measured exponent.

namespace chaos_mgrit::experiments {

enum class Command { Solve, LyapunovSweep, Table1, Table2, Table3, Fig1, Fig3 };

NLOHMANN_JSON_SERIALIZE_ENUM(Command, {{Command::Solve, "solve"},
                                       {Command::LyapunovSweep, "lyapunov-sweep"},
                                       {Command::Table1, "table1"},
                                       {Command::Table2, "table2"},
                                       {Command::Table3, "table3"},
                                       {Command::Fig1, "fig1"},
                                       {Command::Fig3, "fig3"}})

}  // namespace chaos_mgrit::experiments

namespace chaos_mgrit {
NLOHMANN_JSON_SERIALIZE_ENUM(FineScheme, {{FineScheme::ForwardEuler, "fe"},
                                          {FineScheme::BackwardEuler, "be"}})
}  // namespace chaos_mgrit

namespace chaos_mgrit::experiments {

/// Model time corresponding to `tf` Lyapunov times.
inline double lyapunov_units_to_time(double tf) { return tf * lyapunov_time(kLorenzLambda0); }

struct ExperimentSpec {
  Command command = Command::Solve;
  std::string system = "lorenz";
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  std::array<double, 3> u0{1.0, 1.0, 1.0};

  int levels = 2;
  int coarsening_factor = 2;
  bool theta = false;
  bool delta = false;
  FineScheme fine_scheme = FineScheme::ForwardEuler;
  double tol = 1e-10;
  int max_iters = 100;
  int stall_window = 20;

  double tf = 4.0;  // Lyapunov units
  std::size_t nt = 8192;
  std::string out;

  std::vector<double> h_list{2e-4, 5e-4, 1e-3, 2e-3, 4e-3};
  double spinup_time = 100.0;
  double run_time = 1000.0;
  int reorth_interval = 10;

  int workers = 1;

  void validate() const {
    if (system != "lorenz") throw ConfigError("unknown system '" + system + "'");
    if (!(tf > 0.0)) throw ConfigError("--tf must be positive");
    if (nt < 2) throw ConfigError("--nt must be >= 2");
    if (workers < 1) throw ConfigError("--workers must be >= 1");
    mgrit_config().validate();
    if (command == Command::LyapunovSweep) {
      if (h_list.empty()) throw ConfigError("empty step-size list");
      for (double h : h_list)
        if (!(h > 0.0)) throw ConfigError("step sizes must be positive");
      lyapunov_config().validate();
    }
  }

  LorenzSystem lorenz() const { return LorenzSystem{sigma, rho, beta}; }
  State<3> initial_state() const { return {u0[0], u0[1], u0[2]}; }
  double final_time() const { return lyapunov_units_to_time(tf); }

  MgritConfig mgrit_config() const {
    MgritConfig c;
    c.num_levels = levels;
    c.coarsening_factor = coarsening_factor;
    c.use_theta = theta;
    c.use_delta = delta;
    c.fine_scheme = fine_scheme;
    c.tol = tol;
    c.max_iters = max_iters;
    c.stall_window = stall_window;
    return c;
  }

  LyapunovConfig lyapunov_config() const {
    return LyapunovConfig{spinup_time, run_time, reorth_interval};
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentSpec, command, system, sigma, rho,
                                                beta, u0, levels, coarsening_factor, theta,
                                                delta, fine_scheme, tol, max_iters,
                                                stall_window, tf, nt, out, h_list, spinup_time,
                                                run_time, reorth_interval, workers)

/// Exit-code contract of the command-line tool.
inline int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::Stalled:
    case SolveStatus::MaxIters: return 2;
    case SolveStatus::Diverged: return 3;
  }
  return 2;
}
inline constexpr int kConfigErrorExit = 1;

/// Table cell: iteration count, '-' for not converged, '*' for diverged.
inline std::string table_cell(const SolveReport& r) {
  switch (r.status) {
    case SolveStatus::Converged: return std::to_string(r.iterations);
    case SolveStatus::Diverged: return "*";
    default: return "-";
  }
}

struct RunOutcome {
  SolveReport report;
  CsvTable csv;
};

/// Residual history as `iteration,residual`; row k is after k V-cycles.
inline CsvTable residual_csv(const SolveReport& r) {
  CsvTable t{{"iteration", "residual"}};
  for (std::size_t k = 0; k < r.residual_history.size(); ++k)
    t.push_back({std::to_string(k), format_double(r.residual_history[k])});
  return t;
}

inline RunOutcome run_solve(const ExperimentSpec& spec) {
  spec.validate();
  auto res = solve(spec.lorenz(), spec.mgrit_config(), spec.initial_state(), spec.final_time(),
                   spec.nt);
  RunOutcome out;
  out.csv = residual_csv(res.report);
  out.report = std::move(res.report);
  return out;
}

struct TableRow {
  std::string label;
  int levels;
  bool theta;
  bool delta;
};

struct TableColumn {
  double tf;
  std::size_t nt;
  std::string label() const {
    return format_double(tf) + "," + std::to_string(nt);
  }
};

struct TableLayout {
  std::vector<TableRow> rows;
  std::vector<TableColumn> columns;
};

inline std::string algorithm_label(int levels, bool theta, bool delta) {
  std::string s = "MGRIT" + std::to_string(levels);
  if (delta) s += "+Delta";
  if (theta) s += "+theta";
  return s;
}

inline TableLayout table_layout(Command table) {
  auto variants = [](std::vector<int> level_counts, bool grouped_by_variant) {
    std::vector<TableRow> rows;
    const std::array<std::pair<bool, bool>, 4> kinds{
        {{false, false}, {true, false}, {false, true}, {true, true}}};
    if (grouped_by_variant) {
      for (auto [th, de] : kinds)
        for (int l : level_counts) rows.push_back({algorithm_label(l, th, de), l, th, de});
    } else {
      for (int l : level_counts)
        for (auto [th, de] : kinds) rows.push_back({algorithm_label(l, th, de), l, th, de});
    }
    return rows;
  };
  switch (table) {
    case Command::Table1:
      return {variants({2}, true), {{4, 512}, {4, 1024}, {4, 2048}, {4, 4096}, {4, 8192}}};
    case Command::Table2:
      return {variants({2}, true),
              {{2, 4096}, {4, 8192}, {6, 12288}, {8, 16384}, {10, 20480}, {12, 24576}}};
    case Command::Table3:
      return {variants({2, 3, 5, 7}, true), {{2, 4096}, {4, 8192}, {6, 12288}, {8, 16384}}};
    default:
      throw ConfigError("not a table command");
  }
}

/// One solve per (row, column); the CSV is assembled in (row, column) order
/// whatever order the cells finish in.
inline CsvTable run_table(const ExperimentSpec& spec, const TableLayout& layout) {
  spec.validate();
  const std::size_t nr = layout.rows.size(), nc = layout.columns.size();
  std::vector<std::string> cells(nr * nc);
  parallel_for(nr * nc, spec.workers, [&](std::size_t idx) {
    const TableRow& row = layout.rows[idx / nc];
    const TableColumn& col = layout.columns[idx % nc];
    ExperimentSpec cell = spec;
    cell.levels = row.levels;
    cell.theta = row.theta;
    cell.delta = row.delta;
    cell.tf = col.tf;
    cell.nt = col.nt;
    try {
      cells[idx] = table_cell(run_solve(cell).report);
    } catch (const ConfigError&) {
      cells[idx] = "";
    }
  });
  CsvTable t;
  std::vector<std::string> header{"algorithm"};
  for (const auto& c : layout.columns) header.push_back(c.label());
  t.push_back(std::move(header));
  for (std::size_t r = 0; r < nr; ++r) {
    std::vector<std::string> line{layout.rows[r].label};
    for (std::size_t c = 0; c < nc; ++c) line.push_back(cells[r * nc + c]);
    t.push_back(std::move(line));
  }
  return t;
}

inline CsvTable run_table(const ExperimentSpec& spec) {
  return run_table(spec, table_layout(spec.command));
}

struct Fig1Outcome {
  SolveReport report;
  CsvTable csv;  // iteration,t,error at every fine C-point
};

/// Error against sequential time-marching, per iteration and C-point. Stall
/// detection is off so the whole error evolution is recorded.
inline Fig1Outcome run_fig1(const ExperimentSpec& spec) {
  spec.validate();
  MgritConfig cfg = spec.mgrit_config();
  cfg.stall_window = 0;
  const LorenzSystem sys = spec.lorenz();
  const TimeHierarchy grid(cfg.num_levels, cfg.coarsening_factor, spec.final_time(), spec.nt);
  const auto reference = sequential_solve(sys, cfg.stepper_for(0), spec.initial_state(),
                                          grid.fine_step(), spec.nt);
  Mgrit<LorenzSystem> solver(sys, cfg, grid, spec.initial_state());
  Fig1Outcome out;
  out.report = solver.solve(std::span<const State<3>>(reference));
  out.csv.push_back({"iteration", "t", "error"});
  const std::size_t m = static_cast<std::size_t>(cfg.coarsening_factor);
  for (std::size_t k = 0; k < out.report.error_history.size(); ++k) {
    const auto& errs = out.report.error_history[k];
    for (std::size_t c = 0; c < errs.size(); ++c) {
      out.csv.push_back({std::to_string(k), format_double(grid.time(0, c * m)),
                         format_double(errs[c])});
    }
  }
  return out;
}

/// Residual histories of the four two-level variants.
inline CsvTable run_fig3(const ExperimentSpec& spec) {
  spec.validate();
  CsvTable t{{"algorithm", "iteration", "residual"}};
  for (auto [th, de] : std::array<std::pair<bool, bool>, 4>{
           {{false, false}, {true, false}, {false, true}, {true, true}}}) {
    ExperimentSpec s = spec;
    s.levels = 2;
    s.theta = th;
    s.delta = de;
    const SolveReport r = run_solve(s).report;
    for (std::size_t k = 0; k < r.residual_history.size(); ++k)
      t.push_back({algorithm_label(2, th, de), std::to_string(k),
                   format_double(r.residual_history[k])});
  }
  return t;
}

/// Greatest Lyapunov exponent against step size for forward Euler, backward
/// Euler and the theta method with both asymptotic theta values. The theta
/// rows treat h as a coarse step over the finest h in the list, i.e. they use
/// theta_m with m = h / min(h_list). A blown-up run leaves its cell empty.
inline CsvTable run_lyapunov_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const LorenzSystem sys = spec.lorenz();
  const LyapunovConfig lcfg = spec.lyapunov_config();
  const double h_fine = *std::min_element(spec.h_list.begin(), spec.h_list.end());

  struct Job {
    std::string scheme;
    double h;
    Stepper stepper;
  };
  std::vector<Job> jobs;
  for (double h : spec.h_list) jobs.push_back({"forward-euler", h, Stepper::forward_euler()});
  for (double h : spec.h_list) jobs.push_back({"backward-euler", h, Stepper::backward_euler()});
  for (double h : spec.h_list)
    jobs.push_back({"theta-forward", h,
                    Stepper::theta(theta_asymptotic(h / h_fine, FineScheme::ForwardEuler))});
  for (double h : spec.h_list)
    jobs.push_back({"theta-backward", h,
                    Stepper::theta(theta_asymptotic(h / h_fine, FineScheme::BackwardEuler))});

  std::vector<std::string> lambda(jobs.size());
  parallel_for(jobs.size(), spec.workers, [&](std::size_t i) {
    try {
      lambda[i] = format_double(
          lyapunov_spectrum(sys, jobs[i].stepper, jobs[i].h, lcfg, spec.initial_state())[0]);
    } catch (const Error&) {
      lambda[i] = "";
    }
  });

  CsvTable t{{"scheme", "h", "lambda0"}};
  for (std::size_t i = 0; i < jobs.size(); ++i)
    t.push_back({jobs[i].scheme, format_double(jobs[i].h), lambda[i]});
  return t;
}

}  // namespace chaos_mgrit::experiments
