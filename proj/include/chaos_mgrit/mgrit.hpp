#pragma once

#include "chaos_mgrit/hierarchy.hpp"
#include "chaos_mgrit/odes.hpp"
#include "chaos_mgrit/parallel.hpp"
#include "chaos_mgrit/steppers.hpp"
#include "chaos_mgrit/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chaos_mgrit {

enum class SolveStatus { Converged, Stalled, MaxIters, Diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::MaxIters: return "max-iters";
    case SolveStatus::Diverged: return "diverged";
  }
  return "unknown";
}

struct MgritConfig {
  int num_levels = 2;
  int coarsening_factor = 2;
  /// Delta correction: coarse propagators get the tangent mismatch
  /// D Phi^m - D Phi_c added as a linear term.
  bool use_delta = false;
  /// Level-l coarse propagator is the theta method with theta_{m^l};
  /// otherwise the fine scheme with step m^l h.
  bool use_theta = false;
  FineScheme fine_scheme = FineScheme::ForwardEuler;
  double tol = 1e-10;
  int max_iters = 100;
  bool halt_on_nan = true;
  /// Replace every coarse propagator by the zero map.
  bool zero_coarse = false;
  /// Stalled when the best residual of the last `stall_window` iterations
  /// is not 1% below the best one seen before them. 0 disables the check.
  int stall_window = 20;
  /// Threads used for F-relaxation and tau/Delta assembly.
  int workers = 1;
  /// Newton controls for implicit steps (the theta field is ignored).
  ThetaParams newton{};

  void validate() const {
    if (num_levels < 2) throw ConfigError("num_levels must be >= 2");
    if (coarsening_factor < 2) throw ConfigError("coarsening factor must be >= 2");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (stall_window < 0) throw ConfigError("stall_window must be >= 0");
    if (!(newton.newton_tol > 0.0) || newton.newton_max_iters < 1)
      throw ConfigError("invalid Newton parameters");
  }

  /// Propagator used on `level`.
  Stepper stepper_for(int level) const {
    if (level == 0) return with_newton(Stepper::fine(fine_scheme));
    if (zero_coarse) return Stepper::zero();
    if (!use_theta) return with_newton(Stepper::fine(fine_scheme));
    int m = 1;
    for (int l = 0; l < level; ++l) m *= coarsening_factor;
    return with_newton(Stepper::theta(theta_asymptotic(m, fine_scheme)));
  }

 private:
  Stepper with_newton(Stepper s) const {
    s.params.newton_tol = newton.newton_tol;
    s.params.newton_max_iters = newton.newton_max_iters;
    return s;
  }
};

struct SolveReport {
  /// Fine-grid residual 2-norm; entry k is the value after k V-cycles.
  std::vector<double> residual_history;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIters;
  std::string message;
  /// When a reference is supplied: entry k holds ||v_i - u_i||_2 at every
  /// fine-grid C-point after k V-cycles.
  std::vector<std::vector<double>> error_history;

  double final_residual() const {
    return residual_history.empty() ? 0.0 : residual_history.back();
  }
};

/// Coarse-step corrections, indexed by the target point of the step they
/// correct; entry 0 is unused. For the step into point k, linearized at the
/// anchor a = v_{k-1} of the finer level:
///   delta  = D Phi^m(a) - D Phi_c(a)           (zero without Delta)
///   tau    = Phi^m(a) - Phi_c(a) - delta a
///   target = Phi^m(a),  image = Phi_c(a)
/// The corrected step Phi_c(v) + delta v + tau is evaluated as
///   target + (Phi_c(v) - image) + delta (v - a),
/// which is the same map but reproduces target bitwise at v = a, so rounding
/// does not accumulate along the coarse solve near the fixed point.
template <int Dim>
struct CoarseCorrection {
  std::vector<State<Dim>> tau;
  std::vector<Tangent<Dim>> delta;
  std::vector<State<Dim>> anchor;
  std::vector<State<Dim>> image;
  std::vector<State<Dim>> target;

  void resize(std::size_t n) {
    tau.assign(n, State<Dim>::Zero());
    delta.assign(n, Tangent<Dim>::Zero());
    anchor.assign(n, State<Dim>::Zero());
    image.assign(n, State<Dim>::Zero());
    target.assign(n, State<Dim>::Zero());
  }
};

/// Per-level arrays. `corrected` is set once a finer level has installed
/// its corrections (never on level 0).
template <int Dim>
struct LevelData {
  std::vector<State<Dim>> v;
  std::vector<State<Dim>> f;
  CoarseCorrection<Dim> corr;
  bool corrected = false;
  Stepper stepper;
  double h = 0.0;

  std::size_t steps() const { return v.size() - 1; }
};

/// Marches u_{i+1} = Phi(u_i) from u0 over n steps of size h.
template <OdeSystem S>
std::vector<State<S::dim>> sequential_solve(const S& sys, const Stepper& stepper,
                                            const State<S::dim>& u0, double h, std::size_t n) {
  std::vector<State<S::dim>> u(n + 1);
  u[0] = u0;
  for (std::size_t i = 0; i < n; ++i) u[i + 1] = stepper.step(sys, u[i], h);
  return u;
}

/// FAS multigrid-reduction-in-time solver for A(u) = f, where
/// A(u)_0 = u_0 and A(u)_{i+1} = u_{i+1} - Phi(u_i). Only F-relaxation is
/// used, with injection for both restriction and interpolation.
template <OdeSystem S>
class Mgrit {
 public:
  static constexpr int dim = S::dim;
  using state_type = State<dim>;
  using tangent_type = Tangent<dim>;

  Mgrit(S system, MgritConfig config, TimeHierarchy grid, const state_type& u0)
      : sys_(std::move(system)), cfg_(std::move(config)), grid_(std::move(grid)) {
    cfg_.validate();
    if (grid_.num_levels() != cfg_.num_levels ||
        grid_.coarsening_factor() != cfg_.coarsening_factor)
      throw ConfigError("time hierarchy does not match solver configuration");
    levels_.resize(static_cast<std::size_t>(cfg_.num_levels));
    for (int l = 0; l < cfg_.num_levels; ++l) {
      auto& lv = levels_[static_cast<std::size_t>(l)];
      const std::size_t np = grid_.points(l);
      lv.v.assign(np, state_type::Zero());
      lv.f.assign(np, state_type::Zero());
      lv.corr.resize(np);
      lv.stepper = cfg_.stepper_for(l);
      lv.h = grid_.step_size(l);
    }
    levels_[0].f[0] = u0;
    levels_[0].v[0] = u0;
  }

  const S& system() const { return sys_; }
  const MgritConfig& config() const { return cfg_; }
  const TimeHierarchy& grid() const { return grid_; }
  LevelData<dim>& level(int l) { return levels_.at(static_cast<std::size_t>(l)); }
  const LevelData<dim>& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
  int coarsest() const { return cfg_.num_levels - 1; }

  /// Replicates u0 at every fine point, then F-relaxes.
  void set_initial_guess() {
    auto& fine = levels_[0];
    for (auto& x : fine.v) x = fine.f[0];
    f_relax(0);
  }

  void set_fine_solution(std::span<const state_type> u) {
    auto& fine = levels_[0];
    if (u.size() != fine.v.size()) throw ConfigError("fine solution has wrong length");
    fine.v.assign(u.begin(), u.end());
  }

  /// One step of level l's effective propagator from point j:
  /// Phi_l(v) + Delta_{j+1} v + tau_{j+1}. Forcing is not included.
  state_type corrected_step(int l, std::size_t j, const state_type& v) const {
    const auto& lv = levels_[static_cast<std::size_t>(l)];
    state_type w = lv.stepper.step(sys_, v, lv.h);
    if (lv.corrected) w = apply_correction(lv, j + 1, w, v);
    if (is_blown_up<dim>(w)) throw Overflow("state overflow on level " + std::to_string(l));
    return w;
  }

  StepResult<dim> corrected_step_with_tangent(int l, std::size_t j, const state_type& v) const {
    const auto& lv = levels_[static_cast<std::size_t>(l)];
    StepResult<dim> r = lv.stepper.step_with_tangent(sys_, v, lv.h);
    if (lv.corrected) {
      r.value = apply_correction(lv, j + 1, r.value, v);
      if (cfg_.use_delta) r.tangent += lv.corr.delta[j + 1];
    }
    if (is_blown_up<dim>(r.value))
      throw Overflow("state overflow on level " + std::to_string(l));
    return r;
  }

  /// Applies `count` corrected steps of level l starting at point i with
  /// value vi, adding f at each intermediate point but not at the
  /// final one. The tangent is the ordered product of per-step tangents.
  StepResult<dim> propagate(int l, std::size_t i, const state_type& vi, std::size_t count,
                            bool with_tangent = true) const {
    const auto& lv = levels_[static_cast<std::size_t>(l)];
    StepResult<dim> acc{vi, tangent_type::Identity()};
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t j = i + s;
      if (with_tangent) {
        StepResult<dim> r = corrected_step_with_tangent(l, j, acc.value);
        acc.value = r.value;
        acc.tangent = r.tangent * acc.tangent;
      } else {
        acc.value = corrected_step(l, j, acc.value);
      }
      if (s + 1 < count) acc.value += lv.f[j + 1];
    }
    return acc;
  }

  /// Phi^m across the coarse interval starting at C-point i of level l.
  StepResult<dim> ideal_coarse_step(int l, std::size_t i, const state_type& vi,
                                    bool with_tangent = true) const {
    return propagate(l, i, vi, static_cast<std::size_t>(cfg_.coarsening_factor), with_tangent);
  }

  /// tau and Delta for every coarse interval of level l:
  ///   Delta_k = D Phi^m(v_i) - D Phi_c(v_i)
  ///   tau_k   = Phi^m(v_i) - Phi_c(v_i) - Delta_k v_i
  /// with i = (k-1) m the interval's starting C-point. Delta is zero when
  /// the correction is disabled.
  CoarseCorrection<dim> assemble_tau_delta(int l) const {
    const auto& lv = levels_[static_cast<std::size_t>(l)];
    const auto& coarse = levels_[static_cast<std::size_t>(l + 1)];
    const std::size_t m = static_cast<std::size_t>(cfg_.coarsening_factor);
    const std::size_t nc = grid_.steps(l + 1);
    CoarseCorrection<dim> out;
    out.resize(nc + 1);
    parallel_for(nc, cfg_.workers, [&](std::size_t k0) {
      const std::size_t k = k0 + 1;
      const std::size_t i = k0 * m;
      const state_type& vi = lv.v[i];
      out.anchor[k] = vi;
      if (cfg_.use_delta) {
        const StepResult<dim> ideal = ideal_coarse_step(l, i, vi, true);
        const StepResult<dim> approx = coarse.stepper.step_with_tangent(sys_, vi, coarse.h);
        out.delta[k] = ideal.tangent - approx.tangent;
        out.tau[k] = ideal.value - (approx.value + out.delta[k] * vi);
        out.target[k] = ideal.value;
        out.image[k] = approx.value;
      } else {
        out.target[k] = ideal_coarse_step(l, i, vi, false).value;
        out.image[k] = coarse.stepper.step(sys_, vi, coarse.h);
        out.tau[k] = out.target[k] - out.image[k];
      }
    });
    return out;
  }

  /// Injects v and f from level l to level l+1 and installs the new
  /// corrections there. Level l's own corrections enter through Phi^m.
  void restrict_to_coarse(int l, CoarseCorrection<dim> corr) {
    const auto& lv = levels_[static_cast<std::size_t>(l)];
    auto& coarse = levels_[static_cast<std::size_t>(l + 1)];
    const std::size_t m = static_cast<std::size_t>(cfg_.coarsening_factor);
    for (std::size_t k = 0; k < coarse.v.size(); ++k) {
      coarse.v[k] = lv.v[k * m];
      coarse.f[k] = lv.f[k * m];
    }
    install_correction(l + 1, std::move(corr));
  }

  /// Sets the corrections of level l (l >= 1) directly.
  void install_correction(int l, CoarseCorrection<dim> corr) {
    if (l < 1) throw ConfigError("level 0 carries no coarse corrections");
    auto& lv = levels_.at(static_cast<std::size_t>(l));
    if (corr.tau.size() != lv.v.size()) throw ConfigError("correction has wrong length");
    lv.corr = std::move(corr);
    lv.corrected = true;
  }

  /// Overwrites each F-point from its interval's C-point. C-points unchanged.
  void f_relax(int l) {
    auto& lv = levels_[static_cast<std::size_t>(l)];
    const std::size_t m = static_cast<std::size_t>(cfg_.coarsening_factor);
    const std::size_t intervals = lv.steps() / m;
    parallel_for(intervals, cfg_.workers, [&](std::size_t c) {
      const std::size_t i = c * m;
      for (std::size_t j = i + 1; j < i + m; ++j)
        lv.v[j] = corrected_step(l, j - 1, lv.v[j - 1]) + lv.f[j];
    });
  }

  /// Sequential forward substitution on level l:
  /// v_0 = f_0, v_k = Phi_l(v_{k-1}) + Delta_k v_{k-1} + tau_k + f_k.
  void coarse_grid_solve(int l) {
    auto& lv = levels_[static_cast<std::size_t>(l)];
    lv.v[0] = lv.f[0];
    for (std::size_t k = 1; k < lv.v.size(); ++k)
      lv.v[k] = corrected_step(l, k - 1, lv.v[k - 1]) + lv.f[k];
  }

  /// Injects level l+1 values into the C-points of level l.
  void interpolate(int l) {
    auto& lv = levels_[static_cast<std::size_t>(l)];
    const auto& coarse = levels_[static_cast<std::size_t>(l + 1)];
    const std::size_t m = static_cast<std::size_t>(cfg_.coarsening_factor);
    for (std::size_t k = 0; k < coarse.v.size(); ++k) lv.v[k * m] = coarse.v[k];
  }

  void v_cycle(int l = 0) {
    restrict_to_coarse(l, assemble_tau_delta(l));
    if (l + 1 == coarsest())
      coarse_grid_solve(l + 1);
    else
      v_cycle(l + 1);
    interpolate(l);
    f_relax(l);
  }

  /// r_0 = f_0 - v_0, r_j = f_j + Phi(v_{j-1}) - v_j on level l.
  std::vector<state_type> residual(int l = 0) const {
    const auto& lv = levels_[static_cast<std::size_t>(l)];
    std::vector<state_type> r(lv.v.size());
    r[0] = lv.f[0] - lv.v[0];
    for (std::size_t j = 1; j < lv.v.size(); ++j)
      r[j] = lv.f[j] + corrected_step(l, j - 1, lv.v[j - 1]) - lv.v[j];
    return r;
  }

  /// Space-time Euclidean norm of residual(l).
  double residual_norm(int l = 0) const {
    double sum = 0.0;
    for (const auto& rj : residual(l)) sum += rj.squaredNorm();
    return std::sqrt(sum);
  }

  /// Runs V-cycles from the replicated-u0 initial guess until the residual
  /// drops below tol, stalls, diverges or max_iters is hit. With a
  /// reference trajectory the per-C-point error is recorded every iteration.
  SolveReport solve(std::optional<std::span<const state_type>> reference = std::nullopt) {
    SolveReport rep;
    if (reference && reference->size() != levels_[0].v.size())
      throw ConfigError("reference trajectory has wrong length");
    auto record = [&](double r) {
      rep.residual_history.push_back(r);
      if (reference) rep.error_history.push_back(c_point_errors(*reference));
    };

    try {
      set_initial_guess();
      record(residual_norm());
    } catch (const Error& e) {
      rep.status = SolveStatus::Diverged;
      rep.message = e.what();
      rep.residual_history.assign(1, INFINITY);
      return rep;
    }
    if (rep.residual_history.back() <= cfg_.tol) {
      rep.status = SolveStatus::Converged;
      return rep;
    }

    bool saw_blowup = false;
    for (int k = 1; k <= cfg_.max_iters; ++k) {
      double r = INFINITY;
      try {
        v_cycle(0);
        r = residual_norm();
      } catch (const Error& e) {
        rep.iterations = k;
        rep.residual_history.push_back(INFINITY);
        rep.status = SolveStatus::Diverged;
        rep.message = e.what();
        return rep;
      }
      rep.iterations = k;
      record(r);
      if (!(r <= kOverflowNorm)) {
        saw_blowup = true;
        if (cfg_.halt_on_nan) {
          rep.status = SolveStatus::Diverged;
          rep.message = "residual is not finite";
          return rep;
        }
        continue;
      }
      if (r <= cfg_.tol) {
        rep.status = SolveStatus::Converged;
        return rep;
      }
      if (is_stalled(rep.residual_history, cfg_.stall_window)) {
        rep.status = SolveStatus::Stalled;
        rep.message = "no 1% improvement of the residual over " +
                      std::to_string(cfg_.stall_window) + " iterations";
        return rep;
      }
    }
    rep.status = saw_blowup ? SolveStatus::Diverged : SolveStatus::MaxIters;
    return rep;
  }

  /// True when min(last `window` residuals) > 0.99 * min(all earlier ones).
  static bool is_stalled(std::span<const double> history, int window) {
    if (window <= 0) return false;
    const std::size_t w = static_cast<std::size_t>(window);
    if (history.size() <= w) return false;
    const auto split = history.end() - static_cast<std::ptrdiff_t>(w);
    const double best_before = *std::min_element(history.begin(), split);
    const double best_recent = *std::min_element(split, history.end());
    return best_recent > 0.99 * best_before;
  }

 private:
  state_type apply_correction(const LevelData<dim>& lv, std::size_t k, const state_type& stepped,
                              const state_type& v) const {
    const auto& c = lv.corr;
    state_type w = c.target[k] + (stepped - c.image[k]);
    if (cfg_.use_delta) w += c.delta[k] * (v - c.anchor[k]);
    return w;
  }

  std::vector<double> c_point_errors(std::span<const state_type> ref) const {
    const auto& v = levels_[0].v;
    const std::size_t m = static_cast<std::size_t>(cfg_.coarsening_factor);
    std::vector<double> e;
    e.reserve(v.size() / m + 1);
    for (std::size_t i = 0; i < v.size(); i += m) e.push_back((v[i] - ref[i]).norm());
    return e;
  }

  S sys_;
  MgritConfig cfg_;
  TimeHierarchy grid_;
  std::vector<LevelData<dim>> levels_;
};

/// Output of the top-level solve: fine-grid trajectory plus convergence report.
template <int Dim>
struct SolveResult {
  std::vector<State<Dim>> v;
  SolveReport report;
};

/// Builds the hierarchy for [0, t_final] with n_t fine steps and solves.
template <OdeSystem S>
SolveResult<S::dim> solve(const S& sys, const MgritConfig& cfg, const State<S::dim>& u0,
                          double t_final, std::size_t n_t,
                          std::optional<std::span<const State<S::dim>>> reference = std::nullopt) {
  cfg.validate();
  TimeHierarchy grid(cfg.num_levels, cfg.coarsening_factor, t_final, n_t);
  Mgrit<S> solver(sys, cfg, grid, u0);
  SolveResult<S::dim> out;
  out.report = solver.solve(reference);
  out.v = solver.level(0).v;
  return out;
}

}  // namespace chaos_mgrit
