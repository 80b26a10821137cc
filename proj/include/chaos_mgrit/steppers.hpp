#pragma once

#include "chaos_mgrit/odes.hpp"
#include "chaos_mgrit/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace chaos_mgrit {

enum class FineScheme { ForwardEuler, BackwardEuler };

/// Parameters of the one-step theta method
///   w = u + h [theta g(u) + (1 - theta) g(w)].
/// theta = 1 is forward Euler, theta = 0 backward Euler, 1/2 the trapezoid rule.
struct ThetaParams {
  double theta = 1.0;
  double newton_tol = 1e-12;
  int newton_max_iters = 25;

  void validate() const {
    if (!(theta >= 0.0 && theta <= 1.0))
      throw ConfigError("theta must lie in [0, 1], got " + std::to_string(theta));
    if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
    if (newton_max_iters < 1) throw ConfigError("newton_max_iters must be >= 1");
  }
};

/// Reciprocal condition numbers below this are treated as singular.
inline constexpr double kMinRcond = 1e-14;

template <int Dim>
struct StepResult {
  State<Dim> value;
  Tangent<Dim> tangent;
};

template <OdeSystem S>
State<S::dim> forward_euler_step(const S& sys, const State<S::dim>& u, double h) {
  return u + h * sys.rhs(u);
}

namespace detail {

// Solves the implicit theta equation by Newton's method, starting from the
// forward-Euler predictor. Stops on the absolute 2-norm of the residual.
template <OdeSystem S>
State<S::dim> solve_theta_equation(const S& sys, const State<S::dim>& u, double h,
                                   const ThetaParams& p) {
  constexpr int n = S::dim;
  const State<n> explicit_part = h * p.theta * sys.rhs(u);
  const double implicit_weight = h * (1.0 - p.theta);

  State<n> w = forward_euler_step(sys, u, h);
  for (int it = 0;; ++it) {
    const State<n> residual = w - u - explicit_part - implicit_weight * sys.rhs(w);
    const double rnorm = residual.norm();
    if (rnorm <= p.newton_tol) return w;
    if (!std::isfinite(rnorm) || it == p.newton_max_iters) {
      throw NoConvergence("theta step: Newton residual " + std::to_string(rnorm) +
                          " after " + std::to_string(it) + " iterations (h=" +
                          std::to_string(h) + ", theta=" + std::to_string(p.theta) + ")");
    }
    const Tangent<n> jac =
        Tangent<n>::Identity() - implicit_weight * sys.rhs_jacobian(w);
    const Eigen::PartialPivLU<Tangent<n>> lu(jac);
    if (!(lu.rcond() > kMinRcond))
      throw NoConvergence("theta step: singular Newton matrix");
    w -= lu.solve(residual);
  }
}

}  // namespace detail

template <OdeSystem S>
State<S::dim> theta_step(const S& sys, const State<S::dim>& u, double h,
                         const ThetaParams& p) {
  if (p.theta == 1.0 || h == 0.0) return forward_euler_step(sys, u, h);
  return detail::solve_theta_equation(sys, u, h, p);
}

/// Tangent of the theta step at a converged output w, by the implicit
/// function theorem: (I - h(1-theta) J(w))^{-1} (I + h theta J(u)).
template <OdeSystem S>
Tangent<S::dim> theta_tangent_at(const S& sys, const State<S::dim>& u,
                                 const State<S::dim>& w, double h, const ThetaParams& p) {
  constexpr int n = S::dim;
  const Tangent<n> explicit_part = Tangent<n>::Identity() + h * p.theta * sys.rhs_jacobian(u);
  if (p.theta == 1.0) return explicit_part;
  const Tangent<n> implicit_part =
      Tangent<n>::Identity() - h * (1.0 - p.theta) * sys.rhs_jacobian(w);
  const Eigen::PartialPivLU<Tangent<n>> lu(implicit_part);
  if (!(lu.rcond() > kMinRcond))
    throw SingularMatrix("theta tangent: implicit matrix is numerically singular");
  return lu.solve(explicit_part);
}

template <OdeSystem S>
Tangent<S::dim> theta_step_tangent(const S& sys, const State<S::dim>& u, double h,
                                   const ThetaParams& p) {
  return theta_tangent_at(sys, u, theta_step(sys, u, h, p), h, p);
}

/// theta_m for coarsening factor m: (m+1)/(2m) over a forward-Euler fine
/// grid, (m-1)/(2m) over backward Euler. Both tend to 1/2. Non-integer m
/// (a step-size ratio) is accepted.
inline double theta_asymptotic(double m, FineScheme fine) {
  if (!(m >= 1.0)) throw ConfigError("theta_asymptotic: m must be >= 1");
  return fine == FineScheme::ForwardEuler ? (m + 1.0) / (2.0 * m) : (m - 1.0) / (2.0 * m);
}

/// The theta for which one theta step of size m h lands exactly on the m-step
/// forward-Euler result of a scalar problem. `f` holds f(u_0), ..., f(u_m)
/// along the fine trajectory. Unbounded near inflection points. Test use only.
inline double theta_exact_scalar(std::span<const double> f) {
  if (f.size() < 2) throw ConfigError("theta_exact_scalar: need at least two values");
  const std::size_t m = f.size() - 1;
  const double f0 = f.front(), fm = f.back();
  double scale = 0.0;
  for (double x : f) scale = std::max(scale, std::abs(x));
  if (std::abs(fm - f0) <= 1e-14 * scale)
    throw DegenerateInterval("theta_exact_scalar: f(u_m) == f(u_0)");
  double left_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) left_sum += f[i];
  return (fm - left_sum / static_cast<double>(m)) / (fm - f0);
}

/// A single-step propagator: the theta family, or the identically-zero map
/// (used to study the Newton limit of the Delta-corrected two-grid cycle).
struct Stepper {
  enum class Kind { Theta, Zero };

  Kind kind = Kind::Theta;
  ThetaParams params{};

  static Stepper forward_euler() { return Stepper{}; }
  static Stepper backward_euler() { return theta(0.0); }
  static Stepper theta(double th) {
    Stepper s;
    s.params.theta = th;
    s.params.validate();
    return s;
  }
  static Stepper zero() { return Stepper{Kind::Zero, {}}; }
  static Stepper fine(FineScheme scheme) {
    return scheme == FineScheme::ForwardEuler ? forward_euler() : backward_euler();
  }

  template <OdeSystem S>
  State<S::dim> step(const S& sys, const State<S::dim>& u, double h) const {
    if (kind == Kind::Zero) return State<S::dim>::Zero();
    return theta_step(sys, u, h, params);
  }

  template <OdeSystem S>
  Tangent<S::dim> step_tangent(const S& sys, const State<S::dim>& u, double h) const {
    if (kind == Kind::Zero) return Tangent<S::dim>::Zero();
    return theta_step_tangent(sys, u, h, params);
  }

  template <OdeSystem S>
  StepResult<S::dim> step_with_tangent(const S& sys, const State<S::dim>& u, double h) const {
    if (kind == Kind::Zero) return {State<S::dim>::Zero(), Tangent<S::dim>::Zero()};
    State<S::dim> w = theta_step(sys, u, h, params);
    Tangent<S::dim> t = theta_tangent_at(sys, u, w, h, params);
    return {std::move(w), std::move(t)};
  }

  std::string describe() const {
    if (kind == Kind::Zero) return "zero";
    if (params.theta == 1.0) return "forward-euler";
    if (params.theta == 0.0) return "backward-euler";
    return "theta(" + std::to_string(params.theta) + ")";
  }
};

}  // namespace chaos_mgrit
