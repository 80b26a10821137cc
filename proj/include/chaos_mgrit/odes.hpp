#pragma once

#include "chaos_mgrit/types.hpp"

#include <cmath>
#include <concepts>

namespace chaos_mgrit {

/// An autonomous ODE u' = g(u) with analytic Jacobian.
template <class S>
concept OdeSystem = requires(const S& sys, const State<S::dim>& u) {
  { S::dim } -> std::convertible_to<int>;
  { sys.rhs(u) } -> std::convertible_to<State<S::dim>>;
  { sys.rhs_jacobian(u) } -> std::convertible_to<Tangent<S::dim>>;
};

/// The Lorenz-63 system. Defaults are the classical chaotic parameters.
struct LorenzSystem {
  static constexpr int dim = 3;
  using state_type = State<3>;
  using tangent_type = Tangent<3>;

  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;

  state_type rhs(const state_type& u) const {
    const double x = u[0], y = u[1], z = u[2];
    return {sigma * (y - x), x * (rho - z) - y, x * y - beta * z};
  }

  tangent_type rhs_jacobian(const state_type& u) const {
    const double x = u[0], y = u[1], z = u[2];
    tangent_type j;
    // clang-format off
    j << -sigma, sigma,  0.0,
         rho - z, -1.0,  -x,
         y,        x,    -beta;
    // clang-format on
    return j;
  }

  /// The nontrivial equilibrium (+sqrt(beta(rho-1)), +..., rho-1), or its
  /// mirror image when `positive` is false.
  state_type equilibrium(bool positive = true) const {
    const double c = std::sqrt(beta * (rho - 1.0));
    const double s = positive ? c : -c;
    return {s, s, rho - 1.0};
  }
};

/// Logistic growth u' = u(1-u). Scalar validation problem for the exact
/// theta formula; f varies along trajectories so f(u_m) != f(u_0) generically.
struct LogisticSystem {
  static constexpr int dim = 1;
  using state_type = State<1>;
  using tangent_type = Tangent<1>;

  state_type rhs(const state_type& u) const {
    return state_type{u[0] * (1.0 - u[0])};
  }
  tangent_type rhs_jacobian(const state_type& u) const {
    return tangent_type{1.0 - 2.0 * u[0]};
  }
};

/// Scalar linear decay/growth u' = lambda u. Closed forms exist for every
/// stepper, which makes it the workhorse of the unit tests.
struct LinearScalarSystem {
  static constexpr int dim = 1;
  using state_type = State<1>;
  using tangent_type = Tangent<1>;

  double lambda = -1.0;

  state_type rhs(const state_type& u) const { return state_type{lambda * u[0]}; }
  tangent_type rhs_jacobian(const state_type&) const { return tangent_type{lambda}; }
};

static_assert(OdeSystem<LorenzSystem>);
static_assert(OdeSystem<LogisticSystem>);
static_assert(OdeSystem<LinearScalarSystem>);

}  // namespace chaos_mgrit
