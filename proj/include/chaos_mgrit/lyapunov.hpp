#pragma once

#include "chaos_mgrit/odes.hpp"
#include "chaos_mgrit/steppers.hpp"
#include "chaos_mgrit/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace chaos_mgrit {

/// Greatest Lyapunov exponent of the Lorenz attractor used to convert time
/// to Lyapunov units.
inline constexpr double kLorenzLambda0 = 0.9;

struct LyapunovConfig {
  double spinup_time = 100.0;
  double run_time = 1000.0;
  int reorth_interval = 10;

  void validate() const {
    if (!(spinup_time > 0.0) || !(run_time > 0.0) || reorth_interval < 1)
      throw ConfigError("Lyapunov windows and re-orthonormalization interval must be positive");
  }
};

/// Lyapunov spectrum of the discrete map u -> stepper.step(u, h), per unit
/// time and sorted descending.
///
/// After `spinup_time` the orthonormal frame Q is pushed through the exact
/// per-step tangents, Q <- F_i Q. Every `reorth_interval` steps Q is
/// re-factored as QR and log|R_jj| is accumulated; the sums divided by the
/// integrated time are the exponents.
template <OdeSystem S>
std::vector<double> lyapunov_spectrum(const S& sys, const Stepper& stepper, double h,
                                      const LyapunovConfig& cfg, const State<S::dim>& u0) {
  constexpr int n = S::dim;
  if (!(h > 0.0)) throw ConfigError("Lyapunov step size must be positive");
  cfg.validate();

  State<n> u = u0;
  const long spin = std::lround(cfg.spinup_time / h);
  for (long s = 0; s < spin; ++s) {
    u = stepper.step(sys, u, h);
    if (is_blown_up<n>(u)) throw Overflow("Lyapunov spin-up blew up at h=" + std::to_string(h));
  }

  const long run = std::max(1L, std::lround(cfg.run_time / h));
  Tangent<n> frame = Tangent<n>::Identity();
  std::vector<double> growth(n, 0.0);
  for (long s = 1; s <= run; ++s) {
    const StepResult<n> r = stepper.step_with_tangent(sys, u, h);
    u = r.value;
    frame = r.tangent * frame;
    if (is_blown_up<n>(u)) throw Overflow("Lyapunov run blew up at h=" + std::to_string(h));
    if (s % cfg.reorth_interval == 0 || s == run) {
      const Eigen::HouseholderQR<Tangent<n>> qr(frame);
      const Tangent<n>& packed = qr.matrixQR();
      for (int j = 0; j < n; ++j) growth[j] += std::log(std::abs(packed(j, j)));
      frame = qr.householderQ();
    }
  }

  const double elapsed = static_cast<double>(run) * h;
  for (double& g : growth) g /= elapsed;
  std::sort(growth.begin(), growth.end(), std::greater<>());
  return growth;
}

/// Time for perturbations to grow tenfold, ln(10)/lambda0.
inline double lyapunov_time(double lambda0) {
  if (!(lambda0 > 0.0))
    throw NonChaotic("Lyapunov time needs a positive exponent, got " + std::to_string(lambda0));
  return std::numbers::ln10 / lambda0;
}

/// Growth 10^(T_f / T_lambda) of the initial value problem's condition number.
inline double condition_estimate(double t_final, double lambda0) {
  return std::pow(10.0, t_final / lyapunov_time(lambda0));
}

/// Longest horizon, in Lyapunov times, over which a residual tolerance `tol`
/// is reachable from machine precision `eps`: log10(tol / eps).
inline double max_horizon_lyapunov_units(double tol, double eps) {
  return std::log10(tol / eps);
}

}  // namespace chaos_mgrit
