#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace chaos_mgrit {

/// Point in phase space of a system with `Dim` components.
template <int Dim>
using State = Eigen::Matrix<double, Dim, 1>;

/// Dim x Dim Jacobian of a propagator or right-hand side.
template <int Dim>
using Tangent = Eigen::Matrix<double, Dim, Dim>;

// Error hierarchy. Everything thrown by the library derives from Error so
// callers can catch the whole family at once.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton iteration of an implicit step did not reach its tolerance.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Linear system in a tangent or Newton solve is numerically singular.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// theta_exact_scalar called on an interval with f(u_m) == f(u_0).
class DegenerateInterval : public Error {
 public:
  using Error::Error;
};

/// Lyapunov time requested for a non-positive exponent.
class NonChaotic : public Error {
 public:
  using Error::Error;
};

/// State norm left the representable range; reported as divergence.
class Overflow : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// States with norm above this are treated as a numerical blow-up.
inline constexpr double kOverflowNorm = 1e100;

template <int Dim>
bool is_blown_up(const State<Dim>& u) {
  const double n = u.norm();
  return !(n <= kOverflowNorm);  // also catches NaN
}

}  // namespace chaos_mgrit
