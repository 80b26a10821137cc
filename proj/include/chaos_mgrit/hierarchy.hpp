#pragma once

#include "chaos_mgrit/types.hpp"

#include <cstddef>
#include <string>

namespace chaos_mgrit {

/// Uniform multilevel time grids. Level 0 is the finest grid with n_t steps of
/// size h; level l has n_t / m^l steps of size m^l h, and its points are the
/// C-points (every m-th point) of level l-1.
class TimeHierarchy {
 public:
  TimeHierarchy(int num_levels, int coarsening_factor, double t_final, std::size_t n_t)
      : num_levels_(num_levels), cf_(coarsening_factor), n_t_(n_t) {
    if (num_levels_ < 1) throw ConfigError("num_levels must be >= 1");
    if (cf_ < 2) throw ConfigError("coarsening factor must be >= 2");
    if (n_t_ < 1) throw ConfigError("n_t must be >= 1");
    if (!(t_final > 0.0)) throw ConfigError("final time must be positive");
    std::size_t stride = 1;
    for (int l = 1; l < num_levels_; ++l) stride *= static_cast<std::size_t>(cf_);
    if (n_t_ % stride != 0) {
      throw ConfigError("n_t=" + std::to_string(n_t_) + " is not divisible by m^(levels-1)=" +
                        std::to_string(stride));
    }
    h_ = t_final / static_cast<double>(n_t_);
  }

  int num_levels() const { return num_levels_; }
  int coarsening_factor() const { return cf_; }
  std::size_t fine_steps() const { return n_t_; }
  double fine_step() const { return h_; }
  double final_time() const { return h_ * static_cast<double>(n_t_); }

  /// m^l
  std::size_t stride(int level) const {
    std::size_t s = 1;
    for (int l = 0; l < level; ++l) s *= static_cast<std::size_t>(cf_);
    return s;
  }
  /// Number of steps (intervals between points) on `level`.
  std::size_t steps(int level) const { return n_t_ / stride(level); }
  std::size_t points(int level) const { return steps(level) + 1; }
  double step_size(int level) const { return h_ * static_cast<double>(stride(level)); }
  double time(int level, std::size_t j) const {
    return step_size(level) * static_cast<double>(j);
  }
  bool is_c_point(std::size_t j) const { return j % static_cast<std::size_t>(cf_) == 0; }

 private:
  int num_levels_;
  int cf_;
  std::size_t n_t_;
  double h_ = 0.0;
};

}  // namespace chaos_mgrit
