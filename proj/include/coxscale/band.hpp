#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "coxscale/errors.hpp"

namespace coxscale {

enum class CurveTarget { cumhaz, survival };

/// Simultaneous band on a time grid.
struct Band {
  Eigen::VectorXd grid;
  Eigen::VectorXd center;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.95;
};

/// Equispaced grid of `points` times on [0, 1].
inline Eigen::VectorXd uniform_grid(Eigen::Index points) {
  if (points < 2) throw PreconditionError("grid needs at least two points");
  return Eigen::VectorXd::LinSpaced(points, 0.0, 1.0);
}

/// Default evaluation grid: t = j / 256, j = 0..256. It contains every dyadic
/// bin boundary up to K = 256 bins.
inline Eigen::VectorXd default_grid() { return uniform_grid(257); }

/// ceil(level * m)-th smallest of m values (1-based order statistic).
inline double order_statistic_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw PreconditionError("quantile of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError("quantile level must lie in (0, 1)");
  const auto m = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(m) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, m);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

}  // namespace coxscale
