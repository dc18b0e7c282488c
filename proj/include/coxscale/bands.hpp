#pragma once

// Posterior credible bands and regions, plus the coverage and area metrics.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "coxscale/band.hpp"
#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/mcmc.hpp"

namespace coxscale {

/// |[0, t] cap I_k| for each grid time t (rows) and bin k (columns).
inline Eigen::MatrixXd grid_exposure(const Eigen::VectorXd& grid, Eigen::Index bins) {
  const double w = 1.0 / static_cast<double>(bins);
  Eigen::MatrixXd e(grid.size(), bins);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double t = grid(g);
    if (t < 0.0 || t > 1.0) throw DomainError("grid times must lie in [0, 1]");
    for (Eigen::Index k = 0; k < bins; ++k)
      e(g, k) = std::clamp(t - static_cast<double>(k) * w, 0.0, w);
  }
  return e;
}

inline Eigen::VectorXd transform_curve(Eigen::VectorXd cumhaz, CurveTarget target) {
  if (target == CurveTarget::survival) cumhaz = (-cumhaz.array()).exp().matrix();
  return cumhaz;
}

/// Lambda(t) e^{theta'z} or exp(-Lambda(t) e^{theta'z}) on the grid.
inline Eigen::VectorXd curve_from_draw(const Eigen::VectorXd& theta, const HistogramHazard& h, const Eigen::VectorXd& z,
                                       CurveTarget target, const Eigen::VectorXd& grid) {
  if (theta.size() != z.size()) throw PreconditionError("curve_from_draw: theta and z differ in dimension");
  const Eigen::VectorXd cum = grid_exposure(grid, h.bins()) * h.heights() * std::exp(theta.dot(z));
  return transform_curve(cum, target);
}

/// Curves of every retained draw in a chain, one per row.
inline Eigen::MatrixXd chain_curves(const PosteriorChain& chain, const Eigen::VectorXd& z, CurveTarget target,
                                    const Eigen::VectorXd& grid) {
  if (chain.height_draws.rows() == 0) throw PreconditionError("chain_curves: chain holds no stored draws");
  if (chain.theta_draws.cols() != z.size()) throw PreconditionError("chain_curves: z has wrong dimension");
  const Eigen::MatrixXd e = grid_exposure(grid, chain.height_draws.cols());
  Eigen::MatrixXd curves = chain.height_draws * e.transpose();  // draws x G
  const Eigen::VectorXd risk = (chain.theta_draws * z).array().exp().matrix();
  curves = risk.asDiagonal() * curves;
  if (target == CurveTarget::survival) curves = (-curves.array()).exp().matrix();
  return curves;
}

struct CredibleBand {
  Band band;
  double radius = 0.0;
  double area_unclipped = 0.0;  // 2R
  double area = 0.0;            // integral of upper - lower after clipping
};

/// Fixed-width band: pointwise-mean center, radius R = level-quantile of the
/// per-draw sup deviations from the center. Survival bands are clipped to [0, 1].
inline CredibleBand fixed_width_credible_band(const Eigen::MatrixXd& curves, double level, const Eigen::VectorXd& grid,
                                              CurveTarget target = CurveTarget::survival) {
  if (curves.rows() < 100) throw PreconditionError("credible band: need at least 100 curves");
  if (curves.cols() != grid.size()) throw PreconditionError("credible band: curves do not match the grid");
  CredibleBand out;
  out.band.grid = grid;
  out.band.level = level;
  out.band.center = curves.colwise().mean().transpose();
  std::vector<double> sups(static_cast<std::size_t>(curves.rows()));
  for (Eigen::Index m = 0; m < curves.rows(); ++m)
    sups[static_cast<std::size_t>(m)] = (curves.row(m).transpose() - out.band.center).cwiseAbs().maxCoeff();
  out.radius = order_statistic_quantile(std::move(sups), level);
  out.band.lower = out.band.center.array() - out.radius;
  out.band.upper = out.band.center.array() + out.radius;
  if (target == CurveTarget::survival) {
    out.band.lower = out.band.lower.cwiseMax(0.0).cwiseMin(1.0);
    out.band.upper = out.band.upper.cwiseMax(0.0).cwiseMin(1.0);
  }
  out.area_unclipped = 2.0 * out.radius;
  const Eigen::VectorXd width = out.band.upper - out.band.lower;
  for (Eigen::Index g = 1; g < grid.size(); ++g) out.area += 0.5 * (width(g) + width(g - 1)) * (grid(g) - grid(g - 1));
  return out;
}

inline void check_band_grid(const Band& band, const Eigen::VectorXd& grid) {
  if (band.grid.size() != grid.size() || band.lower.size() != grid.size() || band.upper.size() != grid.size() ||
      (band.grid - grid).cwiseAbs().maxCoeff() > 1e-12)
    throw PreconditionError("band and curve grids differ");
}

/// lower <= truth <= upper at every grid point.
inline bool covers(const Band& band, const Eigen::VectorXd& true_curve, const Eigen::VectorXd& grid) {
  check_band_grid(band, grid);
  if (true_curve.size() != grid.size()) throw PreconditionError("covers: truth does not match the grid");
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    if (true_curve(g) < band.lower(g) || true_curve(g) > band.upper(g)) return false;
  return true;
}

/// Trapezoid integral of upper - lower over the band grid.
inline double area(const Band& band) {
  double a = 0.0;
  for (Eigen::Index g = 1; g < band.grid.size(); ++g)
    a += 0.5 * ((band.upper(g) - band.lower(g)) + (band.upper(g - 1) - band.lower(g - 1))) *
         (band.grid(g) - band.grid(g - 1));
  return a;
}

/// Truth curve on a grid, using the exact baseline cumulative hazard.
inline Eigen::VectorXd true_curve(const TruthSpec& truth, const Eigen::VectorXd& z, CurveTarget target,
                                  const Eigen::VectorXd& grid) {
  const double risk = std::exp(truth.theta0.dot(z));
  Eigen::VectorXd cum(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) cum(g) = truth.baseline.cumulative(grid(g)) * risk;
  return transform_curve(cum, target);
}

/// Chi-square quantile with two degrees of freedom.
inline double chi_square2_quantile(double level) { return -2.0 * std::log1p(-level); }

struct Ellipse {
  Eigen::Vector2d center;
  Eigen::Matrix2d covariance;
  double chi2 = 0.0;  // boundary: (x - center)' covariance^{-1} (x - center) = chi2
  double area = 0.0;
  // Semi-axes and orientation (radians) for plotting.
  Eigen::Vector2d semi_axes;
  double angle = 0.0;
};

struct Rectangle {
  Eigen::Vector2d lower;
  Eigen::Vector2d upper;
  double area = 0.0;
};

struct JointRegions {
  Ellipse ellipse;
  Rectangle rectangle;
};

inline Ellipse make_ellipse(const Eigen::Vector2d& center, const Eigen::Matrix2d& covariance, double level) {
  Ellipse e{center, covariance, chi_square2_quantile(level), 0.0, Eigen::Vector2d::Zero(), 0.0};
  const double det = covariance.determinant();
  if (!(det > 1e-14 * std::max(1e-300, covariance(0, 0) * covariance(1, 1))))
    throw DegenerateRegionError("credible ellipse: covariance is singular");
  e.area = std::numbers::pi * e.chi2 * std::sqrt(det);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(covariance);
  e.semi_axes = (es.eigenvalues().array() * e.chi2).sqrt().reverse().matrix();
  const Eigen::Vector2d major = es.eigenvectors().col(1);
  e.angle = std::atan2(major(1), major(0));
  return e;
}

/// Sample-covariance ellipse and marginal-quantile rectangle for a cloud of
/// (theta_1, Lambda(1)) pairs. Each side of the rectangle is the central
/// interval at marginal level 1 - (1 - level) / 2.
inline JointRegions joint_credible_regions(const Eigen::MatrixX2d& pairs, double level) {
  const Eigen::Index m = pairs.rows();
  if (m < 100) throw PreconditionError("joint regions: need at least 100 pairs");
  JointRegions out;
  const Eigen::Vector2d mean = pairs.colwise().mean().transpose();
  const Eigen::MatrixX2d centered = pairs.rowwise() - mean.transpose();
  const Eigen::Matrix2d cov = centered.transpose() * centered / static_cast<double>(m - 1);
  out.ellipse = make_ellipse(mean, cov, level);

  const double marginal = 1.0 - (1.0 - level) / 2.0;
  const double tail = (1.0 - marginal) / 2.0;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> v(pairs.col(j).data(), pairs.col(j).data() + m);
    std::vector<double> neg(v.size());
    std::transform(v.begin(), v.end(), neg.begin(), [](double x) { return -x; });
    out.rectangle.lower(j) = -order_statistic_quantile(std::move(neg), 1.0 - tail);
    out.rectangle.upper(j) = order_statistic_quantile(std::move(v), 1.0 - tail);
  }
  out.rectangle.area = (out.rectangle.upper - out.rectangle.lower).prod();
  return out;
}

}  // namespace coxscale
