#pragma once

// Two-step frequentist estimation for the Cox model: Newton-Raphson on the
// Breslow-ties partial likelihood, the Breslow cumulative baseline hazard, and
// a simultaneous multiplier confidence band built from estimated influence
// functions.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "coxscale/band.hpp"
#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/rng.hpp"

namespace coxscale {

/// Right-continuous nondecreasing step function starting at 0.
struct StepFunction {
  std::vector<double> times;   // strictly increasing jump locations
  std::vector<double> jumps;   // jump sizes
  std::vector<double> values;  // value just after each jump

  double operator()(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

struct PartialLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

namespace detail {

/// Subject indices sorted by observation time (stable).
inline std::vector<Eigen::Index> time_order(const SurvivalDataset& data) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return data.time(a) < data.time(b); });
  return order;
}

/// Risk-set sums at each distinct event time, Breslow ties.
struct RiskSets {
  std::vector<double> times;   // distinct event times, increasing
  std::vector<double> events;  // d_j
  std::vector<double> s0;      // sum_{Y >= tau_j} exp(theta'Z)
  Eigen::MatrixXd s1;          // p x m, sum_{Y >= tau_j} Z exp(theta'Z)
};

inline RiskSets risk_sets(const SurvivalDataset& data, const Eigen::VectorXd& theta) {
  const auto order = time_order(data);
  const Eigen::VectorXd eta = data.covariates() * theta;
  RiskSets rs;
  std::vector<Eigen::VectorXd> s1_rev;
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(data.p());
  auto pos = static_cast<std::ptrdiff_t>(order.size()) - 1;
  while (pos >= 0) {
    const double t = data.time(order[static_cast<std::size_t>(pos)]);
    double d = 0.0;
    auto q = pos;
    for (; q >= 0 && data.time(order[static_cast<std::size_t>(q)]) == t; --q) {
      const Eigen::Index i = order[static_cast<std::size_t>(q)];
      const double w = std::exp(eta(i));
      s0 += w;
      s1 += w * data.covariate(i).transpose();
      if (data.event(i)) d += 1.0;
    }
    if (d > 0) {
      rs.times.push_back(t);
      rs.events.push_back(d);
      rs.s0.push_back(s0);
      s1_rev.push_back(s1);
    }
    pos = q;
  }
  std::reverse(rs.times.begin(), rs.times.end());
  std::reverse(rs.events.begin(), rs.events.end());
  std::reverse(rs.s0.begin(), rs.s0.end());
  std::reverse(s1_rev.begin(), s1_rev.end());
  rs.s1.resize(data.p(), static_cast<Eigen::Index>(s1_rev.size()));
  for (std::size_t j = 0; j < s1_rev.size(); ++j) rs.s1.col(static_cast<Eigen::Index>(j)) = s1_rev[j];
  return rs;
}

}  // namespace detail

/// Log partial likelihood sum_{events}[theta'Z_i - log sum_{Y_j >= Y_i} exp(theta'Z_j)]
/// with its gradient and Hessian (Breslow ties).
inline PartialLikelihood partial_likelihood(const SurvivalDataset& data, const Eigen::VectorXd& theta) {
  const Eigen::Index p = data.p();
  PartialLikelihood out{0.0, Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p)};
  if (data.empty()) return out;
  const auto order = detail::time_order(data);
  const Eigen::VectorXd eta = data.covariates() * theta;
  const double shift = eta.maxCoeff();
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  auto pos = static_cast<std::ptrdiff_t>(order.size()) - 1;
  while (pos >= 0) {
    const double t = data.time(order[static_cast<std::size_t>(pos)]);
    double d = 0.0;
    auto q = pos;
    for (; q >= 0 && data.time(order[static_cast<std::size_t>(q)]) == t; --q) {
      const Eigen::Index i = order[static_cast<std::size_t>(q)];
      const double w = std::exp(eta(i) - shift);
      const auto zi = data.covariate(i).transpose();
      s0 += w;
      s1 += w * zi;
      s2.noalias() += w * zi * zi.transpose();
      if (data.event(i)) {
        d += 1.0;
        out.value += eta(i);
        out.gradient += zi;
      }
    }
    if (d > 0) {
      const Eigen::VectorXd mean = s1 / s0;
      out.value -= d * (std::log(s0) + shift);
      out.gradient -= d * mean;
      out.hessian -= d * (s2 / s0 - mean * mean.transpose());
    }
    pos = q;
  }
  return out;
}

struct NewtonOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
  double divergence_norm = 50.0;
};

struct CoxFrequentistFit {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd info;  // -Hessian / n at theta_hat
  StepFunction breslow;
  bool degenerate = false;
  bool fitted = false;
  int iterations = 0;
  double log_partial_likelihood = 0.0;
};

/// Breslow estimator Lambda_hat(t) = sum_{events Y_i <= t} 1 / sum_{Y_j >= Y_i} exp(theta'Z_j).
inline StepFunction breslow(const SurvivalDataset& data, const Eigen::VectorXd& theta) {
  StepFunction f;
  if (data.empty()) return f;
  const auto rs = detail::risk_sets(data, theta);
  double acc = 0.0;
  for (std::size_t j = 0; j < rs.times.size(); ++j) {
    const double jump = rs.events[j] / rs.s0[j];
    acc += jump;
    f.times.push_back(rs.times[j]);
    f.jumps.push_back(jump);
    f.values.push_back(acc);
  }
  return f;
}

/// Maximum partial-likelihood estimate by Newton-Raphson with step halving,
/// started at 0. Identical covariate rows give a score that vanishes
/// everywhere; the fit is then flagged degenerate with theta_hat = 0.
inline CoxFrequentistFit fit_partial_likelihood(const SurvivalDataset& data, const NewtonOptions& opts = {}) {
  if (data.event_count() == 0) throw DegenerateDataError("fit_partial_likelihood: no events");
  const Eigen::Index p = data.p();
  CoxFrequentistFit fit;
  fit.theta_hat = Eigen::VectorXd::Zero(p);
  fit.fitted = true;

  bool all_identical = true;
  for (Eigen::Index i = 1; i < data.n() && all_identical; ++i)
    all_identical = data.covariate(i) == data.covariate(0);
  if (all_identical || p == 0) {
    fit.degenerate = p > 0;
    fit.info = Eigen::MatrixXd::Zero(p, p);
    fit.log_partial_likelihood = partial_likelihood(data, fit.theta_hat).value;
    fit.breslow = breslow(data, fit.theta_hat);
    return fit;
  }

  Eigen::VectorXd theta = fit.theta_hat;
  PartialLikelihood cur = partial_likelihood(data, theta);
  // Curvature below this fraction of its value at theta = 0 means the
  // likelihood has flattened out along a direction of divergence.
  const double curvature_floor = 1e-10 * (-cur.hessian).diagonal().maxCoeff();
  int it = 0;
  for (;; ++it) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-cur.hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
      if (it > 0) throw NonConvergenceError("partial likelihood diverges (information vanishes)");
      throw LinearAlgebraError("partial likelihood: information matrix is singular");
    }
    if (it > 0 && ldlt.vectorD().minCoeff() <= curvature_floor)
      throw NonConvergenceError("partial likelihood diverges (information vanishes)");
    const Eigen::VectorXd step = ldlt.solve(cur.gradient);
    // A vanishing gradient alone is not enough: under a monotone likelihood the
    // gradient and curvature decay together while the Newton step stays O(1).
    const bool small_step = step.norm() <= 1e-6 * (1.0 + theta.norm());
    const double grad = cur.gradient.cwiseAbs().maxCoeff();
    if (grad <= opts.gradient_tolerance && small_step) break;
    if (it >= opts.max_iterations) throw NonConvergenceError("partial likelihood: Newton iteration limit reached");
    // Changes below the rounding level of the objective count as ascent.
    const double slack = 1e-12 * (1.0 + std::abs(cur.value));
    double scale = 1.0;
    PartialLikelihood next = partial_likelihood(data, theta + step);
    for (int halving = 0; halving < 60 && !(next.value >= cur.value - slack); ++halving) {
      scale *= 0.5;
      next = partial_likelihood(data, theta + scale * step);
    }
    if (!(next.value >= cur.value - slack)) {
      // no ascent possible in floating point; accept only at a genuine stationary point
      if (grad <= 1e3 * opts.gradient_tolerance && step.norm() <= 1e-3 * (1.0 + theta.norm())) break;
      throw NonConvergenceError("partial likelihood: no ascent direction (monotone likelihood or line search failure)");
    }
    theta += scale * step;
    cur = std::move(next);
    if (theta.norm() > opts.divergence_norm)
      throw NonConvergenceError("partial likelihood diverges (monotone likelihood)");
  }
  fit.theta_hat = theta;
  fit.iterations = it;
  fit.log_partial_likelihood = cur.value;
  fit.info = -cur.hessian / static_cast<double>(data.n());
  fit.breslow = breslow(data, theta);
  return fit;
}

enum class BandScaling {
  constant,      // half-width c / sqrt(n) everywhere
  standardized,  // half-width c * sigma(t) / sqrt(n), sup taken over |W(t)| / sigma(t)
};

struct MultiplierBandOptions {
  CurveTarget target = CurveTarget::survival;
  double level = 0.95;
  int replicates = 1000;
  std::uint64_t seed = 1;
  Eigen::VectorXd grid = default_grid();
  BandScaling scaling = BandScaling::constant;
};

/// Plug-in Lambda_hat(t) exp(theta_hat'z) on the grid, or the matching survival curve.
inline Eigen::VectorXd plug_in_curve(const CoxFrequentistFit& fit, const Eigen::VectorXd& z,
                                     const Eigen::VectorXd& grid, CurveTarget target) {
  const double risk = std::exp(fit.theta_hat.dot(z));
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double cum = fit.breslow(grid(g)) * risk;
    out(g) = target == CurveTarget::cumhaz ? cum : std::exp(-cum);
  }
  return out;
}

/// Estimated influence w_i(t) of subject i on sqrt(n)(Lambda_hat(t)e^{theta_hat'z} - Lambda(t)e^{theta'z}),
/// returned as an n x G matrix. For the survival target each column is scaled
/// by -S_hat(t | z).
///
/// w_i(t) = e^{theta'z} [ delta_i 1{Y_i <= t} / S0(Y_i)
///                        - int_0^t 1{Y_i >= u} e^{theta'Z_i} dLambda_hat(u) / S0(u)
///                        + (z Lambda_hat(t) - int_0^t (S1/S0) dLambda_hat)' I^{-1} U_i ],
/// with S0, S1 the n^{-1}-scaled risk sums, U_i the score residual and I the
/// per-subject information.
inline Eigen::MatrixXd influence_matrix(const SurvivalDataset& data, const CoxFrequentistFit& fit,
                                        const Eigen::VectorXd& z, const Eigen::VectorXd& grid,
                                        CurveTarget target) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const auto nd = static_cast<double>(n);
  const auto rs = detail::risk_sets(data, fit.theta_hat);
  const auto m = static_cast<Eigen::Index>(rs.times.size());

  // Cumulative sums over event times (index j holds the sum over tau_0..tau_{j-1}).
  std::vector<double> cum_lambda(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<double> cum_q(static_cast<std::size_t>(m) + 1, 0.0);
  Eigen::MatrixXd cum_zbar = Eigen::MatrixXd::Zero(p, m + 1);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double dl = rs.events[ju] / rs.s0[ju];
    cum_lambda[ju + 1] = cum_lambda[ju] + dl;
    cum_q[ju + 1] = cum_q[ju] + nd * dl / rs.s0[ju];
    cum_zbar.col(j + 1) = cum_zbar.col(j) + rs.s1.col(j) / rs.s0[ju] * dl;
  }
  auto count_le = [&](double t) {
    return static_cast<Eigen::Index>(std::upper_bound(rs.times.begin(), rs.times.end(), t) - rs.times.begin());
  };

  Eigen::MatrixXd info_inv = Eigen::MatrixXd::Zero(p, p);
  if (p > 0 && !fit.degenerate) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.info);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
      throw LinearAlgebraError("influence: information matrix is singular");
    info_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  }

  const Eigen::VectorXd eta = data.covariates() * fit.theta_hat;
  std::vector<Eigen::Index> subject_idx(static_cast<std::size_t>(n));
  Eigen::MatrixXd v(p, n);  // I^{-1} U_i
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index ji = count_le(data.time(i));
    subject_idx[static_cast<std::size_t>(i)] = ji;
    const Eigen::VectorXd zi = data.covariate(i).transpose();
    Eigen::VectorXd u = -std::exp(eta(i)) * (zi * cum_lambda[static_cast<std::size_t>(ji)] - cum_zbar.col(ji));
    if (data.event(i)) u += zi - rs.s1.col(ji - 1) / rs.s0[static_cast<std::size_t>(ji - 1)];
    v.col(i) = info_inv * u;
  }

  const double risk_z = std::exp(fit.theta_hat.dot(z));
  Eigen::MatrixXd w(n, grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double t = grid(g);
    const Eigen::Index jt = count_le(t);
    const Eigen::VectorXd c = z * cum_lambda[static_cast<std::size_t>(jt)] - cum_zbar.col(jt);
    const Eigen::RowVectorXd cv = c.transpose() * v;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index ji = subject_idx[static_cast<std::size_t>(i)];
      double a = 0.0;
      if (data.event(i) && data.time(i) <= t) a = nd / rs.s0[static_cast<std::size_t>(ji - 1)];
      const double b = std::exp(eta(i)) * cum_q[static_cast<std::size_t>(std::min(jt, ji))];
      w(i, g) = risk_z * (a - b + cv(i));
    }
    if (target == CurveTarget::survival) w.col(g) *= -std::exp(-cum_lambda[static_cast<std::size_t>(jt)] * risk_z);
  }
  return w;
}

/// sup_t |W_b(t)| / scale(t) for b = 1..B, with W_b(t) = n^{-1/2} sum_i G_i^b w_i(t)
/// and G_i^b i.i.d. N(0, 1) drawn from the stream derive_seed(seed, b).
/// Grid points with scale(t) = 0 are skipped.
inline std::vector<double> multiplier_sup_samples(const Eigen::MatrixXd& influence, const Eigen::VectorXd& scale,
                                                  int replicates, std::uint64_t seed) {
  const Eigen::Index n = influence.rows();
  Eigen::MatrixXd multipliers(replicates, n);
  for (int b = 0; b < replicates; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    for (Eigen::Index i = 0; i < n; ++i) multipliers(b, i) = rng.normal();
  }
  const Eigen::MatrixXd paths = (multipliers * influence) / std::sqrt(static_cast<double>(std::max<Eigen::Index>(n, 1)));
  std::vector<double> sups(static_cast<std::size_t>(replicates), 0.0);
  for (int b = 0; b < replicates; ++b) {
    double s = 0.0;
    for (Eigen::Index g = 0; g < paths.cols(); ++g)
      if (scale(g) > 0.0) s = std::max(s, std::abs(paths(b, g)) / scale(g));
    sups[static_cast<std::size_t>(b)] = s;
  }
  return sups;
}

struct MultiplierBand {
  Band band;
  Eigen::VectorXd half_width;  // before clipping
  double critical_value = 0.0;
};

/// Simultaneous multiplier confidence band for Lambda(t | z) or S(t | z).
inline MultiplierBand multiplier_band(const SurvivalDataset& data, const CoxFrequentistFit& fit,
                                      const Eigen::VectorXd& z, const MultiplierBandOptions& opts) {
  if (!fit.fitted || fit.theta_hat.size() != data.p())
    throw PreconditionError("multiplier band: model has not been fitted to this dataset");
  if (z.size() != data.p()) throw PreconditionError("multiplier band: z has wrong dimension");
  if (opts.replicates < 100) throw PreconditionError("multiplier band: need at least 100 replicates");
  const Eigen::MatrixXd w = influence_matrix(data, fit, z, opts.grid, opts.target);
  const auto nd = static_cast<double>(data.n());

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(opts.grid.size());
  if (opts.scaling == BandScaling::standardized)
    scale = (w.colwise().squaredNorm() / nd).cwiseSqrt().transpose();
  const auto sups = multiplier_sup_samples(w, scale, opts.replicates, opts.seed);
  const double c = order_statistic_quantile(sups, opts.level);

  MultiplierBand out;
  out.critical_value = c;
  out.half_width = c * scale / std::sqrt(nd);
  Band& band = out.band;
  band.grid = opts.grid;
  band.level = opts.level;
  band.center = plug_in_curve(fit, z, opts.grid, opts.target);
  band.lower = band.center - out.half_width;
  band.upper = band.center + out.half_width;
  if (opts.target == CurveTarget::survival) {
    band.lower = band.lower.cwiseMax(0.0).cwiseMin(1.0);
    band.upper = band.upper.cwiseMax(0.0).cwiseMin(1.0);
  } else {
    band.lower = band.lower.cwiseMax(0.0);
  }
  return out;
}

inline Band multiplier_confidence_band(const SurvivalDataset& data, const CoxFrequentistFit& fit,
                                       const Eigen::VectorXd& z, const MultiplierBandOptions& opts) {
  return multiplier_band(data, fit, z, opts).band;
}

}  // namespace coxscale
