#pragma once

// Limiting objects of the semiparametric Cox posterior under a known truth:
// the risk moments M0, M1, M2, the least favourable direction gamma = M1/M0,
// the efficient information, the joint normal limit of (theta, Lambda
// functionals), the empirical process W_n and the Gaussian limit process of
// the cumulative hazard.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/rng.hpp"
#include "coxscale/truth.hpp"

namespace coxscale {

/// Nodes and weights with sum_q w_q f(x_q) ~ E f(X), X ~ N(0, 1)
/// (probabilists' Gauss-Hermite, Golub-Welsch).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int nodes) {
  if (nodes < 1) throw PreconditionError("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Eigen::VectorXd weights = eig.eigenvectors().row(0).transpose().array().square();
  return {eig.eigenvalues(), weights / weights.sum()};
}

/// Composite trapezoid of tabulated values over a grid.
inline double trapezoid(const Eigen::VectorXd& grid, const Eigen::VectorXd& values) {
  double s = 0.0;
  for (Eigen::Index g = 1; g < grid.size(); ++g) s += 0.5 * (values(g) + values(g - 1)) * (grid(g) - grid(g - 1));
  return s;
}

/// Running trapezoid integral (first entry 0).
inline Eigen::VectorXd cumulative_trapezoid(const Eigen::VectorXd& grid, const Eigen::VectorXd& values) {
  Eigen::VectorXd out(grid.size());
  if (grid.size() == 0) return out;
  out(0) = 0.0;
  for (Eigen::Index g = 1; g < grid.size(); ++g)
    out(g) = out(g - 1) + 0.5 * (values(g) + values(g - 1)) * (grid(g) - grid(g - 1));
  return out;
}

/// Linear interpolation of (grid, values) at t, constant outside the grid.
inline double interpolate(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, double t) {
  if (t <= grid(0)) return values(0);
  if (t >= grid(grid.size() - 1)) return values(values.size() - 1);
  const auto it = std::upper_bound(grid.data(), grid.data() + grid.size(), t);
  const auto j = static_cast<Eigen::Index>(it - grid.data()) - 1;
  const double f = (t - grid(j)) / (grid(j + 1) - grid(j));
  return values(j) + f * (values(j + 1) - values(j));
}

/// A function of time tabulated on a grid and linearly interpolated.
struct TabulatedCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd values;

  double operator()(double t) const { return interpolate(grid, values, t); }
};

struct AsymptoticTables {
  Eigen::VectorXd u_grid;
  Eigen::VectorXd lambda0;     // lambda_0 on u_grid
  Eigen::VectorXd cumulative;  // Lambda_0 on u_grid
  Eigen::VectorXd m0;          // M0(u)
  Eigen::MatrixXd m1;          // G x p, M1(u)'
  std::vector<Eigen::MatrixXd> m2;
  Eigen::MatrixXd gamma;  // G x p, (M1 / M0)(u)'
  Eigen::MatrixXd efficient_information;
  double quadrature_error = 0.0;

  Eigen::Index p() const { return efficient_information.rows(); }

  /// Lambda_0{f} = int_0^1 f dLambda_0 for f tabulated on u_grid.
  double lambda0_integral(const Eigen::VectorXd& f) const {
    return trapezoid(u_grid, f.cwiseProduct(lambda0));
  }
};

namespace detail {

// E over s = theta0'Z ~ N(0, sigma^2) via x = s / sigma, of x^m exp(s - L exp(s)), m = 0, 1, 2.
struct ProjectedMoments {
  double e0, e1, e2;
};

inline ProjectedMoments projected_moments(const Eigen::VectorXd& nodes, const Eigen::VectorXd& weights,
                                          double sigma, double cum) {
  ProjectedMoments m{0.0, 0.0, 0.0};
  for (Eigen::Index q = 0; q < nodes.size(); ++q) {
    const double s = sigma * nodes(q);
    const double f = weights(q) * std::exp(s - cum * std::exp(s));
    m.e0 += f;
    m.e1 += f * nodes(q);
    m.e2 += f * nodes(q) * nodes(q);
  }
  return m;
}

}  // namespace detail

/// Tables of M0, M1, M2, gamma and the efficient information on a uniform
/// u-grid for a standard normal covariate law.
///
/// The integrand depends on z only through s = theta0'z, so each moment reduces
/// to a one-dimensional Gauss-Hermite sum over s: with e = theta0 / |theta0|,
/// E[Z f(s)] = e E[x f], E[ZZ' f(s)] = (I - ee') E[f] + ee' E[x^2 f].
/// Accuracy is checked by doubling the node count.
inline AsymptoticTables compute_tables(const TruthSpec& truth, Eigen::Index u_points = 2048, int gh_nodes = 64) {
  if (u_points < 2) throw PreconditionError("compute_tables: need at least two u points");
  const Eigen::Index p = truth.p();
  const double sigma = truth.theta0.norm();
  const Eigen::VectorXd dir = sigma > 0.0 ? Eigen::VectorXd(truth.theta0 / sigma) : Eigen::VectorXd::Zero(p);
  const Eigen::MatrixXd outer = dir * dir.transpose();
  const Eigen::MatrixXd ortho = Eigen::MatrixXd::Identity(p, p) - outer;
  const auto [nodes, weights] = gauss_hermite(gh_nodes);
  const auto [nodes2, weights2] = gauss_hermite(2 * gh_nodes);

  AsymptoticTables t;
  t.u_grid = Eigen::VectorXd::LinSpaced(u_points, 0.0, 1.0);
  t.lambda0.resize(u_points);
  t.cumulative.resize(u_points);
  t.m0.resize(u_points);
  t.m1.resize(u_points, p);
  t.gamma.resize(u_points, p);
  t.m2.resize(static_cast<std::size_t>(u_points));
  std::vector<Eigen::MatrixXd> info_integrand(static_cast<std::size_t>(u_points));
  double err = 0.0;
  for (Eigen::Index g = 0; g < u_points; ++g) {
    const double u = t.u_grid(g);
    const double cum = truth.baseline.cumulative(u);
    t.lambda0(g) = truth.baseline(u);
    t.cumulative(g) = cum;
    // Admin-only censoring has its atom at u = 1; the left limit Gbar(1-) = 1 is used.
    const double gbar = truth.censoring == CensoringMode::admin_only ? 1.0 : 1.0 - u;
    const auto m = detail::projected_moments(nodes, weights, sigma, cum);
    const auto m_fine = detail::projected_moments(nodes2, weights2, sigma, cum);
    err = std::max({err, std::abs(m_fine.e0 - m.e0) / m.e0, std::abs(m_fine.e1 - m.e1) / m.e0,
                    std::abs(m_fine.e2 - m.e2) / m.e0});
    t.m0(g) = gbar * m.e0;
    t.m1.row(g) = (gbar * m.e1) * dir.transpose();
    t.gamma.row(g) = (m.e1 / m.e0) * dir.transpose();
    t.m2[static_cast<std::size_t>(g)] = gbar * (ortho * m.e0 + outer * m.e2);
    // M2 - gamma gamma' M0, with Gbar factored out so u = 1 stays finite.
    info_integrand[static_cast<std::size_t>(g)] =
        gbar * (ortho * m.e0 + outer * (m.e2 - m.e1 * m.e1 / m.e0)) * t.lambda0(g);
  }
  t.quadrature_error = err;
  if (err > 1e-6) throw AccuracyError("compute_tables: Gauss-Hermite quadrature did not converge");
  t.efficient_information = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index g = 1; g < u_points; ++g)
    t.efficient_information += 0.5 * (info_integrand[static_cast<std::size_t>(g)] +
                                      info_integrand[static_cast<std::size_t>(g - 1)]) *
                               (t.u_grid(g) - t.u_grid(g - 1));
  return t;
}

inline Eigen::MatrixXd inverse_information(const AsymptoticTables& tables) {
  const Eigen::Index p = tables.p();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(tables.efficient_information);
  if (ldlt.info() != Eigen::Success || p == 0 || ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff() ||
      ldlt.vectorD().maxCoeff() <= 0.0)
    throw LinearAlgebraError("efficient information is singular");
  return ldlt.solve(Eigen::MatrixXd::Identity(p, p));
}

/// Lambda_0{b gamma} as a p-vector.
inline Eigen::VectorXd lambda0_b_gamma(const AsymptoticTables& tables, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(tables.p());
  for (Eigen::Index j = 0; j < tables.p(); ++j)
    out(j) = tables.lambda0_integral(b.cwiseProduct(tables.gamma.col(j)));
  return out;
}

/// Limiting covariance of sqrt(n)(a'theta, <lambda, b>) around efficient centerings:
///   [[a'I^{-1}a,          -a'I^{-1}Lambda_0{b gamma}],
///    [  .       , Lambda_0{b^2/M0} + Lambda_0{b gamma}'I^{-1}Lambda_0{b gamma}]].
/// `b` is tabulated on tables.u_grid. For (theta_1, Lambda(1)) use a = e_1, b = 1.
inline Eigen::Matrix2d bvm_covariance(const AsymptoticTables& tables, const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b) {
  if (a.size() != tables.p()) throw PreconditionError("bvm_covariance: a has wrong dimension");
  if (b.size() != tables.u_grid.size()) throw PreconditionError("bvm_covariance: b must be tabulated on u_grid");
  const Eigen::MatrixXd inv = inverse_information(tables);
  const Eigen::VectorXd bg = lambda0_b_gamma(tables, b);
  Eigen::VectorXd b_gamma_b(b.size());
  for (Eigen::Index g = 0; g < b.size(); ++g) {
    if (b(g) == 0.0) {
      b_gamma_b(g) = 0.0;
    } else if (tables.m0(g) > 0.0) {
      b_gamma_b(g) = b(g) * b(g) / tables.m0(g);
    } else {
      throw DomainError("bvm_covariance: M0 vanishes where b is nonzero");
    }
  }
  Eigen::Matrix2d cov;
  cov(0, 0) = a.dot(inv * a);
  cov(0, 1) = cov(1, 0) = -a.dot(inv * bg);
  cov(1, 1) = tables.lambda0_integral(b_gamma_b) + bg.dot(inv * bg);
  return cov;
}

/// Direction (I^{-1}a, -gamma'I^{-1}a) whose W_n is the efficient score
/// expansion of a'theta_hat.
struct Direction {
  Eigen::VectorXd vartheta;
  TabulatedCurve g;
};

inline Direction efficient_direction(const AsymptoticTables& tables, const Eigen::VectorXd& a) {
  const Eigen::VectorXd v = inverse_information(tables) * a;
  return {v, TabulatedCurve{tables.u_grid, -(tables.gamma * v)}};
}

/// W_n(vartheta, g) = n^{-1/2} sum_i { delta_i (vartheta'Z_i + g(Y_i))
///                    - e^{theta0'Z_i} (vartheta'Z_i Lambda_0(Y_i) + int_0^{Y_i} g dLambda_0) }.
/// The integral uses the trapezoid rule on the curve's own grid.
inline double evaluate_Wn(const SurvivalDataset& data, const TruthSpec& truth, const Eigen::VectorXd& vartheta,
                          const TabulatedCurve& g) {
  if (data.empty()) return 0.0;
  if (vartheta.size() != data.p() || truth.p() != data.p()) throw PreconditionError("evaluate_Wn: dimension mismatch");
  const Eigen::VectorXd& grid = g.grid;
  Eigen::VectorXd weighted(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) weighted(j) = g.values(j) * truth.baseline(grid(j));
  const Eigen::VectorXd cum = cumulative_trapezoid(grid, weighted);
  auto integral_to = [&](double y) {
    if (y <= grid(0)) return 0.0;
    const auto it = std::upper_bound(grid.data(), grid.data() + grid.size(), y);
    const auto j = std::min(static_cast<Eigen::Index>(it - grid.data()) - 1, grid.size() - 1);
    return cum(j) + 0.5 * (weighted(j) + g(y) * truth.baseline(y)) * (y - grid(j));
  };
  const Eigen::VectorXd lin = data.covariates() * vartheta;
  const Eigen::VectorXd eta0 = data.covariates() * truth.theta0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double y = data.time(i);
    if (data.event(i)) s += lin(i) + g(y);
    s -= std::exp(eta0(i)) * (lin(i) * truth.baseline.cumulative(y) + integral_to(y));
  }
  return s / std::sqrt(static_cast<double>(data.n()));
}

/// Ingredients of the limit process B(U0(t)) - V'Lambda_0{gamma}(t), V ~ N(0, I^{-1}).
struct LimitProcessSpec {
  Eigen::VectorXd grid;
  Eigen::VectorXd time_change;  // U0(t) = int_0^t lambda_0 / M0
  Eigen::MatrixXd drift;        // p x G, Lambda_0{gamma}(t)
  Eigen::MatrixXd v_covariance;
};

inline LimitProcessSpec limit_process_spec(const AsymptoticTables& tables, const Eigen::VectorXd& grid) {
  const double t_max = grid.maxCoeff();
  Eigen::VectorXd u_density(tables.u_grid.size());
  for (Eigen::Index g = 0; g < tables.u_grid.size(); ++g) {
    const double u = tables.u_grid(g);
    if (tables.m0(g) > 0.0) {
      u_density(g) = tables.lambda0(g) / tables.m0(g);
    } else if (u <= t_max) {
      throw DomainError("limit process: M0 vanishes on the requested grid");
    } else {
      u_density(g) = 0.0;  // past the requested grid
    }
  }
  const Eigen::VectorXd u_cum = cumulative_trapezoid(tables.u_grid, u_density);
  LimitProcessSpec spec;
  spec.grid = grid;
  spec.time_change.resize(grid.size());
  spec.drift.resize(tables.p(), grid.size());
  std::vector<Eigen::VectorXd> drift_cum;
  for (Eigen::Index j = 0; j < tables.p(); ++j)
    drift_cum.push_back(cumulative_trapezoid(tables.u_grid, tables.gamma.col(j).cwiseProduct(tables.lambda0)));
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    spec.time_change(g) = interpolate(tables.u_grid, u_cum, grid(g));
    for (Eigen::Index j = 0; j < tables.p(); ++j)
      spec.drift(j, g) = interpolate(tables.u_grid, drift_cum[static_cast<std::size_t>(j)], grid(g));
  }
  spec.v_covariance = inverse_information(tables);
  return spec;
}

struct LimitPaths {
  Eigen::VectorXd grid;
  Eigen::MatrixXd paths;  // n_paths x G
  Eigen::VectorXd sup_abs;
};

/// Sample paths of the limit process; path m uses the stream derive_seed(seed, m).
inline LimitPaths simulate_limit_process(const LimitProcessSpec& spec, int n_paths, std::uint64_t seed,
                                         bool include_parametric = true) {
  const Eigen::Index g_count = spec.grid.size();
  const Eigen::Index p = spec.drift.rows();
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(p, p);
  if (include_parametric && p > 0) {
    const Eigen::LLT<Eigen::MatrixXd> llt(spec.v_covariance);
    if (llt.info() != Eigen::Success) throw LinearAlgebraError("limit process: V covariance is not positive definite");
    chol = llt.matrixL();
  }
  LimitPaths out{spec.grid, Eigen::MatrixXd(n_paths, g_count), Eigen::VectorXd(n_paths)};
  Eigen::VectorXd normals(p);
  for (int m = 0; m < n_paths; ++m) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
    double bm = 0.0;
    double prev = 0.0;
    for (Eigen::Index g = 0; g < g_count; ++g) {
      const double dv = spec.time_change(g) - prev;
      bm += std::sqrt(std::max(dv, 0.0)) * rng.normal();
      prev = spec.time_change(g);
      out.paths(m, g) = bm;
    }
    if (include_parametric && p > 0) {
      for (Eigen::Index j = 0; j < p; ++j) normals(j) = rng.normal();
      const Eigen::VectorXd v = chol * normals;
      out.paths.row(m) -= v.transpose() * spec.drift;
    }
    out.sup_abs(m) = out.paths.row(m).cwiseAbs().maxCoeff();
  }
  return out;
}

inline LimitPaths simulate_limit_process(const AsymptoticTables& tables, const Eigen::VectorXd& grid, int n_paths,
                                         std::uint64_t seed) {
  return simulate_limit_process(limit_process_spec(tables, grid), n_paths, seed);
}

}  // namespace coxscale
