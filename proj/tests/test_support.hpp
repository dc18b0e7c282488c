#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code paths.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "coxscale/core_model.hpp"

namespace oracle {

/// Composite Simpson rule on [a, b] with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 2000) {
  if (panels % 2 == 1) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// |[0, y] ∩ (lo, hi]| by direct interval arithmetic.
inline double overlap(double y, double lo, double hi) { return std::max(0.0, std::min(y, hi) - lo); }

/// Cox log-likelihood summed term by term from the step function definition.
inline double log_likelihood(const coxscale::SurvivalDataset& data, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& heights) {
  const auto k = heights.size();
  const double w = 1.0 / static_cast<double>(k);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double y = data.time(i);
    double eta = 0.0;
    for (Eigen::Index j = 0; j < data.p(); ++j) eta += theta(j) * data.covariates()(i, j);
    double cum = 0.0;
    Eigen::Index bin = 0;
    for (Eigen::Index b = 0; b < k; ++b) {
      const double lo = static_cast<double>(b) * w;
      const double hi = lo + w;
      cum += heights(b) * overlap(y, lo, hi);
      if ((b == 0 && y <= hi) || (y > lo && y <= hi)) bin = b;
    }
    if (y == 0.0) bin = 0;
    if (data.event(i)) ll += eta + std::log(heights(bin));
    ll -= cum * std::exp(eta);
  }
  return ll;
}

/// Nelson-Aalen estimate at t: sum over distinct event times s <= t of d(s) / (number at risk at s).
inline double nelson_aalen(const std::vector<double>& y, const std::vector<int>& delta, double t) {
  std::vector<double> times;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (delta[i] == 1 && y[i] <= t) times.push_back(y[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double s = 0.0;
  for (double u : times) {
    double d = 0.0;
    double at_risk = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] >= u) at_risk += 1.0;
      if (y[i] == u && delta[i] == 1) d += 1.0;
    }
    s += d / at_risk;
  }
  return s;
}

/// Log partial likelihood for p = 1 with Breslow ties, computed by brute force.
inline double log_partial_likelihood_1d(const std::vector<double>& y, const std::vector<int>& delta,
                                        const std::vector<double>& z, double theta) {
  double v = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (delta[i] != 1) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[j] >= y[i]) denom += std::exp(theta * z[j]);
    v += theta * z[i] - std::log(denom);
  }
  return v;
}

/// Kolmogorov distribution tail P(K > x) via its alternating series.
inline double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS p-value against a continuous CDF (asymptotic with the
/// Stephens small-sample correction).
inline double ks_pvalue(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sq = std::sqrt(n);
  return kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
inline double batch_means_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t size = x.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < size; ++i) s += x[static_cast<std::size_t>(b) * size + i];
    means.push_back(s / static_cast<double>(size));
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= batches;
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= (batches - 1);
  return std::sqrt(var / batches);
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Dense Haar analysis matrix Psi for K = 2^{L+1} bins, rows ordered
/// (scaling, l = 0 .. L, k = 0 .. 2^l - 1).
inline Eigen::MatrixXd haar_matrix(int level) {
  const Eigen::Index k_bins = Eigen::Index{1} << (level + 1);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(k_bins, k_bins);
  const double base = std::ldexp(1.0, -(level + 1));
  psi.row(0).setConstant(base);
  Eigen::Index row = 1;
  for (int l = 0; l <= level; ++l) {
    const Eigen::Index cells = Eigen::Index{1} << l;
    const Eigen::Index span = k_bins / cells;  // fine bins per (l, k) support
    const double c = base * std::pow(2.0, 0.5 * l);
    for (Eigen::Index k = 0; k < cells; ++k, ++row) {
      for (Eigen::Index j = 0; j < span / 2; ++j) psi(row, k * span + j) = c;
      for (Eigen::Index j = span / 2; j < span; ++j) psi(row, k * span + j) = -c;
    }
  }
  return psi;
}

/// Tensorized Gauss-Hermite expectation over Z ~ N(0, I_p) of f(z), using
/// `nodes` points per coordinate (probabilists' weights normalized to 1).
inline double tensor_gauss_hermite(int p, int nodes, const std::function<double(const Eigen::VectorXd&)>& f) {
  // Nodes and weights via Golub-Welsch on the probabilists' Hermite recurrence.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int i = 1; i < nodes; ++i) j(i, i - 1) = j(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  const Eigen::VectorXd x = es.eigenvalues();
  const Eigen::VectorXd w = es.eigenvectors().row(0).transpose().array().square();
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  Eigen::VectorXd z(p);
  double total = 0.0;
  while (true) {
    double weight = 1.0;
    for (int c = 0; c < p; ++c) {
      z(c) = x(idx[static_cast<std::size_t>(c)]);
      weight *= w(idx[static_cast<std::size_t>(c)]);
    }
    if (weight > 1e-14) total += weight * f(z);
    int c = 0;
    while (c < p && ++idx[static_cast<std::size_t>(c)] == nodes) idx[static_cast<std::size_t>(c++)] = 0;
    if (c == p) break;
  }
  return total;
}

/// Posterior of (theta, log lambda_1, log lambda_2) for a two-bin histogram
/// hazard and p = 1, tabulated on a dense 3-D grid, summarized as the mass of
/// 4 x 4 x 4 cells cut at (grid-resolution) marginal quartiles.
struct ToyPosterior {
  std::array<std::array<double, 3>, 3> cuts{};  // per axis: three interior cut points
  std::array<double, 64> mass{};

  static int cell_of(double v, const std::array<double, 3>& c) {
    return v <= c[0] ? 0 : v <= c[1] ? 1 : v <= c[2] ? 2 : 3;
  }
  int cell(double theta, double u1, double u2) const {
    return cell_of(theta, cuts[0]) * 16 + cell_of(u1, cuts[1]) * 4 + cell_of(u2, cuts[2]);
  }

  /// Total variation distance between the cell masses and the empirical cell
  /// frequencies of draws given as rows (theta, lambda_1, lambda_2).
  double total_variation(const Eigen::MatrixXd& draws) const {
    std::array<double, 64> freq{};
    for (Eigen::Index m = 0; m < draws.rows(); ++m)
      freq[static_cast<std::size_t>(cell(draws(m, 0), std::log(draws(m, 1)), std::log(draws(m, 2))))] += 1.0;
    double tv = 0.0;
    for (std::size_t c = 0; c < 64; ++c) tv += std::abs(freq[c] / static_cast<double>(draws.rows()) - mass[c]);
    return 0.5 * tv;
  }
};

/// `log_prior(l1, l2)` is the prior log density of the heights in lambda
/// space; theta has a standard normal prior. Bins are [0, 1/2] and (1/2, 1].
inline ToyPosterior toy_posterior(const std::vector<double>& y, const std::vector<int>& delta,
                                  const std::vector<double>& z,
                                  const std::function<double(double, double)>& log_prior, int points = 150) {
  double sum_dz = 0.0;
  double d[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i)
    if (delta[i] == 1) {
      sum_dz += z[i];
      d[y[i] <= 0.5 ? 0 : 1] += 1.0;
    }
  auto exposure = [&](double theta, int k) {
    double a = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) a += overlap(y[i], 0.5 * k, 0.5 * (k + 1)) * std::exp(theta * z[i]);
    return a;
  };
  auto log_post = [&](double theta, double a1, double a2, double u1, double u2) {
    const double l1 = std::exp(u1), l2 = std::exp(u2);
    return theta * sum_dz + d[0] * u1 + d[1] * u2 - l1 * a1 - l2 * a2 + log_prior(l1, l2) + u1 + u2 -
           0.5 * theta * theta;
  };
  // Tabulate on a box; returns per-axis marginals and the full grid of log densities.
  struct Grid {
    std::array<double, 3> lo, step;
    std::vector<double> logp;
  };
  auto tabulate = [&](std::array<double, 3> lo, std::array<double, 3> hi, int m) {
    Grid g;
    g.lo = lo;
    for (int a = 0; a < 3; ++a) g.step[a] = (hi[a] - lo[a]) / (m - 1);
    g.logp.resize(static_cast<std::size_t>(m) * m * m);
    for (int i = 0; i < m; ++i) {
      const double th = lo[0] + i * g.step[0];
      const double a1 = exposure(th, 0), a2 = exposure(th, 1);
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          g.logp[(static_cast<std::size_t>(i) * m + j) * m + k] =
              log_post(th, a1, a2, lo[1] + j * g.step[1], lo[2] + k * g.step[2]);
    }
    return g;
  };
  auto normalized = [](std::vector<double> lp) {
    const double mx = *std::max_element(lp.begin(), lp.end());
    double s = 0.0;
    for (double& v : lp) s += (v = std::exp(v - mx));
    for (double& v : lp) v /= s;
    return lp;
  };

  // Coarse pass locates the support.
  const int mc = 61;
  Grid coarse = tabulate({-6.0, -8.0, -8.0}, {6.0, 5.0, 5.0}, mc);
  const auto pc = normalized(coarse.logp);
  std::array<double, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    std::vector<double> marg(mc, 0.0);
    for (int i = 0; i < mc; ++i)
      for (int j = 0; j < mc; ++j)
        for (int k = 0; k < mc; ++k) {
          const int idx[3] = {i, j, k};
          marg[static_cast<std::size_t>(idx[a])] += pc[(static_cast<std::size_t>(i) * mc + j) * mc + k];
        }
    int first = 0, last = mc - 1;
    while (first < mc - 1 && marg[static_cast<std::size_t>(first)] < 1e-12) ++first;
    while (last > 0 && marg[static_cast<std::size_t>(last)] < 1e-12) --last;
    lo[a] = coarse.lo[a] + (first - 1) * coarse.step[a];
    hi[a] = coarse.lo[a] + (last + 1) * coarse.step[a];
  }

  const int m = points;
  Grid fine = tabulate(lo, hi, m);
  const auto p = normalized(fine.logp);
  ToyPosterior out;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> marg(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          const int idx[3] = {i, j, k};
          marg[static_cast<std::size_t>(idx[a])] += p[(static_cast<std::size_t>(i) * m + j) * m + k];
        }
    // cuts sit on midpoints between nodes so each node falls wholly in one cell
    double acc = 0.0;
    int q = 0;
    for (int i = 0; i < m && q < 3; ++i) {
      acc += marg[static_cast<std::size_t>(i)];
      while (q < 3 && acc >= 0.25 * (q + 1)) out.cuts[a][q++] = fine.lo[a] + (i + 0.5) * fine.step[a];
    }
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        out.mass[static_cast<std::size_t>(out.cell(fine.lo[0] + i * fine.step[0], fine.lo[1] + j * fine.step[1],
                                                   fine.lo[2] + k * fine.step[2]))] +=
            p[(static_cast<std::size_t>(i) * m + j) * m + k];
  return out;
}

inline double log_gamma_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Two-bin prior log densities in lambda space.
inline std::function<double(double, double)> toy_indep_prior(double shape, double rate) {
  return [=](double l1, double l2) { return log_gamma_density(l1, shape, rate) + log_gamma_density(l2, shape, rate); };
}

/// lambda_1 ~ Gamma(shape0, rate0), lambda_2 | lambda_1 ~ Gamma(alpha, alpha / lambda_1).
inline std::function<double(double, double)> toy_dep_prior(double shape0, double rate0, double alpha) {
  return [=](double l1, double l2) {
    return log_gamma_density(l1, shape0, rate0) + log_gamma_density(l2, alpha, alpha / l1);
  };
}

/// Standard normal coefficients of (log lambda_1, log lambda_2) under the
/// two-bin Haar basis. The map is linear, so the lambda-space density picks
/// up the Jacobian 1 / (lambda_1 lambda_2).
inline std::function<double(double, double)> toy_haar_prior() {
  const Eigen::MatrixXd psi = haar_matrix(0);
  return [=](double l1, double l2) {
    const Eigen::Vector2d r(std::log(l1), std::log(l2));
    const Eigen::Vector2d c = psi * r;
    return -0.5 * c.squaredNorm() - r.sum();
  };
}

}  // namespace oracle
