#pragma once

// Haar multiscale machinery on the dyadic partition of [0, 1].
//
// With K = 2^(L+1) bins, the coefficient vector of a histogram with values r
// is (c_{-1}, c_{lk}) where c_{-1} is the mean of r and
//   c_{lk} = 2^{-(L+1)+l/2} [ sum_{j in left half of I^l_k} r_j - sum_{j in right half} r_j ],
// i.e. the L2([0,1]) inner products of the step function with the normalized
// Haar wavelets psi_{lk} = 2^{l/2}(1_{I^{l+1}_{2k}} - 1_{I^{l+1}_{2k+1}}).
// The scaled map 2^{(L+1)/2} Psi is orthogonal.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/truth.hpp"

namespace coxscale {

struct HaarCoefficients {
  double scaling = 0.0;
  std::vector<Eigen::VectorXd> details;  // details[l] has 2^l entries, l = 0..L

  int max_level() const { return static_cast<int>(details.size()) - 1; }
  Eigen::Index size() const { return Eigen::Index{1} << details.size(); }

  /// Flattened as (c_{-1}, c_{00}, c_{10}, c_{11}, c_{20}, ...).
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(size());
    out(0) = scaling;
    Eigen::Index pos = 1;
    for (const auto& d : details) {
      out.segment(pos, d.size()) = d;
      pos += d.size();
    }
    return out;
  }

  static HaarCoefficients unflatten(const Eigen::VectorXd& flat) {
    const Eigen::Index k = flat.size();
    if (k < 2 || (k & (k - 1)) != 0) throw DomainError("Haar coefficients: length must be a power of two >= 2");
    HaarCoefficients c;
    c.scaling = flat(0);
    Eigen::Index pos = 1;
    for (Eigen::Index len = 1; pos < k; len *= 2) {
      c.details.push_back(flat.segment(pos, len));
      pos += len;
    }
    return c;
  }
};

/// Level index of the flattened coefficient at position `pos` (-1 for the scaling one).
inline int haar_level_of(Eigen::Index pos) {
  if (pos == 0) return -1;
  int l = 0;
  while ((Eigen::Index{2} << l) <= pos) ++l;
  return l;
}

/// Pyramid transform r_H -> r_S in O(K).
inline HaarCoefficients haar_forward(std::span<const double> heights) {
  const auto k = static_cast<Eigen::Index>(heights.size());
  if (k < 2 || (k & (k - 1)) != 0) throw DomainError("haar_forward: length must be a power of two >= 2");
  Eigen::VectorXd avg = Eigen::Map<const Eigen::VectorXd>(heights.data(), k);
  int top = 0;
  while ((Eigen::Index{2} << top) < k) ++top;  // K = 2^(top+1)
  HaarCoefficients c;
  c.details.resize(static_cast<std::size_t>(top) + 1);
  for (int l = top; l >= 0; --l) {
    const Eigen::Index cells = Eigen::Index{1} << l;
    Eigen::VectorXd next(cells);
    Eigen::VectorXd detail(cells);
    const double factor = std::pow(2.0, -0.5 * l - 1.0);
    for (Eigen::Index j = 0; j < cells; ++j) {
      next(j) = 0.5 * (avg(2 * j) + avg(2 * j + 1));
      detail(j) = factor * (avg(2 * j) - avg(2 * j + 1));
    }
    c.details[static_cast<std::size_t>(l)] = std::move(detail);
    avg = std::move(next);
  }
  c.scaling = avg(0);
  return c;
}

inline HaarCoefficients haar_forward(const Eigen::VectorXd& heights) {
  return haar_forward(std::span<const double>(heights.data(), static_cast<std::size_t>(heights.size())));
}

/// Inverse pyramid r_S -> r_H.
inline Eigen::VectorXd haar_inverse(const HaarCoefficients& c) {
  if (c.details.empty()) throw DomainError("haar_inverse: need at least one detail level");
  Eigen::VectorXd avg = Eigen::VectorXd::Constant(1, c.scaling);
  for (std::size_t l = 0; l < c.details.size(); ++l) {
    const Eigen::Index cells = Eigen::Index{1} << l;
    if (c.details[l].size() != cells) throw DomainError("haar_inverse: level has the wrong number of coefficients");
    const double factor = std::pow(2.0, 0.5 * static_cast<double>(l));
    Eigen::VectorXd finer(2 * cells);
    for (Eigen::Index j = 0; j < cells; ++j) {
      finer(2 * j) = avg(j) + factor * c.details[l](j);
      finer(2 * j + 1) = avg(j) - factor * c.details[l](j);
    }
    avg = std::move(finer);
  }
  return avg;
}

/// Closest integer L with 2^L ~ (n / log n)^{1/(2 beta + 1)}; ties go to the smaller L.
inline int cutoff(double n, double beta) {
  if (!(n >= 2.0)) throw PreconditionError("cutoff: n must be >= 2");
  if (!(beta > 0.0)) throw PreconditionError("cutoff: beta must be positive");
  const double target = std::pow(n / std::log(n), 1.0 / (2.0 * beta + 1.0));
  if (target <= 1.0) return 0;
  const int lo = static_cast<int>(std::floor(std::log2(target)));
  const double d_lo = std::abs(std::ldexp(1.0, lo) - target);
  const double d_hi = std::abs(std::ldexp(1.0, lo + 1) - target);
  return d_hi < d_lo ? lo + 1 : lo;
}

/// max_t |h(t) e^{theta'z} - lambda_0(t) e^{theta0'z}| over the grid.
/// Passing z = 0 gives the baseline distance.
inline double sup_norm_distance(const HistogramHazard& h, const Eigen::VectorXd& theta,
                                const TruthSpec& truth, const Eigen::VectorXd& z, const Eigen::VectorXd& grid) {
  const double risk = std::exp(theta.dot(z));
  const double risk0 = std::exp(truth.theta0.dot(z));
  double best = 0.0;
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    best = std::max(best, std::abs(h(grid(g)) * risk - truth.baseline(grid(g)) * risk0));
  return best;
}

/// Same distance for a curve already tabulated on `grid` against a baseline (exponents 1).
inline double sup_norm_distance(const Eigen::VectorXd& curve, const BaselineHazard& lambda0,
                                const Eigen::VectorXd& grid) {
  if (curve.size() != grid.size()) throw PreconditionError("sup_norm_distance: curve and grid differ in length");
  double best = 0.0;
  for (Eigen::Index g = 0; g < grid.size(); ++g) best = std::max(best, std::abs(curve(g) - lambda0(grid(g))));
  return best;
}

/// Default admissible weights w_l = max(l, 1).
inline Eigen::VectorXd default_multiscale_weights(int max_level) {
  Eigen::VectorXd w(max_level + 1);
  for (int l = 0; l <= max_level; ++l) w(l) = std::max(l, 1);
  return w;
}

/// max( |c_{-1}|, sup_l max_k |c_{lk}| / w_l ).
inline double multiscale_norm(const HaarCoefficients& c, const Eigen::VectorXd& weights) {
  if (weights.size() < static_cast<Eigen::Index>(c.details.size()))
    throw PreconditionError("multiscale_norm: one weight per level is required");
  double best = std::abs(c.scaling);
  for (std::size_t l = 0; l < c.details.size(); ++l) {
    const double w = weights(static_cast<Eigen::Index>(l));
    if (!(w >= 1.0)) throw PreconditionError("multiscale_norm: weights must be >= 1");
    if (c.details[l].size() > 0) best = std::max(best, c.details[l].cwiseAbs().maxCoeff() / w);
  }
  return best;
}

}  // namespace coxscale
