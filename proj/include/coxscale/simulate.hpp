#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/rng.hpp"
#include "coxscale/truth.hpp"

namespace coxscale {

/// Inverse of t -> Lambda_0(t) on [0, t_max].
///
/// A table of the exact cumulative on a uniform grid brackets the root; the
/// bracket is then refined by bisection on the exact cumulative.
class CumulativeHazardInverse {
 public:
  static constexpr double kDefaultHorizon = 4.0;
  static constexpr std::size_t kDefaultTableSize = 4096;

  explicit CumulativeHazardInverse(const BaselineHazard& baseline, double t_max = kDefaultHorizon,
                                   std::size_t table_size = kDefaultTableSize)
      : baseline_(baseline), t_max_(t_max), table_(table_size + 1) {
    for (std::size_t j = 0; j <= table_size; ++j)
      table_[j] = baseline_.cumulative(t_max_ * static_cast<double>(j) / static_cast<double>(table_size));
    for (std::size_t j = 1; j < table_.size(); ++j)
      if (!(table_[j] > table_[j - 1]))
        throw DomainError("cumulative hazard is not strictly increasing (zero hazard)");
  }

  double horizon() const { return t_max_; }

  /// Smallest t with Lambda_0(t) = target, or t_max when target exceeds Lambda_0(t_max).
  double operator()(double target) const {
    if (!(target >= 0.0)) throw DomainError("inverse cumulative hazard: negative target");
    if (target >= table_.back()) return t_max_;
    const auto it = std::upper_bound(table_.begin(), table_.end(), target);
    const auto j = static_cast<std::size_t>(it - table_.begin());  // table_[j-1] <= target < table_[j]
    const double step = t_max_ / static_cast<double>(table_.size() - 1);
    double lo = step * static_cast<double>(j - 1);
    double hi = step * static_cast<double>(j);
    for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const double value = baseline_.cumulative(mid);
      if (value < target) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (std::abs(value - target) <= 1e-13) return mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  BaselineHazard baseline_;
  double t_max_;
  std::vector<double> table_;
};

/// Event time T = Lambda_0^{-1}(-log(u) exp(-theta0'z)) capped at the inverse's horizon.
inline double sample_event_time(const CumulativeHazardInverse& inverse, const TruthSpec& truth,
                                const Eigen::VectorXd& z, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("sample_event_time: u must lie in (0, 1)");
  const double target = -std::log(u) * std::exp(-truth.theta0.dot(z));
  return inverse(target);
}

inline double sample_event_time(const TruthSpec& truth, const Eigen::VectorXd& z, double u) {
  return sample_event_time(CumulativeHazardInverse(truth.baseline), truth, z, u);
}

/// n subjects from `truth`: standard normal covariates, inverse-hazard event
/// times, administrative censoring at t = 1 and optionally an independent
/// Uniform(0, 1) censoring time.
///
/// Covariates and event times come from the stream seeded by `seed`; uniform
/// censoring times come from a second derived stream, so the two censoring
/// regimes share the same latent event times for a given seed.
inline SurvivalDataset generate_dataset(Eigen::Index n, const TruthSpec& truth, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("generate_dataset: n must be >= 1");
  const CumulativeHazardInverse inverse(truth.baseline);
  Rng rng(seed);
  Rng censor_rng(derive_seed(seed, 1));
  const Eigen::Index p = truth.p();
  Eigen::VectorXd times(n);
  std::vector<std::uint8_t> events(static_cast<std::size_t>(n));
  Eigen::MatrixXd z(n, p);
  Eigen::VectorXd zi(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) zi(j) = rng.normal();
    const double t = sample_event_time(inverse, truth, zi, rng.uniform());
    double c = 1.0;
    if (truth.censoring == CensoringMode::admin_plus_uniform) c = std::min(c, censor_rng.uniform());
    z.row(i) = zi.transpose();
    times(i) = std::min(t, c);
    events[static_cast<std::size_t>(i)] = t <= c ? 1 : 0;
  }
  return SurvivalDataset(std::move(times), std::move(events), std::move(z));
}

}  // namespace coxscale
