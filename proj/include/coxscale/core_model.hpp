#pragma once

// Domain types for right-censored survival data on [0, 1] and dyadic
// histogram hazards, plus the Cox log-likelihood and the per-bin exposure
// summaries the samplers consume.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coxscale/errors.hpp"

namespace coxscale {

/// One observation (Y, delta, Z).
struct Subject {
  double y = 0.0;
  bool event = false;
  Eigen::VectorXd z;
};

/// n subjects sharing covariate dimension p, stored column-wise.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;

  explicit SurvivalDataset(Eigen::Index p) : covariates_(0, p) {}

  SurvivalDataset(Eigen::VectorXd times, std::vector<std::uint8_t> events,
                  Eigen::MatrixXd covariates)
      : times_(std::move(times)), events_(std::move(events)), covariates_(std::move(covariates)) {
    validate();
  }

  static SurvivalDataset from_subjects(std::span<const Subject> subjects, Eigen::Index p) {
    const auto n = static_cast<Eigen::Index>(subjects.size());
    Eigen::VectorXd t(n);
    std::vector<std::uint8_t> d(subjects.size());
    Eigen::MatrixXd z(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Subject& s = subjects[static_cast<std::size_t>(i)];
      if (s.z.size() != p) throw PreconditionError("subject covariate dimension differs from p");
      t(i) = s.y;
      d[static_cast<std::size_t>(i)] = s.event ? 1 : 0;
      z.row(i) = s.z.transpose();
    }
    return SurvivalDataset(std::move(t), std::move(d), std::move(z));
  }

  Eigen::Index n() const { return times_.size(); }
  Eigen::Index p() const { return covariates_.cols(); }
  bool empty() const { return n() == 0; }

  const Eigen::VectorXd& times() const { return times_; }
  const std::vector<std::uint8_t>& events() const { return events_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }

  double time(Eigen::Index i) const { return times_(i); }
  bool event(Eigen::Index i) const { return events_[static_cast<std::size_t>(i)] != 0; }
  auto covariate(Eigen::Index i) const { return covariates_.row(i); }

  Subject subject(Eigen::Index i) const { return {time(i), event(i), covariates_.row(i).transpose()}; }

  Eigen::Index event_count() const {
    Eigen::Index c = 0;
    for (auto e : events_) c += e;
    return c;
  }

  /// Subjects reordered by `order` (a permutation of 0..n-1).
  SurvivalDataset permuted(std::span<const Eigen::Index> order) const {
    Eigen::VectorXd t(n());
    std::vector<std::uint8_t> d(events_.size());
    Eigen::MatrixXd z(n(), p());
    for (Eigen::Index i = 0; i < n(); ++i) {
      const Eigen::Index src = order[static_cast<std::size_t>(i)];
      t(i) = times_(src);
      d[static_cast<std::size_t>(i)] = events_[static_cast<std::size_t>(src)];
      z.row(i) = covariates_.row(src);
    }
    return SurvivalDataset(std::move(t), std::move(d), std::move(z));
  }

 private:
  void validate() const {
    if (static_cast<std::size_t>(times_.size()) != events_.size() || times_.size() != covariates_.rows())
      throw PreconditionError("dataset columns have different lengths");
    for (Eigen::Index i = 0; i < times_.size(); ++i) {
      if (!(times_(i) >= 0.0 && times_(i) <= 1.0)) throw DomainError("observation time outside [0, 1]");
      if (events_[static_cast<std::size_t>(i)] > 1) throw DomainError("event indicator must be 0 or 1");
    }
    if (!covariates_.allFinite()) throw DomainError("non-finite covariate");
  }

  Eigen::VectorXd times_;
  std::vector<std::uint8_t> events_;
  Eigen::MatrixXd covariates_{0, 0};
};

/// Positive step function on the dyadic partition of [0, 1] into
/// K = 2^(level+1) bins I_0 = [0, w], I_k = (k w, (k+1) w].
class HistogramHazard {
 public:
  HistogramHazard(int level, Eigen::VectorXd heights) : level_(level), heights_(std::move(heights)) {
    if (level_ < 0) throw DomainError("histogram level must be nonnegative");
    if (heights_.size() != bin_count(level_)) throw DomainError("histogram needs 2^(level+1) heights");
    for (Eigen::Index k = 0; k < heights_.size(); ++k)
      if (!(heights_(k) > 0.0) || !std::isfinite(heights_(k)))
        throw DomainError("histogram heights must be finite and strictly positive");
  }

  static HistogramHazard constant(int level, double value) {
    return HistogramHazard(level, Eigen::VectorXd::Constant(bin_count(level), value));
  }

  static Eigen::Index bin_count(int level) { return Eigen::Index{1} << (level + 1); }

  /// Index of the bin containing t under the left-open convention (I_0 closed at 0).
  static Eigen::Index bin_index(double t, Eigen::Index bins) {
    const double scaled = t * static_cast<double>(bins);
    auto k = static_cast<Eigen::Index>(std::ceil(scaled)) - 1;
    if (k < 0) k = 0;
    if (k >= bins) k = bins - 1;
    return k;
  }

  int level() const { return level_; }
  Eigen::Index bins() const { return heights_.size(); }
  double bin_width() const { return 1.0 / static_cast<double>(bins()); }
  const Eigen::VectorXd& heights() const { return heights_; }
  double height(Eigen::Index k) const { return heights_(k); }

  Eigen::Index bin_of(double t) const { return bin_index(t, bins()); }

  /// lambda(t).
  double operator()(double t) const { return heights_(bin_of(t)); }

  /// Lambda(1) = sum_k lambda_k w.
  double total() const { return heights_.sum() * bin_width(); }

 private:
  int level_;
  Eigen::VectorXd heights_;
};

/// Lambda(t) = int_0^t lambda(u) du for 0 <= t <= 1.
inline double cumulative_hazard(const HistogramHazard& h, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("cumulative_hazard: t outside [0, 1]");
  const Eigen::Index k = h.bin_of(t);
  const double w = h.bin_width();
  return h.heights().head(k).sum() * w + h.height(k) * (t - static_cast<double>(k) * w);
}

/// Per-bin event counts d_k and exposure lengths Y_ik = |[0, Y_i] ∩ I_k|.
///
/// Exposure of subject i is full (w) in every bin before its own bin and
/// partial (Y_i - k_i w) in bin k_i, so weighted sums over subjects reduce to
/// a suffix sum; `weighted_exposure` uses that instead of the dense matrix.
class ExposureSummary {
 public:
  ExposureSummary(const SurvivalDataset& data, int level) : level_(level) {
    if (level < 0) throw DomainError("exposure_summary: level must be nonnegative");
    const Eigen::Index bins = HistogramHazard::bin_count(level);
    const double w = 1.0 / static_cast<double>(bins);
    events_ = Eigen::VectorXd::Zero(bins);
    bin_.resize(static_cast<std::size_t>(data.n()));
    partial_.resize(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double y = data.time(i);
      const Eigen::Index k = HistogramHazard::bin_index(y, bins);
      bin_[static_cast<std::size_t>(i)] = k;
      partial_(i) = y - static_cast<double>(k) * w;
      if (data.event(i)) events_(k) += 1.0;
    }
  }

  int level() const { return level_; }
  Eigen::Index bins() const { return events_.size(); }
  Eigen::Index subjects() const { return partial_.size(); }
  double bin_width() const { return 1.0 / static_cast<double>(bins()); }

  /// d_k.
  const Eigen::VectorXd& events() const { return events_; }

  /// Bin containing Y_i.
  Eigen::Index subject_bin(Eigen::Index i) const { return bin_[static_cast<std::size_t>(i)]; }

  /// Exposure of subject i inside its own bin.
  double partial_exposure(Eigen::Index i) const { return partial_(i); }

  /// Dense n x K matrix of Y_ik.
  Eigen::MatrixXd exposure() const {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(subjects(), bins());
    const double w = bin_width();
    for (Eigen::Index i = 0; i < subjects(); ++i) {
      const Eigen::Index k = subject_bin(i);
      e.row(i).head(k).setConstant(w);
      e(i, k) = partial_(i);
    }
    return e;
  }

  /// T_k = sum_i Y_ik * weights_i, in O(n + K).
  Eigen::VectorXd weighted_exposure(const Eigen::VectorXd& weights) const {
    const Eigen::Index bins_ = bins();
    Eigen::VectorXd partial_sum = Eigen::VectorXd::Zero(bins_);
    Eigen::VectorXd ending = Eigen::VectorXd::Zero(bins_);
    for (Eigen::Index i = 0; i < subjects(); ++i) {
      const Eigen::Index k = subject_bin(i);
      partial_sum(k) += weights(i) * partial_(i);
      ending(k) += weights(i);
    }
    Eigen::VectorXd out(bins_);
    double beyond = 0.0;  // total weight of subjects whose bin is > k
    const double w = bin_width();
    for (Eigen::Index k = bins_ - 1; k >= 0; --k) {
      out(k) = partial_sum(k) + w * beyond;
      beyond += ending(k);
    }
    return out;
  }

  /// Lambda(Y_i) for every subject under heights `h`.
  Eigen::VectorXd cumulative_at_times(const Eigen::VectorXd& heights) const {
    const Eigen::Index bins_ = bins();
    Eigen::VectorXd start(bins_);
    double acc = 0.0;
    const double w = bin_width();
    for (Eigen::Index k = 0; k < bins_; ++k) {
      start(k) = acc;
      acc += heights(k) * w;
    }
    Eigen::VectorXd out(subjects());
    for (Eigen::Index i = 0; i < subjects(); ++i) {
      const Eigen::Index k = subject_bin(i);
      out(i) = start(k) + heights(k) * partial_(i);
    }
    return out;
  }

 private:
  int level_;
  Eigen::VectorXd events_;
  std::vector<Eigen::Index> bin_;
  Eigen::VectorXd partial_;
};

inline ExposureSummary exposure_summary(const SurvivalDataset& data, int level) {
  return ExposureSummary(data, level);
}

/// Cox log-likelihood up to terms that depend only on the truth:
/// sum_i delta_i (theta'Z_i + log lambda(Y_i)) - Lambda(Y_i) exp(theta'Z_i).
inline double log_likelihood(const SurvivalDataset& data, const Eigen::VectorXd& theta,
                             const HistogramHazard& h) {
  if (data.empty()) return 0.0;
  if (theta.size() != data.p()) throw PreconditionError("log_likelihood: theta has wrong dimension");
  const Eigen::VectorXd eta = data.covariates() * theta;
  const double w = h.bin_width();
  Eigen::VectorXd start(h.bins());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < h.bins(); ++k) {
    start(k) = acc;
    acc += h.height(k) * w;
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double y = data.time(i);
    const Eigen::Index k = h.bin_of(y);
    const double lambda_y = h.height(k);
    const double cum = start(k) + lambda_y * (y - static_cast<double>(k) * w);
    if (data.event(i)) ll += eta(i) + std::log(lambda_y);
    ll -= cum * std::exp(eta(i));
  }
  return ll;
}

/// d/dtheta of log_likelihood.
inline Eigen::VectorXd log_likelihood_gradient(const SurvivalDataset& data, const Eigen::VectorXd& theta,
                                               const HistogramHazard& h) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(data.p());
  if (data.empty()) return g;
  const ExposureSummary summary(data, h.level());
  const Eigen::VectorXd cum = summary.cumulative_at_times(h.heights());
  const Eigen::VectorXd eta = data.covariates() * theta;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double coef = (data.event(i) ? 1.0 : 0.0) - cum(i) * std::exp(eta(i));
    g += coef * data.covariate(i).transpose();
  }
  return g;
}

}  // namespace coxscale
