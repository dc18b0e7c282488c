#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "coxscale/errors.hpp"

namespace coxscale {

enum class CensoringMode { admin_only, admin_plus_uniform };

inline CensoringMode parse_censoring(std::string_view name) {
  if (name == "admin" || name == "admin-only") return CensoringMode::admin_only;
  if (name == "admin-unif" || name == "admin-plus-uniform") return CensoringMode::admin_plus_uniform;
  throw PreconditionError("unknown censoring mode: " + std::string(name));
}

inline std::string to_string(CensoringMode mode) {
  return mode == CensoringMode::admin_only ? "admin" : "admin-unif";
}

/// True baseline hazard lambda_0 with an exact cumulative hazard.
///
/// The named shapes are evaluated in closed form (and keep their formula past
/// t = 1, which only matters for generating times beyond the administrative
/// horizon). A tabulated hazard is linearly interpolated between its knots and
/// held constant after the last one; its cumulative is the exact integral of
/// that interpolant.
class BaselineHazard {
 public:
  enum class Kind { smooth_a, smooth_b, piecewise, tabulated };

  static BaselineHazard smooth_a() { return BaselineHazard(Kind::smooth_a); }
  static BaselineHazard smooth_b() { return BaselineHazard(Kind::smooth_b); }
  static BaselineHazard piecewise() { return BaselineHazard(Kind::piecewise); }

  static BaselineHazard tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() != values.size() || knots.size() < 2)
      throw PreconditionError("tabulated hazard needs >= 2 knots with matching values");
    if (knots.front() != 0.0) throw PreconditionError("tabulated hazard must start at t = 0");
    for (std::size_t j = 1; j < knots.size(); ++j)
      if (!(knots[j] > knots[j - 1])) throw PreconditionError("tabulated knots must increase strictly");
    for (double v : values)
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("tabulated hazard must be strictly positive");
    BaselineHazard h(Kind::tabulated);
    h.knots_ = std::move(knots);
    h.values_ = std::move(values);
    h.knot_cumulative_.assign(h.knots_.size(), 0.0);
    for (std::size_t j = 1; j < h.knots_.size(); ++j)
      h.knot_cumulative_[j] = h.knot_cumulative_[j - 1] +
                              0.5 * (h.values_[j] + h.values_[j - 1]) * (h.knots_[j] - h.knots_[j - 1]);
    return h;
  }

  static BaselineHazard from_name(std::string_view name) {
    if (name == "smooth-a") return smooth_a();
    if (name == "smooth-b") return smooth_b();
    if (name == "piecewise") return piecewise();
    throw PreconditionError("unknown truth: " + std::string(name));
  }

  Kind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case Kind::smooth_a: return "smooth-a";
      case Kind::smooth_b: return "smooth-b";
      case Kind::piecewise: return "piecewise";
      case Kind::tabulated: return "tabulated";
    }
    return {};
  }

  /// lambda_0(t), t >= 0.
  double operator()(double t) const {
    const double s = t + 0.05;
    switch (kind_) {
      case Kind::smooth_a:
        return 6.0 * (s * s * s - 2.0 * s * s + s) + 0.7;
      case Kind::smooth_b:
        return 0.8 * std::sin(2.0 * std::numbers::pi * s) + s * s * s * s - 1.8 * s * s + 2.0;
      case Kind::piecewise:
        return t < 0.4 ? 3.0 : (t < 0.6 ? 1.5 : 2.0);
      case Kind::tabulated: {
        if (t >= knots_.back()) return values_.back();
        const auto j = segment(t);
        const double f = (t - knots_[j]) / (knots_[j + 1] - knots_[j]);
        return values_[j] + f * (values_[j + 1] - values_[j]);
      }
    }
    return 0.0;
  }

  /// Lambda_0(t) = int_0^t lambda_0, t >= 0.
  double cumulative(double t) const {
    switch (kind_) {
      case Kind::smooth_a: {
        auto prim = [](double s) {
          return 6.0 * (s * s * s * s / 4.0 - 2.0 * s * s * s / 3.0 + s * s / 2.0);
        };
        return prim(t + 0.05) - prim(0.05) + 0.7 * t;
      }
      case Kind::smooth_b: {
        auto prim = [](double s) {
          const double two_pi = 2.0 * std::numbers::pi;
          return -0.8 * std::cos(two_pi * s) / two_pi + s * s * s * s * s / 5.0 - 0.6 * s * s * s + 2.0 * s;
        };
        return prim(t + 0.05) - prim(0.05);
      }
      case Kind::piecewise:
        return 3.0 * std::min(t, 0.4) + 1.5 * std::clamp(t - 0.4, 0.0, 0.2) + 2.0 * std::max(t - 0.6, 0.0);
      case Kind::tabulated: {
        if (t >= knots_.back()) return knot_cumulative_.back() + values_.back() * (t - knots_.back());
        const auto j = segment(t);
        const double dt = t - knots_[j];
        const double slope = (values_[j + 1] - values_[j]) / (knots_[j + 1] - knots_[j]);
        return knot_cumulative_[j] + values_[j] * dt + 0.5 * slope * dt * dt;
      }
    }
    return 0.0;
  }

 private:
  explicit BaselineHazard(Kind kind) : kind_(kind) {}

  std::size_t segment(double t) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - knots_.begin()) - 1));
  }

  Kind kind_;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> knot_cumulative_;
};

/// Data-generating truth for simulations: regression vector, baseline hazard
/// and censoring regime. Covariates are i.i.d. standard normal per coordinate.
struct TruthSpec {
  Eigen::VectorXd theta0;
  BaselineHazard baseline = BaselineHazard::smooth_a();
  CensoringMode censoring = CensoringMode::admin_only;

  Eigen::Index p() const { return theta0.size(); }
};

}  // namespace coxscale
