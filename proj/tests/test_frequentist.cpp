#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "coxscale/frequentist.hpp"
#include "coxscale/simulate.hpp"
#include "test_support.hpp"

using namespace coxscale;

namespace {

struct Columns {
  std::vector<double> y;
  std::vector<int> delta;
  std::vector<double> z;
};

Columns columns(const SurvivalDataset& d) {
  Columns c;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    c.y.push_back(d.time(i));
    c.delta.push_back(d.event(i) ? 1 : 0);
    c.z.push_back(d.covariates()(i, 0));
  }
  return c;
}

SurvivalDataset five_subjects() {
  const Eigen::VectorXd y = (Eigen::VectorXd(5) << 0.12, 0.35, 0.41, 0.77, 0.93).finished();
  const Eigen::MatrixXd z = (Eigen::MatrixXd(5, 1) << 0.8, -0.4, 1.3, -1.1, 0.2).finished();
  return SurvivalDataset(y, {1, 1, 0, 1, 1}, z);
}

SurvivalDataset simulated(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                          BaselineHazard base = BaselineHazard::smooth_a()) {
  Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(p, -0.5);
  if (p > 1) theta0 = Eigen::VectorXd::LinSpaced(p, 0.3, -0.3);
  return generate_dataset(n, {theta0, base, CensoringMode::admin_plus_uniform}, seed);
}

// w_i(t) summed term by term from the influence formula (p = 1, no ties).
Eigen::MatrixXd influence_oracle(const SurvivalDataset& d, double theta, double z, const Eigen::VectorXd& grid) {
  const Eigen::Index n = d.n();
  const auto nd = static_cast<double>(n);
  auto s0 = [&](double u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (d.time(j) >= u) s += std::exp(theta * d.covariates()(j, 0));
    return s / nd;
  };
  auto s1 = [&](double u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (d.time(j) >= u) s += d.covariates()(j, 0) * std::exp(theta * d.covariates()(j, 0));
    return s / nd;
  };
  auto s2 = [&](double u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (d.time(j) >= u) s += std::pow(d.covariates()(j, 0), 2) * std::exp(theta * d.covariates()(j, 0));
    return s / nd;
  };
  // information per subject
  double info = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    if (d.event(j)) {
      const double a = s0(d.time(j)), b = s1(d.time(j)), c = s2(d.time(j));
      info += c / a - (b / a) * (b / a);
    }
  info /= nd;
  auto dlam = [&](Eigen::Index j) { return 1.0 / (nd * s0(d.time(j))); };
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = d.covariates()(i, 0);
    double v = d.event(i) ? zi - s1(d.time(i)) / s0(d.time(i)) : 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (d.event(j) && d.time(j) <= d.time(i)) v -= std::exp(theta * zi) * (zi - s1(d.time(j)) / s0(d.time(j))) * dlam(j);
    u(i) = v;
  }
  Eigen::MatrixXd w(n, grid.size());
  const double rz = std::exp(theta * z);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double t = grid(g);
    double lam = 0.0, zbar = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (d.event(j) && d.time(j) <= t) {
        lam += dlam(j);
        zbar += s1(d.time(j)) / s0(d.time(j)) * dlam(j);
      }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double zi = d.covariates()(i, 0);
      double a = (d.event(i) && d.time(i) <= t) ? 1.0 / s0(d.time(i)) : 0.0;
      double b = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (d.event(j) && d.time(j) <= t && d.time(i) >= d.time(j))
          b += std::exp(theta * zi) * dlam(j) / s0(d.time(j));
      w(i, g) = rz * (a - b + (z * lam - zbar) / info * u(i));
    }
  }
  return w;
}

}  // namespace

TEST(PartialLikelihood, MatchesBruteForce) {
  const auto d = simulated(40, 1, 3);
  const auto c = columns(d);
  for (double th : {-1.0, -0.2, 0.0, 0.6}) {
    EXPECT_NEAR(partial_likelihood(d, Eigen::VectorXd::Constant(1, th)).value,
                oracle::log_partial_likelihood_1d(c.y, c.delta, c.z, th), 1e-10);
  }
}

TEST(PartialLikelihood, GradientAndHessianMatchFiniteDifferences) {
  const auto d = simulated(60, 3, 4);
  const Eigen::VectorXd theta = Eigen::Vector3d(0.2, -0.1, 0.4);
  const auto pl = partial_likelihood(d, theta);
  const double h = 1e-5;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd up = theta, dn = theta;
    up(j) += h;
    dn(j) -= h;
    EXPECT_NEAR((partial_likelihood(d, up).value - partial_likelihood(d, dn).value) / (2 * h), pl.gradient(j), 1e-6);
    const Eigen::VectorXd dg = (partial_likelihood(d, up).gradient - partial_likelihood(d, dn).gradient) / (2 * h);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(dg(k), pl.hessian(k, j), 1e-5);
  }
}

TEST(PartialLikelihood, TiesUseSharedRiskSet) {
  const Eigen::VectorXd y = (Eigen::VectorXd(4) << 0.5, 0.5, 0.7, 0.9).finished();
  const Eigen::MatrixXd z = (Eigen::MatrixXd(4, 1) << 1.0, -1.0, 0.5, 0.0).finished();
  const SurvivalDataset d(y, {1, 1, 1, 0}, z);
  const auto c = columns(d);
  EXPECT_NEAR(partial_likelihood(d, Eigen::VectorXd::Constant(1, 0.3)).value,
              oracle::log_partial_likelihood_1d(c.y, c.delta, c.z, 0.3), 1e-12);
}

TEST(PartialLikelihood, HessianNegativeSemidefinite) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = simulated(80, 3, seed);
    for (double s : {-1.0, 0.0, 0.7}) {
      const auto pl = partial_likelihood(d, Eigen::VectorXd::Constant(3, s));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pl.hessian);
      EXPECT_LE(es.eigenvalues().maxCoeff(), 1e-10);
    }
  }
}

TEST(FitPartialLikelihood, GridSearchOracle) {
  const auto d = five_subjects();
  const auto c = columns(d);
  double best = -5.0, best_v = -1e300;
  for (int k = 0; k <= 100000; ++k) {
    const double th = -5.0 + 1e-4 * k;
    const double v = oracle::log_partial_likelihood_1d(c.y, c.delta, c.z, th);
    if (v > best_v) {
      best_v = v;
      best = th;
    }
  }
  const auto fit = fit_partial_likelihood(d);
  EXPECT_NEAR(fit.theta_hat(0), best, 2e-4);
  EXPECT_LE(partial_likelihood(d, fit.theta_hat).gradient.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitPartialLikelihood, StationaryAndInformation) {
  const auto d = simulated(300, 5, 12, BaselineHazard::smooth_b());
  const auto fit = fit_partial_likelihood(d);
  const auto pl = partial_likelihood(d, fit.theta_hat);
  EXPECT_LE(pl.gradient.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((fit.info - (-pl.hessian / 300.0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((fit.info - fit.info.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.info);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
}

TEST(FitPartialLikelihood, ConvergesAcrossManyDatasets) {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const TruthSpec truth{Eigen::VectorXd::LinSpaced(5, 0.3, -0.3), BaselineHazard::smooth_b(), CensoringMode::admin_only};
    try {
      (void)fit_partial_likelihood(generate_dataset(200, truth, seed));
    } catch (const std::exception&) {
      ++failures;
    }
  }
  EXPECT_EQ(failures, 0);
}

TEST(FitPartialLikelihood, IdenticalCovariatesAreDegenerate) {
  const Eigen::VectorXd y = (Eigen::VectorXd(4) << 0.1, 0.3, 0.5, 0.9).finished();
  const SurvivalDataset d(y, {1, 0, 1, 1}, Eigen::MatrixXd::Constant(4, 2, 0.7));
  EXPECT_EQ(partial_likelihood(d, Eigen::Vector2d(0.4, -2.0)).gradient.norm(), 0.0);
  const auto fit = fit_partial_likelihood(d);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.theta_hat, Eigen::VectorXd::Zero(2));
}

TEST(FitPartialLikelihood, ZeroEventsIsDegenerateDataError) {
  const SurvivalDataset d(Eigen::VectorXd::Ones(3), {0, 0, 0}, Eigen::MatrixXd::Identity(3, 1));
  EXPECT_THROW(fit_partial_likelihood(d), DegenerateDataError);
}

TEST(FitPartialLikelihood, MonotoneLikelihoodDiverges) {
  // Every event has the largest covariate in its risk set.
  const Eigen::VectorXd y = (Eigen::VectorXd(4) << 0.1, 0.2, 0.3, 0.4).finished();
  const Eigen::MatrixXd z = (Eigen::MatrixXd(4, 1) << 4.0, 3.0, 2.0, 1.0).finished();
  const SurvivalDataset d(y, {1, 1, 1, 0}, z);
  EXPECT_THROW(fit_partial_likelihood(d), NonConvergenceError);
}

TEST(FitPartialLikelihood, ConsistencyAtLargeN) {
  const TruthSpec truth{Eigen::VectorXd::Constant(1, -0.5), BaselineHazard::smooth_a(), CensoringMode::admin_only};
  const auto d = generate_dataset(2000, truth, 77);
  const auto fit = fit_partial_likelihood(d);
  const double se = std::sqrt(1.0 / (fit.info(0, 0) * 2000.0));
  EXPECT_LT(std::abs(fit.theta_hat(0) + 0.5), 3.0 * se);
}

TEST(Breslow, SingleEventAllAtRisk) {
  const Eigen::VectorXd y = (Eigen::VectorXd(4) << 0.2, 1.0, 1.0, 1.0).finished();
  const auto f = breslow(SurvivalDataset(y, {1, 0, 0, 0}, Eigen::MatrixXd::Random(4, 1)), Eigen::VectorXd::Zero(1));
  ASSERT_EQ(f.jumps.size(), 1u);
  EXPECT_DOUBLE_EQ(f.jumps[0], 0.25);
  EXPECT_EQ(f(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f(0.5), 0.25);
}

TEST(Breslow, ThetaZeroIsNelsonAalen) {
  const auto d = simulated(20, 1, 5);
  const auto c = columns(d);
  const auto f = breslow(d, Eigen::VectorXd::Zero(1));
  for (int g = 0; g <= 100; ++g) EXPECT_NEAR(f(g / 100.0), oracle::nelson_aalen(c.y, c.delta, g / 100.0), 1e-13);
}

TEST(Breslow, WithTiesMatchesNelsonAalen) {
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0.3, 0.3, 0.3, 0.6, 0.6, 1.0).finished();
  const SurvivalDataset d(y, {1, 1, 0, 1, 0, 0}, Eigen::MatrixXd::Zero(6, 1));
  const auto c = columns(d);
  const auto f = breslow(d, Eigen::VectorXd::Zero(1));
  for (double t : {0.29, 0.3, 0.5, 0.6, 1.0}) EXPECT_NEAR(f(t), oracle::nelson_aalen(c.y, c.delta, t), 1e-14);
}

TEST(Breslow, NoEventsIsZero) {
  const auto f = breslow(SurvivalDataset(Eigen::VectorXd::Ones(3), {0, 0, 0}, Eigen::MatrixXd::Zero(3, 1)),
                         Eigen::VectorXd::Zero(1));
  EXPECT_TRUE(f.jumps.empty());
  EXPECT_EQ(f(1.0), 0.0);
}

TEST(Breslow, StepFunctionInvariants) {
  const auto d = simulated(100, 2, 8);
  const auto f = breslow(d, Eigen::Vector2d(0.3, -0.2));
  EXPECT_EQ(f(0.0), 0.0);
  for (std::size_t j = 0; j < f.times.size(); ++j) {
    EXPECT_GT(f.jumps[j], 0.0);
    if (j > 0) EXPECT_GT(f.times[j], f.times[j - 1]);
    bool is_event_time = false;
    for (Eigen::Index i = 0; i < d.n(); ++i) is_event_time |= d.event(i) && d.time(i) == f.times[j];
    EXPECT_TRUE(is_event_time);
  }
}

TEST(Breslow, CovariateShiftLeavesConditionalHazardUnchanged) {
  const auto d = simulated(50, 2, 9);
  const Eigen::VectorXd theta = Eigen::Vector2d(0.4, -0.7);
  const Eigen::VectorXd c = Eigen::Vector2d(0.5, 1.5);
  const Eigen::MatrixXd shifted = d.covariates().rowwise() + c.transpose();
  const SurvivalDataset d2(d.times(), d.events(), shifted);
  const auto f1 = breslow(d, theta);
  const auto f2 = breslow(d2, theta);
  const Eigen::VectorXd z = Eigen::Vector2d(0.2, -0.3);
  for (double t : {0.2, 0.5, 0.8, 1.0}) {
    EXPECT_NEAR(f2(t), f1(t) * std::exp(-theta.dot(c)), 1e-12);
    EXPECT_NEAR(f2(t) * std::exp(theta.dot(z + c)), f1(t) * std::exp(theta.dot(z)), 1e-12);
  }
}

TEST(Influence, MatchesTermByTermOracle) {
  const auto d = simulated(30, 1, 21);
  const auto fit = fit_partial_likelihood(d);
  const Eigen::VectorXd grid = uniform_grid(33);
  const Eigen::MatrixXd w = influence_matrix(d, fit, Eigen::VectorXd::Constant(1, 1.0), grid, CurveTarget::cumhaz);
  const Eigen::MatrixXd o = influence_oracle(d, fit.theta_hat(0), 1.0, grid);
  EXPECT_LE((w - o).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, o.cwiseAbs().maxCoeff()));
}

TEST(Influence, SurvivalScaling) {
  const auto d = simulated(40, 1, 22);
  const auto fit = fit_partial_likelihood(d);
  const Eigen::VectorXd grid = uniform_grid(17);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.5);
  const Eigen::MatrixXd wc = influence_matrix(d, fit, z, grid, CurveTarget::cumhaz);
  const Eigen::MatrixXd ws = influence_matrix(d, fit, z, grid, CurveTarget::survival);
  const Eigen::VectorXd s = plug_in_curve(fit, z, grid, CurveTarget::survival);
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    EXPECT_LE((ws.col(g) + s(g) * wc.col(g)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiplierBand, QuantileIsOrderStatistic) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
  EXPECT_EQ(order_statistic_quantile(v, 0.95), 95.0);
}

TEST(MultiplierBand, NullInfluenceGivesZeroWidth) {
  const auto sups = multiplier_sup_samples(Eigen::MatrixXd::Zero(20, 9), Eigen::VectorXd::Ones(9), 500, 3);
  EXPECT_EQ(order_statistic_quantile(sups, 0.95), 0.0);
}

TEST(MultiplierBand, CenterAndOrdering) {
  const auto d = simulated(150, 2, 31);
  const auto fit = fit_partial_likelihood(d);
  const Eigen::VectorXd z = Eigen::Vector2d(1.0, 0.0);
  for (auto target : {CurveTarget::cumhaz, CurveTarget::survival}) {
    MultiplierBandOptions o;
    o.target = target;
    o.replicates = 300;
    const auto mb = multiplier_band(d, fit, z, o);
    EXPECT_EQ(mb.band.center, plug_in_curve(fit, z, o.grid, target));
    EXPECT_EQ(mb.band.grid.size(), o.grid.size());
    EXPECT_TRUE((mb.band.lower.array() <= mb.band.center.array()).all());
    EXPECT_TRUE((mb.band.center.array() <= mb.band.upper.array()).all());
    EXPECT_GT(mb.critical_value, 0.0);
    EXPECT_NEAR(mb.half_width(0), mb.critical_value / std::sqrt(150.0), 1e-15);
    if (target == CurveTarget::survival) {
      EXPECT_GE(mb.band.lower.minCoeff(), 0.0);
      EXPECT_LE(mb.band.upper.maxCoeff(), 1.0);
    }
  }
}

TEST(MultiplierBand, DeterministicGivenSeed) {
  const auto d = simulated(100, 1, 32);
  const auto fit = fit_partial_likelihood(d);
  MultiplierBandOptions o;
  o.replicates = 200;
  const Band a = multiplier_confidence_band(d, fit, Eigen::VectorXd::Ones(1), o);
  const Band b = multiplier_confidence_band(d, fit, Eigen::VectorXd::Ones(1), o);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
}

TEST(MultiplierBand, Preconditions) {
  const auto d = simulated(50, 1, 33);
  CoxFrequentistFit unfit;
  MultiplierBandOptions o;
  EXPECT_THROW(multiplier_band(d, unfit, Eigen::VectorXd::Ones(1), o), PreconditionError);
  const auto fit = fit_partial_likelihood(d);
  o.replicates = 99;
  EXPECT_THROW(multiplier_band(d, fit, Eigen::VectorXd::Ones(1), o), PreconditionError);
}

TEST(MultiplierBand, SupSamplesMatchDirectSum) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Random(12, 7);
  const auto sups = multiplier_sup_samples(w, Eigen::VectorXd::Ones(7), 5, 99);
  for (int b = 0; b < 5; ++b) {
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(b)));
    Eigen::VectorXd g(12);
    for (int i = 0; i < 12; ++i) g(i) = rng.normal();
    const double direct = (w.transpose() * g).cwiseAbs().maxCoeff() / std::sqrt(12.0);
    EXPECT_NEAR(sups[static_cast<std::size_t>(b)], direct, 1e-12);
  }
}
