#pragma once

// Posterior samplers for the Cox model with a histogram (or Haar-wavelet)
// baseline hazard prior.
//
// Given theta, the hazard part of the log-likelihood depends on the data only
// through d_k (events per bin) and T_k(theta) = sum_i Y_ik e^{theta'Z_i}
// (exposure-weighted risk per bin):
//   sum_k d_k log lambda_k - sum_k lambda_k T_k(theta).
// Every hazard kernel below works on these statistics.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/frequentist.hpp"
#include "coxscale/multiscale.hpp"
#include "coxscale/parallel.hpp"
#include "coxscale/rng.hpp"

namespace coxscale {

// ---------------------------------------------------------------------------
// Priors

/// lambda_k ~ Gamma(shape, rate) i.i.d.
struct IndepGammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

/// Rate of the last-bin proposal: printed as alpha * lambda_{K-1} + T_K, with
/// alpha / lambda_{K-1} + T_K as the alternative reading.
enum class LastBinRate { product, reciprocal };

/// lambda_0 ~ Gamma(shape0, rate0), lambda_k | lambda_{k-1} ~ Gamma(alpha, alpha / lambda_{k-1}).
struct DepGammaPrior {
  double shape0 = 1.5;
  double rate0 = 1.0;
  double alpha = 1.0;
  double epsilon = 1e-6;
  LastBinRate last_bin = LastBinRate::product;
  double fallback_step = 0.5;  // sd of the log-normal walk used when a proposal shape is <= 0
};

enum class WaveletDensity { gaussian, laplace };
enum class WaveletScale { unit, decaying };  // sigma_l = 1 or 2^{-l/2}

/// log lambda = sum_{l,k} sigma_l Z_lk psi_lk with i.i.d. Z_lk.
struct HaarWaveletPrior {
  WaveletDensity density = WaveletDensity::gaussian;
  WaveletScale scale = WaveletScale::unit;
  double step = 0.3;  // random-walk sd per coefficient
};

using HazardPrior = std::variant<IndepGammaPrior, DepGammaPrior, HaarWaveletPrior>;

enum class ThetaPriorKind { std_normal, uniform, truncated_subbotin };

/// Product prior on theta. `bound` truncates to [-C, C]^p for the uniform and
/// Subbotin forms; the standard normal is untruncated.
struct ThetaPrior {
  ThetaPriorKind kind = ThetaPriorKind::std_normal;
  double bound = 10.0;
  double tau = 2.0;

  double log_density(const Eigen::VectorXd& theta) const {
    switch (kind) {
      case ThetaPriorKind::std_normal:
        return -0.5 * theta.squaredNorm();
      case ThetaPriorKind::uniform:
        return theta.cwiseAbs().maxCoeff() <= bound ? 0.0 : -std::numeric_limits<double>::infinity();
      case ThetaPriorKind::truncated_subbotin: {
        if (theta.size() > 0 && theta.cwiseAbs().maxCoeff() > bound) return -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (Eigen::Index j = 0; j < theta.size(); ++j) s -= std::pow(std::abs(theta(j)), tau) / tau;
        return s;
      }
    }
    return 0.0;
  }
};

struct PriorSpec {
  HazardPrior hazard = IndepGammaPrior{};
  ThetaPrior theta;

  std::string hazard_name() const {
    if (std::holds_alternative<IndepGammaPrior>(hazard)) return "indep";
    if (std::holds_alternative<DepGammaPrior>(hazard)) return "dep";
    return "haar";
  }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError(std::string("prior: ") + what + " must be positive");
    };
    if (const auto* ig = std::get_if<IndepGammaPrior>(&hazard)) {
      positive(ig->shape, "gamma shape");
      positive(ig->rate, "gamma rate");
    } else if (const auto* dg = std::get_if<DepGammaPrior>(&hazard)) {
      positive(dg->shape0, "alpha0");
      positive(dg->rate0, "beta0");
      positive(dg->alpha, "alpha");
      positive(dg->epsilon, "epsilon");
      positive(dg->fallback_step, "fallback step");
    } else {
      positive(std::get<HaarWaveletPrior>(hazard).step, "wavelet step");
    }
    positive(theta.bound, "theta bound C");
    positive(theta.tau, "Subbotin tau");
  }
};

inline PriorSpec make_prior(const std::string& hazard_name) {
  PriorSpec p;
  if (hazard_name == "indep") {
    p.hazard = IndepGammaPrior{};
  } else if (hazard_name == "dep") {
    p.hazard = DepGammaPrior{};
  } else if (hazard_name == "haar") {
    p.hazard = HaarWaveletPrior{};
  } else {
    throw PreconditionError("unknown hazard prior: " + hazard_name);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Shared helpers

inline double gamma_log_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Metropolis-Hastings decision for a log acceptance ratio.
inline bool metropolis_accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio) || log_ratio == -std::numeric_limits<double>::infinity()) return false;
  return std::log(rng.uniform()) < log_ratio;
}

/// d_k and T_k(theta).
struct HazardStatistics {
  Eigen::VectorXd events;
  Eigen::VectorXd exposure;
};

inline HazardStatistics hazard_statistics(const ExposureSummary& summary, const Eigen::VectorXd& risk_weights) {
  return {summary.events(), summary.weighted_exposure(risk_weights)};
}

inline HazardStatistics hazard_statistics(const SurvivalDataset& data, const ExposureSummary& summary,
                                          const Eigen::VectorXd& theta) {
  const Eigen::VectorXd w = (data.covariates() * theta).array().exp().matrix();
  return hazard_statistics(summary, w);
}

// ---------------------------------------------------------------------------
// Hazard kernels

/// Full conditional of each height under the independent gamma prior:
/// Gamma(d_k + shape, T_k + rate).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> indep_gamma_full_conditional(const HazardStatistics& stats,
                                                                                 const IndepGammaPrior& prior) {
  return {(stats.events.array() + prior.shape).matrix(), (stats.exposure.array() + prior.rate).matrix()};
}

inline Eigen::VectorXd gibbs_step_indep_gamma(const HazardStatistics& stats, const IndepGammaPrior& prior, Rng& rng) {
  const auto [shape, rate] = indep_gamma_full_conditional(stats, prior);
  Eigen::VectorXd out(shape.size());
  for (Eigen::Index k = 0; k < shape.size(); ++k) out(k) = rng.gamma(shape(k), rate(k));
  return out;
}

struct GammaParams {
  double shape;
  double rate;
};

/// Gamma proposal for bin k of the dependent prior given the current neighbours.
inline GammaParams dep_gamma_proposal(const Eigen::VectorXd& heights, Eigen::Index k, const HazardStatistics& stats,
                                      const DepGammaPrior& prior) {
  const Eigen::Index last = heights.size() - 1;
  if (k == 0) return {stats.events(0) + prior.shape0 - prior.alpha, stats.exposure(0) + prior.rate0};
  if (k < last) return {stats.events(k) + prior.epsilon, prior.alpha / heights(k - 1) + stats.exposure(k)};
  const double prev_rate =
      prior.last_bin == LastBinRate::product ? prior.alpha * heights(k - 1) : prior.alpha / heights(k - 1);
  return {stats.events(k) + prior.alpha, prev_rate + stats.exposure(k)};
}

/// Log full conditional of bin k at value x (up to a constant), neighbours held fixed.
inline double dep_gamma_log_conditional(const Eigen::VectorXd& heights, Eigen::Index k, double x,
                                        const HazardStatistics& stats, const DepGammaPrior& prior) {
  if (!(x > 0.0) || !std::isfinite(x)) return -std::numeric_limits<double>::infinity();
  const Eigen::Index last = heights.size() - 1;
  const double lx = std::log(x);
  double v = stats.events(k) * lx - stats.exposure(k) * x;
  if (k == 0) {
    v += (prior.shape0 - 1.0) * lx - prior.rate0 * x;
  } else {
    v += (prior.alpha - 1.0) * lx - prior.alpha / heights(k - 1) * x;
  }
  if (k < last) v += -prior.alpha * lx - prior.alpha * heights(k + 1) / x;
  return v;
}

struct HazardUpdate {
  Eigen::VectorXd heights;
  std::vector<bool> accepted;
  std::vector<bool> fallback;
};

/// One sweep of single-bin Metropolis-Hastings updates (k = 0..K-1) under the
/// dependent gamma prior with gamma independence proposals.
inline HazardUpdate mh_step_dep_gamma(const Eigen::VectorXd& heights, const HazardStatistics& stats,
                                      const DepGammaPrior& prior, Rng& rng) {
  HazardUpdate out{heights, std::vector<bool>(static_cast<std::size_t>(heights.size()), false),
                   std::vector<bool>(static_cast<std::size_t>(heights.size()), false)};
  Eigen::VectorXd& h = out.heights;
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    const double current = h(k);
    const GammaParams q = dep_gamma_proposal(h, k, stats, prior);
    double candidate;
    double log_ratio;
    if (q.shape > 0.0) {
      candidate = rng.gamma(q.shape, q.rate);
      log_ratio = dep_gamma_log_conditional(h, k, candidate, stats, prior) -
                  dep_gamma_log_conditional(h, k, current, stats, prior) +
                  gamma_log_density(current, q.shape, q.rate) - gamma_log_density(candidate, q.shape, q.rate);
    } else {
      out.fallback[static_cast<std::size_t>(k)] = true;
      candidate = current * std::exp(prior.fallback_step * rng.normal());
      log_ratio = dep_gamma_log_conditional(h, k, candidate, stats, prior) -
                  dep_gamma_log_conditional(h, k, current, stats, prior) + std::log(candidate) - std::log(current);
    }
    if (candidate > 0.0 && std::isfinite(candidate) && metropolis_accept(log_ratio, rng)) {
      h(k) = candidate;
      out.accepted[static_cast<std::size_t>(k)] = true;
    }
  }
  return out;
}

/// sigma_l for each flattened Haar coefficient (scaling coefficient first, sigma = 1).
inline Eigen::VectorXd haar_scales(Eigen::Index bins, WaveletScale scale) {
  Eigen::VectorXd s(bins);
  for (Eigen::Index q = 0; q < bins; ++q) {
    const int l = haar_level_of(q);
    s(q) = (scale == WaveletScale::unit || l < 0) ? 1.0 : std::pow(2.0, -0.5 * l);
  }
  return s;
}

inline double wavelet_log_prior(double z, WaveletDensity density) {
  return density == WaveletDensity::gaussian ? -0.5 * z * z : -std::abs(z);
}

/// Log heights r_H from standardized coefficients Z.
inline Eigen::VectorXd log_heights_from_wavelet(const Eigen::VectorXd& z, const Eigen::VectorXd& scales) {
  return haar_inverse(HaarCoefficients::unflatten(z.cwiseProduct(scales)));
}

/// Standardized coefficients Z of given positive heights.
inline Eigen::VectorXd wavelet_from_heights(const Eigen::VectorXd& heights, const Eigen::VectorXd& scales) {
  const Eigen::VectorXd r = heights.array().log().matrix();
  return haar_forward(r).flatten().cwiseQuotient(scales);
}

struct WaveletUpdate {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd heights;
  std::vector<bool> accepted;
};

/// One sweep of Gaussian random-walk Metropolis over the coefficients Z_lk.
inline WaveletUpdate mh_step_haar(const Eigen::VectorXd& coefficients, const HazardStatistics& stats,
                                  const HaarWaveletPrior& prior, Rng& rng) {
  const Eigen::VectorXd scales = haar_scales(coefficients.size(), prior.scale);
  auto log_lik = [&](const Eigen::VectorXd& r) {
    return stats.events.dot(r) - stats.exposure.dot(r.array().exp().matrix());
  };
  WaveletUpdate out{coefficients, {}, std::vector<bool>(static_cast<std::size_t>(coefficients.size()), false)};
  Eigen::VectorXd r = log_heights_from_wavelet(out.coefficients, scales);
  double current_ll = log_lik(r);
  for (Eigen::Index q = 0; q < out.coefficients.size(); ++q) {
    const double old_z = out.coefficients(q);
    const double new_z = old_z + prior.step * rng.normal();
    out.coefficients(q) = new_z;
    const Eigen::VectorXd r_new = log_heights_from_wavelet(out.coefficients, scales);
    const double new_ll = log_lik(r_new);
    const double log_ratio =
        new_ll - current_ll + wavelet_log_prior(new_z, prior.density) - wavelet_log_prior(old_z, prior.density);
    if (metropolis_accept(log_ratio, rng)) {
      r = r_new;
      current_ll = new_ll;
      out.accepted[static_cast<std::size_t>(q)] = true;
    } else {
      out.coefficients(q) = old_z;
    }
  }
  out.heights = r.array().exp().matrix();
  return out;
}

// ---------------------------------------------------------------------------
// Regression kernel

/// theta-part of the log-likelihood given Lambda(Y_i): sum_i delta_i eta_i - Lambda(Y_i) e^{eta_i}.
inline double theta_log_likelihood(const SurvivalDataset& data, const Eigen::VectorXd& cumulative_at_times,
                                   const Eigen::VectorXd& eta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.event(i)) s += eta(i);
    s -= cumulative_at_times(i) * std::exp(eta(i));
  }
  return s;
}

/// In-place coordinate-wise random-walk Metropolis for theta.
///
/// Coordinate j proposes theta_j + step * N(0, 1) and is accepted on the
/// log-likelihood plus log-prior difference. `eta` (= Z theta) and `risk`
/// (= exp(eta)) are kept in sync with theta. Returns per-coordinate accept flags.
inline std::vector<bool> mh_update_theta(const SurvivalDataset& data, const Eigen::VectorXd& cumulative_at_times,
                                         const ThetaPrior& prior, double step, Eigen::VectorXd& theta,
                                         Eigen::VectorXd& eta, Eigen::VectorXd& risk, Rng& rng) {
  const Eigen::Index n = data.n();
  std::vector<bool> accepted(static_cast<std::size_t>(theta.size()), false);
  Eigen::VectorXd eta_new(n);
  Eigen::VectorXd risk_new(n);
  double current_ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) current_ll += (data.event(i) ? eta(i) : 0.0) - cumulative_at_times(i) * risk(i);
  double current_lp = prior.log_density(theta);
  const auto& z = data.covariates();
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double delta = step * rng.normal();
    const double old_value = theta(j);
    theta(j) = old_value + delta;
    const double new_lp = prior.log_density(theta);
    double new_ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      eta_new(i) = eta(i) + delta * z(i, j);
      risk_new(i) = std::exp(eta_new(i));
      new_ll += (data.event(i) ? eta_new(i) : 0.0) - cumulative_at_times(i) * risk_new(i);
    }
    if (metropolis_accept(new_ll - current_ll + new_lp - current_lp, rng)) {
      eta.swap(eta_new);
      risk.swap(risk_new);
      current_ll = new_ll;
      current_lp = new_lp;
      accepted[static_cast<std::size_t>(j)] = true;
    } else {
      theta(j) = old_value;
    }
  }
  return accepted;
}

struct ThetaUpdate {
  Eigen::VectorXd theta;
  std::vector<bool> accepted;
};

inline ThetaUpdate mh_step_theta(const SurvivalDataset& data, const Eigen::VectorXd& cumulative_at_times,
                                 const Eigen::VectorXd& theta, const ThetaPrior& prior, Rng& rng, double step = 1.0) {
  ThetaUpdate out{theta, {}};
  Eigen::VectorXd eta = data.covariates() * theta;
  Eigen::VectorXd risk = eta.array().exp().matrix();
  out.accepted = mh_update_theta(data, cumulative_at_times, prior, step, out.theta, eta, risk, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Chains

struct ChainConfig {
  int n_iter = 10000;
  int n_burn = 2000;
  int level = -1;     // histogram level L; -1 selects default_level(n, beta)
  double beta = 0.5;  // smoothness used by the automatic cut-off
  std::uint64_t seed = 1;
  double theta_step = 1.0;
  bool store_draws = true;
};

/// Retained draws after burn-in (rows are iterations) plus run metadata.
struct PosteriorChain {
  Eigen::MatrixXd theta_draws;   // (n_iter - n_burn) x p, empty when draws are not stored
  Eigen::MatrixXd height_draws;  // (n_iter - n_burn) x K
  Eigen::VectorXd last_theta;
  Eigen::VectorXd last_heights;
  int level = 0;
  int n_iter = 0;
  int n_burn = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd theta_acceptance;
  Eigen::VectorXd hazard_acceptance;
  int fallback_proposals = 0;
  bool init_fallback = false;

  Eigen::Index retained() const { return n_iter - n_burn; }
  Eigen::Index bins() const { return last_heights.size(); }
  HistogramHazard hazard(Eigen::Index m) const { return HistogramHazard(level, height_draws.row(m).transpose()); }
};

/// Starting point: partial-likelihood MLE and Breslow increments per bin
/// (floored at 1e-3); theta = 0, heights = 1 when the data are degenerate.
struct ChainStart {
  Eigen::VectorXd theta;
  Eigen::VectorXd heights;
  bool fallback = false;
};

inline ChainStart initial_state(const SurvivalDataset& data, int level) {
  const Eigen::Index bins = HistogramHazard::bin_count(level);
  ChainStart s{Eigen::VectorXd::Zero(data.p()), Eigen::VectorXd::Ones(bins), true};
  std::optional<CoxFrequentistFit> fit;
  try {
    fit = fit_partial_likelihood(data);
  } catch (const DegenerateDataError&) {
    return s;
  }
  if (fit->degenerate) return s;
  s.fallback = false;
  s.theta = fit->theta_hat;
  const double w = 1.0 / static_cast<double>(bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    const double left = static_cast<double>(k) * w;
    const double inc = fit->breslow(left + w) - (k == 0 ? 0.0 : fit->breslow(left));
    s.heights(k) = std::max(inc / w, 1e-3);
  }
  return s;
}

/// Histogram level whose bin count 2^{L+1} equals 2^{L_n}, L_n = cutoff(n, beta).
inline int default_level(double n, double beta) { return std::max(cutoff(std::max(2.0, n), beta) - 1, 0); }

inline int resolve_level(const SurvivalDataset& data, const ChainConfig& config) {
  if (config.level >= 0) return config.level;
  return default_level(static_cast<double>(data.n()), config.beta);
}

/// Metropolis-within-Gibbs chain alternating a hazard sweep and a theta sweep.
inline PosteriorChain run_chain(const SurvivalDataset& data, const PriorSpec& prior, const ChainConfig& config) {
  if (data.empty()) throw PreconditionError("run_chain: dataset is empty");
  if (config.n_burn < 0 || config.n_burn >= config.n_iter) throw PreconditionError("run_chain: need 0 <= n_burn < n_iter");
  prior.validate();
  const int level = resolve_level(data, config);
  const ExposureSummary summary(data, level);
  const Eigen::Index bins = summary.bins();
  const Eigen::Index p = data.p();

  const ChainStart start = initial_state(data, level);
  PosteriorChain chain;
  chain.level = level;
  chain.n_iter = config.n_iter;
  chain.n_burn = config.n_burn;
  chain.seed = config.seed;
  chain.init_fallback = start.fallback;
  if (config.store_draws) {
    chain.theta_draws.resize(chain.retained(), p);
    chain.height_draws.resize(chain.retained(), bins);
  }
  Eigen::VectorXd theta_accepts = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd hazard_accepts = Eigen::VectorXd::Zero(bins);

  Rng rng(config.seed);
  Eigen::VectorXd theta = start.theta;
  Eigen::VectorXd heights = start.heights;
  Eigen::VectorXd eta = data.covariates() * theta;
  Eigen::VectorXd risk = eta.array().exp().matrix();

  const auto* haar = std::get_if<HaarWaveletPrior>(&prior.hazard);
  Eigen::VectorXd scales;
  Eigen::VectorXd coefficients;
  if (haar) {
    scales = haar_scales(bins, haar->scale);
    coefficients = wavelet_from_heights(heights, scales);
  }

  for (int it = 0; it < config.n_iter; ++it) {
    const HazardStatistics stats = hazard_statistics(summary, risk);
    if (const auto* ig = std::get_if<IndepGammaPrior>(&prior.hazard)) {
      heights = gibbs_step_indep_gamma(stats, *ig, rng);
      hazard_accepts.array() += 1.0;
    } else if (const auto* dg = std::get_if<DepGammaPrior>(&prior.hazard)) {
      HazardUpdate up = mh_step_dep_gamma(heights, stats, *dg, rng);
      heights = std::move(up.heights);
      for (Eigen::Index k = 0; k < bins; ++k) {
        hazard_accepts(k) += up.accepted[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
        chain.fallback_proposals += up.fallback[static_cast<std::size_t>(k)] ? 1 : 0;
      }
    } else {
      WaveletUpdate up = mh_step_haar(coefficients, stats, *haar, rng);
      coefficients = std::move(up.coefficients);
      heights = std::move(up.heights);
      for (Eigen::Index k = 0; k < bins; ++k) hazard_accepts(k) += up.accepted[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
    }

    const Eigen::VectorXd cum = summary.cumulative_at_times(heights);
    const auto acc = mh_update_theta(data, cum, prior.theta, config.theta_step, theta, eta, risk, rng);
    for (Eigen::Index j = 0; j < p; ++j) theta_accepts(j) += acc[static_cast<std::size_t>(j)] ? 1.0 : 0.0;

    if (it >= config.n_burn && config.store_draws) {
      const Eigen::Index row = it - config.n_burn;
      chain.theta_draws.row(row) = theta.transpose();
      chain.height_draws.row(row) = heights.transpose();
    }
  }
  chain.last_theta = theta;
  chain.last_heights = heights;
  chain.theta_acceptance = theta_accepts / static_cast<double>(config.n_iter);
  chain.hazard_acceptance = hazard_accepts / static_cast<double>(config.n_iter);
  return chain;
}

struct LastDraw {
  std::size_t chain = 0;
  Eigen::VectorXd theta;
  double cumulative_at_one = 0.0;  // Lambda(1) = sum_k lambda_k w
};

struct HarvestResult {
  std::vector<LastDraw> draws;
  std::vector<std::string> errors;  // "chain <i>: <message>" for each failed chain
};

/// Final draw of (theta, Lambda(1)) from `n_chains` independent chains on the
/// same data; chain c runs with seed derive_seed(master_seed, c). Chains that
/// fail are reported and dropped; more than 1% failures is an error.
inline HarvestResult harvest_last_draws(const SurvivalDataset& data, const PriorSpec& prior, ChainConfig config,
                                        std::size_t n_chains, std::uint64_t master_seed) {
  if (n_chains < 1) throw PreconditionError("harvest_last_draws: need at least one chain");
  config.store_draws = false;
  auto results = parallel_map(n_chains, [&](std::size_t c) {
    ChainConfig cfg = config;
    cfg.seed = derive_seed(master_seed, c);
    const PosteriorChain chain = run_chain(data, prior, cfg);
    const double w = 1.0 / static_cast<double>(chain.bins());
    return LastDraw{c, chain.last_theta, chain.last_heights.sum() * w};
  });
  HarvestResult out;
  for (std::size_t c = 0; c < results.size(); ++c) {
    if (results[c].ok()) {
      out.draws.push_back(std::move(*results[c].value));
    } else {
      out.errors.push_back("chain " + std::to_string(c) + ": " + results[c].error);
    }
  }
  if (static_cast<double>(out.errors.size()) > 0.01 * static_cast<double>(n_chains))
    throw std::runtime_error("harvest_last_draws: too many failed chains (" + std::to_string(out.errors.size()) +
                             "), first: " + out.errors.front());
  return out;
}

}  // namespace coxscale
