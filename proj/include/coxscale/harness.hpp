#pragma once

// Experiment drivers: the joint (theta, Lambda(1)) study, the band coverage
// study, the sup-norm rate scan and the limiting-covariance check, with a
// JSON configuration of sections {data, prior, sampler, bands, study}.

#include <Eigen/Core>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "coxscale/asymptotics.hpp"
#include "coxscale/bands.hpp"
#include "coxscale/core_model.hpp"
#include "coxscale/csv_io.hpp"
#include "coxscale/frequentist.hpp"
#include "coxscale/mcmc.hpp"
#include "coxscale/multiscale.hpp"
#include "coxscale/parallel.hpp"
#include "coxscale/rng.hpp"
#include "coxscale/simulate.hpp"

namespace coxscale {

using json = nlohmann::json;

/// Regression vector used for five-dimensional designs; other dimensions
/// reuse its first entries (or -0.5 when p = 1).
inline Eigen::VectorXd default_theta0(Eigen::Index p) {
  if (p == 1) return Eigen::VectorXd::Constant(1, -0.5);
  const double pattern[] = {0.3, -0.3, 0.2, -0.2, 0.1};
  Eigen::VectorXd t = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p, 5); ++j) t(j) = pattern[j];
  return t;
}

struct DataConfig {
  Eigen::Index n = 1000;
  std::string truth = "smooth-a";
  Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(1, -0.5);
  CensoringMode censoring = CensoringMode::admin_only;
  std::uint64_t seed = 1;

  TruthSpec truth_spec() const { return {theta0, BaselineHazard::from_name(truth), censoring}; }
};

struct BandsConfig {
  double level = 0.95;
  Eigen::Index grid_points = 257;
  int replicates = 1000;  // multiplier draws B
  BandScaling scaling = BandScaling::constant;
  Eigen::VectorXd z;  // conditional covariate; empty selects e_1

  Eigen::VectorXd grid() const { return uniform_grid(grid_points); }
  Eigen::VectorXd conditional_z(Eigen::Index p) const {
    if (z.size() == 0) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
      if (p > 0) e(0) = 1.0;
      return e;
    }
    if (z.size() != p) throw PreconditionError("bands.z must have dimension p");
    return z;
  }
};

struct StudyConfig {
  std::size_t n_chains = 500;
  int replicates = 200;
  std::vector<Eigen::Index> n_list{200};
  std::vector<std::string> methods{"ind", "dep", "freq"};
  std::vector<CensoringMode> censoring{CensoringMode::admin_only, CensoringMode::admin_plus_uniform};
  std::uint64_t seed = 20240501;
  double rate_beta = 1.0;
  int rate_replicates = 30;
  int histogram_bins = 30;
};

struct HarnessConfig {
  DataConfig data;
  std::string hazard_prior = "indep";
  PriorSpec prior;
  ChainConfig sampler;
  BandsConfig bands;
  StudyConfig study;
};

inline std::string to_string(BandScaling s) { return s == BandScaling::constant ? "constant" : "standardized"; }
inline BandScaling parse_scaling(const std::string& s) {
  if (s == "constant") return BandScaling::constant;
  if (s == "standardized") return BandScaling::standardized;
  throw PreconditionError("unknown band scaling: " + s);
}

inline ThetaPriorKind parse_theta_prior(const std::string& s) {
  if (s == "std-normal") return ThetaPriorKind::std_normal;
  if (s == "uniform") return ThetaPriorKind::uniform;
  if (s == "truncated-subbotin") return ThetaPriorKind::truncated_subbotin;
  throw PreconditionError("unknown theta prior: " + s);
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Builds a config from a JSON document; missing keys keep their defaults.
inline HarnessConfig config_from_json(const json& doc) {
  HarnessConfig c;
  const json empty = json::object();
  const json& d = doc.contains("data") ? doc["data"] : empty;
  c.data.n = d.value("n", c.data.n);
  c.data.truth = d.value("truth", c.data.truth);
  if (d.contains("theta0")) {
    c.data.theta0 = vector_from_json(d["theta0"]);
  } else if (d.contains("p")) {
    c.data.theta0 = default_theta0(d["p"].get<Eigen::Index>());
  }
  if (d.contains("p") && d["p"].get<Eigen::Index>() != c.data.theta0.size())
    throw PreconditionError("data.p does not match the length of data.theta0");
  if (d.contains("censoring")) c.data.censoring = parse_censoring(d["censoring"].get<std::string>());
  c.data.seed = d.value("seed", c.data.seed);

  const json& pr = doc.contains("prior") ? doc["prior"] : empty;
  c.hazard_prior = pr.value("hazard", c.hazard_prior);
  c.prior = make_prior(c.hazard_prior);
  if (auto* ig = std::get_if<IndepGammaPrior>(&c.prior.hazard)) {
    ig->shape = pr.value("alpha", ig->shape);
    ig->rate = pr.value("beta", ig->rate);
  } else if (auto* dg = std::get_if<DepGammaPrior>(&c.prior.hazard)) {
    dg->shape0 = pr.value("alpha0", dg->shape0);
    dg->rate0 = pr.value("beta0", dg->rate0);
    dg->alpha = pr.value("alpha", dg->alpha);
    dg->epsilon = pr.value("epsilon", dg->epsilon);
    const std::string last = pr.value("last_bin_rate", std::string("product"));
    if (last == "product") {
      dg->last_bin = LastBinRate::product;
    } else if (last == "reciprocal") {
      dg->last_bin = LastBinRate::reciprocal;
    } else {
      throw PreconditionError("prior.last_bin_rate must be product or reciprocal");
    }
  } else if (auto* hw = std::get_if<HaarWaveletPrior>(&c.prior.hazard)) {
    const std::string dens = pr.value("density", std::string("gaussian"));
    if (dens != "gaussian" && dens != "laplace") throw PreconditionError("prior.density must be gaussian or laplace");
    hw->density = dens == "gaussian" ? WaveletDensity::gaussian : WaveletDensity::laplace;
    const std::string scale = pr.value("sigma", std::string("unit"));
    if (scale != "unit" && scale != "decaying") throw PreconditionError("prior.sigma must be unit or decaying");
    hw->scale = scale == "unit" ? WaveletScale::unit : WaveletScale::decaying;
    hw->step = pr.value("step", hw->step);
  }
  c.prior.theta.kind = parse_theta_prior(pr.value("theta", std::string("std-normal")));
  c.prior.theta.bound = pr.value("C", c.prior.theta.bound);
  c.prior.theta.tau = pr.value("tau", c.prior.theta.tau);
  c.prior.validate();

  const json& s = doc.contains("sampler") ? doc["sampler"] : empty;
  c.sampler.n_iter = s.value("iters", c.sampler.n_iter);
  c.sampler.n_burn = s.value("burn", c.sampler.n_burn);
  c.sampler.level = s.value("level", c.sampler.level);
  c.sampler.beta = s.value("beta", c.sampler.beta);
  c.sampler.theta_step = s.value("theta_step", c.sampler.theta_step);
  c.sampler.seed = s.value("seed", c.sampler.seed);

  const json& b = doc.contains("bands") ? doc["bands"] : empty;
  c.bands.level = b.value("level", c.bands.level);
  c.bands.grid_points = b.value("grid_points", c.bands.grid_points);
  c.bands.replicates = b.value("B", c.bands.replicates);
  if (b.contains("scaling")) c.bands.scaling = parse_scaling(b["scaling"].get<std::string>());
  if (b.contains("z")) c.bands.z = vector_from_json(b["z"]);

  const json& st = doc.contains("study") ? doc["study"] : empty;
  c.study.n_chains = st.value("n_chains", c.study.n_chains);
  c.study.replicates = st.value("replicates", c.study.replicates);
  if (st.contains("n_list")) c.study.n_list = st["n_list"].get<std::vector<Eigen::Index>>();
  if (st.contains("methods")) c.study.methods = st["methods"].get<std::vector<std::string>>();
  if (st.contains("censoring")) {
    c.study.censoring.clear();
    for (const auto& m : st["censoring"]) c.study.censoring.push_back(parse_censoring(m.get<std::string>()));
  }
  c.study.seed = st.value("seed", c.study.seed);
  c.study.rate_beta = st.value("rate_beta", c.study.rate_beta);
  c.study.rate_replicates = st.value("rate_replicates", c.study.rate_replicates);
  c.study.histogram_bins = st.value("histogram_bins", c.study.histogram_bins);
  return c;
}

inline json config_to_json(const HarnessConfig& c) {
  json j;
  j["data"] = {{"n", c.data.n},
               {"truth", c.data.truth},
               {"theta0", to_std(c.data.theta0)},
               {"p", c.data.theta0.size()},
               {"censoring", to_string(c.data.censoring)},
               {"seed", c.data.seed}};
  j["prior"] = {{"hazard", c.hazard_prior}};
  j["sampler"] = {{"iters", c.sampler.n_iter},  {"burn", c.sampler.n_burn},
                  {"level", c.sampler.level},   {"beta", c.sampler.beta},
                  {"theta_step", c.sampler.theta_step}, {"seed", c.sampler.seed}};
  j["bands"] = {{"level", c.bands.level},
                {"grid_points", c.bands.grid_points},
                {"B", c.bands.replicates},
                {"scaling", to_string(c.bands.scaling)}};
  if (c.bands.z.size() > 0) j["bands"]["z"] = to_std(c.bands.z);
  std::vector<std::string> cens;
  for (auto m : c.study.censoring) cens.push_back(to_string(m));
  j["study"] = {{"n_chains", c.study.n_chains}, {"replicates", c.study.replicates},
                {"n_list", c.study.n_list},     {"methods", c.study.methods},
                {"censoring", cens},            {"seed", c.study.seed},
                {"rate_beta", c.study.rate_beta}, {"rate_replicates", c.study.rate_replicates}};
  return j;
}

// ---------------------------------------------------------------------------
// Joint (theta_1, Lambda(1)) summaries

struct Moments2 {
  Eigen::Vector2d mean;
  Eigen::Matrix2d covariance;
  double sd(int j) const { return std::sqrt(covariance(j, j)); }
  double correlation() const { return covariance(0, 1) / std::sqrt(covariance(0, 0) * covariance(1, 1)); }
};

inline Moments2 pair_moments(const Eigen::MatrixX2d& pairs) {
  if (pairs.rows() < 2) throw PreconditionError("pair moments: need at least two pairs");
  Moments2 m;
  m.mean = pairs.colwise().mean().transpose();
  const Eigen::MatrixX2d c = pairs.rowwise() - m.mean.transpose();
  m.covariance = c.transpose() * c / static_cast<double>(pairs.rows() - 1);
  return m;
}

inline Eigen::MatrixX2d pairs_matrix(const std::vector<LastDraw>& draws) {
  Eigen::MatrixX2d m(static_cast<Eigen::Index>(draws.size()), 2);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = draws[i].theta(0);
    m(static_cast<Eigen::Index>(i), 1) = draws[i].cumulative_at_one;
  }
  return m;
}

inline json histogram_json(const Eigen::VectorXd& v, int bins) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b <= bins; ++b) edges[static_cast<std::size_t>(b)] = lo + b * width;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const int b = std::clamp(static_cast<int>((v(i) - lo) / width), 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::vector<double> density(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b)
    density[b] = counts[b] / (static_cast<double>(v.size()) * width);
  return {{"edges", edges}, {"counts", counts}, {"density", density}};
}

inline json ellipse_json(const Ellipse& e) {
  return {{"center", {e.center(0), e.center(1)}},
          {"covariance", {{e.covariance(0, 0), e.covariance(0, 1)}, {e.covariance(1, 0), e.covariance(1, 1)}}},
          {"chi2", e.chi2},
          {"semi_axes", {e.semi_axes(0), e.semi_axes(1)}},
          {"angle", e.angle},
          {"area", e.area}};
}

/// Limiting covariance of (theta_1, Lambda(1)) scaled to sample size n.
struct TheoreticalBvm {
  Eigen::Matrix2d covariance;  // per-n, i.e. bvm_covariance / n
  double lambda0_at_one = 0.0;
};

inline TheoreticalBvm theoretical_bvm(const TruthSpec& truth, Eigen::Index n) {
  const AsymptoticTables tables = compute_tables(truth);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(truth.p());
  a(0) = 1.0;
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(tables.u_grid.size());
  return {bvm_covariance(tables, a, b) / static_cast<double>(n), truth.baseline.cumulative(1.0)};
}

/// Theoretical and (when pairs are given) empirical summaries of the joint law.
inline json bvm_report(const TruthSpec& truth, Eigen::Index n, const Eigen::MatrixX2d* pairs, double level,
                       const Eigen::Vector2d& center) {
  const TheoreticalBvm th = theoretical_bvm(truth, n);
  json j;
  j["n"] = n;
  j["truth"] = {{"theta1", truth.theta0(0)}, {"Lambda1", th.lambda0_at_one}};
  j["theoretical"] = {{"sd_theta", std::sqrt(th.covariance(0, 0))},
                      {"sd_Lambda", std::sqrt(th.covariance(1, 1))},
                      {"correlation", th.covariance(0, 1) / std::sqrt(th.covariance(0, 0) * th.covariance(1, 1))},
                      {"ellipse", ellipse_json(make_ellipse(center, th.covariance, level))}};
  if (pairs != nullptr) {
    const Moments2 m = pair_moments(*pairs);
    const JointRegions r = joint_credible_regions(*pairs, level);
    auto interval = [&](int col) {
      std::vector<double> v(pairs->col(col).data(), pairs->col(col).data() + pairs->rows());
      std::vector<double> neg(v.size());
      std::transform(v.begin(), v.end(), neg.begin(), [](double x) { return -x; });
      const double tail = (1.0 - level) / 2.0;
      return std::vector<double>{-order_statistic_quantile(neg, 1.0 - tail), order_statistic_quantile(v, 1.0 - tail)};
    };
    j["empirical"] = {{"count", pairs->rows()},
                      {"mean", {m.mean(0), m.mean(1)}},
                      {"sd_theta", m.sd(0)},
                      {"sd_Lambda", m.sd(1)},
                      {"correlation", m.correlation()},
                      {"interval_theta", interval(0)},
                      {"interval_Lambda", interval(1)},
                      {"ellipse", ellipse_json(r.ellipse)},
                      {"rectangle",
                       {{"lower", {r.rectangle.lower(0), r.rectangle.lower(1)}},
                        {"upper", {r.rectangle.upper(0), r.rectangle.upper(1)}},
                        {"area", r.rectangle.area}}}};
    j["sd_ratio"] = {{"theta", m.sd(0) / std::sqrt(th.covariance(0, 0))},
                     {"Lambda", m.sd(1) / std::sqrt(th.covariance(1, 1))}};
  }
  return j;
}

struct Study1Result {
  json report;
  std::vector<LastDraw> draws;
};

/// One dataset, many independent chains, last draw of each.
inline Study1Result study1(const HarnessConfig& cfg) {
  const TruthSpec truth = cfg.data.truth_spec();
  const SurvivalDataset data = generate_dataset(cfg.data.n, truth, cfg.data.seed);
  HarvestResult harvest = harvest_last_draws(data, cfg.prior, cfg.sampler, cfg.study.n_chains, cfg.study.seed);
  const Eigen::MatrixX2d pairs = pairs_matrix(harvest.draws);

  Eigen::Vector2d center = pairs.colwise().mean().transpose();
  double theta_hat = std::nan("");
  double breslow_one = std::nan("");
  try {
    const CoxFrequentistFit fit = fit_partial_likelihood(data);
    theta_hat = fit.theta_hat(0);
    breslow_one = fit.breslow(1.0);
    center = Eigen::Vector2d(theta_hat, breslow_one);
  } catch (const std::exception&) {
  }

  Study1Result out;
  const bool enough = pairs.rows() >= 100;
  out.report = bvm_report(truth, cfg.data.n, enough ? &pairs : nullptr, cfg.bands.level, center);
  out.report["config"] = config_to_json(cfg);
  out.report["chains"] = cfg.study.n_chains;
  out.report["failures"] = harvest.errors;
  out.report["estimates"] = {{"theta_hat", theta_hat}, {"breslow_Lambda1", breslow_one}};
  out.report["histograms"] = {{"theta", histogram_json(pairs.col(0), cfg.study.histogram_bins)},
                              {"Lambda", histogram_json(pairs.col(1), cfg.study.histogram_bins)}};
  json cloud = json::array();
  for (const auto& d : harvest.draws) cloud.push_back({d.chain, d.theta(0), d.cumulative_at_one});
  out.report["cloud"] = cloud;
  out.draws = std::move(harvest.draws);
  return out;
}

// ---------------------------------------------------------------------------
// Band coverage study

struct CoverageRow {
  std::string method;
  Eigen::Index n = 0;
  CensoringMode censoring = CensoringMode::admin_only;
  std::string target;  // baseline | conditional
  double coverage = 0.0;
  double area = 0.0;
  double area_unclipped = 0.0;
  int replicates = 0;
  int failures = 0;
};

inline void write_coverage_csv(std::ostream& out, const std::vector<CoverageRow>& rows) {
  out << "method,n,censoring,target,coverage,area,area_unclipped,replicates,failures\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.n << ',' << to_string(r.censoring) << ',' << r.target << ','
        << io::format_double(r.coverage) << ',' << io::format_double(r.area) << ','
        << io::format_double(r.area_unclipped) << ',' << r.replicates << ',' << r.failures << '\n';
}

namespace detail {

struct BandOutcome {
  bool ok = false;
  bool covered = false;
  double area = 0.0;
  double area_unclipped = 0.0;
  std::string error;
};

// outcomes[method][target]
using ReplicateOutcome = std::vector<std::array<BandOutcome, 2>>;

inline PriorSpec study_prior(const std::string& method, const PriorSpec& base) {
  PriorSpec p = base;
  if (method == "ind") {
    if (!std::holds_alternative<IndepGammaPrior>(p.hazard)) p.hazard = IndepGammaPrior{};
  } else if (method == "dep") {
    if (!std::holds_alternative<DepGammaPrior>(p.hazard)) p.hazard = DepGammaPrior{};
  } else if (method == "haar") {
    if (!std::holds_alternative<HaarWaveletPrior>(p.hazard)) p.hazard = HaarWaveletPrior{};
  } else {
    throw PreconditionError("unknown study method: " + method);
  }
  return p;
}

}  // namespace detail

/// Coverage and mean area of survival bands, for the baseline (z = 0) and
/// conditional (z = bands.z) curves, per method x n x censoring regime.
/// Failed replicates are excluded; more than 1% failures is an error.
inline std::vector<CoverageRow> study2(const HarnessConfig& cfg) {
  if (cfg.study.replicates < 1) throw PreconditionError("study2: need at least one replicate");
  const Eigen::VectorXd grid = cfg.bands.grid();
  const Eigen::Index p = cfg.data.theta0.size();
  const std::array<Eigen::VectorXd, 2> zs{Eigen::VectorXd::Zero(p), cfg.bands.conditional_z(p)};
  const std::array<std::string, 2> target_names{"baseline", "conditional"};
  for (const auto& m : cfg.study.methods)
    if (m != "freq") (void)detail::study_prior(m, cfg.prior);

  std::vector<CoverageRow> rows;
  for (std::size_t ci = 0; ci < cfg.study.censoring.size(); ++ci) {
    TruthSpec truth = cfg.data.truth_spec();
    truth.censoring = cfg.study.censoring[ci];
    std::array<Eigen::VectorXd, 2> truths{true_curve(truth, zs[0], CurveTarget::survival, grid),
                                          true_curve(truth, zs[1], CurveTarget::survival, grid)};
    for (const Eigen::Index n : cfg.study.n_list) {
      const std::uint64_t block_seed =
          derive_seed(derive_seed(cfg.study.seed, static_cast<std::uint64_t>(truth.censoring)), static_cast<std::uint64_t>(n));
      auto results = parallel_map(static_cast<std::size_t>(cfg.study.replicates), [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(block_seed, r);
        const SurvivalDataset data = generate_dataset(n, truth, rep_seed);
        detail::ReplicateOutcome out(cfg.study.methods.size());
        for (std::size_t mi = 0; mi < cfg.study.methods.size(); ++mi) {
          const std::string& method = cfg.study.methods[mi];
          try {
            if (method == "freq") {
              const CoxFrequentistFit fit = fit_partial_likelihood(data);
              for (int t = 0; t < 2; ++t) {
                MultiplierBandOptions opts;
                opts.level = cfg.bands.level;
                opts.replicates = cfg.bands.replicates;
                opts.grid = grid;
                opts.scaling = cfg.bands.scaling;
                opts.seed = derive_seed(rep_seed, 100 + static_cast<std::uint64_t>(t));
                const MultiplierBand mb = multiplier_band(data, fit, zs[static_cast<std::size_t>(t)], opts);
                auto& o = out[mi][static_cast<std::size_t>(t)];
                o.covered = covers(mb.band, truths[static_cast<std::size_t>(t)], grid);
                o.area = area(mb.band);
                o.area_unclipped = 2.0 * trapezoid(grid, mb.half_width);
                o.ok = true;
              }
            } else {
              ChainConfig cc = cfg.sampler;
              cc.seed = derive_seed(rep_seed, 1 + mi);
              cc.store_draws = true;
              const PosteriorChain chain = run_chain(data, detail::study_prior(method, cfg.prior), cc);
              for (int t = 0; t < 2; ++t) {
                const Eigen::MatrixXd curves =
                    chain_curves(chain, zs[static_cast<std::size_t>(t)], CurveTarget::survival, grid);
                const CredibleBand cb = fixed_width_credible_band(curves, cfg.bands.level, grid);
                auto& o = out[mi][static_cast<std::size_t>(t)];
                o.covered = covers(cb.band, truths[static_cast<std::size_t>(t)], grid);
                o.area = cb.area;
                o.area_unclipped = cb.area_unclipped;
                o.ok = true;
              }
            }
          } catch (const std::exception& e) {
            for (auto& o : out[mi]) {
              o.ok = false;
              o.error = e.what();
            }
          }
        }
        return out;
      });

      for (std::size_t mi = 0; mi < cfg.study.methods.size(); ++mi) {
        for (std::size_t t = 0; t < 2; ++t) {
          CoverageRow row{cfg.study.methods[mi], n, truth.censoring, target_names[t]};
          int ok = 0;
          std::string first_error;
          for (const auto& res : results) {
            if (!res.ok()) {
              ++row.failures;
              if (first_error.empty()) first_error = res.error;
              continue;
            }
            const auto& o = (*res.value)[mi][t];
            if (!o.ok) {
              ++row.failures;
              if (first_error.empty()) first_error = o.error;
              continue;
            }
            ++ok;
            row.coverage += o.covered ? 1.0 : 0.0;
            row.area += o.area;
            row.area_unclipped += o.area_unclipped;
          }
          if (static_cast<double>(row.failures) > 0.01 * cfg.study.replicates)
            throw std::runtime_error("study2: " + row.method + " n=" + std::to_string(n) + " failed in " +
                                     std::to_string(row.failures) + " replicates: " + first_error);
          row.replicates = ok;
          if (ok > 0) {
            row.coverage /= ok;
            row.area /= ok;
            row.area_unclipped /= ok;
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sup-norm rate scan

struct RateRow {
  Eigen::Index n = 0;
  int level = 0;
  double median_error = 0.0;
  double nu = 0.0;  // (log n / n)^{beta / (2 beta + 1)}
  double ratio = 0.0;
  int replicates = 0;
  int failures = 0;
};

inline void write_rate_csv(std::ostream& out, const std::vector<RateRow>& rows) {
  out << "n,level,median_error,nu_n,ratio,replicates,failures\n";
  for (const auto& r : rows)
    out << r.n << ',' << r.level << ',' << io::format_double(r.median_error) << ',' << io::format_double(r.nu) << ','
        << io::format_double(r.ratio) << ',' << r.replicates << ',' << r.failures << '\n';
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw PreconditionError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

/// For each n: median over replicates of sup_t |lambda_bar(t) e^{theta_bar'z} - lambda_0(t) e^{theta0'z}|
/// where (theta_bar, lambda_bar) is the posterior mean. The histogram level is
/// default_level(n, rate_beta).
inline std::vector<RateRow> rate_diagnostic(const HarnessConfig& cfg) {
  const auto& ns = cfg.study.n_list;
  if (ns.empty()) throw PreconditionError("rate_diagnostic: n_list is empty");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw PreconditionError("rate_diagnostic: n_list must be strictly increasing");
  const TruthSpec truth = cfg.data.truth_spec();
  const Eigen::VectorXd z = cfg.bands.conditional_z(truth.p());
  const Eigen::VectorXd grid = uniform_grid(1025);
  const double beta = cfg.study.rate_beta;

  std::vector<RateRow> rows;
  for (const Eigen::Index n : ns) {
    const std::uint64_t block_seed = derive_seed(cfg.study.seed, static_cast<std::uint64_t>(n));
    ChainConfig cc = cfg.sampler;
    cc.beta = beta;
    cc.level = default_level(static_cast<double>(n), beta);
    auto results = parallel_map(static_cast<std::size_t>(cfg.study.rate_replicates), [&](std::size_t r) {
      const std::uint64_t rep_seed = derive_seed(block_seed, r);
      const SurvivalDataset data = generate_dataset(n, truth, rep_seed);
      ChainConfig local = cc;
      local.seed = derive_seed(rep_seed, 1);
      const PosteriorChain chain = run_chain(data, cfg.prior, local);
      const Eigen::VectorXd theta_bar = chain.theta_draws.colwise().mean().transpose();
      const Eigen::VectorXd height_bar = chain.height_draws.colwise().mean().transpose();
      return sup_norm_distance(HistogramHazard(chain.level, height_bar), theta_bar, truth, z, grid);
    });
    RateRow row;
    row.n = n;
    row.level = cc.level;
    std::vector<double> errors;
    for (const auto& res : results) {
      if (res.ok()) {
        errors.push_back(*res.value);
      } else {
        ++row.failures;
      }
    }
    row.replicates = static_cast<int>(errors.size());
    row.median_error = median(errors);
    const double nd = static_cast<double>(n);
    row.nu = std::pow(std::log(nd) / nd, beta / (2.0 * beta + 1.0));
    row.ratio = row.median_error / row.nu;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace coxscale
