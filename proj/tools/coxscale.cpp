// Command-line front end. Every flag maps onto a path of the JSON config
// ({data, prior, sampler, bands, study}); flags override values read from
// --config.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coxscale/bands.hpp"
#include "coxscale/csv_io.hpp"
#include "coxscale/frequentist.hpp"
#include "coxscale/harness.hpp"
#include "coxscale/mcmc.hpp"
#include "coxscale/simulate.hpp"

namespace {

using coxscale::json;

enum class Kind { integer, real, text, reals, integers, texts };

struct Binding {
  std::string path;  // "section/key"
  Kind kind;
  std::vector<std::string> raw;
  CLI::Option* option = nullptr;
};

class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config file");
  }

  void bind(const std::string& flag, const std::string& path, Kind kind, const std::string& help) {
    auto b = std::make_unique<Binding>(Binding{path, kind, {}, nullptr});
    const bool many = kind == Kind::reals || kind == Kind::integers || kind == Kind::texts;
    b->option = app_->add_option(flag, b->raw, help);
    if (many) {
      b->option->expected(1, -1)->delimiter(',');
    } else {
      b->option->expected(1);
    }
    bindings_.push_back(std::move(b));
  }

  /// Config file contents with every given flag written over it.
  json document() const {
    json doc = json::object();
    if (!config_path_.empty()) {
      std::ifstream f(config_path_);
      if (!f) throw std::runtime_error("cannot open config " + config_path_);
      doc = json::parse(f);
    }
    for (const auto& b : bindings_) {
      if (b->option->count() == 0) continue;
      const auto slash = b->path.find('/');
      json& target = doc[b->path.substr(0, slash)][b->path.substr(slash + 1)];
      switch (b->kind) {
        case Kind::integer:
          target = std::stoll(b->raw.front());
          break;
        case Kind::real:
          target = std::stod(b->raw.front());
          break;
        case Kind::text:
          target = b->raw.front();
          break;
        case Kind::reals: {
          std::vector<double> v;
          for (const auto& s : b->raw) v.push_back(std::stod(s));
          target = v;
          break;
        }
        case Kind::integers: {
          std::vector<long long> v;
          for (const auto& s : b->raw) v.push_back(std::stoll(s));
          target = v;
          break;
        }
        case Kind::texts:
          target = b->raw;
          break;
      }
    }
    return doc;
  }

  coxscale::HarnessConfig config() const { return coxscale::config_from_json(document()); }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::vector<std::unique_ptr<Binding>> bindings_;
};

void bind_data(Flags& f, const std::string& seed_flag = "--data-seed") {
  f.bind("--n", "data/n", Kind::integer, "sample size");
  f.bind("--truth", "data/truth", Kind::text, "baseline hazard: smooth-a | smooth-b | piecewise");
  f.bind("--theta0", "data/theta0", Kind::reals, "true regression vector");
  f.bind("--p", "data/p", Kind::integer, "covariate dimension");
  f.bind("--censoring", "data/censoring", Kind::text, "admin | admin-unif");
  f.bind(seed_flag, "data/seed", Kind::integer, "dataset seed");
}

void bind_prior(Flags& f) {
  f.bind("--prior", "prior/hazard", Kind::text, "hazard prior: indep | dep | haar");
  f.bind("--theta-prior", "prior/theta", Kind::text, "std-normal | uniform | truncated-subbotin");
  f.bind("--last-bin-rate", "prior/last_bin_rate", Kind::text, "product | reciprocal");
  f.bind("--wavelet-density", "prior/density", Kind::text, "gaussian | laplace");
  f.bind("--wavelet-sigma", "prior/sigma", Kind::text, "unit | decaying");
}

void bind_sampler(Flags& f) {
  f.bind("--iters", "sampler/iters", Kind::integer, "MCMC iterations");
  f.bind("--burn", "sampler/burn", Kind::integer, "burn-in iterations");
  f.bind("--level", "sampler/level", Kind::integer, "histogram level L (-1: cut-off rule)");
  f.bind("--beta", "sampler/beta", Kind::real, "smoothness for the cut-off rule");
}

void bind_bands(Flags& f) {
  f.bind("--band-level", "bands/level", Kind::real, "nominal band level");
  f.bind("--grid-points", "bands/grid_points", Kind::integer, "evaluation grid size");
  f.bind("--B", "bands/B", Kind::integer, "multiplier replicates");
  f.bind("--scaling", "bands/scaling", Kind::text, "constant | standardized");
  f.bind("--z", "bands/z", Kind::reals, "covariate value for conditional curves");
}

void bind_study(Flags& f) {
  f.bind("--chains", "study/n_chains", Kind::integer, "independent chains");
  f.bind("--replicates", "study/replicates", Kind::integer, "simulated datasets per setting");
  f.bind("--n-list", "study/n_list", Kind::integers, "sample sizes");
  f.bind("--methods", "study/methods", Kind::texts, "ind, dep, haar, freq");
  f.bind("--censoring-list", "study/censoring", Kind::texts, "censoring regimes");
  f.bind("--seed", "study/seed", Kind::integer, "master seed");
  f.bind("--rate-beta", "study/rate_beta", Kind::real, "smoothness used by the rate scan");
  f.bind("--rate-replicates", "study/rate_replicates", Kind::integer, "replicates per n in the rate scan");
}

coxscale::CurveTarget parse_target(const std::string& s) {
  if (s == "cumhaz") return coxscale::CurveTarget::cumhaz;
  if (s == "survival") return coxscale::CurveTarget::survival;
  throw std::runtime_error("target must be cumhaz or survival");
}

Eigen::VectorXd z_or_zero(const coxscale::HarnessConfig& cfg, Eigen::Index p) {
  if (cfg.bands.z.size() == 0) return Eigen::VectorXd::Zero(p);
  if (cfg.bands.z.size() != p) throw std::runtime_error("--z must have dimension p");
  return cfg.bands.z;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    auto f = coxscale::io::open_out(path);
    f << j.dump(2) << '\n';
  }
}

template <class Writer>
void write_text(const std::string& path, Writer&& w) {
  if (path.empty() || path == "-") {
    w(std::cout);
  } else {
    auto f = coxscale::io::open_out(path);
    w(f);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian and frequentist inference for the Cox model with histogram hazards"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  Flags sim_flags(sim);
  bind_data(sim_flags, "--seed");
  std::string sim_out;
  sim->add_option("--out", sim_out, "dataset CSV (default stdout)");
  sim->callback([&] {
    const auto cfg = sim_flags.config();
    const auto data = coxscale::generate_dataset(cfg.data.n, cfg.data.truth_spec(), cfg.data.seed);
    write_text(sim_out, [&](std::ostream& o) { coxscale::io::write_dataset(o, data); });
  });

  // fit-freq
  auto* freq = app.add_subcommand("fit-freq", "partial-likelihood fit and multiplier confidence band");
  Flags freq_flags(freq);
  bind_bands(freq_flags);
  freq_flags.bind("--seed", "study/seed", Kind::integer, "multiplier seed");
  std::string freq_data, freq_out, freq_target = "survival";
  freq->add_option("--data", freq_data, "dataset CSV")->required();
  freq->add_option("--band", freq_target, "cumhaz | survival");
  freq->add_option("--out", freq_out, "band CSV (default stdout)");
  freq->callback([&] {
    const auto cfg = freq_flags.config();
    const auto data = coxscale::io::read_dataset(freq_data);
    const auto fit = coxscale::fit_partial_likelihood(data);
    coxscale::MultiplierBandOptions opts;
    opts.target = parse_target(freq_target);
    opts.level = cfg.bands.level;
    opts.replicates = cfg.bands.replicates;
    opts.seed = cfg.study.seed;
    opts.grid = cfg.bands.grid();
    opts.scaling = cfg.bands.scaling;
    const auto band = coxscale::multiplier_confidence_band(data, fit, z_or_zero(cfg, data.p()), opts);
    write_text(freq_out, [&](std::ostream& o) { coxscale::io::write_band(o, band); });
    std::cerr << "theta_hat:";
    for (Eigen::Index j = 0; j < fit.theta_hat.size(); ++j) std::cerr << ' ' << fit.theta_hat(j);
    std::cerr << "  area: " << coxscale::area(band) << '\n';
  });

  // sample
  auto* sample = app.add_subcommand("sample", "run one posterior chain");
  Flags sample_flags(sample);
  bind_prior(sample_flags);
  bind_sampler(sample_flags);
  sample_flags.bind("--seed", "sampler/seed", Kind::integer, "chain seed");
  std::string sample_data, sample_out;
  sample->add_option("--data", sample_data, "dataset CSV")->required();
  sample->add_option("--out", sample_out, "chain CSV (default stdout)");
  sample->callback([&] {
    const auto cfg = sample_flags.config();
    const auto data = coxscale::io::read_dataset(sample_data);
    const auto chain = coxscale::run_chain(data, cfg.prior, cfg.sampler);
    write_text(sample_out, [&](std::ostream& o) { coxscale::io::write_chain(o, chain); });
    std::cerr << "level " << chain.level << ", theta acceptance " << chain.theta_acceptance.mean()
              << ", hazard acceptance " << chain.hazard_acceptance.mean() << '\n';
  });

  // bands
  auto* bands = app.add_subcommand("bands", "credible band from a chain, credible regions from pairs");
  Flags bands_flags(bands);
  bind_bands(bands_flags);
  std::string bands_chain, bands_pairs, bands_out, bands_target = "survival";
  bands->add_option("--chain", bands_chain, "chain CSV");
  bands->add_option("--pairs", bands_pairs, "pairs CSV (chain,theta1,Lambda1)");
  bands->add_option("--target", bands_target, "cumhaz | survival");
  bands->add_option("--out", bands_out, "band CSV or region JSON (default stdout)");
  bands->callback([&] {
    const auto cfg = bands_flags.config();
    if (bands_chain.empty() == bands_pairs.empty()) throw std::runtime_error("give exactly one of --chain or --pairs");
    if (!bands_chain.empty()) {
      const auto chain = coxscale::io::read_chain(bands_chain);
      const auto grid = cfg.bands.grid();
      const auto target = parse_target(bands_target);
      const auto curves = coxscale::chain_curves(chain, z_or_zero(cfg, chain.theta_draws.cols()), target, grid);
      const auto cb = coxscale::fixed_width_credible_band(curves, cfg.bands.level, grid, target);
      write_text(bands_out, [&](std::ostream& o) { coxscale::io::write_band(o, cb.band); });
      std::cerr << "radius " << cb.radius << ", area " << cb.area << " (unclipped " << cb.area_unclipped << ")\n";
      return;
    }
    auto in = coxscale::io::open_in(bands_pairs);
    const auto table = coxscale::io::read_csv(in);
    Eigen::MatrixX2d pairs(static_cast<Eigen::Index>(table.rows.size()), 2);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      pairs(static_cast<Eigen::Index>(i), 0) = table.rows[i].at(1);
      pairs(static_cast<Eigen::Index>(i), 1) = table.rows[i].at(2);
    }
    const auto r = coxscale::joint_credible_regions(pairs, cfg.bands.level);
    json j;
    j["ellipse"] = coxscale::ellipse_json(r.ellipse);
    j["rectangle"] = {{"lower", {r.rectangle.lower(0), r.rectangle.lower(1)}},
                      {"upper", {r.rectangle.upper(0), r.rectangle.upper(1)}},
                      {"area", r.rectangle.area}};
    write_json(bands_out, j);
  });

  // bvm-check
  auto* bvm = app.add_subcommand("bvm-check", "limiting covariance of (theta_1, Lambda(1)) vs posterior draws");
  Flags bvm_flags(bvm);
  bind_data(bvm_flags);
  bind_bands(bvm_flags);
  std::string bvm_pairs, bvm_out;
  bvm->add_option("--pairs", bvm_pairs, "pairs CSV from study1");
  bvm->add_option("--out", bvm_out, "report JSON (default stdout)");
  bvm->callback([&] {
    const auto cfg = bvm_flags.config();
    const auto truth = cfg.data.truth_spec();
    std::optional<Eigen::MatrixX2d> pairs;
    Eigen::Vector2d center(truth.theta0(0), truth.baseline.cumulative(1.0));
    if (!bvm_pairs.empty()) {
      auto in = coxscale::io::open_in(bvm_pairs);
      const auto table = coxscale::io::read_csv(in);
      pairs.emplace(static_cast<Eigen::Index>(table.rows.size()), 2);
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        (*pairs)(static_cast<Eigen::Index>(i), 0) = table.rows[i].at(1);
        (*pairs)(static_cast<Eigen::Index>(i), 1) = table.rows[i].at(2);
      }
      center = pairs->colwise().mean().transpose();
    }
    write_json(bvm_out, coxscale::bvm_report(truth, cfg.data.n, pairs ? &*pairs : nullptr, cfg.bands.level, center));
  });

  // study1
  auto* s1 = app.add_subcommand("study1", "joint posterior of (theta_1, Lambda(1)) from many chains");
  Flags s1_flags(s1);
  bind_data(s1_flags);
  bind_prior(s1_flags);
  bind_sampler(s1_flags);
  bind_bands(s1_flags);
  bind_study(s1_flags);
  std::string s1_out, s1_pairs;
  s1->add_option("--out", s1_out, "report JSON (default stdout)");
  s1->add_option("--pairs-out", s1_pairs, "pairs CSV");
  s1->callback([&] {
    const auto result = coxscale::study1(s1_flags.config());
    if (!s1_pairs.empty()) {
      auto f = coxscale::io::open_out(s1_pairs);
      coxscale::io::write_pairs(f, result.draws);
    }
    write_json(s1_out, result.report);
  });

  // study2
  auto* s2 = app.add_subcommand("study2", "coverage and area of survival bands");
  Flags s2_flags(s2);
  bind_data(s2_flags);
  bind_prior(s2_flags);
  bind_sampler(s2_flags);
  bind_bands(s2_flags);
  bind_study(s2_flags);
  std::string s2_out;
  s2->add_option("--out", s2_out, "table CSV (default stdout)");
  s2->callback([&] {
    const auto rows = coxscale::study2(s2_flags.config());
    write_text(s2_out, [&](std::ostream& o) { coxscale::write_coverage_csv(o, rows); });
  });

  // rate-diag
  auto* rate = app.add_subcommand("rate-diag", "posterior-mean sup-norm error across sample sizes");
  Flags rate_flags(rate);
  bind_data(rate_flags);
  bind_prior(rate_flags);
  bind_sampler(rate_flags);
  bind_bands(rate_flags);
  bind_study(rate_flags);
  std::string rate_out;
  rate->add_option("--out", rate_out, "table CSV (default stdout)");
  rate->callback([&] {
    const auto rows = coxscale::rate_diagnostic(rate_flags.config());
    write_text(rate_out, [&](std::ostream& o) { coxscale::write_rate_csv(o, rows); });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
