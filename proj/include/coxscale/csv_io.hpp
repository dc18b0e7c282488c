#pragma once

// Flat-file formats. Numbers are written with 17 significant digits so that a
// write/read cycle reproduces every double exactly.
//
//   dataset  y,delta,z1,...,zp
//   band     t,center,lower,upper
//   chain    iter,theta1..thetap,lambda1..lambdaK
//   pairs    chain,theta1,Lambda1

#include <Eigen/Core>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coxscale/band.hpp"
#include "coxscale/core_model.hpp"
#include "coxscale/errors.hpp"
#include "coxscale/mcmc.hpp"

namespace coxscale::io {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

/// Rows of numbers after a header; the header must match `expect` when given.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(t.header.size()) + " fields");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, line_no));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::runtime_error("csv: missing header");
  return t;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

// --- dataset

inline void write_dataset(std::ostream& out, const SurvivalDataset& data) {
  out << "y,delta";
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",z" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.time(i)) << ',' << (data.event(i) ? 1 : 0);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << format_double(data.covariates()(i, j));
    out << '\n';
  }
}

inline SurvivalDataset read_dataset(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.size() < 2 || t.header[0] != "y" || t.header[1] != "delta")
    throw std::runtime_error("dataset csv: header must start with y,delta");
  const auto p = static_cast<Eigen::Index>(t.header.size() - 2);
  for (Eigen::Index j = 0; j < p; ++j)
    if (t.header[static_cast<std::size_t>(j) + 2] != "z" + std::to_string(j + 1))
      throw std::runtime_error("dataset csv: covariate columns must be z1..zp");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::VectorXd y(n);
  std::vector<std::uint8_t> delta(static_cast<std::size_t>(n));
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    y(i) = r[0];
    if (r[1] != 0.0 && r[1] != 1.0) throw std::runtime_error("dataset csv: delta must be 0 or 1");
    delta[static_cast<std::size_t>(i)] = r[1] == 1.0 ? 1 : 0;
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = r[static_cast<std::size_t>(j) + 2];
  }
  return SurvivalDataset(std::move(y), std::move(delta), std::move(z));
}

inline void write_dataset(const std::string& path, const SurvivalDataset& data) {
  auto f = open_out(path);
  write_dataset(f, data);
}

inline SurvivalDataset read_dataset(const std::string& path) {
  auto f = open_in(path);
  return read_dataset(f);
}

// --- band

inline void write_band(std::ostream& out, const Band& band) {
  out << "t,center,lower,upper\n";
  for (Eigen::Index g = 0; g < band.grid.size(); ++g)
    out << format_double(band.grid(g)) << ',' << format_double(band.center(g)) << ',' << format_double(band.lower(g))
        << ',' << format_double(band.upper(g)) << '\n';
}

inline Band read_band(std::istream& in, double level = 0.95) {
  const CsvTable t = read_csv(in);
  if (t.header != std::vector<std::string>{"t", "center", "lower", "upper"})
    throw std::runtime_error("band csv: header must be t,center,lower,upper");
  const auto g = static_cast<Eigen::Index>(t.rows.size());
  Band b{Eigen::VectorXd(g), Eigen::VectorXd(g), Eigen::VectorXd(g), Eigen::VectorXd(g), level};
  for (Eigen::Index i = 0; i < g; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    b.grid(i) = r[0];
    b.center(i) = r[1];
    b.lower(i) = r[2];
    b.upper(i) = r[3];
  }
  return b;
}

inline void write_band(const std::string& path, const Band& band) {
  auto f = open_out(path);
  write_band(f, band);
}

// --- chain

inline void write_chain(std::ostream& out, const PosteriorChain& chain) {
  const Eigen::Index p = chain.theta_draws.cols();
  const Eigen::Index k = chain.height_draws.cols();
  out << "iter";
  for (Eigen::Index j = 0; j < p; ++j) out << ",theta" << (j + 1);
  for (Eigen::Index j = 0; j < k; ++j) out << ",lambda" << (j + 1);
  out << '\n';
  for (Eigen::Index m = 0; m < chain.height_draws.rows(); ++m) {
    out << (chain.n_burn + m + 1);
    for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double(chain.theta_draws(m, j));
    for (Eigen::Index j = 0; j < k; ++j) out << ',' << format_double(chain.height_draws(m, j));
    out << '\n';
  }
}

/// Reads retained draws back; level is recovered from the number of lambda columns.
inline PosteriorChain read_chain(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.empty() || t.header[0] != "iter") throw std::runtime_error("chain csv: first column must be iter");
  Eigen::Index p = 0;
  Eigen::Index k = 0;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    if (t.header[c].rfind("theta", 0) == 0) {
      if (k > 0) throw std::runtime_error("chain csv: theta columns must precede lambda columns");
      ++p;
    } else if (t.header[c].rfind("lambda", 0) == 0) {
      ++k;
    } else {
      throw std::runtime_error("chain csv: unexpected column " + t.header[c]);
    }
  }
  if (k < 2 || (k & (k - 1)) != 0) throw std::runtime_error("chain csv: bin count must be a power of two >= 2");
  PosteriorChain chain;
  int level = 0;
  while ((Eigen::Index{2} << level) < k) ++level;
  chain.level = level;
  const auto m = static_cast<Eigen::Index>(t.rows.size());
  chain.theta_draws.resize(m, p);
  chain.height_draws.resize(m, k);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < p; ++j) chain.theta_draws(r, j) = row[static_cast<std::size_t>(1 + j)];
    for (Eigen::Index j = 0; j < k; ++j) chain.height_draws(r, j) = row[static_cast<std::size_t>(1 + p + j)];
  }
  chain.n_burn = m > 0 ? static_cast<int>(t.rows.front()[0]) - 1 : 0;
  chain.n_iter = chain.n_burn + static_cast<int>(m);
  if (m > 0) {
    chain.last_theta = chain.theta_draws.row(m - 1).transpose();
    chain.last_heights = chain.height_draws.row(m - 1).transpose();
  }
  return chain;
}

inline void write_chain(const std::string& path, const PosteriorChain& chain) {
  auto f = open_out(path);
  write_chain(f, chain);
}

inline PosteriorChain read_chain(const std::string& path) {
  auto f = open_in(path);
  return read_chain(f);
}

// --- (theta_1, Lambda(1)) pairs

inline void write_pairs(std::ostream& out, const std::vector<LastDraw>& draws) {
  out << "chain,theta1,Lambda1\n";
  for (const auto& d : draws)
    out << d.chain << ',' << format_double(d.theta.size() > 0 ? d.theta(0) : 0.0) << ','
        << format_double(d.cumulative_at_one) << '\n';
}

}  // namespace coxscale::io
