#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "osr/classifier.hpp"
#include "osr/linalg.hpp"

namespace osr {

// 17 significant digits round-trips every finite double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline double parse_double(const std::string& token, std::size_t line,
                           std::size_t column) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw ParseError("row " + std::to_string(line) + ", column " +
                     std::to_string(column) + ": '" + token +
                     "' is not a number");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

// Header-row CSV with numeric feature columns and an optional `label` column
// holding 0/1. Column order is preserved.
inline Dataset load_csv(const std::string& path, bool require_label) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyInput(path + " is empty");
  const auto header = detail::split_csv_line(line);
  if (header.empty()) throw ParseError(path + ": empty header row");
  std::ptrdiff_t label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "label") label_col = static_cast<std::ptrdiff_t>(c);
  if (require_label && label_col < 0)
    throw MissingLabelColumn(path + ": no `label` column");
  const std::size_t n_features = header.size() - (label_col >= 0 ? 1 : 0);
  if (n_features == 0) throw ParseError(path + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(n_features);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_double(cells[c], line_no, c + 1);
      if (static_cast<std::ptrdiff_t>(c) == label_col) {
        if (v != 0.0 && v != 1.0)
          throw ParseError("row " + std::to_string(line_no) +
                           ": label must be 0 or 1");
        labels.push_back(static_cast<int>(v));
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInput(path + " has a header but no data rows");
  MatrixXd features(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(n_features));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n_features; ++j)
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return Dataset(std::move(features), std::move(labels));
}

// ---------------------------------------------------------------------------
// Model persistence: diff-able key/value text with decimal serialization
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline void save_model(const ClassifierModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  const int d = model.dim();
  auto write_vector = [&out](const char* key, const VectorXd& v) {
    out << key;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      out << ' ' << format_double(v(i));
    out << '\n';
  };
  auto write_matrix = [&out](const char* key, const MatrixXd& m) {
    out << key;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        out << ' ' << format_double(m(i, j));
    out << '\n';
  };
  out << "format_version " << kModelFormatVersion << '\n';
  out << "mode " << to_string(model.mode) << '\n';
  out << "d " << d << '\n';
  write_vector("mu0", model.spec0.nominal().mean());
  write_matrix("cov0", model.spec0.nominal().cov());
  out << "rho0 " << format_double(model.spec0.radius()) << '\n';
  write_vector("mu1", model.spec1.nominal().mean());
  write_matrix("cov1", model.spec1.nominal().cov());
  out << "rho1 " << format_double(model.spec1.radius()) << '\n';
  out << "log_threshold " << format_double(model.log_threshold) << '\n';
  out << "estimator " << model.metadata.estimator << '\n';
  out << "radius_policy " << model.metadata.radius_policy << '\n';
  out << "seed " << model.metadata.seed << '\n';
}

inline ClassifierModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::map<std::string, std::vector<std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string key;
    ss >> key;
    std::vector<std::string> values;
    std::string token;
    while (ss >> token) values.push_back(token);
    entries[key] = std::move(values);
  }
  auto require = [&entries, &path](const std::string& key)
      -> const std::vector<std::string>& {
    auto it = entries.find(key);
    if (it == entries.end())
      throw ParseError(path + ": missing key `" + key + "`");
    return it->second;
  };
  auto scalar = [&require](const std::string& key) {
    const auto& v = require(key);
    if (v.size() != 1) throw ParseError("key `" + key + "` is not a scalar");
    return detail::parse_double(v[0], 0, 0);
  };
  if (static_cast<int>(scalar("format_version")) != kModelFormatVersion)
    throw ParseError(path + ": unsupported format_version");
  const int d = static_cast<int>(scalar("d"));
  if (d < 1) throw ParseError(path + ": invalid dimension");
  const std::string mode_str = require("mode").at(0);
  ScoreMode mode;
  if (mode_str == "nonparam")
    mode = ScoreMode::Nonparametric;
  else if (mode_str == "gaussian")
    mode = ScoreMode::Gaussian;
  else
    throw ParseError(path + ": unknown mode `" + mode_str + "`");
  auto read_vector = [&require, d](const std::string& key) {
    const auto& v = require(key);
    if (v.size() != static_cast<std::size_t>(d))
      throw ParseError("key `" + key + "` has the wrong length");
    VectorXd out(d);
    for (int i = 0; i < d; ++i) out(i) = detail::parse_double(v[i], 0, 0);
    return out;
  };
  auto read_matrix = [&require, d](const std::string& key) {
    const auto& v = require(key);
    if (v.size() != static_cast<std::size_t>(d) * d)
      throw ParseError("key `" + key + "` has the wrong length");
    MatrixXd out(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        out(i, j) = detail::parse_double(v[static_cast<std::size_t>(i) * d + j],
                                         0, 0);
    return out;
  };
  ClassifierModel model{
      mode,
      AmbiguitySpec(MomentPair(read_vector("mu0"), read_matrix("cov0")),
                    scalar("rho0")),
      AmbiguitySpec(MomentPair(read_vector("mu1"), read_matrix("cov1")),
                    scalar("rho1")),
      scalar("log_threshold"),
      {require("estimator").at(0), require("radius_policy").at(0),
       std::strtoull(require("seed").at(0).c_str(), nullptr, 10)}};
  return model;
}

}  // namespace osr
