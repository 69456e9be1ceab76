#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "exicl/distance.hpp"
#include "exicl/optimizer.hpp"
#include "exicl/types.hpp"

namespace exicl {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

/// Comma-separated numeric rows, optionally preceded by one header row.
inline DataSet read_csv(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line);
    std::vector<double> row;
    row.reserve(cells.size());
    std::optional<std::size_t> bad;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) {
        bad = c;
        break;
      }
      row.push_back(*v);
    }
    if (bad) {
      const bool header = first && std::none_of(cells.begin(), cells.end(),
                                                [](std::string_view c) { return detail::parse_double(c).has_value(); });
      first = false;
      if (header) continue;
      throw ValidationError(path.string() + ": non-numeric value '" + std::string(cells[*bad]) +
                            "' at line " + std::to_string(line_no) + ", column " + std::to_string(*bad + 1));
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path.string() + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(row.size()) + " fields, expected " +
                            std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no data rows");

  RowMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return DataSet(std::move(x));
}

/// Writes with 17 significant digits so read_csv recovers every value exactly.
inline void write_csv(const std::filesystem::path& path, const DataSet& data,
                      const std::vector<std::string>& header = {}) {
  std::ofstream out = detail::open_out(path);
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < data.b(); ++j)
      out << (j ? "," : "") << detail::format_double(row(static_cast<Eigen::Index>(j)));
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Integer labels, one per line (commas also accepted). A leading
/// non-numeric header line is skipped.
inline std::vector<int> read_labels(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    for (auto cell : detail::split(line)) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        if (labels.empty() && line_no == 1) break;
        throw ValidationError(path.string() + ": non-integer label '" + std::string(cell) + "' at line " +
                              std::to_string(line_no));
      }
      labels.push_back(v);
    }
  }
  if (labels.empty()) throw ValidationError(path.string() + ": no labels");
  return labels;
}

inline void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ofstream out = detail::open_out(path);
  for (int g : labels) out << g << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

struct Standardized {
  DataSet data;
  Vector mean;
  Vector sd;  // sample sd, n - 1 denominator
};

inline Standardized standardize(const DataSet& data) {
  if (data.n() < 2) throw ValidationError("standardisation needs at least two observations");
  const RowMatrix& x = data.values();
  Standardized s;
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(x.cols());
  RowMatrix y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto centred = (x.col(j).array() - s.mean(j)).eval();
    s.sd(j) = std::sqrt(centred.square().sum() / static_cast<double>(x.rows() - 1));
    if (!(s.sd(j) > 0.0)) throw ValidationError("column " + std::to_string(j + 1) + " is constant");
    y.col(j) = centred / s.sd(j);
  }
  s.data = DataSet(std::move(y));
  return s;
}

/// Run settings recorded next to a solution.
struct RunMetadata {
  std::uint64_t seed = 0;
  int restarts = 0;
  int max_sweeps = 0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::optional<int> k_max;
  std::string algorithm = "combined";
  std::string metric = "euclidean";
  bool standardized = false;
  std::optional<double> runtime_ms;
};

/// Parsed result document.
struct ResultDocument {
  HyperParams hyperparams;
  RunMetadata meta;
  int sweeps = 0;
  int K = 0;
  double icl = 0.0;
  std::vector<int> labels;
  std::vector<double> restart_best;
  int restart_id = 0;
};

namespace detail {

inline nlohmann::ordered_json hyperparams_json(const HyperParams& params) {
  nlohmann::ordered_json j;
  if (const auto* mv = std::get_if<MvHyperParams>(&params)) {
    j["model"] = "normal-wishart";
    j["alpha"] = mv->alpha;
    j["tau"] = mv->tau;
    j["mu"] = std::vector<double>(mv->mu.data(), mv->mu.data() + mv->mu.size());
    j["nu"] = mv->nu;
    if (mv->scale_matrix) {
      std::vector<std::vector<double>> xi;
      for (Eigen::Index r = 0; r < mv->scale_matrix->rows(); ++r) {
        xi.emplace_back();
        for (Eigen::Index c = 0; c < mv->scale_matrix->cols(); ++c) xi.back().push_back((*mv->scale_matrix)(r, c));
      }
      j["xi"] = xi;
    } else {
      j["omega"] = mv->omega;
    }
  } else {
    const auto& uv = std::get<UvHyperParams>(params);
    j["model"] = "normal-gamma";
    j["alpha"] = uv.alpha;
    j["tau"] = uv.tau;
    j["mu"] = uv.mu;
    j["gamma"] = uv.gamma;
    j["delta"] = uv.delta;
  }
  return j;
}

inline HyperParams hyperparams_from_json(const nlohmann::ordered_json& j) {
  if (j.at("model") == "normal-wishart") {
    MvHyperParams p;
    p.alpha = j.at("alpha");
    p.tau = j.at("tau");
    const auto mu = j.at("mu").get<std::vector<double>>();
    p.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    p.nu = j.at("nu");
    if (j.contains("xi")) {
      const auto rows = j.at("xi").get<std::vector<std::vector<double>>>();
      Matrix xi(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          xi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      p.scale_matrix = xi;
    } else {
      p.omega = j.at("omega");
    }
    return p;
  }
  UvHyperParams p;
  p.alpha = j.at("alpha");
  p.tau = j.at("tau");
  p.mu = j.at("mu");
  p.gamma = j.at("gamma");
  p.delta = j.at("delta");
  return p;
}

}  // namespace detail

inline std::string result_json(const Solution& sol, const HyperParams& params, const RunMetadata& meta) {
  nlohmann::ordered_json j;
  j["hyperparams"] = detail::hyperparams_json(params);
  j["algorithm"] = meta.algorithm;
  j["metric"] = meta.metric;
  j["standardized"] = meta.standardized;
  j["seed"] = meta.seed;
  j["restarts"] = meta.restarts;
  j["max_sweeps"] = meta.max_sweeps;
  j["beta1"] = meta.beta1;
  j["beta2"] = meta.beta2;
  j["k_max"] = meta.k_max ? nlohmann::ordered_json(*meta.k_max) : nlohmann::ordered_json(nullptr);
  j["sweeps"] = sol.sweeps;
  j["restart_id"] = sol.restart_id;
  j["K"] = sol.K;
  j["icl_ex"] = sol.icl;
  j["labels"] = sol.allocation.labels();
  nlohmann::ordered_json best = nlohmann::ordered_json::array();
  for (double v : sol.restart_best) best.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
  j["restart_best"] = best;
  j["runtime_ms"] = meta.runtime_ms ? nlohmann::ordered_json(*meta.runtime_ms) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

inline void write_result(const Solution& sol, const HyperParams& params, const RunMetadata& meta,
                         const std::filesystem::path& path) {
  std::ofstream out = detail::open_out(path);
  out << result_json(sol, params, meta);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace detail {

inline ResultDocument result_from_json(const nlohmann::ordered_json& j) {
  ResultDocument d;
  d.hyperparams = detail::hyperparams_from_json(j.at("hyperparams"));
  d.meta.algorithm = j.at("algorithm");
  d.meta.metric = j.at("metric");
  d.meta.standardized = j.at("standardized");
  d.meta.seed = j.at("seed");
  d.meta.restarts = j.at("restarts");
  d.meta.max_sweeps = j.at("max_sweeps");
  d.meta.beta1 = j.at("beta1");
  d.meta.beta2 = j.at("beta2");
  if (!j.at("k_max").is_null()) d.meta.k_max = j.at("k_max").get<int>();
  if (!j.at("runtime_ms").is_null()) d.meta.runtime_ms = j.at("runtime_ms").get<double>();
  d.sweeps = j.at("sweeps");
  d.restart_id = j.at("restart_id");
  d.K = j.at("K");
  d.icl = j.at("icl_ex");
  d.labels = j.at("labels").get<std::vector<int>>();
  for (const auto& v : j.at("restart_best"))
    d.restart_best.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  return d;
}

}  // namespace detail

inline ResultDocument read_result(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  try {
    return detail::result_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace exicl
