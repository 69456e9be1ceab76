#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <cstddef>
#include <vector>

#include "exicl/random.hpp"
#include "exicl/types.hpp"

namespace exicl {

/// A draw from the hierarchical mixture. weights/centres/precisions cover all
/// K sampled components; component_of_group maps each realised (compact)
/// group label to its component index.
struct GeneratedSample {
  DataSet data;
  Allocation allocation;
  std::vector<double> weights;
  std::vector<Vector> centres;
  std::vector<Matrix> precisions;
  std::vector<std::size_t> component_of_group;
  std::vector<int> raw_labels;  // component index + 1 per observation, before compaction
};

/// Symmetric Dirichlet(alpha, ..., alpha) draw of length k.
inline std::vector<double> dirichlet_variate(Engine& rng, std::size_t k, double alpha) {
  std::vector<double> logs(k);
  double top = -std::numeric_limits<double>::infinity();
  for (auto& l : logs) {
    l = log_gamma_variate(rng, alpha);
    top = std::max(top, l);
  }
  std::vector<double> w(k);
  double sum = 0.0;
  for (std::size_t g = 0; g < k; ++g) sum += (w[g] = std::exp(logs[g] - top));
  for (auto& x : w) x /= sum;
  return w;
}

inline constexpr double kMinChiSquare = 1e-10;

/// Wishart draw with density proportional to |R|^((nu-b-1)/2) exp(-tr(xi R)/2),
/// i.e. scale matrix xi^{-1}. Bartlett construction; chi-square diagonals use
/// the gamma form so non-integer nu in (b-1, b) is allowed.
inline Matrix wishart_variate(Engine& rng, double nu, const Matrix& xi) {
  const auto b = xi.rows();
  const Matrix scale = xi.inverse();
  const Matrix l = Eigen::LLT<Matrix>(scale).matrixL();
  Matrix a = Matrix::Zero(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double dof = nu - static_cast<double>(i);
    // floored so that draws at fractional dof stay numerically positive definite
    a(i, i) = std::sqrt(std::max(2.0 * gamma_variate(rng, dof / 2.0, 1.0), kMinChiSquare));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal_variate(rng);
  }
  const Matrix la = l * a;
  Matrix r = la * la.transpose();
  return 0.5 * (r + r.transpose());
}

/// x ~ N(mean, precision^{-1}).
inline Vector mvn_from_precision(Engine& rng, const Vector& mean, const Matrix& precision) {
  const Eigen::LLT<Matrix> llt(precision);
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal_variate(rng);
  // precision = L L^t, so L^{-t} z has covariance precision^{-1}.
  return mean + llt.matrixU().solve(z);
}

namespace detail {

inline std::vector<int> draw_labels(Engine& rng, std::size_t n, const std::vector<double>& w) {
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::vector<int> raw(n);
  for (auto& g : raw) g = pick(rng) + 1;
  return raw;
}

inline void finish(GeneratedSample& s, RowMatrix x, std::vector<int> raw) {
  s.data = DataSet(std::move(x));
  s.allocation = relabel_compact(raw);
  s.component_of_group.assign(static_cast<std::size_t>(s.allocation.K()), 0);
  for (std::size_t i = 0; i < raw.size(); ++i)
    s.component_of_group[static_cast<std::size_t>(s.allocation[i] - 1)] = static_cast<std::size_t>(raw[i] - 1);
  s.raw_labels = std::move(raw);
}

}  // namespace detail

inline GeneratedSample sample_dataset(std::size_t n, std::size_t k, const MvHyperParams& params, Engine& rng) {
  if (n < 1) throw ValidationError("n must be >= 1");
  if (k < 1) throw ValidationError("K must be >= 1");
  const auto b = static_cast<std::size_t>(params.mu.size());
  validate_hyperparams(params, b);
  const Matrix xi = params.xi();

  GeneratedSample s;
  s.weights = dirichlet_variate(rng, k, params.alpha);
  std::vector<int> raw = detail::draw_labels(rng, n, s.weights);
  for (std::size_t g = 0; g < k; ++g) {
    s.precisions.push_back(wishart_variate(rng, params.nu, xi));
    s.centres.push_back(mvn_from_precision(rng, params.mu, params.tau * s.precisions.back()));
  }
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(b));
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(raw[i] - 1);
    x.row(static_cast<Eigen::Index>(i)) = mvn_from_precision(rng, s.centres[g], s.precisions[g]).transpose();
  }
  detail::finish(s, std::move(x), std::move(raw));
  return s;
}

/// Univariate variant: precisions ~ Ga(gamma, delta) (rate form).
inline GeneratedSample sample_dataset_1d(std::size_t n, std::size_t k, const UvHyperParams& params, Engine& rng) {
  if (n < 1) throw ValidationError("n must be >= 1");
  if (k < 1) throw ValidationError("K must be >= 1");
  validate_hyperparams(params, 1);

  GeneratedSample s;
  s.weights = dirichlet_variate(rng, k, params.alpha);
  std::vector<int> raw = detail::draw_labels(rng, n, s.weights);
  for (std::size_t g = 0; g < k; ++g) {
    const double r = gamma_variate(rng, params.gamma, params.delta);
    s.precisions.push_back(Matrix::Constant(1, 1, r));
    Vector m(1);
    m(0) = params.mu + normal_variate(rng) / std::sqrt(params.tau * r);
    s.centres.push_back(m);
  }
  RowMatrix x(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(raw[i] - 1);
    x(static_cast<Eigen::Index>(i), 0) = s.centres[g](0) + normal_variate(rng) / std::sqrt(s.precisions[g](0, 0));
  }
  detail::finish(s, std::move(x), std::move(raw));
  return s;
}

}  // namespace exicl
