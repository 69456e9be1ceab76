#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace exicl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Invalid user input or violated precondition.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failure or non-finite intermediate value.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// n observations (rows) in b dimensions. Immutable once built.
class DataSet {
public:
  DataSet() = default;

  explicit DataSet(RowMatrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw ValidationError("data set must have at least one row and one column");
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
      for (Eigen::Index j = 0; j < values_.cols(); ++j)
        if (!std::isfinite(values_(i, j)))
          throw ValidationError("non-finite value at row " + std::to_string(i + 1) +
                                ", column " + std::to_string(j + 1));
  }

  std::size_t n() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t b() const { return static_cast<std::size_t>(values_.cols()); }

  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }
  const RowMatrix& values() const { return values_; }

  Vector centre() const { return values_.colwise().mean().transpose(); }

private:
  RowMatrix values_;
};

/// Compact label vector: labels are 1..K and every label is used.
class Allocation {
public:
  Allocation() = default;

  /// Takes labels that must already be compact; use relabel_compact() otherwise.
  explicit Allocation(std::vector<int> labels) : labels_(std::move(labels)) {
    int k = 0;
    for (int g : labels_) {
      if (g < 1) throw ValidationError("labels must be >= 1");
      k = std::max(k, g);
    }
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (int g : labels_) seen[static_cast<std::size_t>(g - 1)] = true;
    for (std::size_t g = 0; g < seen.size(); ++g)
      if (!seen[g])
        throw ValidationError("allocation is not compact: label " + std::to_string(g + 1) +
                              " is unused");
    k_ = k;
  }

  std::size_t size() const { return labels_.size(); }
  int K() const { return k_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c(static_cast<std::size_t>(k_), 0);
    for (int g : labels_) ++c[static_cast<std::size_t>(g - 1)];
    return c;
  }

  friend bool operator==(const Allocation&, const Allocation&) = default;

private:
  std::vector<int> labels_;
  int k_ = 0;
};

/// Remaps arbitrary integer labels to 1..K in order of first appearance.
inline Allocation relabel_compact(const std::vector<int>& raw) {
  std::vector<std::pair<int, int>> seen;  // raw label -> compact label
  std::vector<int> out;
  out.reserve(raw.size());
  for (int g : raw) {
    int mapped = 0;
    for (const auto& [from, to] : seen)
      if (from == g) {
        mapped = to;
        break;
      }
    if (mapped == 0) {
      mapped = static_cast<int>(seen.size()) + 1;
      seen.emplace_back(g, mapped);
    }
    out.push_back(mapped);
  }
  return Allocation(std::move(out));
}

/// Normal-Wishart hyperparameters. The scale matrix is omega * I unless a
/// full positive-definite matrix is supplied.
struct MvHyperParams {
  double alpha = 4.0;
  double tau = 0.01;
  Vector mu;
  double nu = 3.0;
  double omega = 1.0;
  std::optional<Matrix> scale_matrix;

  Matrix xi() const {
    if (scale_matrix) return *scale_matrix;
    const auto b = mu.size();
    return omega * Matrix::Identity(b, b);
  }
};

/// Normal-Gamma hyperparameters for one-dimensional data (Ga(gamma, delta), rate form).
struct UvHyperParams {
  double alpha = 4.0;
  double tau = 0.01;
  double mu = 0.0;
  double gamma = 0.5;
  double delta = 0.5;
};

using HyperParams = std::variant<MvHyperParams, UvHyperParams>;

namespace detail {
inline void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(std::string(field) + " must be strictly positive and finite");
}
}  // namespace detail

inline const MvHyperParams& validate_hyperparams(const MvHyperParams& p, std::size_t b) {
  detail::require_positive(p.alpha, "alpha");
  detail::require_positive(p.tau, "tau");
  if (p.scale_matrix) {
    const Matrix& xi = *p.scale_matrix;
    if (static_cast<std::size_t>(xi.rows()) != b || static_cast<std::size_t>(xi.cols()) != b)
      throw ValidationError("xi must be a b x b matrix");
    if (!xi.isApprox(xi.transpose(), 1e-12) || xi.llt().info() != Eigen::Success)
      throw ValidationError("xi must be symmetric positive definite");
  } else {
    detail::require_positive(p.omega, "omega");
  }
  if (!std::isfinite(p.nu) || !(p.nu > static_cast<double>(b) - 1.0))
    throw ValidationError("nu must exceed b - 1 (nu = " + std::to_string(p.nu) +
                          ", b = " + std::to_string(b) + ")");
  if (static_cast<std::size_t>(p.mu.size()) != b)
    throw ValidationError("mu must have length b = " + std::to_string(b));
  if (!p.mu.allFinite()) throw ValidationError("mu must be finite");
  return p;
}

inline const UvHyperParams& validate_hyperparams(const UvHyperParams& p, std::size_t b = 1) {
  if (b != 1) throw ValidationError("univariate hyperparameters require b = 1");
  detail::require_positive(p.alpha, "alpha");
  detail::require_positive(p.tau, "tau");
  detail::require_positive(p.gamma, "gamma");
  detail::require_positive(p.delta, "delta");
  if (!std::isfinite(p.mu)) throw ValidationError("mu must be finite");
  return p;
}

inline const HyperParams& validate_hyperparams(const HyperParams& p, std::size_t b) {
  std::visit([b](const auto& q) { validate_hyperparams(q, b); }, p);
  return p;
}

}  // namespace exicl
