#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "exicl/types.hpp"

namespace exicl {

enum class Metric { euclidean, manhattan };

inline Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "manhattan") return Metric::manhattan;
  throw ValidationError("unknown metric '" + name + "' (expected euclidean or manhattan)");
}

inline const char* to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "manhattan"; }

/// Dense symmetric n x n dissimilarities with a zero diagonal.
class DistanceMatrix {
public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(Matrix d) : d_(std::move(d)) {}

  std::size_t size() const { return static_cast<std::size_t>(d_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return d_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Matrix& matrix() const { return d_; }

private:
  Matrix d_;
};

inline DistanceMatrix distance_matrix(const DataSet& data, Metric metric = Metric::euclidean) {
  const auto n = static_cast<Eigen::Index>(data.n());
  Matrix d = Matrix::Zero(n, n);
  const RowMatrix& x = data.values();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto diff = x.row(i) - x.row(j);
      const double v = metric == Metric::euclidean ? diff.norm() : diff.cwiseAbs().sum();
      d(i, j) = v;
      d(j, i) = v;
    }
  return DistanceMatrix(std::move(d));
}

}  // namespace exicl
