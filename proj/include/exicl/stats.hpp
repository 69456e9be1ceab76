#pragma once

#include <cstddef>
#include <span>

#include "exicl/types.hpp"

namespace exicl {

/// Count, mean and centred scatter matrix of one group.
struct GroupStats {
  std::size_t count = 0;
  Vector mean;
  Matrix scatter;

  GroupStats() = default;
  explicit GroupStats(std::size_t b) : mean(Vector::Zero(b)), scatter(Matrix::Zero(b, b)) {}

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  bool empty() const { return count == 0; }
};

template <class Row>
GroupStats& stats_add(GroupStats& s, const Row& x) {
  const Vector v = x.transpose();
  ++s.count;
  const Vector d = v - s.mean;
  s.mean += d / static_cast<double>(s.count);
  // d is taken against the old mean, so the weight is (n-1)/n.
  s.scatter.noalias() += (static_cast<double>(s.count - 1) / static_cast<double>(s.count)) * d * d.transpose();
  return s;
}

template <class Row>
GroupStats& stats_remove(GroupStats& s, const Row& x) {
  if (s.count == 0) throw ValidationError("cannot remove an observation from an empty group");
  const Vector v = x.transpose();
  if (s.count == 1) {
    s.count = 0;
    s.mean.setZero();
    s.scatter.setZero();
    return s;
  }
  const double n = static_cast<double>(s.count);
  const Vector reduced = (n * s.mean - v) / (n - 1.0);
  const Vector d = v - reduced;
  s.scatter.noalias() -= ((n - 1.0) / n) * d * d.transpose();
  s.mean = reduced;
  --s.count;
  if (s.count == 1) s.scatter.setZero();
  return s;
}

/// Pooled statistics of two disjoint groups.
inline GroupStats stats_merge(const GroupStats& a, const GroupStats& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  GroupStats out;
  out.count = a.count + b.count;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  const Vector d = b.mean - a.mean;
  out.mean = a.mean + (nb / n) * d;
  out.scatter = a.scatter + b.scatter + (na * nb / n) * d * d.transpose();
  return out;
}

/// Statistics of `whole` with the sub-group `part` taken out.
inline GroupStats stats_subtract(const GroupStats& whole, const GroupStats& part) {
  if (part.count > whole.count) throw ValidationError("cannot subtract a larger group");
  if (part.empty()) return whole;
  GroupStats out(whole.dim());
  out.count = whole.count - part.count;
  if (out.count == 0) return out;
  const double nw = static_cast<double>(whole.count);
  const double np = static_cast<double>(part.count);
  const double nr = nw - np;
  out.mean = (nw * whole.mean - np * part.mean) / nr;
  if (out.count > 1) {
    const Vector d = part.mean - out.mean;
    out.scatter = whole.scatter - part.scatter - (nr * np / nw) * d * d.transpose();
  }
  return out;
}

/// Two-pass statistics over the given rows of `data`.
inline GroupStats compute_stats(const DataSet& data, std::span<const std::size_t> rows) {
  GroupStats s(data.b());
  s.count = rows.size();
  if (rows.empty()) return s;
  for (std::size_t i : rows) s.mean += data.row(i).transpose();
  s.mean /= static_cast<double>(rows.size());
  if (rows.size() > 1) {
    for (std::size_t i : rows) {
      const Vector d = data.row(i).transpose() - s.mean;
      s.scatter.noalias() += d * d.transpose();
    }
  }
  return s;
}

/// One GroupStats per label of a compact allocation, computed from scratch.
inline std::vector<GroupStats> compute_group_stats(const DataSet& data, const Allocation& z) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(z.K()));
  for (std::size_t i = 0; i < z.size(); ++i) members[static_cast<std::size_t>(z[i] - 1)].push_back(i);
  std::vector<GroupStats> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(compute_stats(data, m));
  return out;
}

}  // namespace exicl
