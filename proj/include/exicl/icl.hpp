#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "exicl/stats.hpp"
#include "exicl/types.hpp"

namespace exicl {

/// Exact ICL split into its collapsed likelihood and allocation-prior parts.
struct IclValue {
  double total = 0.0;
  double data_term = 0.0;
  double prior_term = 0.0;
};

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace detail

/// Sum that depends only on the multiset of addends: sorted, then pairwise.
inline double stable_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  return detail::pairwise_sum(terms);
}

/// Collapsed Normal-Wishart evidence of one group, log f(x_g | phi).
///
/// The Wishart is parameterised so that xi enters the posterior scale
/// additively: xi + scatter + tau n / (tau + n) (xbar - mu)(xbar - mu)^t.
class NormalWishart {
public:
  using params_type = MvHyperParams;

  NormalWishart(const MvHyperParams& p, std::size_t b) : p_(validate_hyperparams(p, b)), b_(b) {
    xi_ = p_.xi();
    Eigen::LLT<Matrix> llt(xi_);
    if (llt.info() != Eigen::Success) throw ValidationError("xi must be positive definite");
    log_det_xi_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }

  double alpha() const { return p_.alpha; }
  std::size_t dim() const { return b_; }
  const MvHyperParams& params() const { return p_; }

  double log_evidence(const GroupStats& s) const {
    if (s.count == 0) return 0.0;
    const double n = static_cast<double>(s.count);
    const double b = static_cast<double>(b_);
    const double tau = p_.tau;
    const double nu = p_.nu;

    const Vector d = s.mean - p_.mu;
    Matrix post = xi_ + s.scatter;
    post.noalias() += (tau * n / (tau + n)) * d * d.transpose();
    Eigen::LLT<Matrix> llt(post);
    if (llt.info() != Eigen::Success)
      throw NumericalError("posterior scale matrix is not positive definite (n_g = " +
                           std::to_string(s.count) + ")");
    const double log_det_post = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(log_det_post)) throw NumericalError("non-finite log-determinant");

    double gammas = 0.0;
    for (std::size_t s_ = 1; s_ <= b_; ++s_) {
      const double k = static_cast<double>(s_);
      gammas += std::lgamma((nu + n + 1.0 - k) / 2.0) - std::lgamma((nu + 1.0 - k) / 2.0);
    }
    return -(b * n / 2.0) * std::log(std::numbers::pi) + (b / 2.0) * std::log(tau) -
           (b / 2.0) * std::log(tau + n) + gammas + (nu / 2.0) * log_det_xi_ -
           ((nu + n) / 2.0) * log_det_post;
  }

private:
  MvHyperParams p_;
  std::size_t b_;
  Matrix xi_;
  double log_det_xi_ = 0.0;
};

/// Collapsed Normal-Gamma evidence of one univariate group. Precision r ~ Ga(gamma, delta)
/// (rate delta), centre m | r ~ N(mu, 1 / (tau r)).
class NormalGamma {
public:
  using params_type = UvHyperParams;

  explicit NormalGamma(const UvHyperParams& p, std::size_t b = 1) : p_(validate_hyperparams(p, b)) {}

  double alpha() const { return p_.alpha; }
  std::size_t dim() const { return 1; }
  const UvHyperParams& params() const { return p_; }

  double log_evidence(const GroupStats& s) const {
    if (s.count == 0) return 0.0;
    const double n = static_cast<double>(s.count);
    const double tau = p_.tau;
    const double dm = s.mean(0) - p_.mu;
    const double rate = p_.delta + 0.5 * s.scatter(0, 0) + tau * n * dm * dm / (2.0 * (tau + n));
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw NumericalError("posterior rate is not positive (n_g = " + std::to_string(s.count) + ")");
    const double shape = p_.gamma + n / 2.0;
    return -(n / 2.0) * std::log(2.0 * std::numbers::pi) + 0.5 * (std::log(tau) - std::log(tau + n)) +
           std::lgamma(shape) - std::lgamma(p_.gamma) + p_.gamma * std::log(p_.delta) -
           shape * std::log(rate);
  }

private:
  UvHyperParams p_;
};

inline double group_log_evidence(const GroupStats& stats, const MvHyperParams& params) {
  return NormalWishart(params, stats.dim()).log_evidence(stats);
}

inline double group_log_evidence_1d(const GroupStats& stats, const UvHyperParams& params) {
  if (stats.dim() != 1) throw ValidationError("univariate evidence requires b = 1 statistics");
  return NormalGamma(params).log_evidence(stats);
}

/// Dirichlet-multinomial log mass of a label vector with the given per-label
/// counts. Zero counts are allowed and contribute nothing beyond K.
inline double dirichlet_multinomial_log_mass(std::span<const std::size_t> counts, double alpha) {
  const double k = static_cast<double>(counts.size());
  double n = 0.0;
  std::vector<double> terms;
  terms.reserve(counts.size());
  for (std::size_t c : counts) {
    n += static_cast<double>(c);
    terms.push_back(std::lgamma(alpha + static_cast<double>(c)) - std::lgamma(alpha));
  }
  return std::lgamma(k * alpha) - std::lgamma(k * alpha + n) + stable_sum(std::move(terms));
}

/// log pi(z | alpha, K) for a compact allocation given its group counts.
inline double allocation_log_prior(std::span<const std::size_t> counts, double alpha, std::size_t n) {
  if (counts.empty()) throw ValidationError("allocation prior needs at least one group");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be strictly positive");
  std::size_t total = 0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] == 0)
      throw ValidationError("group " + std::to_string(g + 1) + " is empty; allocation not compact");
    total += counts[g];
  }
  if (total != n) throw ValidationError("group counts do not sum to n");
  return dirichlet_multinomial_log_mass(counts, alpha);
}

template <class Prior>
IclValue icl_exact(const DataSet& data, const Allocation& z, const Prior& prior) {
  if (z.size() != data.n())
    throw ValidationError("allocation length " + std::to_string(z.size()) +
                          " does not match n = " + std::to_string(data.n()));
  const auto stats = compute_group_stats(data, z);
  std::vector<double> terms;
  terms.reserve(stats.size());
  for (const auto& s : stats) terms.push_back(prior.log_evidence(s));
  IclValue v;
  v.data_term = stable_sum(std::move(terms));
  v.prior_term = allocation_log_prior(z.counts(), prior.alpha(), data.n());
  v.total = v.data_term + v.prior_term;
  return v;
}

inline IclValue icl_exact(const DataSet& data, const Allocation& z, const HyperParams& params) {
  return std::visit(
      [&](const auto& p) -> IclValue {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MvHyperParams>)
          return icl_exact(data, z, NormalWishart(p, data.b()));
        else
          return icl_exact(data, z, NormalGamma(p, data.b()));
      },
      params);
}

}  // namespace exicl
