#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "exicl/exicl.hpp"
#include "oracles.hpp"

using namespace exicl;
using exicl::testing::chain_rule_evidence;
using exicl::testing::prior_total_mass;
using exicl::testing::quadrature_evidence_1d;
using exicl::testing::random_data;
using exicl::testing::two_pass;

namespace {

MvHyperParams mv(std::size_t b, double tau, double nu, double omega, double alpha = 4.0) {
  MvHyperParams p;
  p.alpha = alpha;
  p.tau = tau;
  p.mu = Vector::Zero(static_cast<Eigen::Index>(b));
  p.nu = nu;
  p.omega = omega;
  return p;
}

std::vector<Vector> rows_of(const DataSet& d) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < d.n(); ++i) out.push_back(d.row(i).transpose());
  return out;
}

}  // namespace

TEST(GroupEvidence, EmptyGroupIsExactlyZero) {
  EXPECT_EQ(group_log_evidence(GroupStats(3), mv(3, 0.1, 4.0, 2.0)), 0.0);
  EXPECT_EQ(group_log_evidence_1d(GroupStats(1), UvHyperParams{}), 0.0);
}

TEST(GroupEvidence, SingleObservationAtCentre) {
  // Student-t with nu - b + 1 = 2 df and identity scale, at its centre: 1 / (2 pi).
  GroupStats s(2);
  stats_add(s, Vector::Zero(2).transpose());
  EXPECT_NEAR(group_log_evidence(s, mv(2, 1.0, 3.0, 1.0)), -std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(group_log_evidence(s, mv(2, 1.0, 3.0, 1.0)), -1.837877, 1e-6);
}

TEST(GroupEvidence, UnivariateSingleObservationAtCentre) {
  UvHyperParams p;
  p.tau = 1.0;
  p.gamma = 0.5;
  p.delta = 0.5;
  GroupStats s(1);
  Vector x(1);
  x << p.mu;
  stats_add(s, x.transpose());
  EXPECT_NEAR(group_log_evidence_1d(s, p), -std::log(std::numbers::pi * std::sqrt(2.0)), 1e-12);
}

TEST(GroupEvidence, ThreePointsMatchChainRule) {
  const DataSet d = random_data(3, 2, 17);
  const auto p = mv(2, 0.3, 3.5, 0.7);
  const double closed = group_log_evidence(two_pass(rows_of(d), 2), p);
  EXPECT_NEAR(closed, chain_rule_evidence(rows_of(d), p), 1e-10);
}

TEST(GroupEvidence, ChainRuleStepIsStudentT) {
  // evidence(n) - evidence(n - 1) is the one-step predictive of the last point.
  const DataSet d = random_data(7, 3, 4);
  const auto p = mv(3, 0.05, 5.0, 1.3);
  auto pts = rows_of(d);
  const double full = group_log_evidence(two_pass(pts, 3), p);
  const Vector last = pts.back();
  pts.pop_back();
  const double prev = group_log_evidence(two_pass(pts, 3), p);
  const double step = chain_rule_evidence(rows_of(d), p) - chain_rule_evidence(pts, p);
  EXPECT_NEAR(full - prev, step, 1e-9);
}

TEST(GroupEvidence, UnivariateMatchesQuadrature) {
  const DataSet d = random_data(4, 1, 23);
  UvHyperParams p;
  p.tau = 0.5;
  p.mu = 0.2;
  p.gamma = 1.5;
  p.delta = 0.8;
  std::vector<double> xs;
  for (std::size_t k = 1; k <= 4; ++k) {
    xs.push_back(d.row(k - 1)(0));
    std::vector<std::size_t> rows(k);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const GroupStats s = compute_stats(d, rows);
    EXPECT_NEAR(group_log_evidence_1d(s, p), quadrature_evidence_1d(xs, p), 1e-6) << "n_g = " << k;
  }
}

TEST(GroupEvidence, UnivariateEqualsOneDimensionalWishart) {
  // Ga(gamma, delta) is the 1-D Wishart with nu = 2 gamma and xi = 2 delta.
  const DataSet d = random_data(6, 1, 2);
  std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  const auto s = compute_stats(d, all);
  UvHyperParams u;
  u.tau = 0.3;
  u.gamma = 1.2;
  u.delta = 0.4;
  MvHyperParams m = mv(1, 0.3, 2.4, 0.8);
  EXPECT_NEAR(group_log_evidence_1d(s, u), group_log_evidence(s, m), 1e-10);
}

TEST(AllocationPrior, SingleGroupIsZero) {
  for (double alpha : {0.3, 1.0, 4.0, 17.0}) {
    const std::vector<std::size_t> c{11};
    EXPECT_EQ(allocation_log_prior(c, alpha, 11), 0.0);
  }
}

TEST(AllocationPrior, TwoSingletons) {
  const std::vector<std::size_t> c{1, 1};
  EXPECT_NEAR(allocation_log_prior(c, 1.0, 2), -std::log(6.0), 1e-12);
}

TEST(AllocationPrior, ZeroCountIsError) {
  const std::vector<std::size_t> c{2, 0, 1};
  EXPECT_THROW(allocation_log_prior(c, 1.0, 3), ValidationError);
  const std::vector<std::size_t> ok{2, 1};
  EXPECT_THROW(allocation_log_prior(ok, 1.0, 4), ValidationError);
}

TEST(AllocationPrior, NormalisesOverLabelVectors) {
  EXPECT_NEAR(prior_total_mass(3, 2, 0.5), 1.0, 1e-12);
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t k = 1; k <= 3; ++k)
      for (double alpha : {0.5, 4.0, 10.0}) EXPECT_NEAR(prior_total_mass(n, k, alpha), 1.0, 1e-10);
}

TEST(IclExact, AdditiveOverGroups) {
  const DataSet d = random_data(12, 2, 31);
  const auto p = mv(2, 0.1, 3.0, 1.0);
  const Allocation z({1, 2, 3, 1, 2, 3, 1, 1, 2, 2, 3, 1});
  const IclValue v = icl_exact(d, z, HyperParams{p});
  double data_term = 0.0;
  for (const auto& s : compute_group_stats(d, z)) data_term += group_log_evidence(s, p);
  EXPECT_NEAR(v.data_term, data_term, 1e-10);
  EXPECT_NEAR(v.prior_term, allocation_log_prior(z.counts(), p.alpha, 12), 1e-12);
  EXPECT_EQ(v.total, v.data_term + v.prior_term);
}

TEST(IclExact, LabelPermutationIsBitwiseInvariant) {
  const DataSet d = random_data(15, 2, 41);
  const NormalWishart prior(mv(2, 0.1, 3.0, 1.0), 2);
  std::vector<int> z{1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 1};
  const double base = icl_exact(d, Allocation(z), prior).total;
  std::vector<int> perm{1, 2, 3, 4};
  while (std::next_permutation(perm.begin(), perm.end())) {
    std::vector<int> w(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) w[i] = perm[static_cast<std::size_t>(z[i] - 1)];
    EXPECT_EQ(icl_exact(d, Allocation(w), prior).total, base);
  }
}

TEST(IclExact, ObservationPermutationInvariant) {
  const DataSet d = random_data(20, 3, 43);
  const NormalWishart prior(mv(3, 0.05, 4.0, 0.5), 3);
  std::vector<int> z(20);
  for (std::size_t i = 0; i < 20; ++i) z[i] = static_cast<int>(i % 3) + 1;
  std::vector<std::size_t> order(20);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), std::mt19937_64(5));
  RowMatrix x(20, 3);
  std::vector<int> w(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x.row(static_cast<Eigen::Index>(i)) = d.row(order[i]);
    w[i] = z[order[i]];
  }
  EXPECT_NEAR(icl_exact(DataSet(x), relabel_compact(w), prior).total, icl_exact(d, Allocation(z), prior).total,
              1e-10);
}

TEST(IclExact, SingleObservationComposition) {
  RowMatrix x(1, 2);
  x << 0.0, 0.0;
  for (double alpha : {0.5, 4.0}) {
    const auto v = icl_exact(DataSet(x), Allocation({1}), HyperParams{mv(2, 1.0, 3.0, 1.0, alpha)});
    EXPECT_NEAR(v.total, -std::log(2.0 * std::numbers::pi), 1e-12);
    EXPECT_EQ(v.prior_term, 0.0);
  }
}

TEST(IclExact, LengthMismatchIsError) {
  const DataSet d = random_data(3, 2, 1);
  EXPECT_THROW(icl_exact(d, Allocation({1, 1}), HyperParams{mv(2, 1.0, 3.0, 1.0)}), ValidationError);
}

TEST(IclDelta, EmptyBlockIsZero) {
  const DataSet d = random_data(10, 2, 3);
  const NormalWishart prior(mv(2, 0.1, 3.0, 1.0), 2);
  ClusterState<NormalWishart> s(d, prior, Allocation({1, 1, 2, 2, 1, 2, 1, 2, 1, 2}));
  EXPECT_EQ(icl_delta(s, {}, 1), 0.0);
}

TEST(IclDelta, WholeGroupToFreshIsPriorChangeOnly) {
  const DataSet d = random_data(10, 2, 3);
  const NormalWishart prior(mv(2, 0.1, 3.0, 1.0), 2);
  ClusterState<NormalWishart> s(d, prior, Allocation({1, 1, 2, 2, 1, 2, 1, 2, 1, 2}));
  const std::vector<std::size_t> block{2, 3, 5, 7, 9};
  // K stays 2 and the counts are relabelled, so the prior change is zero too.
  EXPECT_NEAR(icl_delta(s, block, 3), 0.0, 1e-10);
}

TEST(IclDelta, MixedSourceGroupsIsError) {
  const DataSet d = random_data(4, 2, 3);
  const NormalWishart prior(mv(2, 0.1, 3.0, 1.0), 2);
  ClusterState<NormalWishart> s(d, prior, Allocation({1, 2, 1, 2}));
  const std::vector<std::size_t> block{0, 1};
  EXPECT_THROW(icl_delta(s, block, 1), ValidationError);
  const std::vector<std::size_t> one{0};
  EXPECT_THROW(icl_delta(s, one, 4), ValidationError);
}

TEST(IclDelta, MatchesFullRecomputation) {
  const DataSet d = random_data(80, 2, 12, 2.0);
  const NormalWishart prior(mv(2, 0.05, 3.0, 0.8, 1.5), 2);
  std::mt19937_64 rng(77);
  std::vector<int> raw(80);
  for (auto& g : raw) g = std::uniform_int_distribution<int>(1, 5)(rng);
  ClusterState<NormalWishart> state(d, prior, relabel_compact(raw));
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, 79)(rng);
    auto members = state.members(state.group_of(i));
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t size = std::uniform_int_distribution<std::size_t>(1, members.size())(rng);
    const std::vector<std::size_t> block(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(size));
    const int target = std::uniform_int_distribution<int>(1, state.K() + 1)(rng);

    const double before = icl_exact(d, state.allocation(), prior).total;
    std::vector<int> moved = state.labels();
    for (std::size_t j : block) moved[j] = target;
    const double after = icl_exact(d, relabel_compact(moved), prior).total;
    const double delta = icl_delta(state, block, target);
    ASSERT_NEAR(delta, after - before, 1e-8) << "trial " << trial;
    if (trial % 3 == 0) state.apply(block, target, delta);
  }
}

TEST(IclDelta, UnivariateMatchesFullRecomputation) {
  const DataSet d = random_data(40, 1, 8);
  UvHyperParams p;
  p.tau = 0.01;
  p.gamma = 1.0;
  p.delta = 0.1;
  p.alpha = 0.5;
  const NormalGamma prior(p);
  std::mt19937_64 rng(3);
  std::vector<int> raw(40);
  for (auto& g : raw) g = std::uniform_int_distribution<int>(1, 3)(rng);
  ClusterState<NormalGamma> state(d, prior, relabel_compact(raw));
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, 39)(rng);
    const std::vector<std::size_t> block{i};
    const int target = std::uniform_int_distribution<int>(1, state.K() + 1)(rng);
    std::vector<int> moved = state.labels();
    moved[i] = target;
    const double expect =
        icl_exact(d, relabel_compact(moved), prior).total - icl_exact(d, state.allocation(), prior).total;
    const double delta = icl_delta(state, block, target);
    ASSERT_NEAR(delta, expect, 1e-8);
    state.apply(block, target, delta);
    ASSERT_NEAR(state.icl(), icl_exact(d, state.allocation(), prior).total, 1e-8);
  }
}
