#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "exicl/icl.hpp"
#include "exicl/stats.hpp"
#include "exicl/types.hpp"

namespace exicl {

/// Allocation plus per-group sufficient statistics plus the cached ICL.
///
/// Groups are indexed 1..K as in the allocation. Every applied move deletes
/// groups it empties and relabels by first appearance, so the state is always
/// compact. A state borrows its data and prior; both must outlive it.
template <class Prior>
class ClusterState {
public:
  static constexpr std::size_t kRefreshInterval = 1000;

  ClusterState(const DataSet& data, const Prior& prior, const Allocation& init)
      : data_(&data), prior_(&prior), labels_(init.labels()) {
    if (init.size() != data.n())
      throw ValidationError("allocation length " + std::to_string(init.size()) +
                            " does not match n = " + std::to_string(data.n()));
    if (prior.dim() != data.b()) throw ValidationError("prior dimension does not match data");
    rebuild();
  }

  std::size_t n() const { return labels_.size(); }
  int K() const { return static_cast<int>(groups_.size()); }
  double icl() const { return icl_; }
  int group_of(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  Allocation allocation() const { return Allocation(labels_); }
  const DataSet& data() const { return *data_; }
  const Prior& prior() const { return *prior_; }

  const GroupStats& stats(int g) const { return groups_[idx(g)].stats; }
  const std::vector<std::size_t>& members(int g) const { return groups_[idx(g)].members; }
  double group_evidence(int g) const { return groups_[idx(g)].evidence; }
  std::size_t accepted_moves() const { return accepted_; }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c;
    c.reserve(groups_.size());
    for (const auto& g : groups_) c.push_back(g.stats.count);
    return c;
  }

  /// Exact change in ICL from moving `block` to group `target` (K+1 = new group).
  /// Only the source, target and prior terms are re-evaluated.
  double delta(std::span<const std::size_t> block, int target) const {
    if (block.empty()) return 0.0;
    const int source = common_group(block);
    check_target(target);
    if (target == source) return 0.0;
    return delta_with(compute_stats(*data_, block), source, target);
  }

  /// Same as delta() but with the block statistics supplied by the caller.
  double delta_with(const GroupStats& block, int source, int target) const {
    const Group& src = groups_[idx(source)];
    const bool fresh = target == K() + 1;
    const std::size_t nb = block.count;
    const std::size_t ns = src.stats.count;

    const GroupStats src_after = stats_subtract(src.stats, block);
    double d_data = prior_->log_evidence(src_after) - src.evidence;
    std::size_t nt = 0;
    if (fresh) {
      d_data += prior_->log_evidence(block);
    } else {
      const Group& tgt = groups_[idx(target)];
      nt = tgt.stats.count;
      d_data += prior_->log_evidence(stats_merge(tgt.stats, block)) - tgt.evidence;
    }

    const int k_after = K() - (nb == ns ? 1 : 0) + (fresh ? 1 : 0);
    const double d_prior = k_part(k_after) - k_part(K()) + count_term(ns - nb) - count_term(ns) +
                           count_term(nt + nb) - count_term(nt);
    return d_data + d_prior;
  }

  /// Moves `block` to `target` and adds `delta` to the cached ICL. The caller
  /// passes the value returned by delta() for the same move.
  void apply(std::span<const std::size_t> block, int target, double delta) {
    if (block.empty()) return;
    const int source = common_group(block);
    check_target(target);
    if (target == source) return;

    if (target == K() + 1) groups_.push_back(Group{GroupStats(data_->b()), 0.0, {}});
    Group& tgt = groups_[idx(target)];
    Group& src = groups_[idx(source)];
    for (std::size_t i : block) {
      stats_remove(src.stats, data_->row(i));
      stats_add(tgt.stats, data_->row(i));
      erase_member(src, i);
      position_[i] = tgt.members.size();
      tgt.members.push_back(i);
      labels_[i] = target;
    }
    src.evidence = prior_->log_evidence(src.stats);
    tgt.evidence = prior_->log_evidence(tgt.stats);
    icl_ += delta;
    compact();

    if (++accepted_ % kRefreshInterval == 0) refresh_stats();
  }

  /// Recomputes statistics, evidences and the cached ICL from scratch.
  void rebuild() {
    const Allocation z(labels_);
    groups_.clear();
    groups_.resize(static_cast<std::size_t>(z.K()));
    position_.assign(labels_.size(), 0);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      Group& g = groups_[idx(labels_[i])];
      position_[i] = g.members.size();
      g.members.push_back(i);
    }
    refresh_stats();
    icl_ = icl_exact(*data_, z, *prior_).total;
  }

private:
  struct Group {
    GroupStats stats;
    double evidence = 0.0;
    std::vector<std::size_t> members;
  };

  static std::size_t idx(int g) { return static_cast<std::size_t>(g - 1); }

  double k_part(int k) const {
    const double a = prior_->alpha();
    const double kk = static_cast<double>(k);
    return std::lgamma(kk * a) - std::lgamma(kk * a + static_cast<double>(labels_.size()));
  }

  double count_term(std::size_t c) const {
    if (c == 0) return 0.0;
    const double a = prior_->alpha();
    return std::lgamma(a + static_cast<double>(c)) - std::lgamma(a);
  }

  int common_group(std::span<const std::size_t> block) const {
    const int g = labels_.at(block.front());
    for (std::size_t i : block)
      if (labels_.at(i) != g) throw ValidationError("block members belong to different groups");
    return g;
  }

  void check_target(int target) const {
    if (target < 1 || target > K() + 1)
      throw ValidationError("target group " + std::to_string(target) + " outside 1..K+1");
  }

  void erase_member(Group& g, std::size_t i) {
    const std::size_t p = position_[i];
    const std::size_t last = g.members.back();
    g.members[p] = last;
    position_[last] = p;
    g.members.pop_back();
  }

  void refresh_stats() {
    for (auto& g : groups_) {
      g.stats = compute_stats(*data_, g.members);
      g.evidence = prior_->log_evidence(g.stats);
    }
  }

  // Drops empty groups and renumbers by order of first appearance in labels_.
  void compact() {
    std::vector<int> map(groups_.size() + 1, 0);
    int next = 0;
    for (int g : labels_)
      if (map[static_cast<std::size_t>(g)] == 0) map[static_cast<std::size_t>(g)] = ++next;
    bool identity = next == K();
    for (int g = 1; identity && g <= K(); ++g) identity = map[static_cast<std::size_t>(g)] == g;
    if (identity) return;

    std::vector<Group> renumbered(static_cast<std::size_t>(next));
    for (int g = 1; g <= K(); ++g) {
      const int to = map[static_cast<std::size_t>(g)];
      if (to != 0) renumbered[idx(to)] = std::move(groups_[idx(g)]);
    }
    groups_ = std::move(renumbered);
    for (int& g : labels_) g = map[static_cast<std::size_t>(g)];
  }

  const DataSet* data_;
  const Prior* prior_;
  std::vector<int> labels_;
  std::vector<Group> groups_;
  std::vector<std::size_t> position_;
  double icl_ = 0.0;
  std::size_t accepted_ = 0;
};

/// icl_exact(after) - icl_exact(before) for moving `block` to `target`; the state is untouched.
template <class Prior>
double icl_delta(const ClusterState<Prior>& state, std::span<const std::size_t> block, int target) {
  return state.delta(block, target);
}

}  // namespace exicl
