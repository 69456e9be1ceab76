#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "exicl/distance.hpp"
#include "exicl/icl.hpp"
#include "exicl/random.hpp"
#include "exicl/state.hpp"
#include "exicl/types.hpp"

namespace exicl {

enum class Algorithm { plain, combined };

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "plain") return Algorithm::plain;
  if (name == "combined") return Algorithm::combined;
  throw ValidationError("unknown algorithm '" + name + "' (expected plain or combined)");
}

inline const char* to_string(Algorithm a) { return a == Algorithm::plain ? "plain" : "combined"; }

/// One visited observation, reported to SearchConfig::on_step.
struct StepInfo {
  int sweep = 0;
  std::size_t observation = 0;
  std::size_t block_size = 0;
  int k_before = 0;
  int candidates = 0;  // delta evaluations made for this visit
  int source = 0;
  int target = 0;      // argmax group, before relabelling
  double delta = 0.0;
  bool accepted = false;
  double icl_before = 0.0;
  double icl_after = 0.0;
};

struct SearchConfig {
  int max_sweeps = 15;
  int restarts = 10;
  double beta1 = 0.1;
  double beta2 = 0.01;
  std::optional<int> k_max = 20;
  double epsilon = 1e-10;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::combined;
  /// Worker threads for restarts; 0 picks ICL_THREADS or the hardware count.
  unsigned threads = 0;
  std::function<void(const StepInfo&)> on_step;

  static constexpr int kDefaultInitialGroups = 20;

  const SearchConfig& validate() const {
    if (max_sweeps < 1) throw ValidationError("max_sweeps must be >= 1");
    if (restarts < 1) throw ValidationError("restarts must be >= 1");
    if (!(beta1 > 0.0) || !std::isfinite(beta1)) throw ValidationError("beta1 must be > 0");
    if (!(beta2 > 0.0) || !std::isfinite(beta2)) throw ValidationError("beta2 must be > 0");
    if (k_max && *k_max < 1) throw ValidationError("k_max must be >= 1");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be finite and >= 0");
    return *this;
  }

  int initial_groups(std::size_t n) const {
    return static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(k_max.value_or(kDefaultInitialGroups))));
  }
};

struct TraceRecord {
  int sweep = 0;
  double icl = 0.0;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Solution {
  Allocation allocation;
  int K = 0;
  double icl = 0.0;
  std::vector<TraceRecord> trace;
  int restart_id = 0;
  int sweeps = 0;
  std::size_t evaluations = 0;
  std::size_t accepted_moves = 0;
  std::vector<double> restart_best;  // filled by multi_start, one entry per restart (NaN if it failed)
};

/// Separate streams for the visiting order and for block sizes, so that the
/// combined search with unit blocks visits observations exactly like the plain one.
struct SearchRng {
  Engine order;
  Engine blocks;

  static SearchRng from_seed(std::uint64_t seed, std::uint32_t restart = 0) {
    return {derive_engine(seed, restart, 0u), derive_engine(seed, restart, 1u)};
  }
};

/// Nearest-neighbour block around observation i inside its current group.
/// i comes first; other members follow by increasing distance, ties by index.
/// Block size is max(r, 1) with r ~ Binomial(|group|, eta), eta ~ Beta(beta1, beta2).
template <class Prior>
std::vector<std::size_t> neighbor_block(std::size_t i, const ClusterState<Prior>& state,
                                        const DistanceMatrix& dist, double beta1, double beta2,
                                        Engine& rng) {
  const auto& group = state.members(state.group_of(i));
  const double eta = beta_variate(rng, beta1, beta2);
  const int trials = static_cast<int>(group.size());
  int r = std::binomial_distribution<int>(trials, eta)(rng);
  const std::size_t size = static_cast<std::size_t>(std::max(r, 1));

  std::vector<std::size_t> block;
  block.reserve(group.size());
  block.push_back(i);
  if (size == 1) return block;
  for (std::size_t j : group)
    if (j != i) block.push_back(j);
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = dist(i, a), db = dist(i, b);
    return da < db || (da == db && a < b);
  };
  std::partial_sort(block.begin() + 1, block.begin() + static_cast<std::ptrdiff_t>(size), block.end(), closer);
  block.resize(size);
  return block;
}

namespace detail {

struct Candidate {
  int target = 0;
  double delta = 0.0;
  int evaluated = 0;
};

// argmax over groups 1..K (+ a fresh group while below k_max); ties go to the smallest label.
template <class Prior>
Candidate best_move(const ClusterState<Prior>& state, std::span<const std::size_t> block,
                    const SearchConfig& config) {
  const int source = state.group_of(block.front());
  const GroupStats bstats = compute_stats(state.data(), block);
  const int k = state.K();
  const bool allow_new = !config.k_max || k < *config.k_max;
  const int last = k + (allow_new ? 1 : 0);

  Candidate best{0, -std::numeric_limits<double>::infinity(), 0};
  for (int g = 1; g <= last; ++g) {
    const double d = g == source ? 0.0 : state.delta_with(bstats, source, g);
    ++best.evaluated;
    if (d > best.delta) {
      best.delta = d;
      best.target = g;
    }
  }
  return best;
}

template <class Prior, class BlockFn>
Solution run_search(const DataSet& data, const Prior& prior, const Allocation& init,
                    const SearchConfig& config, SearchRng& rng, BlockFn&& make_block) {
  config.validate();
  ClusterState<Prior> state(data, prior, init);
  Solution sol;
  sol.trace.push_back({0, state.icl()});

  std::vector<std::size_t> order(data.n());
  bool confirming = false;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.order);
    bool moved = false;
    bool all_single = true;
    for (std::size_t i : order) {
      const std::vector<std::size_t> block = confirming ? std::vector<std::size_t>{i} : make_block(i, state);
      all_single = all_single && block.size() == 1;
      const Candidate c = best_move(state, block, config);
      sol.evaluations += static_cast<std::size_t>(c.evaluated);
      StepInfo info;
      if (config.on_step) {
        info.sweep = sweep;
        info.observation = i;
        info.block_size = block.size();
        info.k_before = state.K();
        info.candidates = c.evaluated;
        info.source = state.group_of(i);
        info.target = c.target;
        info.delta = c.delta;
        info.icl_before = state.icl();
      }
      const bool accept = c.target != state.group_of(i) && c.delta > config.epsilon;
      if (accept) {
        state.apply(block, c.target, c.delta);
        moved = true;
      }
      if (config.on_step) {
        info.accepted = accept;
        info.icl_after = state.icl();
        config.on_step(info);
      }
    }
    sol.sweeps = sweep;
    sol.trace.push_back({sweep, state.icl()});
    // Stop once a sweep without accepted moves has tried every observation on
    // its own; after a quiet sweep with larger blocks, run one such sweep.
    if (!moved && all_single) break;
    confirming = !moved;
  }

  sol.allocation = state.allocation();
  sol.K = state.K();
  sol.icl = icl_exact(data, sol.allocation, prior).total;
  sol.accepted_moves = state.accepted_moves();
  return sol;
}

}  // namespace detail

/// Single-observation greedy ICL: each visited observation moves to the group
/// (or a fresh one) that maximises the exact ICL.
template <class Prior>
Solution greedy_icl(const DataSet& data, const Prior& prior, const Allocation& init,
                    const SearchConfig& config, SearchRng& rng) {
  return detail::run_search(data, prior, init, config, rng,
                            [](std::size_t i, const ClusterState<Prior>&) { return std::vector<std::size_t>{i}; });
}

/// Greedy combined ICL: nearest-neighbour blocks of the visited observation's
/// group move as a unit.
template <class Prior>
Solution greedy_combined_icl(const DataSet& data, const Prior& prior, const Allocation& init,
                             const SearchConfig& config, const DistanceMatrix& dist, SearchRng& rng) {
  if (dist.size() != data.n()) throw ValidationError("distance matrix does not cover all observations");
  return detail::run_search(data, prior, init, config, rng, [&](std::size_t i, const ClusterState<Prior>& s) {
    return neighbor_block(i, s, dist, config.beta1, config.beta2, rng.blocks);
  });
}

/// Uniformly random labels in 1..k, compacted.
inline Allocation random_allocation(std::size_t n, int k, Engine& rng) {
  std::uniform_int_distribution<int> pick(1, std::max(k, 1));
  std::vector<int> raw(n);
  for (auto& g : raw) g = pick(rng);
  return relabel_compact(raw);
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested == 0) {
    if (const char* env = std::getenv("ICL_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(env, &end, 10);
      if (end != env && *end == '\0') requested = static_cast<unsigned>(v);
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

/// Independent restarts from random allocations; the best ICL wins (ties go
/// to the lowest restart index). Deterministic for a fixed seed regardless
/// of thread count.
template <class Prior>
Solution multi_start(const DataSet& data, const Prior& prior, const SearchConfig& config,
                     const DistanceMatrix* dist = nullptr) {
  config.validate();
  if (config.algorithm == Algorithm::combined && dist == nullptr)
    throw ValidationError("the combined search needs a distance matrix");

  const auto restarts = static_cast<std::size_t>(config.restarts);
  std::vector<std::optional<Solution>> results(restarts);
  std::vector<std::string> errors(restarts);

  auto run_one = [&](std::size_t r) {
    try {
      const auto id = static_cast<std::uint32_t>(r);
      Engine init_rng = derive_engine(config.seed, id, 2u);
      const Allocation init = random_allocation(data.n(), config.initial_groups(data.n()), init_rng);
      SearchRng rng = SearchRng::from_seed(config.seed, id);
      Solution s = config.algorithm == Algorithm::combined
                       ? greedy_combined_icl(data, prior, init, config, *dist, rng)
                       : greedy_icl(data, prior, init, config, rng);
      s.restart_id = static_cast<int>(r);
      results[r] = std::move(s);
    } catch (const NumericalError& e) {
      errors[r] = e.what();
    }
  };

  const unsigned workers = std::min<unsigned>(resolve_threads(config.threads), static_cast<unsigned>(restarts));
  if (workers <= 1) {
    for (std::size_t r = 0; r < restarts; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < restarts; r += workers) run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  std::optional<std::size_t> best;
  std::vector<double> per_restart(restarts, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < restarts; ++r) {
    if (!results[r]) {
      std::cerr << "exicl: restart " << r << " failed: " << errors[r] << '\n';
      continue;
    }
    per_restart[r] = results[r]->icl;
    if (!best || results[r]->icl > results[*best]->icl) best = r;
  }
  if (!best) throw NumericalError("all " + std::to_string(restarts) + " restarts failed: " + errors.front());

  Solution out = std::move(*results[*best]);
  out.restart_best = std::move(per_restart);
  return out;
}

}  // namespace exicl
