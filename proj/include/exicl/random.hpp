#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace exicl {

using Engine = std::mt19937_64;

/// Engine seeded from a master seed and a list of stream identifiers, so that
/// restarts and sub-streams never share state.
template <class... Ids>
Engine derive_engine(std::uint64_t seed, Ids... ids) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(ids)...};
  return Engine(seq);
}

inline double uniform01(Engine& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// log of a Gamma(shape, 1) draw. Shapes below one use the identity
/// G(a) = G(a + 1) U^(1/a), evaluated in logs so tiny shapes do not underflow.
inline double log_gamma_variate(Engine& rng, double shape) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return std::log(g) + std::log(u) / shape;
}

inline double gamma_variate(Engine& rng, double shape, double rate) {
  return std::exp(log_gamma_variate(rng, shape)) / rate;
}

/// Beta(a, b) as a ratio of gamma draws, stable for shapes far below one.
inline double beta_variate(Engine& rng, double a, double b) {
  const double la = log_gamma_variate(rng, a);
  const double lb = log_gamma_variate(rng, b);
  // a / (a + b) = 1 / (1 + exp(lb - la))
  const double d = lb - la;
  if (d > 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

inline double normal_variate(Engine& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace exicl
