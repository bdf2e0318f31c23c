#ifndef SKEPTIC_EMBED_HPP
#define SKEPTIC_EMBED_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "divergence.hpp"
#include "fbm.hpp"
#include "game.hpp"
#include "mixture.hpp"
#include "strategies.hpp"

namespace skeptic {

/// Coin-tossing game extracted from a price path by limit orders at +-eta on
/// the log-price grid eta * Z anchored at log S(0).
struct EmbeddedGame {
  int level = 0;
  double eta = 1.0;
  double delta = 0.0;      // e^eta - 1
  double rho_delta = 0.5;  // 1 / (2 + delta)
  PathPrefix bits;
  std::vector<std::size_t> trading_samples;  // sample index at (or just after) each trading time
  std::vector<std::int64_t> grid_levels;     // grid index after each round; starts at 0
  std::size_t multi_level_segments = 0;      // sample segments that crossed more than one level

  std::size_t rounds() const { return bits.size(); }
};

inline double grid_spacing(int level) { return std::ldexp(1.0, -level); }

/// Trading times are the first times the linearly interpolated log-price
/// reaches the next grid level above or below the last traded level. Scaling
/// by 2^k is exact in floating point, so the grids of all levels are nested.
inline EmbeddedGame embed(const PricePath& path, int level) {
  path.validate();
  if (level < 0 || level > 40) throw std::invalid_argument("embed: grid level must be in [0, 40]");
  EmbeddedGame game;
  game.level = level;
  game.eta = grid_spacing(level);
  game.delta = std::expm1(game.eta);
  game.rho_delta = 1.0 / (2.0 + game.delta);
  game.grid_levels.push_back(0);

  const double origin = path.log_price.front();
  std::int64_t current = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    // position in grid units; exact power-of-two scaling
    const double u = std::ldexp(path.log_price[i] - origin, level);
    std::size_t crossed = 0;
    while (u >= static_cast<double>(current + 1)) {
      ++current;
      game.bits.push_back(1);
      game.trading_samples.push_back(i);
      game.grid_levels.push_back(current);
      ++crossed;
    }
    while (u <= static_cast<double>(current - 1)) {
      --current;
      game.bits.push_back(0);
      game.trading_samples.push_back(i);
      game.grid_levels.push_back(current);
      ++crossed;
    }
    if (crossed > 1) ++game.multi_level_segments;
  }
  return game;
}

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A synthesized path fine enough that no sample segment jumps more than one
/// grid level at the finest requested level.
struct RefinedPath {
  PricePath path;
  std::size_t n_grid = 0;
  int doublings = 0;
};

/// Smallest power of two whose increment standard deviation T^H n^{-H} is at most
/// half the finest grid spacing; a starting point for the refinement loop.
inline std::size_t initial_grid(double hurst, double horizon, int finest_level) {
  const double target = 0.5 * grid_spacing(finest_level);
  std::size_t n = 1024;
  while (n < max_fbm_grid(hurst) && std::pow(horizon / static_cast<double>(n), hurst) > target) n *= 2;
  return n;
}

/// Doubles n_grid (redrawing the path from the same seed and stream) until the
/// embedding at `finest_level` has no multi-level segments.
inline RefinedPath synthesize_refined(double hurst, double horizon, int finest_level, std::size_t n_grid,
                                      std::uint64_t seed, std::uint64_t stream) {
  if (!is_power_of_two(n_grid)) throw std::invalid_argument("n_grid must be a power of two");
  RefinedPath out;
  for (;;) {
    out.path = fbm_path(hurst, horizon, n_grid, seed, stream);
    out.n_grid = n_grid;
    if (embed(out.path, finest_level).multi_level_segments == 0) return out;
    if (n_grid * 2 > max_fbm_grid(hurst))
      throw EmbeddingError("level " + std::to_string(finest_level) + ": samples still jump several grid levels at n_grid " +
                           std::to_string(n_grid) + " (refinement cap reached)");
    n_grid *= 2;
    ++out.doublings;
  }
}

/// Per-level pair and single counts of an embedded game. Pair tables are
/// indexed 2*i + j for the pair (ij).
struct LevelCounts {
  int level = 0;
  std::size_t n = 0;
  std::uint64_t q1 = 0;
  std::uint64_t q0 = 0;
  std::array<std::uint64_t, 4> q{};        // overlapping pairs (x_{i-1} x_i)
  std::array<std::uint64_t, 4> m{};        // pairs (x1 x2)(x3 x4)...
  std::array<std::uint64_t, 4> m_shift{};  // pairs (x2 x3)(x4 x5)...
  Bit first = 0;
  Bit last = 0;

  static LevelCounts of(const EmbeddedGame& game) {
    LevelCounts c;
    c.level = game.level;
    c.n = game.rounds();
    const auto& x = game.bits;
    for (std::size_t i = 0; i < x.size(); ++i) {
      (x[i] ? c.q1 : c.q0) += 1;
      if (i > 0) ++c.q[2 * x[i - 1] + x[i]];
    }
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) ++c.m[2 * x[i] + x[i + 1]];
    for (std::size_t i = 1; i + 1 < x.size(); i += 2) ++c.m_shift[2 * x[i] + x[i + 1]];
    if (!x.empty()) {
      c.first = x[0];
      c.last = x[x.size() - 1];
    }
    return c;
  }
};

struct VariationStats {
  double total_variation = 0.0;  // n_k eta_k
  double net_change = 0.0;       // (q^1 - q^0) eta_k
  double growth_ratio = 0.0;     // n_{k+1} / n_k, NaN at the finest level
};

struct NestedCounts {
  std::vector<LevelCounts> levels;
  std::vector<VariationStats> variation;
};

/// Counts at levels k_min..k_max of the same path.
inline NestedCounts nested_counts(const PricePath& path, int k_min, int k_max) {
  if (k_min > k_max) throw std::invalid_argument("nested_counts: empty level range");
  NestedCounts out;
  for (int k = k_min; k <= k_max; ++k) {
    const EmbeddedGame g = embed(path, k);
    out.levels.push_back(LevelCounts::of(g));
  }
  for (std::size_t i = 0; i < out.levels.size(); ++i) {
    const auto& c = out.levels[i];
    const double eta = grid_spacing(c.level);
    VariationStats v;
    v.total_variation = static_cast<double>(c.n) * eta;
    v.net_change = (static_cast<double>(c.q1) - static_cast<double>(c.q0)) * eta;
    v.growth_ratio = i + 1 < out.levels.size() && c.n > 0
                         ? static_cast<double>(out.levels[i + 1].n) / static_cast<double>(c.n)
                         : std::nan("");
    out.variation.push_back(v);
  }
  return out;
}

/// Violations of the nesting identities m^{11}_{n_k/2} = q^1_{n_{k-1}} and
/// m^{00}_{n_k/2} = q^0_{n_{k-1}} between consecutive levels; empty when all hold.
inline std::vector<std::string> nesting_violations(const NestedCounts& counts) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < counts.levels.size(); ++i) {
    const auto& coarse = counts.levels[i - 1];
    const auto& fine = counts.levels[i];
    if (fine.m[3] != coarse.q1)
      out.push_back("level " + std::to_string(fine.level) + ": m11=" + std::to_string(fine.m[3]) +
                    " but coarse q1=" + std::to_string(coarse.q1));
    if (fine.m[0] != coarse.q0)
      out.push_back("level " + std::to_string(fine.level) + ": m00=" + std::to_string(fine.m[0]) +
                    " but coarse q0=" + std::to_string(coarse.q0));
  }
  return out;
}

/// Growth of the two strategies on one embedded game, with the regularity diagnostics.
struct LevelGrowth {
  int level = 0;
  std::size_t rounds = 0;
  double rho_delta = 0.5;
  double markov_rate = 0.0;  // (1/n_k) log K of the order-1 Markovian strategy
  double block_rate = 0.0;   // (1/n_k) log K of the length-2 block strategy, both shifts
  double up_fraction = 0.0;  // q^1 / n_k
  double r1 = 0.0;           // q^{11} / q^1
  double r0 = 0.0;           // q^{01} / q^0
  double growth_diagnostic = 0.0;                // n_{k+1} / (2^{1/H} n_k)
  std::array<double, 4> pair_diagnostic{};        // 2 m^{ij} / q^{ij}
  std::array<double, 4> shifted_pair_diagnostic{};  // 2 m~^{ij} / q^{ij}
  double variation_ratio = 0.0;                   // L / TV
  std::size_t multi_level_segments = 0;
};

/// D(2^{1 - 1/H} || 1/2): the order-1 Markovian rate under the regularity conditions.
/// NaN when the exponent is unknown.
inline double markov_asset_target(double hurst) {
  if (!(hurst > 0.0 && hurst <= 1.0)) return std::nan("");
  return kl(std::pow(2.0, 1.0 - 1.0 / hurst), 0.5);
}
/// Half the Markovian rate for the shift-combined length-2 block strategy.
inline double block_asset_target(double hurst) { return 0.5 * markov_asset_target(hurst); }

inline double safe_ratio(double a, double b) { return b != 0.0 ? a / b : std::nan(""); }

/// Runs order-1 Markov (a = b = 1) and the length-2 block strategy split over both
/// shifts (c^{ij} = 1) on every level in [k_min, k_max] with rho = rho_delta.
inline std::vector<LevelGrowth> asset_growth_report(const PricePath& path, int k_min, int k_max, double hurst) {
  std::vector<LevelGrowth> out;
  std::vector<EmbeddedGame> games;
  for (int k = k_min; k <= k_max; ++k) games.push_back(embed(path, k));
  for (std::size_t i = 0; i < games.size(); ++i) {
    const EmbeddedGame& g = games[i];
    if (g.rounds() == 0) throw std::runtime_error("asset: no rounds at level " + std::to_string(g.level));
    const Rho rho(g.rho_delta);
    const LevelCounts c = LevelCounts::of(g);
    const double n = static_cast<double>(g.rounds());
    LevelGrowth r;
    r.level = g.level;
    r.rounds = g.rounds();
    r.rho_delta = g.rho_delta;
    r.markov_rate = markov_log_capital(MarkovParams{1, 1.0, 1.0}, g.bits, rho) / n;
    std::vector<double> shifts;
    for (std::size_t a = 0; a < 2; ++a)
      shifts.push_back(std::log(0.5) + block_log_capital(BlockParams::uniform(2, a), g.bits, rho));
    r.block_rate = log_sum_exp(shifts) / n;
    r.up_fraction = static_cast<double>(c.q1) / n;
    r.r1 = safe_ratio(static_cast<double>(c.q[3]), static_cast<double>(c.q1));
    r.r0 = safe_ratio(static_cast<double>(c.q[1]), static_cast<double>(c.q0));
    r.growth_diagnostic = i + 1 < games.size() && hurst > 0.0
                              ? static_cast<double>(games[i + 1].rounds()) / (std::pow(2.0, 1.0 / hurst) * n)
                              : std::nan("");
    for (std::size_t ij = 0; ij < 4; ++ij) {
      r.pair_diagnostic[ij] = safe_ratio(2.0 * static_cast<double>(c.m[ij]), static_cast<double>(c.q[ij]));
      r.shifted_pair_diagnostic[ij] = safe_ratio(2.0 * static_cast<double>(c.m_shift[ij]), static_cast<double>(c.q[ij]));
    }
    r.variation_ratio = (static_cast<double>(c.q1) - static_cast<double>(c.q0)) / n;
    r.multi_level_segments = g.multi_level_segments;
    out.push_back(r);
  }
  return out;
}

}  // namespace skeptic

#endif  // SKEPTIC_EMBED_HPP
