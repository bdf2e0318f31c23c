#ifndef SKEPTIC_STRATEGIES_HPP
#define SKEPTIC_STRATEGIES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "divergence.hpp"
#include "game.hpp"

namespace skeptic {

// ---------------------------------------------------------------------------
// Beta-binomial: the strategy that only looks at s_n.

struct BetaBinomialParams {
  double a = 1.0;
  double b = 1.0;

  void validate() const {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta-binomial hyperparameters must be positive");
  }
};

class BetaBinomialPredictor {
 public:
  explicit BetaBinomialPredictor(BetaBinomialParams params) : params_(params) { params_.validate(); }

  /// (a + s_{n-1}) / (a + b + n - 1)
  double predict() const {
    return (params_.a + static_cast<double>(ones_)) / (params_.a + params_.b + static_cast<double>(rounds_));
  }
  void update(Bit b) {
    ones_ += b;
    ++rounds_;
  }

 private:
  BetaBinomialParams params_;
  std::uint64_t ones_ = 0;
  std::uint64_t rounds_ = 0;
};

/// log of the beta-binomial likelihood ratio against the risk-neutral measure.
inline double beta_binomial_log_capital(BetaBinomialParams params, const PathPrefix& path, Rho rho) {
  params.validate();
  const double n = static_cast<double>(path.size());
  const double s = static_cast<double>(path.ones());
  const double log_q = log_beta(params.a + s, params.b + n - s) - log_beta(params.a, params.b);
  return log_q - s * rho.log_up() - (n - s) * rho.log_down();
}

// ---------------------------------------------------------------------------
// Block patterns: Dirichlet-multinomial betting on non-overlapping k-tuples.
//
// A pattern eps_1 ... eps_k is indexed by the integer whose most significant
// bit is eps_1.

inline constexpr std::size_t kMaxBlockLength = 16;

struct BlockParams {
  std::size_t k = 2;
  std::size_t shift = 0;
  std::vector<double> prior;  // c^{eps}, one per pattern

  static BlockParams uniform(std::size_t k, std::size_t shift = 0, double c = 1.0) {
    if (k == 0 || k > kMaxBlockLength) throw std::invalid_argument("block length must be in [1, 16]");
    return BlockParams{k, shift, std::vector<double>(std::size_t{1} << k, c)};
  }

  double prior_total() const {
    double c = 0.0;
    for (double x : prior) c += x;
    return c;
  }

  void validate() const {
    if (k == 0 || k > kMaxBlockLength) throw std::invalid_argument("block length must be in [1, 16]");
    if (shift >= k) throw std::invalid_argument("block shift must be < k");
    if (prior.size() != (std::size_t{1} << k)) throw std::invalid_argument("block prior needs 2^k entries");
    for (double c : prior)
      if (!(c > 0.0)) throw std::invalid_argument("block prior entries must be positive");
  }
};

/// Number of ones in a k-bit pattern.
inline int pattern_weight(std::size_t pattern) { return __builtin_popcountll(pattern); }

/// log rho^{eps} = |eps| log rho + (k - |eps|) log(1 - rho)
inline double log_pattern_prob(std::size_t pattern, std::size_t k, Rho rho) {
  const double w = pattern_weight(pattern);
  return w * rho.log_up() + (static_cast<double>(k) - w) * rho.log_down();
}

/// Counts m^{eps} over the completed blocks for a given shift, plus the
/// trailing partial block.
struct BlockCounts {
  std::size_t k = 0;
  std::size_t shift = 0;
  std::vector<std::uint64_t> m;  // per pattern
  std::uint64_t blocks = 0;
  std::size_t partial_length = 0;
  std::size_t partial_value = 0;

  static BlockCounts of(const PathPrefix& path, std::size_t k, std::size_t shift) {
    BlockCounts c{k, shift, std::vector<std::uint64_t>(std::size_t{1} << k, 0)};
    std::size_t i = shift;
    for (; i + k <= path.size(); i += k) {
      std::size_t v = 0;
      for (std::size_t j = 0; j < k; ++j) v = (v << 1) | path[i + j];
      ++c.m[v];
      ++c.blocks;
    }
    for (; i < path.size(); ++i) {
      c.partial_value = (c.partial_value << 1) | path[i];
      ++c.partial_length;
    }
    return c;
  }

  /// Empirical distribution of the completed blocks (uniform if none).
  std::vector<double> frequencies() const {
    std::vector<double> f(m.size(), 1.0 / static_cast<double>(m.size()));
    if (blocks == 0) return f;
    for (std::size_t e = 0; e < m.size(); ++e) f[e] = static_cast<double>(m[e]) / static_cast<double>(blocks);
    return f;
  }
};

/// Exact conditional of the Dirichlet-multinomial block distribution, one round at a time.
class BlockPredictor {
 public:
  BlockPredictor(BlockParams params, Rho rho) : params_(std::move(params)), rho_(rho.value()) {
    params_.validate();
    const std::size_t nodes = (std::size_t{2} << params_.k) - 1;
    counts_.assign(nodes, 0.0);
    prior_.assign(nodes, 0.0);
    // prior mass of every partial pattern = sum over its completions
    for (std::size_t e = 0; e < params_.prior.size(); ++e)
      for (std::size_t depth = 0; depth <= params_.k; ++depth)
        prior_[node(depth, e >> (params_.k - depth))] += params_.prior[e];
  }

  double predict() const {
    if (rounds_ < params_.shift) return rho_;
    const std::size_t here = node(depth_, value_);
    const std::size_t up = node(depth_ + 1, 2 * value_ + 1);
    return (counts_[up] + prior_[up]) / (counts_[here] + prior_[here]);
  }

  void update(Bit b) {
    ++rounds_;
    if (rounds_ <= params_.shift) return;
    value_ = (value_ << 1) | b;
    if (++depth_ == params_.k) {
      for (std::size_t depth = 0; depth <= params_.k; ++depth) counts_[node(depth, value_ >> (params_.k - depth))] += 1.0;
      depth_ = 0;
      value_ = 0;
    }
  }

  const BlockParams& params() const { return params_; }

 private:
  static std::size_t node(std::size_t depth, std::size_t value) { return (std::size_t{1} << depth) - 1 + value; }

  BlockParams params_;
  double rho_;
  std::vector<double> counts_;  // completed-block counts summed over completions of each partial pattern
  std::vector<double> prior_;
  std::uint64_t rounds_ = 0;
  std::size_t depth_ = 0;
  std::size_t value_ = 0;
};

/// Closed-form log capital of the block strategy: the Gamma product over the
/// completed blocks times the within-block conditional of the partial block.
inline double block_log_capital(const BlockParams& params, const PathPrefix& path, Rho rho) {
  params.validate();
  const BlockCounts counts = BlockCounts::of(path, params.k, params.shift);
  const double c = params.prior_total();
  const double nb = static_cast<double>(counts.blocks);
  double log_k = log_gamma(c) - log_gamma(nb + c);
  for (std::size_t e = 0; e < counts.m.size(); ++e) {
    if (counts.m[e] == 0) continue;
    const double m = static_cast<double>(counts.m[e]);
    log_k += log_gamma(m + params.prior[e]) - log_gamma(params.prior[e]) - m * log_pattern_prob(e, params.k, rho);
  }
  if (counts.partial_length > 0) {
    const std::size_t drop = params.k - counts.partial_length;
    double mass = 0.0;
    for (std::size_t e = 0; e < counts.m.size(); ++e)
      if ((e >> drop) == counts.partial_value) mass += static_cast<double>(counts.m[e]) + params.prior[e];
    log_k += std::log(mass / (nb + c)) - log_pattern_prob(counts.partial_value, counts.partial_length, rho);
  }
  return log_k;
}

// ---------------------------------------------------------------------------
// Markovian strategies: a beta prior per context of the preceding k outcomes.
//
// Contexts are integers with the most recent outcome in the least significant bit.

inline constexpr std::size_t kMaxMarkovOrder = 20;

struct MarkovParams {
  std::size_t k = 1;
  double a = 1.0;
  double b = 1.0;

  void validate() const {
    if (k > kMaxMarkovOrder) throw std::invalid_argument("Markov order must be <= 20");
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("Markov hyperparameters must be positive");
  }
};

/// Overlapping context counts in xi^n: q^{eps}, q^{eps 1}, q^{eps 0}.
struct MarkovCounts {
  std::size_t k = 0;
  std::vector<std::uint64_t> context;  // q^{eps}: every occurrence, including one at the very end
  std::vector<std::uint64_t> ones;     // q^{eps 1}
  std::vector<std::uint64_t> zeros;    // q^{eps 0}
  std::uint64_t n = 0;

  static MarkovCounts of(const PathPrefix& path, std::size_t k) {
    const std::size_t size = std::size_t{1} << k;
    MarkovCounts c{k, std::vector<std::uint64_t>(size, 0), std::vector<std::uint64_t>(size, 0),
                   std::vector<std::uint64_t>(size, 0), path.size()};
    const std::size_t mask = size - 1;
    std::size_t ctx = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i >= k) (path[i] ? c.ones : c.zeros)[ctx] += 1;
      ctx = ((ctx << 1) | path[i]) & mask;
      if (i + 1 >= k) c.context[ctx] += 1;
    }
    return c;
  }

  /// q^{eps}/n for each context.
  double frequency(std::size_t ctx) const { return n ? static_cast<double>(context[ctx]) / static_cast<double>(n) : 0.0; }
  /// r^{eps} = q^{eps 1} / (q^{eps 1} + q^{eps 0}); nullopt if the context was never followed.
  std::optional<double> transition(std::size_t ctx) const {
    const auto t = ones[ctx] + zeros[ctx];
    if (t == 0) return std::nullopt;
    return static_cast<double>(ones[ctx]) / static_cast<double>(t);
  }
};

class MarkovPredictor {
 public:
  MarkovPredictor(MarkovParams params, Rho rho)
      : params_(params), rho_(rho.value()), mask_((std::size_t{1} << params.k) - 1) {
    params_.validate();
    ones_.assign(std::size_t{1} << params_.k, 0.0);
    zeros_.assign(std::size_t{1} << params_.k, 0.0);
  }

  double predict() const {
    if (rounds_ < params_.k) return rho_;
    const double q1 = ones_[ctx_];
    return (q1 + params_.a) / (q1 + zeros_[ctx_] + params_.a + params_.b);
  }

  void update(Bit b) {
    if (rounds_ >= params_.k) (b ? ones_ : zeros_)[ctx_] += 1.0;
    ctx_ = ((ctx_ << 1) | b) & mask_;
    ++rounds_;
  }

  const MarkovParams& params() const { return params_; }

 private:
  MarkovParams params_;
  double rho_;
  std::size_t mask_;
  std::vector<double> ones_;
  std::vector<double> zeros_;
  std::size_t ctx_ = 0;
  std::uint64_t rounds_ = 0;
};

/// Closed-form log capital of the order-k Markovian strategy. The first k
/// rounds follow the risk-neutral measure and contribute nothing.
inline double markov_log_capital(const MarkovParams& params, const PathPrefix& path, Rho rho) {
  params.validate();
  const MarkovCounts counts = MarkovCounts::of(path, params.k);
  const double base = log_beta(params.a, params.b);
  double log_k = 0.0;
  for (std::size_t ctx = 0; ctx < counts.ones.size(); ++ctx) {
    const double q1 = static_cast<double>(counts.ones[ctx]);
    const double q0 = static_cast<double>(counts.zeros[ctx]);
    if (q1 + q0 == 0.0) continue;
    log_k += log_beta(q1 + params.a, q0 + params.b) - base - q1 * rho.log_up() - q0 * rho.log_down();
  }
  return log_k;
}

}  // namespace skeptic

#endif  // SKEPTIC_STRATEGIES_HPP
