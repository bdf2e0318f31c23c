#ifndef SKEPTIC_SOURCES_HPP
#define SKEPTIC_SOURCES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "divergence.hpp"
#include "game.hpp"
#include "rng.hpp"

namespace skeptic {

struct Bernoulli {
  double p = 0.5;
};

/// Order-k binary Markov chain. one_prob[ctx] = P(x_n = 1 | ctx), where ctx
/// holds x_{n-k} ... x_{n-1} with x_{n-1} in the least significant bit.
struct MarkovChain {
  std::size_t k = 1;
  std::vector<double> one_prob;
};

struct Periodic {
  std::string pattern;
};

/// A fixed, finite bit sequence (e.g. extracted from a price path).
struct FixedBits {
  PathPrefix bits;
};

using BitSource = std::variant<Bernoulli, MarkovChain, Periodic, FixedBits>;

class InvalidSource : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate(const BitSource& source) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          if (!(s.p >= 0.0 && s.p <= 1.0)) throw InvalidSource("bernoulli: p must lie in [0,1]");
        } else if constexpr (std::is_same_v<T, MarkovChain>) {
          if (s.k > 16) throw InvalidSource("markov_chain: order must be <= 16");
          if (s.one_prob.size() != (std::size_t{1} << s.k))
            throw InvalidSource("markov_chain: transition table needs 2^k rows, got " + std::to_string(s.one_prob.size()));
          for (double p : s.one_prob)
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidSource("markov_chain: transition probabilities must lie in [0,1]");
        } else if constexpr (std::is_same_v<T, Periodic>) {
          if (s.pattern.empty()) throw InvalidSource("periodic: pattern must be non-empty");
          for (char c : s.pattern)
            if (c != '0' && c != '1') throw InvalidSource("periodic: pattern may only contain 0 and 1");
        }
      },
      source);
}

/// Stationary distribution over the 2^k contexts of a Markov chain. Throws for
/// reducible chains (no unique stationary law).
inline std::vector<double> stationary_contexts(const MarkovChain& chain) {
  validate(chain);
  const std::size_t states = std::size_t{1} << chain.k;
  const std::size_t mask = states - 1;

  // strong connectivity of the transition graph
  auto reachable_from = [&](std::size_t start, bool reverse) {
    std::vector<char> seen(states, 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t s = stack.back();
      stack.pop_back();
      for (std::size_t t = 0; t < states; ++t) {
        const std::size_t from = reverse ? t : s;
        const std::size_t to = reverse ? s : t;
        for (Bit b : {Bit{0}, Bit{1}}) {
          const double pb = b ? chain.one_prob[from] : 1.0 - chain.one_prob[from];
          if (pb > 0.0 && (((from << 1) | b) & mask) == to && !seen[t]) {
            seen[t] = 1;
            stack.push_back(t);
          }
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  if (!reachable_from(0, false) || !reachable_from(0, true))
    throw InvalidSource("markov_chain: chain is reducible, no unique stationary distribution");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(states + 1, states);
  for (std::size_t s = 0; s < states; ++s) {
    a(static_cast<Eigen::Index>(((s << 1) | 1) & mask), static_cast<Eigen::Index>(s)) += chain.one_prob[s];
    a(static_cast<Eigen::Index>((s << 1) & mask), static_cast<Eigen::Index>(s)) += 1.0 - chain.one_prob[s];
  }
  a.topRows(static_cast<Eigen::Index>(states)) -= Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  a.row(static_cast<Eigen::Index>(states)).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(states + 1));
  rhs(static_cast<Eigen::Index>(states)) = 1.0;
  const Eigen::VectorXd pi = a.colPivHouseholderQr().solve(rhs);
  std::vector<double> out(states);
  for (std::size_t s = 0; s < states; ++s) out[s] = std::max(0.0, pi(static_cast<Eigen::Index>(s)));
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& x : out) x /= total;
  return out;
}

/// Draws n outcomes. Same (source, n, seed, stream) gives the same bits.
/// Markov chains start from their stationary distribution.
inline PathPrefix generate(const BitSource& source, std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) {
  validate(source);
  Rng rng(seed, stream);
  PathPrefix out;
  out.reserve(n);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          for (std::size_t i = 0; i < n; ++i) out.push_back(rng.bernoulli(s.p) ? 1 : 0);
        } else if constexpr (std::is_same_v<T, MarkovChain>) {
          const std::vector<double> pi = stationary_contexts(s);
          const std::size_t mask = (std::size_t{1} << s.k) - 1;
          // initial context drawn from pi; its bits are the first k outcomes
          double u = rng.uniform();
          std::size_t ctx = 0;
          for (; ctx + 1 < pi.size(); ++ctx) {
            if (u < pi[ctx]) break;
            u -= pi[ctx];
          }
          for (std::size_t i = 0; i < s.k && i < n; ++i) out.push_back(static_cast<Bit>((ctx >> (s.k - 1 - i)) & 1U));
          for (std::size_t i = s.k; i < n; ++i) {
            const Bit b = rng.bernoulli(s.one_prob[ctx]) ? 1 : 0;
            out.push_back(b);
            ctx = ((ctx << 1) | b) & mask;
          }
        } else if constexpr (std::is_same_v<T, Periodic>) {
          for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<Bit>(s.pattern[i % s.pattern.size()] - '0'));
        } else {
          if (n > s.bits.size())
            throw InvalidSource("bits: requested " + std::to_string(n) + " outcomes but only " +
                                std::to_string(s.bits.size()) + " are available");
          out = s.bits.prefix(n);
        }
      },
      source);
  return out;
}

/// Entropy rate in bits per symbol, for sources where it is known analytically.
inline double entropy_rate(const BitSource& source) {
  validate(source);
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          return binary_entropy_bits(s.p);
        } else if constexpr (std::is_same_v<T, MarkovChain>) {
          const std::vector<double> pi = stationary_contexts(s);
          double h = 0.0;
          for (std::size_t c = 0; c < pi.size(); ++c) h += pi[c] * binary_entropy_bits(s.one_prob[c]);
          return h;
        } else if constexpr (std::is_same_v<T, Periodic>) {
          return 0.0;
        } else {
          throw InvalidSource("entropy rate is not defined for a fixed bit sequence");
        }
      },
      source);
}

/// Stationary probability of every length-L block (pattern index: first bit most significant).
/// Periodic sources use a uniformly random phase.
inline std::vector<double> stationary_block_distribution(const BitSource& source, std::size_t length) {
  validate(source);
  if (length > 20) throw std::invalid_argument("block length too large");
  const std::size_t size = std::size_t{1} << length;
  std::vector<double> dist(size, 0.0);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Bernoulli>) {
          for (std::size_t e = 0; e < size; ++e) {
            const int w = __builtin_popcountll(e);
            dist[e] = std::pow(s.p, w) * std::pow(1.0 - s.p, static_cast<double>(length) - w);
          }
        } else if constexpr (std::is_same_v<T, MarkovChain>) {
          const std::vector<double> pi = stationary_contexts(s);
          const std::size_t mask = (std::size_t{1} << s.k) - 1;
          for (std::size_t ctx = 0; ctx < pi.size(); ++ctx) {
            for (std::size_t e = 0; e < size; ++e) {
              double pr = pi[ctx];
              std::size_t c = ctx;
              for (std::size_t i = 0; i < length && pr > 0.0; ++i) {
                const Bit b = static_cast<Bit>((e >> (length - 1 - i)) & 1U);
                pr *= b ? s.one_prob[c] : 1.0 - s.one_prob[c];
                c = ((c << 1) | b) & mask;
              }
              dist[e] += pr;
            }
          }
        } else if constexpr (std::is_same_v<T, Periodic>) {
          const std::size_t period = s.pattern.size();
          for (std::size_t phase = 0; phase < period; ++phase) {
            std::size_t e = 0;
            for (std::size_t i = 0; i < length; ++i) e = (e << 1) | static_cast<std::size_t>(s.pattern[(phase + i) % period] - '0');
            dist[e] += 1.0 / static_cast<double>(period);
          }
        } else {
          throw InvalidSource("a fixed bit sequence has no stationary block distribution");
        }
      },
      source);
  return dist;
}

/// Total-variation distance between two distributions on the same support.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

}  // namespace skeptic

#endif  // SKEPTIC_SOURCES_HPP
