#ifndef SKEPTIC_DISTRIBUTION_HPP
#define SKEPTIC_DISTRIBUTION_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "game.hpp"

namespace skeptic {

/// Raised when a betting rule can drive the capital negative.
class NotPrudent : public std::runtime_error {
 public:
  NotPrudent(const std::string& path, double capital)
      : std::runtime_error("strategy is not prudent: capital " + std::to_string(capital) + " on path \"" + path + "\""),
        path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Prefixes of length <= N stored heap-style: a prefix of length n whose bits,
// read first-to-last as a binary number, equal v lives at (1 << n) - 1 + v.
inline std::size_t prefix_index(std::size_t length, std::size_t value) { return (std::size_t{1} << length) - 1 + value; }

inline std::size_t prefix_value(const PathPrefix& p) {
  std::size_t v = 0;
  for (Bit b : p.bits()) v = (v << 1) | b;
  return v;
}

inline PathPrefix prefix_from_value(std::size_t length, std::size_t value) {
  PathPrefix p;
  for (std::size_t i = length; i-- > 0;) p.push_back(static_cast<Bit>((value >> i) & 1U));
  return p;
}

/// A consistent family Q_0, ..., Q_N of distributions on {0,1}^n.
class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::size_t horizon)
      : horizon_(horizon), q_(prefix_index(horizon + 1, 0), 0.0) {
    if (horizon > 24) throw std::invalid_argument("FiniteDistribution: horizon too large to tabulate");
    q_[0] = 1.0;
  }

  /// Builds the marginals from the leaf probabilities Q_N, indexed by prefix value.
  static FiniteDistribution from_leaves(std::size_t horizon, const std::vector<double>& leaves) {
    if (leaves.size() != (std::size_t{1} << horizon)) throw std::invalid_argument("from_leaves: need 2^N leaf values");
    FiniteDistribution d(horizon);
    for (std::size_t v = 0; v < leaves.size(); ++v) {
      if (leaves[v] < 0.0) throw std::invalid_argument("from_leaves: negative probability");
      d.q_[prefix_index(horizon, v)] = leaves[v];
    }
    for (std::size_t n = horizon; n-- > 0;)
      for (std::size_t v = 0; v < (std::size_t{1} << n); ++v)
        d.q_[prefix_index(n, v)] = d.q_[prefix_index(n + 1, 2 * v)] + d.q_[prefix_index(n + 1, 2 * v + 1)];
    const double total = d.q_[0];
    if (!(total > 0.0)) throw std::invalid_argument("from_leaves: zero total mass");
    for (double& x : d.q_) x /= total;
    return d;
  }

  /// Tabulates the prior predictive distribution of a sequential predictor.
  template <SequentialPredictor P>
  static FiniteDistribution from_predictor(const P& predictor, std::size_t horizon) {
    FiniteDistribution d(horizon);
    d.fill_from(predictor, 0, 0);
    return d;
  }

  std::size_t horizon() const { return horizon_; }

  double prob(std::size_t length, std::size_t value) const { return q_.at(prefix_index(length, value)); }
  double prob(const PathPrefix& p) const {
    if (p.size() > horizon_) throw std::out_of_range("prefix longer than the distribution's horizon");
    return prob(p.size(), prefix_value(p));
  }
  void set(std::size_t length, std::size_t value, double q) { q_.at(prefix_index(length, value)) = q; }

  /// p_n^Q = Q_n(xi 1) / Q_{n-1}(xi); empty when Q_{n-1}(xi) = 0.
  std::optional<double> conditional(std::size_t length, std::size_t value) const {
    if (length >= horizon_) throw std::out_of_range("conditional beyond horizon");
    const double parent = prob(length, value);
    if (parent <= 0.0) return std::nullopt;
    return prob(length + 1, 2 * value + 1) / parent;
  }
  std::optional<double> conditional(const PathPrefix& p) const { return conditional(p.size(), prefix_value(p)); }

  /// Largest |Q_n(xi) - Q_{n+1}(xi 0) - Q_{n+1}(xi 1)| over all prefixes.
  double consistency_error() const {
    double worst = std::abs(q_[0] - 1.0);
    for (std::size_t n = 0; n < horizon_; ++n)
      for (std::size_t v = 0; v < (std::size_t{1} << n); ++v)
        worst = std::max(worst, std::abs(prob(n, v) - prob(n + 1, 2 * v) - prob(n + 1, 2 * v + 1)));
    return worst;
  }

  bool non_negative() const {
    for (double x : q_)
      if (x < 0.0) return false;
    return true;
  }

 private:
  template <class P>
  void fill_from(const P& predictor, std::size_t length, std::size_t value) {
    if (length == horizon_) return;
    const double p = predictor.predict();
    check_probability(p, length + 1);
    const double parent = prob(length, value);
    q_[prefix_index(length + 1, 2 * value + 1)] = parent * p;
    q_[prefix_index(length + 1, 2 * value)] = parent * (1.0 - p);
    for (Bit b : {Bit{0}, Bit{1}}) {
      P next = predictor;
      next.update(b);
      fill_from(next, length + 1, 2 * value + b);
    }
  }

  std::size_t horizon_;
  std::vector<double> q_;
};

/// Walks a FiniteDistribution as a sequential predictor. Where the conditional is
/// undefined the capital is already zero, so the predictor returns rho (no bet).
class DistributionPredictor {
 public:
  DistributionPredictor(const FiniteDistribution& q, Rho rho) : q_(&q), rho_(rho.value()) {}
  double predict() const {
    if (length_ >= q_->horizon()) throw std::out_of_range("DistributionPredictor: beyond the distribution's horizon");
    return q_->conditional(length_, value_).value_or(rho_);
  }
  void update(Bit b) {
    value_ = (value_ << 1) | b;
    ++length_;
  }

 private:
  const FiniteDistribution* q_;
  double rho_;
  std::size_t length_ = 0;
  std::size_t value_ = 0;
};

/// log K_n of P_Q on the path: log Q(xi^n) - s_n log rho - (n - s_n) log(1 - rho).
inline double capital_closed_form(const FiniteDistribution& q, const PathPrefix& path, Rho rho) {
  const double qn = q.prob(path);
  if (qn <= 0.0) return kNegInf;
  return std::log(qn) - static_cast<double>(path.ones()) * rho.log_up() -
         static_cast<double>(path.zeros()) * rho.log_down();
}

/// A strategy given directly by Skeptic's moves: M_n as a function of xi^{n-1}.
using BettingRule = std::function<double(const PathPrefix&)>;

/// Betting rule of P_Q. Capital is tracked along the prefix so the bet is in
/// absolute units, matching the additive protocol.
inline BettingRule strategy_from_distribution(const FiniteDistribution& q, Rho rho) {
  return [&q, rho](const PathPrefix& prefix) {
    double capital = 1.0;
    DistributionPredictor pred(q, rho);
    for (Bit x : prefix.bits()) {
      capital = settle(capital, bet_from_prediction(pred.predict(), rho, capital).total, x, rho);
      pred.update(x);
    }
    return bet_from_prediction(pred.predict(), rho, capital).total;
  };
}

/// The inverse map: the distribution whose P_Q is the given prudent strategy.
/// Checks prudence on all 2^N paths; throws NotPrudent naming the first offending path.
inline FiniteDistribution distribution_from_strategy(const BettingRule& rule, Rho rho, std::size_t horizon,
                                                     double tolerance = 1e-12) {
  const double r = rho.value();
  FiniteDistribution d(horizon);
  // capital[v] for the prefixes of the current length
  std::vector<double> capital{1.0};
  for (std::size_t n = 0; n < horizon; ++n) {
    std::vector<double> next(capital.size() * 2);
    for (std::size_t v = 0; v < capital.size(); ++v) {
      const PathPrefix prefix = prefix_from_value(n, v);
      const double k = capital[v];
      const double parent = d.prob(n, v);
      double up = 0.0;
      double down = 0.0;
      double bet = 0.0;
      if (k > 0.0) {
        bet = rule(prefix);
        const double alpha = bet / k;
        up = r * parent * (1.0 + alpha * (1.0 - r));
        down = (1.0 - r) * parent * (1.0 - alpha * r);
      }
      for (Bit x : {Bit{0}, Bit{1}}) {
        double kx = k > 0.0 ? settle(k, bet, x, rho) : 0.0;
        if (kx < -tolerance) {
          PathPrefix bad = prefix;
          bad.push_back(x);
          throw NotPrudent(bad.to_string(), kx);
        }
        next[2 * v + x] = std::max(kx, 0.0);
      }
      d.set(n + 1, 2 * v + 1, std::max(up, 0.0));
      d.set(n + 1, 2 * v, std::max(down, 0.0));
    }
    capital = std::move(next);
  }
  return d;
}

/// Terminal capital K_N of a betting rule on every path of length N, indexed by prefix value.
inline std::vector<double> terminal_capitals(const BettingRule& rule, Rho rho, std::size_t horizon) {
  std::vector<double> capital{1.0};
  for (std::size_t n = 0; n < horizon; ++n) {
    std::vector<double> next(capital.size() * 2);
    for (std::size_t v = 0; v < capital.size(); ++v) {
      const double bet = capital[v] > 0.0 ? rule(prefix_from_value(n, v)) : 0.0;
      for (Bit x : {Bit{0}, Bit{1}}) next[2 * v + x] = settle(capital[v], bet, x, rho);
    }
    capital = std::move(next);
  }
  return capital;
}

/// E^Q log K_N over the paths with Q > 0; -inf if the strategy is ruined on any of them.
inline double expected_log_capital(const FiniteDistribution& q, const std::vector<double>& terminal) {
  const std::size_t n = q.horizon();
  double e = 0.0;
  for (std::size_t v = 0; v < terminal.size(); ++v) {
    const double w = q.prob(n, v);
    if (w <= 0.0) continue;
    if (terminal[v] <= 0.0) return kNegInf;
    e += w * std::log(terminal[v]);
  }
  return e;
}

}  // namespace skeptic

#endif  // SKEPTIC_DISTRIBUTION_HPP
