#ifndef SKEPTIC_GAME_HPP
#define SKEPTIC_GAME_HPP

#include <cmath>
#include <concepts>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "divergence.hpp"

namespace skeptic {

/// Reality's move, always 0 or 1.
using Bit = std::uint8_t;

/// Raised when a predictor hands the game a probability outside [0, 1].
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Risk-neutral success probability, strictly inside (0, 1).
class Rho {
 public:
  explicit Rho(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("rho must lie in (0,1), got " + std::to_string(value));
  }
  double value() const { return value_; }
  double log_up() const { return std::log(value_); }
  double log_down() const { return std::log1p(-value_); }

 private:
  double value_;
};

/// Finite 0/1 outcome sequence with a cached count of ones.
class PathPrefix {
 public:
  PathPrefix() = default;

  static PathPrefix from_string(std::string_view s) {
    PathPrefix p;
    p.bits_.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw std::invalid_argument("path strings may only contain '0' and '1'");
      p.push_back(static_cast<Bit>(c - '0'));
    }
    return p;
  }

  static PathPrefix from_bits(std::span<const Bit> bits) {
    PathPrefix p;
    p.bits_.reserve(bits.size());
    for (Bit b : bits) p.push_back(b);
    return p;
  }

  void push_back(Bit b) {
    if (b > 1) throw std::invalid_argument("an outcome must be 0 or 1");
    bits_.push_back(b);
    ones_ += b;
  }

  void reserve(std::size_t n) { bits_.reserve(n); }
  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  std::size_t ones() const { return ones_; }
  std::size_t zeros() const { return bits_.size() - ones_; }
  Bit operator[](std::size_t i) const { return bits_[i]; }
  std::span<const Bit> bits() const { return bits_; }

  /// First n outcomes.
  PathPrefix prefix(std::size_t n) const { return from_bits(std::span<const Bit>(bits_).first(n)); }

  std::string to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (Bit b : bits_) s.push_back(static_cast<char>('0' + b));
    return s;
  }

  friend bool operator==(const PathPrefix&, const PathPrefix&) = default;

 private:
  std::vector<Bit> bits_;
  std::size_t ones_ = 0;
};

/// A sequential predictor: predict() is the conditional probability that the
/// next outcome is 1 given everything passed to update() so far.
template <class P>
concept SequentialPredictor = std::copy_constructible<P> && requires(P p, const P cp, Bit b) {
  { cp.predict() } -> std::convertible_to<double>;
  p.update(b);
};

/// Replays a prefix into a fresh copy of the predictor and returns p_n for the next round.
template <SequentialPredictor P>
double predict_after(P predictor, const PathPrefix& prefix) {
  for (Bit b : prefix.bits()) predictor.update(b);
  return predictor.predict();
}

/// Type-erased predictor for heterogeneous collections and the CLI.
class AnyPredictor {
 public:
  template <SequentialPredictor P>
    requires(!std::same_as<std::remove_cvref_t<P>, AnyPredictor>)
  AnyPredictor(P p) : self_(std::make_unique<Model<P>>(std::move(p))) {}

  AnyPredictor(const AnyPredictor& o) : self_(o.self_->clone()) {}
  AnyPredictor& operator=(const AnyPredictor& o) {
    if (this != &o) self_ = o.self_->clone();
    return *this;
  }
  AnyPredictor(AnyPredictor&&) noexcept = default;
  AnyPredictor& operator=(AnyPredictor&&) noexcept = default;

  double predict() const { return self_->predict(); }
  void update(Bit b) { self_->update(b); }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual double predict() const = 0;
    virtual void update(Bit b) = 0;
    virtual std::unique_ptr<Concept> clone() const = 0;
  };
  template <class P>
  struct Model final : Concept {
    explicit Model(P p) : p(std::move(p)) {}
    double predict() const override { return p.predict(); }
    void update(Bit b) override { p.update(b); }
    std::unique_ptr<Concept> clone() const override { return std::make_unique<Model>(*this); }
    P p;
  };
  std::unique_ptr<Concept> self_;
};

/// Skeptic's move at one round. total == on_one - on_zero.
struct Bet {
  double total = 0.0;
  double on_one = 0.0;
  double on_zero = 0.0;
};

/// The betting rule induced by a predictive probability:
/// M_n = K_{n-1} (p_n - rho) / (rho (1 - rho)), with the split into bets on each outcome.
inline Bet bet_from_prediction(double p, Rho rho, double capital) {
  const double r = rho.value();
  return Bet{capital * (p - r) / (r * (1.0 - r)), capital * p / r, capital * (1.0 - p) / (1.0 - r)};
}

/// One round of the additive protocol: K_n = K_{n-1} + M_n (x_n - rho).
inline double settle(double capital, double bet, Bit x, Rho rho) {
  return capital + bet * (static_cast<double>(x) - rho.value());
}

/// Per-round log capital of a strategy against a path. log K_0 = 0, ruin is -inf.
struct CapitalProcess {
  std::vector<double> log_capital{0.0};
  std::optional<std::size_t> ruined_at;

  std::size_t rounds() const { return log_capital.size() - 1; }
  double final_log_capital() const { return log_capital.back(); }
  double capital(std::size_t n) const { return std::exp(log_capital.at(n)); }
};

/// log(K_n / K_{n-1}) for the Bayesian strategy with predictive probability p.
inline double log_growth_factor(double p, Bit x, Rho rho) {
  if (x == 1) return p == 0.0 ? kNegInf : std::log(p) - rho.log_up();
  return p == 1.0 ? kNegInf : std::log1p(-p) - rho.log_down();
}

inline void check_probability(double p, std::size_t round) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ContractViolation("predictor returned p = " + std::to_string(p) + " outside [0,1] at round " +
                            std::to_string(round));
}

/// Plays the Bayesian strategy of `predictor` against `path`, in the log domain.
/// After ruin the game continues formally with zero bets.
template <SequentialPredictor P>
CapitalProcess run_game(P predictor, const PathPrefix& path, Rho rho) {
  CapitalProcess out;
  out.log_capital.reserve(path.size() + 1);
  double log_k = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Bit x = path[i];
    if (log_k != kNegInf) {
      const double p = predictor.predict();
      check_probability(p, i + 1);
      log_k += log_growth_factor(p, x, rho);
      if (log_k == kNegInf) out.ruined_at = i + 1;
    }
    predictor.update(x);
    out.log_capital.push_back(log_k);
  }
  return out;
}

/// The risk-neutral predictor: always rho, never bets.
class ConstantPredictor {
 public:
  explicit ConstantPredictor(double p) : p_(p) {}
  double predict() const { return p_; }
  void update(Bit) {}

 private:
  double p_;
};

}  // namespace skeptic

#endif  // SKEPTIC_GAME_HPP
