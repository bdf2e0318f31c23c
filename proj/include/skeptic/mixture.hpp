#ifndef SKEPTIC_MIXTURE_HPP
#define SKEPTIC_MIXTURE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "divergence.hpp"
#include "game.hpp"
#include "strategies.hpp"

namespace skeptic {

/// One account of a mixture: an initial capital share, the predictor run on it,
/// and how to evaluate its capital in closed form.
struct MixtureComponent {
  double weight = 0.0;
  AnyPredictor predictor;
  std::function<double(const PathPrefix&, Rho)> log_capital;
  std::string label;
};

/// Splitting the initial capital over accounts. The protocol is linear in the
/// bets, so the total capital is sum_i w_i K^i, and the combined bet is the
/// Bayesian bet of the capital-weighted average prediction. Weight not assigned
/// to any component is held as cash (the risk-neutral predictor).
class MixturePredictor {
 public:
  MixturePredictor(std::vector<MixtureComponent> components, Rho rho) : rho_(rho) {
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    double total = 0.0;
    for (auto& c : components) {
      if (!(c.weight > 0.0)) throw std::invalid_argument("mixture weights must be positive");
      total += c.weight;
      log_weight_.push_back(std::log(c.weight));
      log_capital_.push_back(0.0);
      predictors_.push_back(std::move(c.predictor));
    }
    if (total > 1.0 + 1e-12) throw std::invalid_argument("mixture weights must sum to at most 1");
    cash_ = std::max(0.0, 1.0 - total);
  }

  double predict() const {
    const double log_total = log_wealth();
    double p = cash_ > 0.0 ? std::exp(std::log(cash_) - log_total) * rho_.value() : 0.0;
    for (std::size_t i = 0; i < predictors_.size(); ++i) {
      if (log_capital_[i] == kNegInf) continue;
      p += std::exp(log_weight_[i] + log_capital_[i] - log_total) * predictors_[i].predict();
    }
    return std::clamp(p, 0.0, 1.0);
  }

  void update(Bit b) {
    for (std::size_t i = 0; i < predictors_.size(); ++i) {
      if (log_capital_[i] != kNegInf) log_capital_[i] += log_growth_factor(predictors_[i].predict(), b, rho_);
      predictors_[i].update(b);
    }
  }

  /// log of the total capital, sum_i w_i K^i plus cash.
  double log_wealth() const {
    double acc = cash_ > 0.0 ? std::log(cash_) : kNegInf;
    for (std::size_t i = 0; i < predictors_.size(); ++i) acc = log_add_exp(acc, log_weight_[i] + log_capital_[i]);
    return acc;
  }

  double cash() const { return cash_; }

 private:
  Rho rho_;
  std::vector<double> log_weight_;
  std::vector<double> log_capital_;
  std::vector<AnyPredictor> predictors_;
  double cash_ = 0.0;
};

/// Closed-form log capital of a mixture: log(cash + sum_i w_i K^i).
inline double mixture_log_capital(const std::vector<MixtureComponent>& components, const PathPrefix& path, Rho rho) {
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  double total = 0.0;
  std::vector<double> terms;
  for (const auto& c : components) {
    total += c.weight;
    terms.push_back(std::log(c.weight) + c.log_capital(path, rho));
  }
  if (total < 1.0) terms.push_back(std::log(1.0 - total));
  return log_sum_exp(terms);
}

// ---------------------------------------------------------------------------
// Component builders.

inline MixtureComponent block_component(BlockParams params, double weight, Rho rho) {
  std::string label = "block(" + std::to_string(params.k) + "," + std::to_string(params.shift) + ")";
  BlockPredictor pred(params, rho);
  return MixtureComponent{weight, AnyPredictor(std::move(pred)),
                          [params](const PathPrefix& p, Rho r) { return block_log_capital(params, p, r); }, label};
}

inline MixtureComponent markov_component(MarkovParams params, double weight, Rho rho) {
  std::string label = "markov(" + std::to_string(params.k) + ")";
  return MixtureComponent{weight, AnyPredictor(MarkovPredictor(params, rho)),
                          [params](const PathPrefix& p, Rho r) { return markov_log_capital(params, p, r); }, label};
}

/// The length-k block strategy run on every shift with the capital split equally.
inline std::vector<MixtureComponent> block_all_shifts(std::size_t k, double prior_c, double weight, Rho rho) {
  std::vector<MixtureComponent> out;
  for (std::size_t a = 0; a < k; ++a)
    out.push_back(block_component(BlockParams::uniform(k, a, prior_c), weight / static_cast<double>(k), rho));
  return out;
}

struct UniversalParams {
  std::size_t k_max = 8;
  double markov_a = 1.0;
  double markov_b = 1.0;
  double block_c = 1.0;

  /// c_{Bk} = c_{Mk} = 2^{-(k+1)}
  static double account_weight(std::size_t k) { return std::ldexp(1.0, -static_cast<int>(k + 1)); }
};

/// Half the capital on block strategies k = 1..k_max (each split over its k
/// shifts), half on Markovian strategies of order 1..k_max; the truncated tail
/// 2^{-k_max} stays in cash.
inline std::vector<MixtureComponent> universal_components(const UniversalParams& params, Rho rho) {
  if (params.k_max < 1) throw std::invalid_argument("universal mixture needs k_max >= 1");
  std::vector<MixtureComponent> out;
  for (std::size_t k = 1; k <= params.k_max; ++k) {
    for (auto& c : block_all_shifts(k, params.block_c, UniversalParams::account_weight(k), rho)) out.push_back(std::move(c));
    out.push_back(markov_component(MarkovParams{k, params.markov_a, params.markov_b}, UniversalParams::account_weight(k), rho));
  }
  return out;
}

}  // namespace skeptic

#endif  // SKEPTIC_MIXTURE_HPP
