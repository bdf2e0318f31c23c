#ifndef SKEPTIC_ANALYSIS_HPP
#define SKEPTIC_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "divergence.hpp"
#include "game.hpp"
#include "mixture.hpp"
#include "sources.hpp"
#include "strategies.hpp"

namespace skeptic {

// ---------------------------------------------------------------------------
// Empirical main terms: the n D(. || .) part of log K_n, evaluated on a path.

/// D(p || q) over a common support where q may vanish only where p does.
inline double kl_on_support(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    if (q[j] <= 0.0) return std::numeric_limits<double>::infinity();
    d += p[j] * std::log(p[j] / q[j]);
  }
  return std::max(d, 0.0);
}

/// n D(xbar_n || rho)
inline double beta_main_term(const PathPrefix& path, Rho rho) {
  if (path.empty()) return 0.0;
  const double n = static_cast<double>(path.size());
  return n * kl(static_cast<double>(path.ones()) / n, rho.value());
}

/// (#blocks) D(phat^{eps} || rho^{eps}) for one shift.
inline double block_main_term(const PathPrefix& path, std::size_t k, std::size_t shift, Rho rho) {
  const BlockCounts c = BlockCounts::of(path, k, shift);
  if (c.blocks == 0) return 0.0;
  std::vector<double> q(c.m.size());
  for (std::size_t e = 0; e < q.size(); ++e) q[e] = std::exp(log_pattern_prob(e, k, rho));
  return static_cast<double>(c.blocks) * kl_on_support(c.frequencies(), q);
}

/// sum over contexts of (q^{eps 1} + q^{eps 0}) D(r^{eps} || rho).
inline double markov_main_term(const PathPrefix& path, std::size_t k, Rho rho) {
  const MarkovCounts c = MarkovCounts::of(path, k);
  double total = 0.0;
  for (std::size_t ctx = 0; ctx < c.ones.size(); ++ctx)
    if (auto r = c.transition(ctx)) total += static_cast<double>(c.ones[ctx] + c.zeros[ctx]) * kl(*r, rho.value());
  return total;
}

// ---------------------------------------------------------------------------
// Growth reports.

/// Checkpoints 2^6, 2^7, ... up to n, with n itself appended.
inline std::vector<std::size_t> log_checkpoints(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t c = 64; c <= n; c *= 2) out.push_back(c);
  if (out.empty() || out.back() != n) out.push_back(n);
  return out;
}

struct GrowthCheckpoint {
  std::size_t n = 0;
  double log_capital = 0.0;
  double main_term = 0.0;      // n D(empirical || risk-neutral) evaluated on the first n outcomes
  double main_residual = 0.0;  // log K_n - main_term, O(log n) by the growth laws
  double main_residual_over_log_n = 0.0;
  double target_residual = 0.0;  // log K_n - n * target_rate (NaN without a target)
};

struct GrowthReport {
  std::string strategy;
  std::vector<GrowthCheckpoint> checkpoints;
  double main_rate = 0.0;    // log K_n / n at the final checkpoint
  double target_rate = std::nan("");  // analytic rate of the source, when known
  double max_residual_ratio = 0.0;    // max |main_residual| / log n over checkpoints with n >= 64

  double final_log_capital() const { return checkpoints.empty() ? 0.0 : checkpoints.back().log_capital; }
};

/// Builds a report from a capital process; main_term(n) is the leading term
/// evaluated on the first n outcomes (may be empty).
inline GrowthReport growth_report(std::string strategy, const CapitalProcess& capital,
                                  const std::function<double(std::size_t)>& main_term,
                                  const std::vector<std::size_t>& checkpoints, double target_rate = std::nan("")) {
  GrowthReport r;
  r.strategy = std::move(strategy);
  r.target_rate = target_rate;
  for (std::size_t n : checkpoints) {
    if (n > capital.rounds()) throw std::out_of_range("checkpoint beyond the capital process");
    GrowthCheckpoint c;
    c.n = n;
    c.log_capital = capital.log_capital[n];
    c.main_term = main_term ? main_term(n) : std::nan("");
    c.main_residual = c.log_capital - c.main_term;
    c.main_residual_over_log_n = n > 1 ? c.main_residual / std::log(static_cast<double>(n)) : std::nan("");
    c.target_residual = c.log_capital - static_cast<double>(n) * target_rate;
    if (n >= 64 && std::isfinite(c.main_residual_over_log_n))
      r.max_residual_ratio = std::max(r.max_residual_ratio, std::abs(c.main_residual_over_log_n));
    r.checkpoints.push_back(c);
  }
  if (!r.checkpoints.empty() && r.checkpoints.back().n > 0)
    r.main_rate = r.checkpoints.back().log_capital / static_cast<double>(r.checkpoints.back().n);
  return r;
}

// ---------------------------------------------------------------------------
// Comparisons between strategy families.

struct ComparisonReport {
  std::string first;
  std::string second;
  std::size_t n = 0;
  double measured_gap = 0.0;  // log K^first_n - log K^second_n
  double main_gap = 0.0;      // the analytic leading term of the gap
  double residual = 0.0;      // measured_gap - main_gap
  double residual_over_log_n = 0.0;
};

inline ComparisonReport make_comparison(std::string a, std::string b, std::size_t n, double measured, double main) {
  ComparisonReport r{std::move(a), std::move(b), n, measured, main, measured - main, 0.0};
  r.residual_over_log_n = n > 1 ? r.residual / std::log(static_cast<double>(n)) : std::nan("");
  return r;
}

/// Length-2 block strategy (shift 0) against the beta-binomial strategy.
/// Main gap: (n/2) D(phat^{ij} || rhohat^{ij}) with rhohat built from xbar_n.
inline ComparisonReport compare_block2_base(const PathPrefix& path, Rho rho, double block_c = 1.0,
                                            BetaBinomialParams base = {}) {
  if (path.size() % 2 != 0) throw std::invalid_argument("compare_block2_base: n must be even");
  const double n = static_cast<double>(path.size());
  const double measured =
      block_log_capital(BlockParams::uniform(2, 0, block_c), path, rho) - beta_binomial_log_capital(base, path, rho);
  double main = 0.0;
  if (!path.empty()) {
    const BlockCounts c = BlockCounts::of(path, 2, 0);
    const double xbar = static_cast<double>(path.ones()) / n;
    // pattern index 2i + j: 00, 01, 10, 11
    const std::vector<double> rhohat{(1 - xbar) * (1 - xbar), xbar * (1 - xbar), xbar * (1 - xbar), xbar * xbar};
    main = n / 2.0 * kl_on_support(c.frequencies(), rhohat);
  }
  return make_comparison("block(2,0)", "beta", path.size(), measured, main);
}

/// Order k against order k - 1 Markovian strategies. The main gap is
/// sum_{eps_{k-1}} sum_b t^{b eps} D(r^{b eps} || rbar^{eps}), where t counts the
/// transitions out of a context and rbar pools the two longer contexts. It is
/// non-negative by construction.
inline ComparisonReport compare_markov_orders(const PathPrefix& path, Rho rho, std::size_t k, double a = 1.0,
                                              double b = 1.0) {
  if (k < 1) throw std::invalid_argument("compare_markov_orders: k must be >= 1");
  const double measured =
      markov_log_capital(MarkovParams{k, a, b}, path, rho) - markov_log_capital(MarkovParams{k - 1, a, b}, path, rho);
  const MarkovCounts c = MarkovCounts::of(path, k);
  const std::size_t parents = std::size_t{1} << (k - 1);
  double main = 0.0;
  for (std::size_t eps = 0; eps < parents; ++eps) {
    std::uint64_t ones = 0;
    std::uint64_t total = 0;
    for (std::size_t oldest : {std::size_t{0}, std::size_t{1}}) {
      const std::size_t ctx = (oldest << (k - 1)) | eps;
      ones += c.ones[ctx];
      total += c.ones[ctx] + c.zeros[ctx];
    }
    if (total == 0) continue;
    const double pooled = static_cast<double>(ones) / static_cast<double>(total);
    for (std::size_t oldest : {std::size_t{0}, std::size_t{1}}) {
      const std::size_t ctx = (oldest << (k - 1)) | eps;
      const auto t = c.ones[ctx] + c.zeros[ctx];
      if (t == 0) continue;
      const double r = static_cast<double>(c.ones[ctx]) / static_cast<double>(t);
      main += static_cast<double>(t) * (xlog_ratio(r, pooled) + xlog_ratio(1.0 - r, 1.0 - pooled));
    }
  }
  return make_comparison("markov(" + std::to_string(k) + ")", "markov(" + std::to_string(k - 1) + ")", path.size(),
                         measured, main);
}

/// Max pairwise total-variation distance between the shift-wise empirical
/// distributions of length-k blocks.
inline double shift_homogeneity(const PathPrefix& path, std::size_t k) {
  std::vector<std::vector<double>> f;
  for (std::size_t a = 0; a < k; ++a) f.push_back(BlockCounts::of(path, k, a).frequencies());
  double worst = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j) worst = std::max(worst, total_variation(f[i], f[j]));
  return worst;
}

/// log K of the length-k block strategy with the capital split equally over the k shifts.
inline double block_all_shifts_log_capital(std::size_t k, const PathPrefix& path, Rho rho, double c = 1.0) {
  std::vector<double> terms;
  for (std::size_t a = 0; a < k; ++a)
    terms.push_back(block_log_capital(BlockParams::uniform(k, a, c), path, rho) - std::log(static_cast<double>(k)));
  return log_sum_exp(terms);
}

struct BlockMarkovAverage {
  std::size_t k = 0;
  std::size_t n = 0;
  double block_log_capital = 0.0;         // shift-combined length-k block strategy
  double markov_average_log_capital = 0.0;  // (1/k) sum_{i<k} log K^{M,i}
  double residual_per_round = 0.0;        // |difference| / n
  double homogeneity = 0.0;               // max pairwise TV between shifts
};

inline BlockMarkovAverage block_markov_average_check(const PathPrefix& path, Rho rho, std::size_t k) {
  if (k < 1) throw std::invalid_argument("block_markov_average_check: k must be >= 1");
  BlockMarkovAverage r;
  r.k = k;
  r.n = path.size();
  r.block_log_capital = block_all_shifts_log_capital(k, path, rho);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += markov_log_capital(MarkovParams{i, 1.0, 1.0}, path, rho);
  r.markov_average_log_capital = sum / static_cast<double>(k);
  r.residual_per_round =
      path.empty() ? 0.0 : std::abs(r.block_log_capital - r.markov_average_log_capital) / static_cast<double>(path.size());
  r.homogeneity = shift_homogeneity(path, k);
  return r;
}

// ---------------------------------------------------------------------------
// Analytic rates of known sources.

/// sum_ctx pi(ctx) D(P(1 | ctx) || rho) over order-k contexts.
inline double markov_rate_target(const BitSource& source, std::size_t k, Rho rho) {
  const std::vector<double> joint = stationary_block_distribution(source, k + 1);
  double rate = 0.0;
  for (std::size_t ctx = 0; ctx < (std::size_t{1} << k); ++ctx) {
    const double p0 = joint[2 * ctx];
    const double p1 = joint[2 * ctx + 1];
    if (p0 + p1 <= 0.0) continue;
    rate += (p0 + p1) * kl(p1 / (p0 + p1), rho.value());
  }
  return rate;
}

/// D(block law || rho^{eps}) / k for the blocks seen at `shift`. Periodic sources
/// are phase-locked, so their blocks are enumerated over one full cycle.
inline double block_rate_target(const BitSource& source, std::size_t k, std::size_t shift, Rho rho) {
  std::vector<double> law;
  if (const auto* per = std::get_if<Periodic>(&source)) {
    const std::size_t period = per->pattern.size();
    const std::size_t cycle = std::lcm(period, k);
    law.assign(std::size_t{1} << k, 0.0);
    const std::size_t blocks = cycle / k;
    for (std::size_t m = 0; m < blocks; ++m) {
      std::size_t e = 0;
      for (std::size_t i = 0; i < k; ++i) e = (e << 1) | static_cast<std::size_t>(per->pattern[(shift + m * k + i) % period] - '0');
      law[e] += 1.0 / static_cast<double>(blocks);
    }
  } else {
    law = stationary_block_distribution(source, k);
  }
  std::vector<double> q(law.size());
  for (std::size_t e = 0; e < q.size(); ++e) q[e] = std::exp(log_pattern_prob(e, k, rho));
  return kl_on_support(law, q) / static_cast<double>(k);
}

/// D(pi(1) || rho), where pi(1) is the long-run frequency of ones.
inline double beta_rate_target(const BitSource& source, Rho rho) {
  const std::vector<double> single = stationary_block_distribution(source, 1);
  return kl(single[1], rho.value());
}

/// Rate of a strategy that learns the whole law of the source: the relative
/// entropy rate against i.i.d. Bernoulli(rho), in nats.
inline double universal_rate_target(const BitSource& source, Rho rho) {
  const std::vector<double> single = stationary_block_distribution(source, 1);
  const double cross = -(single[1] * rho.log_up() + single[0] * rho.log_down());
  return cross - entropy_rate(source) * std::numbers::ln2;
}

struct UniversalRate {
  std::size_t n = 0;
  double rate_bits = 0.0;    // (1/n) log2 K_n of the universal mixture
  double target_bits = 0.0;  // 1 - H
  double deviation = 0.0;    // |rate - target|
};

/// Plays the universal mixture at rho = 1/2 against n draws from the source.
inline UniversalRate universal_rate(const BitSource& source, std::size_t n, std::size_t k_max, std::uint64_t seed,
                                    std::uint64_t stream = 0) {
  const double h = entropy_rate(source);
  const Rho rho(0.5);
  const PathPrefix path = generate(source, n, seed, stream);
  UniversalParams params;
  params.k_max = k_max;
  const CapitalProcess cap = run_game(MixturePredictor(universal_components(params, rho), rho), path, rho);
  UniversalRate r;
  r.n = n;
  r.rate_bits = cap.final_log_capital() / (static_cast<double>(n) * std::numbers::ln2);
  r.target_bits = 1.0 - h;
  r.deviation = std::abs(r.rate_bits - r.target_bits);
  return r;
}

}  // namespace skeptic

#endif  // SKEPTIC_ANALYSIS_HPP
