#ifndef SKEPTIC_TOOLS_VERIFY_HPP
#define SKEPTIC_TOOLS_VERIFY_HPP

// The invariant battery run by `skeptic verify`.

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <skeptic/analysis.hpp>
#include <skeptic/distribution.hpp>
#include <skeptic/embed.hpp>
#include <skeptic/fbm.hpp>
#include <skeptic/mixture.hpp>
#include <skeptic/rng.hpp>
#include <skeptic/strategies.hpp>

#include "experiment.hpp"

namespace skeptic::tools {

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  // Mutation test: flips the sign of the bet produced by the P_Q map.
  bool inject_sign_error = false;
};

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

namespace verify_detail {

inline PathPrefix random_path(Rng& rng, std::size_t n, double p) {
  PathPrefix out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.bernoulli(p) ? 1 : 0);
  return out;
}

inline FiniteDistribution random_distribution(Rng& rng, std::size_t horizon, double zero_fraction = 0.0) {
  std::vector<double> leaves(std::size_t{1} << horizon);
  for (double& x : leaves) x = rng.uniform() < zero_fraction ? 0.0 : rng.uniform_open_low();
  leaves[rng.below(leaves.size())] = 1.0;  // never all zero
  return FiniteDistribution::from_leaves(horizon, leaves);
}

/// The P_Q betting rule, optionally with the sign mutation.
inline BettingRule pq_rule(const FiniteDistribution& q, Rho rho, bool mutate) {
  BettingRule rule = strategy_from_distribution(q, rho);
  if (!mutate) return rule;
  return [rule](const PathPrefix& prefix) { return -rule(prefix); };
}

template <class Fn>
CheckResult guarded(const std::string& name, Fn fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return CheckResult{name, false, std::string("exception: ") + e.what()};
  }
}

}  // namespace verify_detail

inline std::vector<CheckResult> run_verify(const VerifyOptions& options) {
  using namespace verify_detail;
  std::vector<CheckResult> out;
  const std::vector<double> rhos{1.0 / 3.0, 0.5, 0.45};

  out.push_back(guarded("examples", [&] {
    std::ostringstream bad;
    auto expect = [&](const char* what, double got, double want, double tol) {
      if (!(std::abs(got - want) <= tol)) bad << what << " = " << num(got) << " (want " << num(want) << "); ";
    };
    expect("kl(0.75,0.5)", kl(0.75, 0.5), 0.75 * std::log(1.5) + 0.25 * std::log(0.5), 1e-15);
    expect("kl(1,0.5)", kl(1.0, 0.5), std::log(2.0), 1e-15);
    expect("bet rho=1/3 p=1/2", bet_from_prediction(0.5, Rho(1.0 / 3.0), 1.0).total, 0.75, 1e-15);
    const Rho half(0.5);
    expect("K(11)", std::exp(run_game(BetaBinomialPredictor({1, 1}), PathPrefix::from_string("11"), half).final_log_capital()),
           4.0 / 3.0, 1e-12);
    expect("K(10)", std::exp(run_game(BetaBinomialPredictor({1, 1}), PathPrefix::from_string("10"), half).final_log_capital()),
           2.0 / 3.0, 1e-12);
    expect("K(1111)", std::exp(beta_binomial_log_capital({1, 1}, PathPrefix::from_string("1111"), half)), 16.0 / 5.0, 1e-12);
    expect("K_block(1111)", std::exp(block_log_capital(BlockParams::uniform(2), PathPrefix::from_string("1111"), half)), 1.6,
           1e-12);
    return CheckResult{"examples", bad.str().empty(), bad.str().empty() ? "hand-computed values reproduced" : bad.str()};
  }));

  // Incremental run_game against the closed forms.
  struct Family {
    std::string name;
    std::function<double(const PathPrefix&, Rho, Rng&)> gap;
  };
  std::vector<Family> families{
      {"oracle/beta",
       [](const PathPrefix& p, Rho rho, Rng&) {
         const BetaBinomialParams params{1.0, 1.0};
         return std::abs(run_game(BetaBinomialPredictor(params), p, rho).final_log_capital() -
                         beta_binomial_log_capital(params, p, rho));
       }},
      {"oracle/block",
       [](const PathPrefix& p, Rho rho, Rng& rng) {
         const std::size_t k = 1 + rng.below(4);
         const BlockParams params = BlockParams::uniform(k, rng.below(k), 0.5 + rng.uniform());
         return std::abs(run_game(BlockPredictor(params, rho), p, rho).final_log_capital() -
                         block_log_capital(params, p, rho));
       }},
      {"oracle/markov",
       [](const PathPrefix& p, Rho rho, Rng& rng) {
         const MarkovParams params{rng.below(5), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
         return std::abs(run_game(MarkovPredictor(params, rho), p, rho).final_log_capital() -
                         markov_log_capital(params, p, rho));
       }},
      {"oracle/universal",
       [](const PathPrefix& p, Rho rho, Rng&) {
         UniversalParams params;
         params.k_max = 4;
         const auto comps = universal_components(params, rho);
         return std::abs(run_game(MixturePredictor(comps, rho), p, rho).final_log_capital() -
                         mixture_log_capital(comps, p, rho));
       }},
  };
  for (std::size_t f = 0; f < families.size(); ++f) {
    out.push_back(guarded(families[f].name, [&] {
      Rng rng(options.seed, 100 + f);
      double worst = 0.0;
      for (int t = 0; t < 12; ++t) {
        const Rho rho(rhos[t % rhos.size()]);
        const PathPrefix p = random_path(rng, 500, 0.2 + 0.6 * rng.uniform());
        worst = std::max(worst, families[f].gap(p, rho, rng));
      }
      return CheckResult{families[f].name, worst <= 1e-9, "max |incremental - closed form| = " + num(worst)};
    }));
  }

  // The additive protocol driven by P_Q bets reproduces the likelihood ratio.
  out.push_back(guarded("oracle/pq_protocol", [&] {
    Rng rng(options.seed, 200);
    const std::size_t horizon = 8;
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
      const Rho rho(rhos[t]);
      const FiniteDistribution q = FiniteDistribution::from_predictor(MarkovPredictor({1, 1.0, 2.0}, rho), horizon);
      const BettingRule rule = pq_rule(q, rho, options.inject_sign_error);
      const std::vector<double> terminal = terminal_capitals(rule, rho, horizon);
      for (std::size_t v = 0; v < terminal.size(); ++v) {
        const double closed = capital_closed_form(q, prefix_from_value(horizon, v), rho);
        const double got = terminal[v] > 0.0 ? std::log(terminal[v]) : kNegInf;
        worst = std::max(worst, got == closed ? 0.0 : std::abs(got - closed));
      }
    }
    return CheckResult{"oracle/pq_protocol", worst <= 1e-9, "max |log K - log likelihood ratio| = " + num(worst)};
  }));

  out.push_back(guarded("bijection", [&] {
    Rng rng(options.seed, 300);
    const std::size_t horizon = 8;
    double worst = 0.0;
    for (int t = 0; t < 6; ++t) {
      const Rho rho(rhos[t % rhos.size()]);
      const FiniteDistribution q = random_distribution(rng, horizon, t % 2 ? 0.3 : 0.0);
      const FiniteDistribution back = distribution_from_strategy(pq_rule(q, rho, options.inject_sign_error), rho, horizon);
      for (std::size_t n = 0; n <= horizon; ++n)
        for (std::size_t v = 0; v < (std::size_t{1} << n); ++v)
          if (q.prob(n, v) > 0.0) worst = std::max(worst, std::abs(q.prob(n, v) - back.prob(n, v)));
    }
    return CheckResult{"bijection", worst <= 1e-12, "max |Q - Q'| over positive prefixes = " + num(worst)};
  }));

  out.push_back(guarded("prudence", [&] {
    const std::size_t horizon = 10;
    double lowest = 1.0;
    for (double r : rhos) {
      const Rho rho(r);
      for (const AnyPredictor& p : {AnyPredictor(BetaBinomialPredictor({0.5, 0.5})), AnyPredictor(MarkovPredictor({2, 1, 1}, rho)),
                                    AnyPredictor(BlockPredictor(BlockParams::uniform(3, 1), rho))}) {
        const FiniteDistribution q = FiniteDistribution::from_predictor(p, horizon);
        for (double k : terminal_capitals(strategy_from_distribution(q, rho), rho, horizon)) lowest = std::min(lowest, k);
      }
    }
    return CheckResult{"prudence", lowest >= 0.0, "min K_N over all paths = " + num(lowest)};
  }));

  out.push_back(guarded("optimality", [&] {
    Rng rng(options.seed, 400);
    const std::size_t horizon = 6;
    double worst = kNegInf;  // max of E log K_alt - E log K_Q
    for (int t = 0; t < 6; ++t) {
      const Rho rho(rhos[t % rhos.size()]);
      const FiniteDistribution q = random_distribution(rng, horizon, t % 2 ? 0.25 : 0.0);
      const double best = expected_log_capital(q, terminal_capitals(pq_rule(q, rho, options.inject_sign_error), rho, horizon));
      for (int a = 0; a < 20; ++a) {
        const FiniteDistribution alt = random_distribution(rng, horizon, a % 3 == 0 ? 0.2 : 0.0);
        const double other = expected_log_capital(q, terminal_capitals(strategy_from_distribution(alt, rho), rho, horizon));
        worst = std::max(worst, other - best);
      }
    }
    return CheckResult{"optimality", worst <= 1e-12, "max E^Q log K_alt - E^Q log K_Q = " + num(worst)};
  }));

  out.push_back(guarded("kl_identity", [&] {
    Rng rng(options.seed, 500);
    double worst = 0.0;
    for (int t = 0; t < 2000; ++t) {
      const double p1 = rng.uniform(), p2 = rng.uniform(), q = 0.01 + 0.98 * rng.uniform(), lambda = rng.uniform();
      const double pbar = lambda * p1 + (1 - lambda) * p2;
      const double lhs = lambda * kl(p1, q) + (1 - lambda) * kl(p2, q) - kl(pbar, q);
      const double rhs = pbar > 0.0 && pbar < 1.0 ? lambda * kl(p1, pbar) + (1 - lambda) * kl(p2, pbar) : 0.0;
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    return CheckResult{"kl_identity", worst <= 1e-12, "max |lhs - rhs| = " + num(worst)};
  }));

  out.push_back(guarded("embed_examples", [&] {
    PricePath line{{0.0, 1.0}, {0.0, 1.0}, 0.0};
    PricePath zigzag{{0.0, 1.0, 2.0}, {0.0, 0.5, 0.25}, 0.0};
    const std::string a = embed(line, 2).bits.to_string();
    const std::string b = embed(zigzag, 2).bits.to_string();
    const bool ok = a == "1111" && b == "110";
    return CheckResult{"embed_examples", ok, "monotone -> " + a + ", zigzag -> " + b};
  }));

  out.push_back(guarded("nesting", [&] {
    std::size_t violations = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const PricePath path = fbm_path(0.5, 1.0, 1 << 14, options.seed, 600 + s);
      violations += nesting_violations(nested_counts(path, 1, 8)).size();
    }
    return CheckResult{"nesting", violations == 0, std::to_string(violations) + " violations on 10 random walks, k = 1..8"};
  }));

  out.push_back(guarded("growth_law", [&] {
    PathPrefix path;
    for (std::size_t i = 0; i < 4096; ++i) path.push_back(i % 4 != 3 ? 1 : 0);
    const Rho rho(0.5);
    const double residual = beta_binomial_log_capital({1, 1}, path, rho) - beta_main_term(path, rho);
    const double ratio = std::abs(residual) / std::log(4096.0);
    return CheckResult{"growth_law", ratio <= 12.0, "|log K - n kl(xbar, rho)| / log n = " + num(ratio)};
  }));

  return out;
}

inline std::string format_verify(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << (r.ok ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    failed += r.ok ? 0 : 1;
  }
  out << (failed ? "FAILED " : "ALL PASSED ") << results.size() - failed << "/" << results.size() << "\n";
  return out.str();
}

}  // namespace skeptic::tools

#endif  // SKEPTIC_TOOLS_VERIFY_HPP
