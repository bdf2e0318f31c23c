// Acceptance battery: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance            run everything
//   acceptance 3 5        run the listed criteria only

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include <skeptic/analysis.hpp>

#include "experiment.hpp"
#include "oracles.hpp"
#include "verify.hpp"

using namespace skeptic;
using namespace skeptic::tools;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string f6(double v) { return fixed(v, 6); }

PathPrefix random_path(Rng& rng, std::size_t n) {
  const double p = 0.15 + 0.7 * rng.uniform();
  PathPrefix out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.bernoulli(p) ? 1 : 0);
  return out;
}

FiniteDistribution random_distribution(Rng& rng, std::size_t horizon, double zero_fraction) {
  std::vector<double> leaves(std::size_t{1} << horizon);
  for (double& x : leaves) x = rng.uniform() < zero_fraction ? 0.0 : rng.uniform_open_low();
  leaves[rng.below(leaves.size())] = 1.0;
  return FiniteDistribution::from_leaves(horizon, leaves);
}

double gap(double a, double b) { return a == b ? 0.0 : std::abs(a - b); }

// 1 -------------------------------------------------------------------------
Outcome oracle_equality() {
  Rng rng(1001, 0);
  const std::vector<double> rhos{1.0 / 3.0, 0.5, 0.45};
  double worst_beta = 0, worst_block = 0, worst_markov = 0, worst_universal = 0, worst_independent = 0;
  for (int t = 0; t < 100; ++t) {
    const Rho rho(rhos[t % 3]);
    const PathPrefix p = random_path(rng, 2000);
    const BetaBinomialParams beta{1.0, 1.0};
    worst_beta = std::max(worst_beta, gap(run_game(BetaBinomialPredictor(beta), p, rho).final_log_capital(),
                                          beta_binomial_log_capital(beta, p, rho)));
    for (std::size_t k = 1; k <= 4; ++k) {
      for (std::size_t shift = 0; shift < k; ++shift) {
        const BlockParams params = BlockParams::uniform(k, shift, 1.0);
        worst_block = std::max(worst_block, gap(run_game(BlockPredictor(params, rho), p, rho).final_log_capital(),
                                                block_log_capital(params, p, rho)));
      }
    }
    for (std::size_t k = 0; k <= 4; ++k) {
      const MarkovParams params{k, 1.0, 1.0};
      worst_markov = std::max(worst_markov, gap(run_game(MarkovPredictor(params, rho), p, rho).final_log_capital(),
                                                markov_log_capital(params, p, rho)));
    }
    UniversalParams u;
    u.k_max = 4;
    const auto comps = universal_components(u, rho);
    const double universal = run_game(MixturePredictor(comps, rho), p, rho).final_log_capital();
    worst_universal = std::max(worst_universal, gap(universal, mixture_log_capital(comps, p, rho)));
    if (t < 10) {
      // the long-double oracle, written independently of the library
      worst_independent = std::max(
          worst_independent, gap(universal, static_cast<double>(oracle::log_capital_universal(oracle::bits(p.to_string()), 4, rho.value()))));
    }
  }
  const double worst = std::max({worst_beta, worst_block, worst_markov, worst_universal, worst_independent});
  return {worst <= 1e-9, "max gap beta " + num(worst_beta) + ", block " + num(worst_block) + ", markov " +
                             num(worst_markov) + ", universal " + num(worst_universal) + ", independent oracle " +
                             num(worst_independent) + " (tol 1e-9)"};
}

// 2 -------------------------------------------------------------------------
Outcome bijection_and_optimality() {
  Rng rng(1002, 0);
  const std::vector<double> rhos{1.0 / 3.0, 0.5, 0.45};
  double worst_round_trip = 0.0, worst_bet = 0.0, worst_optimality = kNegInf;
  std::size_t distributions = 0, alternatives = 0;
  for (std::size_t horizon = 1; horizon <= 10; ++horizon) {
    for (std::size_t r = 0; r < rhos.size(); ++r) {
      const Rho rho(rhos[r]);
      // distribution -> strategy -> distribution
      const FiniteDistribution q = random_distribution(rng, horizon, r == 1 ? 0.3 : 0.0);
      const BettingRule rule = strategy_from_distribution(q, rho);
      const FiniteDistribution back = distribution_from_strategy(rule, rho, horizon);
      for (std::size_t n = 0; n <= horizon; ++n)
        for (std::size_t v = 0; v < (std::size_t{1} << n); ++v)
          if (q.prob(n, v) > 0.0) worst_round_trip = std::max(worst_round_trip, std::abs(q.prob(n, v) - back.prob(n, v)));
      ++distributions;

      // strategy -> distribution -> strategy, for a Bayesian strategy with positive capital everywhere
      const MarkovPredictor predictor({1, 1.0, 2.0}, rho);
      const BettingRule bayes = [&](const PathPrefix& prefix) {
        return bet_from_prediction(predict_after(predictor, prefix), rho, std::exp(run_game(predictor, prefix, rho).final_log_capital())).total;
      };
      const FiniteDistribution qb = distribution_from_strategy(bayes, rho, horizon);
      const BettingRule again = strategy_from_distribution(qb, rho);
      for (std::size_t n = 0; n < horizon; ++n)
        for (std::size_t v = 0; v < (std::size_t{1} << n); ++v) {
          const PathPrefix prefix = prefix_from_value(n, v);
          worst_bet = std::max(worst_bet, std::abs(bayes(prefix) - again(prefix)));
        }

      // E^Q log K_Q >= E^Q log K for every prudent alternative
      if (horizon >= 2) {
        const double best = expected_log_capital(q, terminal_capitals(rule, rho, horizon));
        for (int a = 0; a < 50; ++a) {
          const FiniteDistribution alt = random_distribution(rng, horizon, a % 3 == 0 ? 0.2 : 0.0);
          const double other = expected_log_capital(q, terminal_capitals(strategy_from_distribution(alt, rho), rho, horizon));
          worst_optimality = std::max(worst_optimality, other - best);
          ++alternatives;
        }
      }
    }
  }
  const bool ok = worst_round_trip <= 1e-12 && worst_bet <= 1e-12 && worst_optimality <= 1e-12;
  return {ok, "N = 1..10, " + std::to_string(distributions) + " distributions: max |Q - Q'| " + num(worst_round_trip) +
                  ", max bet gap " + num(worst_bet) + "; " + std::to_string(alternatives) +
                  " alternatives, max E log K_alt - E log K_Q " + num(worst_optimality)};
}

// 3 -------------------------------------------------------------------------
Outcome beta_growth_law() {
  const std::size_t n = std::size_t{1} << 16;
  PathPrefix path;
  for (std::size_t i = 0; i < n; ++i) path.push_back(i % 4 != 3 ? 1 : 0);
  const Rho half(0.5);
  const double log_k = run_game(BetaBinomialPredictor({1, 1}), path, half).final_log_capital();
  const double main = static_cast<double>(n) * kl(0.75, 0.5);
  const double ratio = std::abs(log_k - main) / std::log(static_cast<double>(n));
  // bounded-ratio diagnostic along the path
  const auto cap = run_game(BetaBinomialPredictor({1, 1}), path, half);
  const auto report = growth_report("beta", cap, [&](std::size_t m) { return beta_main_term(path.prefix(m), half); },
                                    log_checkpoints(n), kl(0.75, 0.5));
  return {ratio <= 12.0, "kl(0.75,0.5) = " + f6(kl(0.75, 0.5)) + ", log K = " + f6(log_k) + ", n kl = " + f6(main) +
                             ", |diff|/log n = " + f6(ratio) + " (<= 12), max ratio over checkpoints " +
                             f6(report.max_residual_ratio)};
}

// 4 -------------------------------------------------------------------------
Outcome alternating_path() {
  const std::size_t n = std::size_t{1} << 14;
  const PathPrefix path = generate(Periodic{"01"}, n, 0);
  const Rho half(0.5);
  const double markov = run_game(MarkovPredictor({1, 1, 1}, half), path, half).final_log_capital() / static_cast<double>(n);
  const double beta = run_game(BetaBinomialPredictor({1, 1}), path, half).final_log_capital() / static_cast<double>(n);
  const double rel = std::abs(markov - std::log(2.0)) / std::log(2.0);
  return {rel <= 0.02 && std::abs(beta) <= 0.01, "markov(1) rate " + f6(markov) + " vs log 2 = " + f6(std::log(2.0)) +
                                                     " (rel err " + f6(rel) + " <= 0.02), beta rate " + f6(beta) +
                                                     " (|.| <= 0.01)"};
}

// 5 -------------------------------------------------------------------------
Outcome order_dominance() {
  const BitSource source = MarkovChain{2, {0.9, 0.5, 0.5, 0.5}};
  const Rho half(0.5);
  const std::size_t n = 100000;
  double mean[3] = {0, 0, 0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PathPrefix path = generate(source, n, 1005 + seed);
    for (std::size_t k = 0; k <= 2; ++k)
      mean[k] += markov_log_capital({k, 1, 1}, path, half) / static_cast<double>(n) / 20.0;
  }
  // targets from the stationary law, computed by the test's own power iteration
  const auto pi = oracle::stationary(2, {0.9L, 0.5L, 0.5L, 0.5L});
  const long double p1 = pi[0] * 0.9L + (1 - pi[0]) * 0.5L;
  long double t1 = 0;
  for (std::size_t last = 0; last < 2; ++last) {
    const long double w = pi[last] + pi[2 | last];
    const long double p = (pi[last] * (last == 0 ? 0.9L : 0.5L) + pi[2 | last] * 0.5L) / w;
    t1 += w * oracle::kl(p, 0.5L);
  }
  const double target[3] = {static_cast<double>(oracle::kl(p1, 0.5L)), static_cast<double>(t1),
                            static_cast<double>(pi[0] * oracle::kl(0.9L, 0.5L))};
  bool ok = mean[2] > mean[1] && mean[1] > mean[0];
  std::ostringstream d;
  for (std::size_t k = 0; k <= 2; ++k) {
    const double rel = std::abs(mean[k] - target[k]) / target[k];
    ok = ok && rel <= 0.10;
    const double lib = markov_rate_target(source, k, half);
    ok = ok && std::abs(lib - target[k]) <= 1e-12;
    d << "M" << k << " " << f6(mean[k]) << " vs " << f6(target[k]) << " (rel " << fixed(rel, 4) << ")"
      << (k < 2 ? ", " : "");
  }
  return {ok, d.str()};
}

// 6 -------------------------------------------------------------------------
Outcome universal_mixture() {
  const BitSource source = MarkovChain{1, {0.1, 0.9}};
  const double target = 1.0 + 0.9 * std::log2(0.9) + 0.1 * std::log2(0.1);
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) mean += universal_rate(source, 200000, 6, 1006 + seed).rate_bits / 10.0;
  const double dev = std::abs(mean - target);
  return {dev <= 0.03, "mean (1/n) log2 K = " + f6(mean) + " vs 1 - H = " + f6(target) + " (|diff| " + f6(dev) +
                           " <= 0.03 bits)"};
}

// 7 -------------------------------------------------------------------------
Outcome nesting() {
  std::size_t violations = 0, checks = 0;
  for (double h : {0.4, 0.5, 0.6, 0.7}) {
    for (std::uint64_t s = 0; s < 50; ++s) {
      const PricePath path = fbm_path(h, 1.0, std::size_t{1} << 16, 1007, s);
      const NestedCounts counts = nested_counts(path, 3, 10);  // level 3 is the parent of level 4
      for (std::size_t i = 1; i < counts.levels.size(); ++i) {
        const LevelCounts& child = counts.levels[i];
        const LevelCounts& parent = counts.levels[i - 1];
        violations += child.m[3] != parent.q1;
        violations += child.m[0] != parent.q0;
        checks += 2;
      }
      violations += nesting_violations(counts).size();
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) +
                               " equalities (50 paths x H in {0.4,0.5,0.6,0.7} x k = 4..10)"};
}

// 8 -------------------------------------------------------------------------
Outcome asset_growth() {
  AssetConfig rough;
  rough.hurst = 2.0 / 3.0;
  rough.hurst_given = true;
  rough.k_min = 4;
  rough.k_max = 12;
  rough.reps = 20;
  rough.seed = 1008;
  const AssetResult r = run_asset(rough);

  auto finest = [](const AssetResult& res, auto field) {
    std::vector<double> xs;
    for (const auto& run : res.runs) xs.push_back(field(run.levels.back()));
    return median(xs);
  };
  auto level_median = [](const AssetResult& res, std::size_t i, auto field) {
    std::vector<double> xs;
    for (const auto& run : res.runs) xs.push_back(field(run.levels[i]));
    return median(xs);
  };
  const double markov = finest(r, [](const LevelGrowth& g) { return g.markov_rate; });
  const double block = finest(r, [](const LevelGrowth& g) { return g.block_rate; });
  const double mt = markov_asset_target(rough.hurst), bt = block_asset_target(rough.hurst);
  const double markov_ratio = markov / mt, block_ratio = block / bt;
  // regularity ratios one level below the finest, where the growth ratio is defined
  const std::size_t below = r.runs.front().levels.size() - 2;
  const double growth = level_median(r, below, [](const LevelGrowth& g) { return g.growth_diagnostic; });
  std::ostringstream pairs;
  for (int ij = 0; ij < 4; ++ij)
    pairs << (ij ? "," : "") << fixed(level_median(r, below + 1, [ij](const LevelGrowth& g) { return g.pair_diagnostic[ij]; }), 3);

  AssetConfig brownian;
  brownian.hurst = 0.5;
  brownian.hurst_given = true;
  brownian.k_min = 4;
  brownian.k_max = 8;
  brownian.n_grid = std::size_t{1} << 22;
  brownian.reps = 20;
  brownian.seed = 1108;
  const AssetResult b = run_asset(brownian);
  const double bm = finest(b, [](const LevelGrowth& g) { return g.markov_rate; });
  const double bb = finest(b, [](const LevelGrowth& g) { return g.block_rate; });

  const bool ok = markov_ratio >= 0.5 && markov_ratio <= 1.5 && block_ratio >= 0.5 && block_ratio <= 1.5 && bm <= 0.01 &&
                  bb <= 0.01;
  std::ostringstream d;
  d << "H=2/3 k=12: median markov " << f6(markov) << " / " << f6(mt) << " = " << fixed(markov_ratio, 3)
    << ", median block " << f6(block) << " / " << f6(bt) << " = " << fixed(block_ratio, 3) << " (in [0.5,1.5]);"
    << " regularity n_12/(2^{1/H} n_11) " << fixed(growth, 3) << ", 2m/q at k=12 (00,01,10,11) " << pairs.str()
    << "; H=1/2 k=8 (n_grid 2^22): markov " << f6(bm) << ", block " << f6(bb) << " (<= 0.01)";
  return {ok, d.str()};
}

// 9 -------------------------------------------------------------------------
Outcome kl_identity() {
  Rng rng(1009, 0);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double p1 = rng.uniform(), p2 = rng.uniform(), q = 0.01 + 0.98 * rng.uniform(), lambda = rng.uniform();
    const double pbar = lambda * p1 + (1 - lambda) * p2;
    const double lhs = lambda * kl(p1, q) + (1 - lambda) * kl(p2, q) - kl(pbar, q);
    const double rhs = lambda * kl(p1, pbar) + (1 - lambda) * kl(p2, pbar);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return {worst <= 1e-12, "max |lhs - rhs| over 10^4 draws = " + num(worst) + " (tol 1e-12)"};
}

// 10 ------------------------------------------------------------------------
struct Captured {
  int status = -1;
  std::string out;
};

Captured run_cli(const std::string& args) {
  Captured c;
  FILE* pipe = popen(("\"" SKEPTIC_CLI "\" " + args + " 2>&1").c_str(), "r");
  if (!pipe) return c;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) c.out.append(buf, got);
  const int status = pclose(pipe);
  c.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("skeptic_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string coin = "coin --source \"markov_chain(0.1,0.9)\" --strategy beta --strategy \"block(2)\" "
                           "--strategy \"markov(2)\" --strategy \"universal(4)\" --n 20000 --reps 4 --seed 10 --out ";
  const std::string asset = "asset --H 0.6 --k 4..9 --reps 4 --seed 10 --export-bits --out ";
  std::vector<std::string> mismatches;
  std::size_t compared = 0;
  for (int run = 0; run < 2; ++run) {
    const std::string dir = (root / std::to_string(run)).string();
    if (run_cli(coin + dir + "/coin --workers " + std::to_string(run + 1)).status != 0) mismatches.push_back("coin exit");
    if (run_cli(asset + dir + "/asset --workers " + std::to_string(run + 1)).status != 0) mismatches.push_back("asset exit");
    if (run_cli("verify --out " + dir + "/verify.txt").status != 0) mismatches.push_back("verify exit");
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "0")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "0");
    ++compared;
    const std::string a = slurp(entry.path());
    if (a.empty() || a != slurp(root / "1" / rel)) mismatches.push_back(rel.string());
  }
  fs::remove_all(root);
  std::string detail = std::to_string(compared) + " files compared across two runs";
  if (!mismatches.empty()) {
    detail += "; differing:";
    for (const auto& m : mismatches) detail += " " + m;
  }
  return {mismatches.empty() && compared >= 10, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equality", oracle_equality},
      {"bijection and optimality", bijection_and_optimality},
      {"beta growth law", beta_growth_law},
      {"alternating path", alternating_path},
      {"order dominance", order_dominance},
      {"universal mixture rate", universal_mixture},
      {"nested counts", nesting},
      {"asset growth rates", asset_growth},
      {"kl identity", kl_identity},
      {"determinism", determinism},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

  std::size_t failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++ran;
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << " ("
              << fixed(secs, 1) << " s)" << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << ran - failed << "/" << ran << std::endl;
  return failed ? 1 : 0;
}
