#ifndef SKEPTIC_TOOLS_EXPERIMENT_HPP
#define SKEPTIC_TOOLS_EXPERIMENT_HPP

// Experiment runners behind the `coin` and `asset` subcommands: resolved
// configs, a worker pool with index-ordered results, and the output writers.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include <skeptic/analysis.hpp>
#include <skeptic/embed.hpp>
#include <skeptic/fbm.hpp>
#include <skeptic/rng.hpp>
#include <skeptic/spec_grammar.hpp>

#ifndef SKEPTIC_VERSION
#define SKEPTIC_VERSION "0.0.0"
#endif

namespace skeptic::tools {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = SKEPTIC_VERSION;

/// Shortest round-trip decimal form, independent of the locale. NaN is "nan".
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// CSV cell, quoted when it holds a comma, quote or line break.
inline std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Fixed-point form for human-readable tables.
inline std::string fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, ptr);
}

inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Default output directory: $SKEPTIC_OUTPUT_DIR, else ./skeptic-out.
inline std::string default_output_dir() {
  if (const char* env = std::getenv("SKEPTIC_OUTPUT_DIR"); env && *env) return env;
  return "skeptic-out";
}

inline std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
  std::size_t w = requested ? requested : std::max(1U, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, jobs));
}

/// Runs job(i) for i in [0, count) on `workers` threads. Results are written by
/// index, so scheduling never changes the output. The first failing index wins.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = resolve_workers(workers, count);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline json read_config_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("cannot open config file " + filename);
  try {
    json j = json::parse(in, nullptr, true, true);
    if (!j.is_object()) throw ConfigError("config file " + filename + " must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + filename + ": " + e.what());
  }
}

/// Header lines shared by every text output.
inline std::string comment_header(const json& resolved) {
  return std::string("# skeptic ") + kVersion + "\n# rng " + kRngAlgorithm + "\n# config " + resolved.dump() + "\n";
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("error writing " + path.string());
}

inline json output_envelope(const std::string& command, const json& resolved) {
  json j;
  j["skeptic_version"] = kVersion;
  j["rng"] = kRngAlgorithm;
  j["command"] = command;
  j["config"] = resolved;
  return j;
}

// ---------------------------------------------------------------------------
// coin

struct CoinConfig {
  std::string experiment_id = "coin";
  std::string source = "bernoulli(0.5)";
  std::vector<std::string> strategies{"beta(1,1)"};
  double rho = 0.5;
  std::optional<std::size_t> n;
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  std::vector<std::size_t> checkpoints;  // empty: 2^6, 2^7, ..., n
  std::string format = "csv";
  // execution settings, not part of the experiment's identity
  std::string out;
  std::size_t workers = 0;

  /// Overlays the keys present in a config object.
  void merge(const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      try {
        if (key == "experiment_id") experiment_id = v.get<std::string>();
        else if (key == "source") source = v.get<std::string>();
        else if (key == "strategy" || key == "strategies")
          strategies = v.is_array() ? v.get<std::vector<std::string>>() : std::vector<std::string>{v.get<std::string>()};
        else if (key == "rho") rho = v.get<double>();
        else if (key == "n") n = v.get<std::size_t>();
        else if (key == "seed") seed = v.get<std::uint64_t>();
        else if (key == "reps") reps = v.get<std::size_t>();
        else if (key == "checkpoints") checkpoints = v.get<std::vector<std::size_t>>();
        else if (key == "format") format = v.get<std::string>();
        else if (key == "out") out = v.get<std::string>();
        else if (key == "workers") workers = v.get<std::size_t>();
        else throw ConfigError("unknown coin config key \"" + key + "\"");
      } catch (const json::exception& e) {
        throw ConfigError("config key \"" + key + "\": " + e.what());
      }
    }
  }

  std::vector<std::size_t> resolved_checkpoints() const {
    if (checkpoints.empty()) return log_checkpoints(*n);
    std::vector<std::size_t> c = checkpoints;
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
  }

  void validate() const {
    if (!n) throw ConfigError("--n is required");
    if (*n == 0) throw ConfigError("--n must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("--rho must lie in (0,1)");
    if (reps == 0) throw ConfigError("--reps must be positive");
    if (strategies.empty()) throw ConfigError("at least one --strategy is needed");
    if (format != "csv" && format != "json") throw ConfigError("--format must be csv or json");
    for (std::size_t c : resolved_checkpoints())
      if (c == 0 || c > *n) throw ConfigError("checkpoints must lie in [1, n]");
  }

  json resolved() const {
    json j;
    j["experiment_id"] = experiment_id;
    j["source"] = source;
    j["strategies"] = strategies;
    j["rho"] = rho;
    j["n"] = *n;
    j["seed"] = seed;
    j["reps"] = reps;
    j["checkpoints"] = resolved_checkpoints();
    j["format"] = format;
    return j;
  }
};

struct CoinRun {
  std::size_t replication = 0;
  std::string strategy;
  GrowthReport report;
  double oracle_gap = 0.0;  // |incremental - closed form| at n
  std::optional<std::size_t> ruined_at;
};

struct CoinResult {
  CoinConfig config;
  std::vector<StrategySpec> strategies;
  std::vector<CoinRun> runs;  // replication-major, then strategy order
};

inline CoinResult run_coin(const CoinConfig& config) {
  config.validate();
  CoinResult result;
  result.config = config;
  const BitSource source = parse_source(config.source);
  for (const auto& s : config.strategies) result.strategies.push_back(StrategySpec::parse(s));
  const Rho rho(config.rho);
  const std::size_t n = *config.n;
  const std::vector<std::size_t> checkpoints = config.resolved_checkpoints();

  std::vector<double> targets;
  for (const auto& s : result.strategies) targets.push_back(s.target_rate(source, rho));

  const std::size_t per_rep = result.strategies.size();
  result.runs.resize(config.reps * per_rep);
  parallel_for(config.reps, config.workers, [&](std::size_t rep) {
    const PathPrefix path = generate(source, n, config.seed, rep);
    for (std::size_t j = 0; j < per_rep; ++j) {
      const StrategySpec& spec = result.strategies[j];
      const CapitalProcess cap = run_game(spec.make_predictor(rho), path, rho);
      CoinRun run;
      run.replication = rep;
      run.strategy = spec.label();
      run.report = growth_report(
          run.strategy, cap, [&](std::size_t m) { return spec.main_term(path.prefix(m), rho); }, checkpoints, targets[j]);
      const double closed = spec.log_capital(path, rho);
      run.oracle_gap = cap.final_log_capital() == closed ? 0.0 : std::abs(cap.final_log_capital() - closed);
      run.ruined_at = cap.ruined_at;
      result.runs[rep * per_rep + j] = std::move(run);
    }
  });
  return result;
}

inline std::string coin_growth_csv(const CoinResult& r) {
  std::ostringstream out;
  out << comment_header(r.config.resolved());
  out << "experiment_id,replication,strategy,n,log_capital,rate,target_rate,residual,diagnostic_main_term,"
         "diagnostic_main_residual,diagnostic_main_residual_over_log_n,diagnostic_oracle_gap\n";
  for (const auto& run : r.runs) {
    for (const auto& c : run.report.checkpoints) {
      const bool last = c.n == run.report.checkpoints.back().n;
      out << csv_field(r.config.experiment_id) << ',' << run.replication << ',' << csv_field(run.strategy) << ',' << c.n << ','
          << num(c.log_capital) << ',' << num(c.log_capital / static_cast<double>(c.n)) << ','
          << num(run.report.target_rate) << ',' << num(c.target_residual) << ',' << num(c.main_term) << ','
          << num(c.main_residual) << ',' << num(c.main_residual_over_log_n) << ','
          << (last ? num(run.oracle_gap) : std::string("nan")) << '\n';
    }
  }
  return out.str();
}

inline std::string coin_growth_json(const CoinResult& r) {
  json j = output_envelope("coin", r.config.resolved());
  json runs = json::array();
  for (const auto& run : r.runs) {
    json jr;
    jr["replication"] = run.replication;
    jr["strategy"] = run.strategy;
    jr["target_rate"] = json_number(run.report.target_rate);
    jr["rate"] = json_number(run.report.main_rate);
    jr["max_abs_main_residual_over_log_n"] = json_number(run.report.max_residual_ratio);
    jr["oracle_gap"] = json_number(run.oracle_gap);
    jr["ruined_at"] = run.ruined_at ? json(*run.ruined_at) : json(nullptr);
    json cps = json::array();
    for (const auto& c : run.report.checkpoints) {
      cps.push_back({{"n", c.n},
                     {"log_capital", json_number(c.log_capital)},
                     {"residual", json_number(c.target_residual)},
                     {"main_term", json_number(c.main_term)},
                     {"main_residual", json_number(c.main_residual)},
                     {"main_residual_over_log_n", json_number(c.main_residual_over_log_n)}});
    }
    jr["checkpoints"] = std::move(cps);
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

struct RateSummary {
  double mean = 0.0;
  double sd = 0.0;
};

inline RateSummary summarize(const std::vector<double>& xs) {
  RateSummary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(v / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline std::string coin_summary_text(const CoinResult& r) {
  std::ostringstream out;
  out << comment_header(r.config.resolved());
  out << "source " << r.config.source << ", rho " << num(r.config.rho) << ", n " << *r.config.n << ", reps "
      << r.config.reps << "\n";
  out << "strategy                  rate_nats    sd          rate_bits    target_nats  max|res|/log n\n";
  const std::size_t per_rep = r.strategies.size();
  for (std::size_t j = 0; j < per_rep; ++j) {
    std::vector<double> rates;
    double worst = 0.0;
    for (std::size_t rep = 0; rep < r.config.reps; ++rep) {
      const auto& run = r.runs[rep * per_rep + j];
      rates.push_back(run.report.main_rate);
      worst = std::max(worst, run.report.max_residual_ratio);
    }
    const RateSummary s = summarize(rates);
    std::string label = r.strategies[j].label();
    label.resize(std::max<std::size_t>(label.size(), 25), ' ');
    out << label << ' ' << fixed(s.mean) << "    " << fixed(s.sd) << "    " << fixed(s.mean / std::numbers::ln2)
        << "    " << fixed(r.runs[j].report.target_rate) << "    " << fixed(worst, 3) << "\n";
  }
  return out.str();
}

inline std::vector<std::filesystem::path> write_coin_outputs(const CoinResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    written.push_back(dir / name);
  };
  put("config.json", output_envelope("coin", r.config.resolved()).dump(2) + "\n");
  if (r.config.format == "csv") put("coin_growth.csv", coin_growth_csv(r));
  else put("coin_growth.json", coin_growth_json(r));
  put("coin_summary.txt", coin_summary_text(r));
  return written;
}

// ---------------------------------------------------------------------------
// asset

struct AssetConfig {
  std::string experiment_id = "asset";
  double hurst = 0.5;
  bool hurst_given = false;  // for imported paths the targets need an explicit --H
  double horizon = 1.0;
  int k_min = 4;
  int k_max = 12;
  std::size_t n_grid = 0;  // 0: smallest power of two with increment sd <= eta/2 at k_max
  std::size_t reps = 1;
  std::uint64_t seed = 1;
  std::string input;
  bool export_bits = false;
  std::string out;
  std::size_t workers = 0;

  void merge(const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      try {
        if (key == "experiment_id") experiment_id = v.get<std::string>();
        else if (key == "H" || key == "hurst") {
          hurst = v.get<double>();
          hurst_given = true;
        } else if (key == "T") horizon = v.get<double>();
        else if (key == "k") set_k_range(v.get<std::string>());
        else if (key == "n_grid") n_grid = v.get<std::size_t>();
        else if (key == "reps") reps = v.get<std::size_t>();
        else if (key == "seed") seed = v.get<std::uint64_t>();
        else if (key == "input") input = v.get<std::string>();
        else if (key == "export_bits") export_bits = v.get<bool>();
        else if (key == "out") out = v.get<std::string>();
        else if (key == "workers") workers = v.get<std::size_t>();
        else throw ConfigError("unknown asset config key \"" + key + "\"");
      } catch (const json::exception& e) {
        throw ConfigError("config key \"" + key + "\": " + e.what());
      }
    }
  }

  /// "a..b" or a single level "a".
  void set_k_range(const std::string& text) {
    auto parse_int = [&](std::string_view s) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("--k expects a..b, got \"" + text + "\"");
      return v;
    };
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
      k_min = k_max = parse_int(text);
    } else {
      k_min = parse_int(std::string_view(text).substr(0, dots));
      k_max = parse_int(std::string_view(text).substr(dots + 2));
    }
  }

  bool imported() const { return !input.empty(); }

  void validate() const {
    if (k_min < 0 || k_max > 30 || k_min > k_max) throw ConfigError("--k must be a..b with 0 <= a <= b <= 30");
    if (!imported()) {
      if (!(hurst > 0.0 && hurst < 1.0)) throw ConfigError("--H must lie in (0,1)");
      if (!(horizon > 0.0)) throw ConfigError("--T must be positive");
      if (n_grid != 0 && !is_power_of_two(n_grid)) throw ConfigError("--n-grid must be a power of two");
      if (reps == 0) throw ConfigError("--reps must be positive");
    }
  }

  json resolved() const {
    json j;
    j["experiment_id"] = experiment_id;
    if (imported()) {
      j["input"] = input;
      j["H"] = hurst_given ? json(hurst) : json(nullptr);
    } else {
      j["H"] = hurst;
      j["T"] = horizon;
      j["n_grid"] = n_grid ? json(n_grid) : json("auto");
      j["reps"] = reps;
      j["seed"] = seed;
    }
    j["k"] = std::to_string(k_min) + ".." + std::to_string(k_max);
    j["export_bits"] = export_bits;
    return j;
  }
};

/// Raised when the nesting identities fail on a path: a hard failure.
class NestingViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssetRun {
  std::size_t replication = 0;
  std::size_t n_grid = 0;
  int doublings = 0;
  std::vector<LevelGrowth> levels;
  std::vector<VariationStats> variation;
  std::vector<std::string> exported_bits;  // per level, when requested
};

struct AssetResult {
  AssetConfig config;
  std::vector<AssetRun> runs;
};

inline AssetRun analyse_asset_path(const PricePath& path, const AssetConfig& config, double hurst) {
  AssetRun run;
  const NestedCounts counts = nested_counts(path, config.k_min, config.k_max);
  const auto violations = nesting_violations(counts);
  if (!violations.empty()) throw NestingViolation("nested count identity violated: " + violations.front());
  run.levels = asset_growth_report(path, config.k_min, config.k_max, hurst);
  run.variation = counts.variation;
  if (config.export_bits)
    for (int k = config.k_min; k <= config.k_max; ++k) run.exported_bits.push_back(embed(path, k).bits.to_string());
  return run;
}

inline AssetResult run_asset(const AssetConfig& config) {
  config.validate();
  AssetResult result;
  result.config = config;
  if (config.imported()) {
    const PricePath path = read_price_csv(config.input);
    AssetRun run = analyse_asset_path(path, config, config.hurst_given ? config.hurst : std::nan(""));
    run.n_grid = path.size() - 1;
    result.runs.push_back(std::move(run));
    return result;
  }
  result.runs.resize(config.reps);
  const std::size_t start = config.n_grid ? config.n_grid : initial_grid(config.hurst, config.horizon, config.k_max);
  parallel_for(config.reps, config.workers, [&](std::size_t rep) {
    const RefinedPath refined = synthesize_refined(config.hurst, config.horizon, config.k_max, start, config.seed, rep);
    AssetRun run = analyse_asset_path(refined.path, config, config.hurst);
    run.replication = rep;
    run.n_grid = refined.n_grid;
    run.doublings = refined.doublings;
    result.runs[rep] = std::move(run);
  });
  return result;
}

inline std::string asset_levels_csv(const AssetResult& r) {
  const double h = r.config.imported() && !r.config.hurst_given ? std::nan("") : r.config.hurst;
  std::ostringstream out;
  out << comment_header(r.config.resolved());
  out << "experiment_id,replication,level,eta,rho_delta,rounds,markov_rate,block_rate,markov_target,block_target,"
         "up_fraction,r1,r0,diagnostic_growth_ratio,diagnostic_pair_00,diagnostic_pair_01,diagnostic_pair_10,"
         "diagnostic_pair_11,diagnostic_shifted_pair_00,diagnostic_shifted_pair_01,diagnostic_shifted_pair_10,"
         "diagnostic_shifted_pair_11,diagnostic_variation_ratio,diagnostic_total_variation,n_grid,multi_level_segments\n";
  for (const auto& run : r.runs) {
    for (std::size_t i = 0; i < run.levels.size(); ++i) {
      const LevelGrowth& g = run.levels[i];
      out << csv_field(r.config.experiment_id) << ',' << run.replication << ',' << g.level << ',' << num(grid_spacing(g.level)) << ','
          << num(g.rho_delta) << ',' << g.rounds << ',' << num(g.markov_rate) << ',' << num(g.block_rate) << ','
          << num(markov_asset_target(h)) << ',' << num(block_asset_target(h)) << ',' << num(g.up_fraction) << ','
          << num(g.r1) << ',' << num(g.r0) << ',' << num(g.growth_diagnostic);
      for (double d : g.pair_diagnostic) out << ',' << num(d);
      for (double d : g.shifted_pair_diagnostic) out << ',' << num(d);
      out << ',' << num(g.variation_ratio) << ',' << num(run.variation[i].total_variation) << ',' << run.n_grid << ','
          << g.multi_level_segments << '\n';
    }
  }
  return out.str();
}

inline double median(std::vector<double> xs) {
  xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return std::isnan(x); }), xs.end());
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

inline std::string asset_summary_text(const AssetResult& r) {
  const double h = r.config.imported() && !r.config.hurst_given ? std::nan("") : r.config.hurst;
  std::ostringstream out;
  out << comment_header(r.config.resolved());
  out << "targets: markov(1) " << fixed(markov_asset_target(h)) << " nats, block(2,all) " << fixed(block_asset_target(h))
      << " nats\n";
  out << "level  median_rounds  median_markov  median_block  mean_markov  mean_block  growth_ratio  pair_11  L/TV\n";
  const std::size_t levels = r.runs.front().levels.size();
  for (std::size_t i = 0; i < levels; ++i) {
    std::vector<double> rounds, mk, bl, gr, p11, lv;
    for (const auto& run : r.runs) {
      const auto& g = run.levels[i];
      rounds.push_back(static_cast<double>(g.rounds));
      mk.push_back(g.markov_rate);
      bl.push_back(g.block_rate);
      gr.push_back(g.growth_diagnostic);
      p11.push_back(g.pair_diagnostic[3]);
      lv.push_back(g.variation_ratio);
    }
    char line[256];
    std::snprintf(line, sizeof line, "%5d  %13.0f  %13s  %12s  %11s  %10s  %12s  %7s  %s\n", r.runs.front().levels[i].level,
                  median(rounds), fixed(median(mk)).c_str(), fixed(median(bl)).c_str(), fixed(summarize(mk).mean).c_str(),
                  fixed(summarize(bl).mean).c_str(), fixed(median(gr), 4).c_str(), fixed(median(p11), 4).c_str(),
                  fixed(median(lv), 4).c_str());
    out << line;
  }
  return out.str();
}

inline std::vector<std::filesystem::path> write_asset_outputs(const AssetResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    written.push_back(dir / name);
  };
  put("config.json", output_envelope("asset", r.config.resolved()).dump(2) + "\n");
  put("asset_levels.csv", asset_levels_csv(r));
  put("asset_summary.txt", asset_summary_text(r));
  if (r.config.export_bits) {
    for (const auto& run : r.runs) {
      for (std::size_t i = 0; i < run.exported_bits.size(); ++i) {
        const int level = r.config.k_min + static_cast<int>(i);
        std::string body = comment_header(r.config.resolved());
        body += "# replication " + std::to_string(run.replication) + " level " + std::to_string(level) + "\n";
        body += run.exported_bits[i] + "\n";
        put("bits_r" + std::to_string(run.replication) + "_k" + std::to_string(level) + ".txt", body);
      }
    }
  }
  return written;
}

}  // namespace skeptic::tools

#endif  // SKEPTIC_TOOLS_EXPERIMENT_HPP
