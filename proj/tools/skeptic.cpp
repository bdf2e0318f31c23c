// skeptic: coin-tossing and asset-embedding experiments.
//
//   skeptic coin   --source "periodic(01)" --strategy "markov(1,1,1)" --n 4096
//   skeptic asset  --H 0.667 --k 4..12 --reps 20
//   skeptic verify

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"
#include "verify.hpp"

namespace {

using namespace skeptic::tools;

constexpr int kUsageError = 2;
constexpr int kRunError = 1;

int usage_error(const CLI::App& app, const std::string& message) {
  std::cerr << "error: " << message << "\n\n" << app.help();
  return kUsageError;
}

void report_written(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game-theoretic coin-tossing and asset-trading experiments", "skeptic"};
  app.set_version_flag("--version", std::string("skeptic ") + kVersion);
  app.require_subcommand(1);

  // coin
  CLI::App* coin = app.add_subcommand("coin", "Play strategies against a bit source and report capital growth");
  std::string coin_config_file;
  CoinConfig coin_flags;
  std::size_t coin_n = 0;
  std::vector<std::string> coin_strategies;
  coin->add_option("--config", coin_config_file, "JSON config file; flags override its keys");
  coin->add_option("--source", coin_flags.source, "bernoulli(p) | markov_chain(p_0,..) | periodic(01) | bits(..) | bitfile(path)");
  coin->add_option("--strategy", coin_strategies, "beta(a,b) | block(k,shift|all,c) | markov(k,a,b) | universal(kmax); repeatable");
  coin->add_option("--rho", coin_flags.rho, "risk-neutral probability of a one, in (0,1)");
  coin->add_option("--n", coin_n, "number of rounds (required)");
  coin->add_option("--seed", coin_flags.seed, "random seed");
  coin->add_option("--reps", coin_flags.reps, "replications (independent streams of the same seed)");
  coin->add_option("--checkpoints", coin_flags.checkpoints, "rounds at which to report (default 64, 128, ..., n)");
  coin->add_option("--format", coin_flags.format, "growth table format")->check(CLI::IsMember({"csv", "json"}));
  coin->add_option("--out", coin_flags.out, "output directory (default $SKEPTIC_OUTPUT_DIR or ./skeptic-out)");
  coin->add_option("--workers", coin_flags.workers, "worker threads (0 = all cores)");
  coin->add_option("--experiment-id", coin_flags.experiment_id, "label written in the experiment_id column");

  // asset
  CLI::App* asset = app.add_subcommand("asset", "Embed price paths on dyadic grids and measure strategy growth per level");
  std::string asset_config_file;
  AssetConfig asset_flags;
  std::string k_range;
  asset->add_option("--config", asset_config_file, "JSON config file; flags override its keys");
  asset->add_option("--H", asset_flags.hurst, "Hurst index of the synthesized fractional Brownian motion");
  asset->add_option("--T", asset_flags.horizon, "time horizon");
  asset->add_option("--k", k_range, "grid levels a..b (eta_k = 2^-k), default 4..12");
  asset->add_option("--n-grid", asset_flags.n_grid, "initial sampling grid, a power of two (default: automatic)");
  asset->add_option("--reps", asset_flags.reps, "number of synthesized paths");
  asset->add_option("--seed", asset_flags.seed, "random seed");
  asset->add_option("--input", asset_flags.input, "CSV of time,price rows to use instead of synthesis");
  asset->add_flag("--export-bits", asset_flags.export_bits, "also write the embedded bit sequences");
  asset->add_option("--out", asset_flags.out, "output directory (default $SKEPTIC_OUTPUT_DIR or ./skeptic-out)");
  asset->add_option("--workers", asset_flags.workers, "worker threads (0 = all cores)");
  asset->add_option("--experiment-id", asset_flags.experiment_id, "label written in the experiment_id column");

  // verify
  CLI::App* verify = app.add_subcommand("verify", "Run the invariant battery and print one PASS/FAIL line per check");
  VerifyOptions verify_options;
  std::string verify_out;
  verify->add_option("--seed", verify_options.seed, "random seed for the battery");
  verify->add_flag("--inject-sign-error", verify_options.inject_sign_error, "mutation test: negate the P_Q bet");
  verify->add_option("--out", verify_out, "also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*coin) {
      CoinConfig cfg;
      if (!coin_config_file.empty()) cfg.merge(read_config_file(coin_config_file));
      // flags win over the config file
      auto given = [&](const char* flag) { return coin->count(flag) > 0; };
      if (given("--source")) cfg.source = coin_flags.source;
      if (given("--strategy")) cfg.strategies = coin_strategies;
      if (given("--rho")) cfg.rho = coin_flags.rho;
      if (given("--n")) cfg.n = coin_n;
      if (given("--seed")) cfg.seed = coin_flags.seed;
      if (given("--reps")) cfg.reps = coin_flags.reps;
      if (given("--checkpoints")) cfg.checkpoints = coin_flags.checkpoints;
      if (given("--format")) cfg.format = coin_flags.format;
      if (given("--out")) cfg.out = coin_flags.out;
      if (given("--workers")) cfg.workers = coin_flags.workers;
      if (given("--experiment-id")) cfg.experiment_id = coin_flags.experiment_id;
      try {
        cfg.validate();
        for (const auto& s : cfg.strategies) skeptic::StrategySpec::parse(s);
        skeptic::parse_source(cfg.source);
      } catch (const std::invalid_argument& e) {
        return usage_error(*coin, e.what());
      }
      const CoinResult result = run_coin(cfg);
      report_written(write_coin_outputs(result, cfg.out.empty() ? default_output_dir() : cfg.out));
      std::cout << coin_summary_text(result);
      return 0;
    }

    if (*asset) {
      AssetConfig cfg;
      if (!asset_config_file.empty()) cfg.merge(read_config_file(asset_config_file));
      auto given = [&](const char* flag) { return asset->count(flag) > 0; };
      try {
        if (given("--H")) {
          cfg.hurst = asset_flags.hurst;
          cfg.hurst_given = true;
        }
        if (given("--T")) cfg.horizon = asset_flags.horizon;
        if (given("--k")) cfg.set_k_range(k_range);
        if (given("--n-grid")) cfg.n_grid = asset_flags.n_grid;
        if (given("--reps")) cfg.reps = asset_flags.reps;
        if (given("--seed")) cfg.seed = asset_flags.seed;
        if (given("--input")) cfg.input = asset_flags.input;
        if (given("--export-bits")) cfg.export_bits = asset_flags.export_bits;
        if (given("--out")) cfg.out = asset_flags.out;
        if (given("--workers")) cfg.workers = asset_flags.workers;
        if (given("--experiment-id")) cfg.experiment_id = asset_flags.experiment_id;
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        return usage_error(*asset, e.what());
      }
      const AssetResult result = run_asset(cfg);
      report_written(write_asset_outputs(result, cfg.out.empty() ? default_output_dir() : cfg.out));
      std::cout << asset_summary_text(result);
      return 0;
    }

    if (*verify) {
      const std::string report = format_verify(run_verify(verify_options));
      std::cout << report;
      if (!verify_out.empty()) write_file(verify_out, report);
      return report.find("FAIL ") == std::string::npos ? 0 : kRunError;
    }
  } catch (const NestingViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunError;
  }
  return kRunError;
}
