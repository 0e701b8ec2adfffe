// mixpool: regularized mixtures of predictive density forecasts.
//
// Subcommands:
//   ingest      harmonize a raw histogram survey into a clean panel
//   backtest    rolling-origin backtest of a combination method on a panel
//   pit         discrete PIT calibration histograms for a combination method
//   montecarlo  seeded simulation study comparing combination methods
//
// Exit codes: 0 success; 1 runtime failure; 2 invalid input or flags.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mixpool/errors.hpp"
#include "mixpool/evaluation.hpp"
#include "mixpool/forecast.hpp"
#include "mixpool/ingest.hpp"
#include "mixpool/manifest.hpp"
#include "mixpool/montecarlo.hpp"
#include "mixpool/optimizer.hpp"
#include "mixpool/scoring.hpp"
#include "mixpool/table_io.hpp"
#include "mixpool/version.hpp"

namespace fs = std::filesystem;
using namespace mixpool;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

std::string score_csv(const Score& s) {
  return s.overflow ? "inf" : io::format_double(s.value, "%.12g");
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  for (const std::string& field : io::split_csv_line(text)) {
    values.push_back(io::parse_double(field, flag));
  }
  return values;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string survey, realizations, out_dir;
  std::size_t max_gap = 4;
  std::size_t groups = 5;
  double repair_amount = 0.01;
  bool add_uniform = false;
  std::string uniform_id = "UNIFORM";
  std::string grid_edges;
};

void run_ingest(const IngestArgs& args) {
  IngestOptions options;
  options.max_consecutive_missing = args.max_gap;
  options.interpolation_groups = args.groups;
  options.repair_amount = args.repair_amount;
  options.add_uniform = args.add_uniform;
  options.uniform_id = args.uniform_id;
  if (!args.grid_edges.empty()) {
    options.target_grid = BinGrid(parse_number_list(args.grid_edges, "--grid-edges"));
  }

  const std::vector<SurveyRow> rows = read_survey_file(args.survey);
  const std::map<SurveyDate, double> realizations = read_realizations_file(args.realizations);
  IngestResult result = ingest_pipeline(rows, realizations, options);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  write_panel_file(result.panel, out_dir / "panel.csv");
  {
    std::ofstream log = open_output(out_dir / "ingest.log");
    for (const std::string& line : result.log.lines) log << line << '\n';
    log << "panel: " << result.panel.k_count() << " forecasters x "
        << result.panel.t_count() << " rounds\n";
  }

  RunManifest manifest;
  manifest.command = "ingest";
  manifest.add_parameter("max-gap", std::to_string(args.max_gap));
  manifest.add_parameter("groups", std::to_string(args.groups));
  manifest.add_parameter("repair-amount", io::format_double(args.repair_amount, "%.12g"));
  manifest.add_parameter("add-uniform", args.add_uniform ? "true" : "false");
  manifest.add_parameter("uniform-id", args.uniform_id);
  if (!args.grid_edges.empty()) manifest.add_parameter("grid-edges", args.grid_edges);
  manifest.add_input(args.survey);
  manifest.add_input(args.realizations);
  manifest.outputs = {"panel.csv", "ingest.log"};
  write_manifest(manifest, out_dir / "manifest.json");

  std::cout << "wrote panel with " << result.panel.k_count() << " forecasters x "
            << result.panel.t_count() << " rounds to " << args.out_dir << '\n';
}

// ---------------------------------------------------------------------------
// backtest
// ---------------------------------------------------------------------------

struct BacktestArgs {
  std::string panel, realizations, out_dir;
  std::string method;
  double lambda = 0.0;
  double alpha = 2.0;
  std::size_t subset_n = 4;
  std::size_t window = 20;
  std::size_t burn_in = 1;
  bool strict_rolling = false;
  unsigned workers = 1;
};

BacktestConfig make_backtest_config(const BacktestArgs& args) {
  BacktestConfig config;
  config.method = parse_combination_method(args.method);
  config.lambda = args.lambda;
  config.alpha = args.alpha;
  config.subset_n = args.subset_n;
  config.window = args.window;
  config.burn_in = args.burn_in;
  config.strict_rolling = args.strict_rolling;
  config.workers = args.workers;
  return config;
}

void add_backtest_parameters(RunManifest& manifest, const BacktestArgs& args) {
  manifest.add_parameter("method", args.method);
  manifest.add_parameter("lambda", io::format_double(args.lambda, "%.12g"));
  manifest.add_parameter("alpha", io::format_double(args.alpha, "%.12g"));
  manifest.add_parameter("n", std::to_string(args.subset_n));
  manifest.add_parameter("window", std::to_string(args.window));
  manifest.add_parameter("burn-in", std::to_string(args.burn_in));
  manifest.add_parameter("strict-rolling", args.strict_rolling ? "true" : "false");
}

void run_backtest(const BacktestArgs& args) {
  const ForecastPanel panel = read_panel_files(args.panel, args.realizations);
  const BacktestConfig config = make_backtest_config(args);
  const BacktestResult result = rolling_backtest(panel, config);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  {
    std::ofstream out = open_output(out_dir / "weights.csv");
    out << "survey_date";
    for (const std::string& id : panel.forecaster_ids()) out << ',' << id;
    out << '\n';
    for (const BacktestRound& round : result.rounds) {
      out << round.date.to_string();
      for (double w : round.weights.weights) out << ',' << io::format_double(w, "%.12g");
      out << '\n';
    }
  }
  {
    std::ofstream out = open_output(out_dir / "scores.csv");
    out << "survey_date,log_loss,brier_loss,quadratic_loss,ranked_loss,selected_count\n";
    for (const BacktestRound& round : result.rounds) {
      out << round.date.to_string();
      for (const Score& s : round.scores) out << ',' << score_csv(s);
      out << ',' << round.weights.selected_count << '\n';
    }
  }
  {
    std::ofstream out = open_output(out_dir / "mixtures.csv");
    out << "survey_date,bin_lower,bin_upper,probability\n";
    const std::vector<double>& edges = panel.grid().edges();
    for (const BacktestRound& round : result.rounds) {
      for (std::size_t m = 0; m < panel.grid().bin_count(); ++m) {
        out << round.date.to_string() << ',' << io::format_double(edges[m], "%.12g") << ','
            << io::format_double(edges[m + 1], "%.12g") << ','
            << io::format_double(round.mixture_forecast.probs()[m], "%.12g") << '\n';
      }
    }
  }
  {
    std::ofstream out = open_output(out_dir / "summary.csv");
    out << "method,lambda,alpha,n,window,burn_in,strict_rolling,rounds,"
           "mean_log_predictive,mean_log_loss,mean_brier_loss,mean_quadratic_loss,"
           "mean_ranked_loss,mean_selected\n";
    const double rounds = static_cast<double>(result.rounds.size());
    std::vector<Score> totals(config.rules.size());
    for (const BacktestRound& round : result.rounds) {
      for (std::size_t i = 0; i < totals.size(); ++i) totals[i] += round.scores[i];
    }
    out << args.method << ',' << io::format_double(args.lambda, "%.12g") << ','
        << io::format_double(args.alpha, "%.12g") << ',' << args.subset_n << ',' << args.window
        << ',' << args.burn_in << ',' << (args.strict_rolling ? "true" : "false") << ','
        << result.rounds.size();
    if (result.log_report.total.overflow) {
      out << ",-inf";
    } else {
      out << ',' << io::format_double(result.log_report.mean_log_predictive, "%.12g");
    }
    for (const Score& total : totals) {
      out << ','
          << (total.overflow ? "inf" : io::format_double(total.value / rounds, "%.12g"));
    }
    out << ',' << io::format_double(result.mean_selected, "%.12g") << '\n';
  }

  RunManifest manifest;
  manifest.command = "backtest";
  manifest.workers = args.workers;
  add_backtest_parameters(manifest, args);
  manifest.add_input(args.panel);
  manifest.add_input(args.realizations);
  manifest.outputs = {"weights.csv", "scores.csv", "mixtures.csv", "summary.csv"};
  write_manifest(manifest, out_dir / "manifest.json");

  std::cout << "backtested " << result.rounds.size() << " rounds; mean log predictive = ";
  if (result.log_report.total.overflow) {
    std::cout << "-inf";
  } else {
    std::cout << io::format_double(result.log_report.mean_log_predictive, "%.6g");
  }
  std::cout << '\n';
}

// ---------------------------------------------------------------------------
// pit
// ---------------------------------------------------------------------------

struct PitArgs {
  BacktestArgs base;
  std::size_t bins = 10;
  double coverage = 0.90;
  std::string split;
  bool real_rate = false;
  std::string rates;
};

void write_pit_csv(const fs::path& path, const PitHistogram& hist) {
  std::ofstream out = open_output(path);
  out << "bin_lower,bin_upper,mass,expected,band_lower,band_upper\n";
  const double expected =
      static_cast<double>(hist.observation_count) / static_cast<double>(hist.bin_count);
  for (std::size_t j = 0; j < hist.bin_count; ++j) {
    const double width = 1.0 / static_cast<double>(hist.bin_count);
    out << io::format_double(static_cast<double>(j) * width, "%.12g") << ','
        << io::format_double(static_cast<double>(j + 1) * width, "%.12g") << ','
        << io::format_double(hist.masses[j], "%.12g") << ','
        << io::format_double(expected, "%.12g") << ','
        << io::format_double(hist.band_lower[j], "%.12g") << ','
        << io::format_double(hist.band_upper[j], "%.12g") << '\n';
  }
}

void run_pit(const PitArgs& args) {
  const ForecastPanel panel = read_panel_files(args.base.panel, args.base.realizations);
  const BacktestConfig config = make_backtest_config(args.base);
  const BacktestResult result = rolling_backtest(panel, config);

  std::map<SurveyDate, double> rates;
  if (args.real_rate) {
    if (args.rates.empty()) {
      throw std::invalid_argument("--real-rate requires --rates FILE (dated nominal rates)");
    }
    rates = read_realizations_file(args.rates);
  }

  std::vector<SurveyDate> dates;
  std::vector<PitSegment> segments;
  for (const BacktestRound& round : result.rounds) {
    dates.push_back(round.date);
    if (args.real_rate) {
      const auto it = rates.find(round.date);
      if (it == rates.end()) {
        throw MissingCellError("missing nominal rate at " + round.date.to_string());
      }
      const HistogramForecast real = real_rate_transform(round.mixture_forecast, it->second);
      segments.push_back(discrete_pit(real, it->second - round.realization));
    } else {
      segments.push_back(discrete_pit(round.mixture_forecast, round.realization));
    }
  }

  fs::create_directories(args.base.out_dir);
  const fs::path out_dir(args.base.out_dir);
  std::vector<std::string> outputs;
  if (args.split.empty()) {
    write_pit_csv(out_dir / "pit_all.csv", pit_histogram(segments, args.bins, args.coverage));
    outputs = {"pit_all.csv"};
    std::cout << "PIT histogram over " << segments.size() << " rounds written to "
              << args.base.out_dir << '\n';
  } else {
    const SurveyDate boundary = SurveyDate::parse(args.split);
    if (boundary < dates.front() || dates.back() < boundary) {
      throw OutOfRangeError("split boundary " + boundary.to_string() +
                            " outside the evaluated rounds " + dates.front().to_string() +
                            ".." + dates.back().to_string());
    }
    std::size_t cut = 0;
    while (cut < dates.size() && !(boundary < dates[cut])) ++cut;
    std::span<const PitSegment> all(segments);
    write_pit_csv(out_dir / "pit_first.csv",
                  pit_histogram(all.subspan(0, cut), args.bins, args.coverage));
    write_pit_csv(out_dir / "pit_second.csv",
                  pit_histogram(all.subspan(cut), args.bins, args.coverage));
    outputs = {"pit_first.csv", "pit_second.csv"};
    std::cout << "PIT histograms written: " << cut << " rounds through " << boundary.to_string()
              << ", " << (segments.size() - cut) << " after\n";
  }

  RunManifest manifest;
  manifest.command = "pit";
  manifest.workers = args.base.workers;
  add_backtest_parameters(manifest, args.base);
  manifest.add_parameter("bins", std::to_string(args.bins));
  manifest.add_parameter("coverage", io::format_double(args.coverage, "%.12g"));
  if (!args.split.empty()) manifest.add_parameter("split", args.split);
  manifest.add_parameter("real-rate", args.real_rate ? "true" : "false");
  manifest.add_input(args.base.panel);
  manifest.add_input(args.base.realizations);
  if (args.real_rate) manifest.add_input(args.rates);
  manifest.outputs = outputs;
  write_manifest(manifest, out_dir / "manifest.json");
}

// ---------------------------------------------------------------------------
// montecarlo
// ---------------------------------------------------------------------------

struct MonteCarloArgs {
  int dgp = 1;
  std::size_t k_count = 20;
  std::size_t t_count = 20;
  std::uint64_t seed = 0;
  std::size_t replications = 10000;
  std::string out_dir;
  unsigned workers = 1;
  std::string ridge_lambdas, entropy_lambdas;
  bool no_ridge = false, no_entropy = false, no_subsets = false, no_comparisons = false;
};

void run_montecarlo(const MonteCarloArgs& args) {
  ExperimentConfig config;
  config.dgp = dgp_preset(args.dgp, args.k_count, args.t_count);
  config.seed = args.seed;
  config.replications = args.replications;
  config.workers = args.workers;
  if (!args.no_ridge) {
    config.ridge_grid = args.ridge_lambdas.empty()
                            ? default_ridge_grid()
                            : parse_number_list(args.ridge_lambdas, "--ridge-lambdas");
  }
  if (!args.no_entropy) {
    config.entropy_grid = args.entropy_lambdas.empty()
                              ? default_entropy_grid()
                              : parse_number_list(args.entropy_lambdas, "--entropy-lambdas");
  }
  config.run_subsets = !args.no_subsets;
  config.run_comparisons = !args.no_comparisons;

  const ExperimentResult result = run_experiment(config);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  {
    std::ofstream out = open_output(out_dir / "table.csv");
    out << "method,n,lambda,mean_log_predictive,mean_selected\n";
    for (const ExperimentRow& row : result.table) {
      out << row.method << ',';
      if (row.n) out << *row.n;
      out << ',';
      if (row.lambda) out << io::format_double(*row.lambda, "%.12g");
      out << ',' << io::format_double(row.mean_log_predictive, "%.12g") << ',';
      if (row.mean_selected) out << io::format_double(*row.mean_selected, "%.12g");
      out << '\n';
    }
  }
  {
    std::ofstream out = open_output(out_dir / "curve.csv");
    out << "penalty,lambda,mean_log_predictive,mean_selected\n";
    for (const PenaltyCurvePoint& point : result.curve) {
      out << to_string(point.kind) << ',' << io::format_double(point.lambda, "%.12g") << ','
          << io::format_double(point.mean_log_predictive, "%.12g") << ','
          << io::format_double(point.mean_selected, "%.12g") << '\n';
    }
  }

  RunManifest manifest;
  manifest.command = "montecarlo";
  manifest.seed = args.seed;
  manifest.workers = args.workers;
  manifest.add_parameter("dgp", std::to_string(args.dgp));
  manifest.add_parameter("k", std::to_string(args.k_count));
  manifest.add_parameter("t", std::to_string(args.t_count));
  manifest.add_parameter("reps", std::to_string(args.replications));
  manifest.add_parameter("ridge-points", std::to_string(config.ridge_grid.size()));
  manifest.add_parameter("entropy-points", std::to_string(config.entropy_grid.size()));
  manifest.add_parameter("subsets", config.run_subsets ? "true" : "false");
  manifest.add_parameter("comparisons", config.run_comparisons ? "true" : "false");
  manifest.outputs = {"table.csv", "curve.csv"};
  write_manifest(manifest, out_dir / "manifest.json");

  std::cout << "ran " << result.replications << " replications (DGP " << args.dgp << ", seed "
            << args.seed << ")\n";
  for (const ExperimentRow& row : result.table) {
    std::printf("  %-18s", row.method.c_str());
    if (row.n) {
      std::printf(" n=%-3zu", *row.n);
    } else {
      std::printf("      ");
    }
    if (row.lambda) {
      std::printf(" lambda=%-10.4g", *row.lambda);
    } else {
      std::printf("                  ");
    }
    std::printf(" mean log predictive %10.4f\n", row.mean_log_predictive);
  }
}

void add_backtest_flags(CLI::App* cmd, BacktestArgs& args, bool method_required) {
  cmd->add_option("--panel", args.panel, "Panel CSV (survey-row schema)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--realizations", args.realizations, "Realizations CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", args.out_dir, "Output directory")->required();
  auto* method = cmd->add_option(
      "--method", args.method,
      "simple-average|simplex|ridge|tv|entropy|renyi|best-n|best-le-n|peg-ridge");
  if (method_required) method->required();
  cmd->add_option("--lambda", args.lambda, "Penalty strength (penalized methods)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--alpha", args.alpha, "Renyi order (> 0, != 1)");
  cmd->add_option("--n", args.subset_n, "Subset size cap for best-n / best-le-n");
  cmd->add_option("--window", args.window, "Rolling window length")->capture_default_str();
  cmd->add_option("--burn-in", args.burn_in, "Rounds of history before the first evaluation")
      ->required();
  cmd->add_flag("--strict-rolling", args.strict_rolling,
                "Wait for a full window instead of expanding");
  cmd->add_option("--workers", args.workers, "Worker threads")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) try {
  CLI::App app{"Regularized mixtures of predictive density forecasts"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  IngestArgs ingest_args;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "Harmonize a raw survey into a panel");
  ingest_cmd->add_option("--survey", ingest_args.survey, "Raw survey CSV")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--realizations", ingest_args.realizations, "Realizations CSV")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out-dir", ingest_args.out_dir, "Output directory")->required();
  ingest_cmd->add_option("--max-gap", ingest_args.max_gap,
                         "Max consecutive missing rounds before dropping a forecaster")
      ->capture_default_str();
  ingest_cmd->add_option("--groups", ingest_args.groups,
                         "Performance groups for gap interpolation")
      ->capture_default_str();
  ingest_cmd->add_option("--repair-amount", ingest_args.repair_amount,
                         "Probability moved into an empty realized bin")
      ->capture_default_str();
  ingest_cmd->add_flag("--add-uniform", ingest_args.add_uniform,
                       "Append a uniform benchmark forecaster");
  ingest_cmd->add_option("--uniform-id", ingest_args.uniform_id,
                         "Forecaster id for the uniform benchmark")
      ->capture_default_str();
  ingest_cmd->add_option("--grid-edges", ingest_args.grid_edges,
                         "Comma-separated target bin edges (use -inf/inf for open ends)");
  ingest_cmd->callback([&] { run_ingest(ingest_args); });

  BacktestArgs backtest_args;
  CLI::App* backtest_cmd =
      app.add_subcommand("backtest", "Rolling-origin backtest of a combination method");
  add_backtest_flags(backtest_cmd, backtest_args, /*method_required=*/true);
  backtest_cmd->callback([&] { run_backtest(backtest_args); });

  PitArgs pit_args;
  CLI::App* pit_cmd = app.add_subcommand("pit", "Discrete PIT calibration histograms");
  add_backtest_flags(pit_cmd, pit_args.base, /*method_required=*/true);
  pit_cmd->add_option("--bins", pit_args.bins, "PIT histogram bins")->capture_default_str();
  pit_cmd->add_option("--coverage", pit_args.coverage, "Pointwise band coverage")
      ->capture_default_str();
  pit_cmd->add_option("--split", pit_args.split,
                      "Subsample boundary (YYYY-Qn); rounds up to it go to the first sample");
  pit_cmd->add_flag("--real-rate", pit_args.real_rate,
                    "Evaluate the implied real-rate forecast (nominal rate minus outcome)");
  pit_cmd->add_option("--rates", pit_args.rates,
                      "Dated nominal rates CSV (realizations schema); used with --real-rate");
  pit_cmd->callback([&] { run_pit(pit_args); });

  MonteCarloArgs mc_args;
  CLI::App* mc_cmd = app.add_subcommand("montecarlo", "Seeded simulation study");
  mc_cmd->add_option("--dgp", mc_args.dgp, "Data-generating process preset (1 or 2)")
      ->required();
  mc_cmd->add_option("--k", mc_args.k_count, "Forecaster count")->capture_default_str();
  mc_cmd->add_option("--t", mc_args.t_count, "Estimation rounds")->capture_default_str();
  mc_cmd->add_option("--seed", mc_args.seed, "RNG seed (required for reproducibility)")
      ->required();
  mc_cmd->add_option("--reps", mc_args.replications, "Replications")->capture_default_str();
  mc_cmd->add_option("--out-dir", mc_args.out_dir, "Output directory")->required();
  mc_cmd->add_option("--workers", mc_args.workers, "Worker threads")->capture_default_str();
  mc_cmd->add_option("--ridge-lambdas", mc_args.ridge_lambdas,
                     "Comma-separated ridge penalty grid (default: built-in grid)");
  mc_cmd->add_option("--entropy-lambdas", mc_args.entropy_lambdas,
                     "Comma-separated entropy penalty grid (default: built-in grid)");
  mc_cmd->add_flag("--no-ridge", mc_args.no_ridge, "Skip the ridge penalty path");
  mc_cmd->add_flag("--no-entropy", mc_args.no_entropy, "Skip the entropy penalty path");
  mc_cmd->add_flag("--no-subsets", mc_args.no_subsets, "Skip best-subset rows");
  mc_cmd->add_flag("--no-comparisons", mc_args.no_comparisons,
                   "Skip per-forecaster order statistics");
  mc_cmd->callback([&] { run_montecarlo(mc_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
} catch (const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  const bool invalid_input =
      dynamic_cast<const InputFormatError*>(&e) || dynamic_cast<const BinStraddleError*>(&e) ||
      dynamic_cast<const GridMismatchError*>(&e) || dynamic_cast<const OutOfRangeError*>(&e) ||
      dynamic_cast<const MissingCellError*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e);
  return invalid_input ? 2 : 1;
}
