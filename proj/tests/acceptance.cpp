// Acceptance suite: eight release criteria, each printed as one line
//   [acceptance] criterion N: PASS/FAIL (detail)
// Tolerances are pinned in this file; the suite is the release gate.

#include <catch2/catch_amalgamated.hpp>

#include <mixpool/evaluation.hpp>
#include <mixpool/forecast.hpp>
#include <mixpool/montecarlo.hpp>
#include <mixpool/optimizer.hpp>
#include <mixpool/penalties.hpp>
#include <mixpool/rng.hpp>
#include <mixpool/scoring.hpp>
#include <mixpool/subset.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace mixpool;
using mixpool::rng::Stream;
using mixpool::rng::StreamRole;
namespace fs = std::filesystem;

namespace {

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "[acceptance] criterion " << criterion << ": " << (pass ? "PASS" : "FAIL")
            << " (" << detail << ")" << std::endl;
}

std::string fmt(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.4f", v);
  return buffer;
}

const ExperimentRow& find_row(const ExperimentResult& result, const std::string& method,
                              std::optional<std::size_t> n = std::nullopt) {
  for (const ExperimentRow& row : result.table) {
    if (row.method == method && (!n || row.n == n)) return row;
  }
  FAIL("missing table row " << method);
  std::abort();
}

}  // namespace

// ---------------------------------------------------------------------------
// 1. Monte Carlo benchmark, homogeneous signal noise
// ---------------------------------------------------------------------------

TEST_CASE("criterion 1: homogeneous-noise Monte Carlo benchmark") {
  ExperimentConfig config;
  config.dgp = dgp_preset(1);  // K = 20, T = 20, all signal noise at 1.0
  config.seed = 42;
  config.replications = 500;
  config.ridge_grid = {2511.25};
  config.entropy_grid = {};
  config.run_subsets = false;
  config.run_comparisons = false;
  config.workers = 1;

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult result = run_experiment(config);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double simple = find_row(result, "simple-average").mean_log_predictive;
  const double simplex = find_row(result, "simplex").mean_log_predictive;
  const double ridge = find_row(result, "ridge").mean_log_predictive;

  const bool simple_ok = std::abs(simple - (-1.15)) <= 0.06;
  const bool simplex_ok = simplex <= simple - 0.05;
  const bool ridge_ok = std::abs(ridge - simple) <= 0.04;
  const bool time_ok = elapsed <= 300.0;
  const bool pass = simple_ok && simplex_ok && ridge_ok && time_ok;

  report(1, pass,
         "simple=" + fmt(simple) + " simplex=" + fmt(simplex) + " ridge=" + fmt(ridge) +
             " elapsed=" + fmt(elapsed) + "s");
  CHECK(simple_ok);
  CHECK(simplex_ok);
  CHECK(ridge_ok);
  CHECK(time_ok);
}

// ---------------------------------------------------------------------------
// 2. Monte Carlo benchmark, split signal noise
// ---------------------------------------------------------------------------

TEST_CASE("criterion 2: split-noise Monte Carlo benchmark") {
  ExperimentConfig config;
  config.dgp = dgp_preset(2);  // half the panel at noise 1.0, half at 5.0
  config.seed = 42;
  config.replications = 500;
  config.ridge_grid = {};
  config.entropy_grid = {};
  config.run_subsets = true;
  config.best_n_sizes.resize(20);
  for (std::size_t n = 1; n <= 20; ++n) config.best_n_sizes[n - 1] = n;
  config.best_le_sizes = {5};
  config.run_comparisons = false;
  config.workers = 1;

  const ExperimentResult result = run_experiment(config);

  const double simple = find_row(result, "simple-average").mean_log_predictive;
  const double simplex = find_row(result, "simplex").mean_log_predictive;

  std::size_t best_size = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= 20; ++n) {
    const double value = find_row(result, "best-n", n).mean_log_predictive;
    if (value > best_value) {
      best_value = value;
      best_size = n;
    }
  }
  const ExperimentRow& le5 = find_row(result, "best-le-n", 5);
  const double le5_selected = le5.mean_selected.value();

  const bool simplex_ok = simplex >= simple + 0.20;
  const bool peak_ok = best_size >= 6 && best_size <= 12;
  const bool selected_ok = std::abs(le5_selected - 3.46) <= 1.0;
  const bool pass = simplex_ok && peak_ok && selected_ok;

  report(2, pass,
         "simple=" + fmt(simple) + " simplex=" + fmt(simplex) + " best-n peak at n=" +
             std::to_string(best_size) + " le5 mean selected=" + fmt(le5_selected));
  CHECK(simplex_ok);
  CHECK(peak_ok);
  CHECK(selected_ok);
}

// ---------------------------------------------------------------------------
// 3. Exact subset combinatorics
// ---------------------------------------------------------------------------

TEST_CASE("criterion 3: subset candidate count") {
  const std::uint64_t count = subset_candidate_count(19, 4);
  const bool pass = count == 5035;
  report(3, pass, "candidates(K=19, n<=4) = " + std::to_string(count));
  CHECK(pass);
}

// ---------------------------------------------------------------------------
// 4. Solver vs brute force oracles
// ---------------------------------------------------------------------------

TEST_CASE("criterion 4: solver matches grid and subset oracles") {
  // Part A: unpenalized simplex solves on 100 random 3-forecaster fixtures,
  // checked against an exhaustive 0.01-step weight grid. The grid minimum can
  // only sit above the true optimum, so the solver must come in at or below
  // every grid point (up to tolerance); how far below is the grid's
  // discretization error, reported but not bounded.
  double worst_above = 0.0;  // solver worse than the best grid point
  double worst_below = 0.0;  // solver better (grid discretization gap)
  const DgpConfig small = dgp_preset(1, 3, 10);
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const SimulatedPath path = simulate_path(small, 4242, rep);
    const DensityMatrix densities = in_sample_densities(path, small);
    const EstimateResult solved = estimate_weights(densities, PenaltySpec::none());

    double grid_best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 100; ++a) {
      for (int b = 0; b + a <= 100; ++b) {
        const double w[3] = {a / 100.0, b / 100.0, (100 - a - b) / 100.0};
        const double value = pool_objective(densities, std::span<const double>(w, 3),
                                            PenaltySpec::none());
        grid_best = std::min(grid_best, value);
      }
    }
    worst_above = std::max(worst_above, solved.objective - grid_best);
    worst_below = std::max(worst_below, grid_best - solved.objective);
  }
  const bool grid_ok = worst_above <= 1e-4;

  // Part B: the egalitarian-ridge selector at huge strength must pick exactly
  // the subset the equal-weight enumeration picks.
  std::size_t matches = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const std::size_t k_count = 2 + static_cast<std::size_t>(rep % 5);  // 2..6
    const DgpConfig dgp = dgp_preset(1, k_count, 10);
    const SimulatedPath path = simulate_path(dgp, 777, rep);
    const DensityMatrix densities = in_sample_densities(path, dgp);
    const PegResult peg = partially_egalitarian_ridge(densities, 1e8);
    const SubsetResult best = best_le_n_average(densities, k_count);
    if (peg.members == best.member_indices) ++matches;
  }
  const bool subset_ok = matches == 20;

  const bool pass = grid_ok && subset_ok;
  report(4, pass,
         "solver above grid by <= " + fmt(worst_above) + " (grid discretization gap " +
             fmt(worst_below) + "), egalitarian-ridge subset matches " +
             std::to_string(matches) + "/20");
  CHECK(grid_ok);
  CHECK(subset_ok);
}

// ---------------------------------------------------------------------------
// 5. Algebraic invariants
// ---------------------------------------------------------------------------

TEST_CASE("criterion 5: algebraic invariant suite") {
  Stream stream(20260818, 0, StreamRole::generic);

  // (a) quadratic = M * Brier - 1 on 1,000 random forecasts.
  double worst_qb = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m_count = 2 + static_cast<std::size_t>(stream.next_u64() % 11);
    std::vector<double> edges(m_count + 1);
    edges.front() = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < m_count; ++j) edges[j] = static_cast<double>(j);
    edges.back() = std::numeric_limits<double>::infinity();
    std::vector<double> probs(m_count);
    double total = 0.0;
    for (double& p : probs) total += (p = 0.05 + stream.next_uniform());
    for (double& p : probs) p /= total;
    const HistogramForecast f(BinGrid(edges), probs);
    const double y = static_cast<double>(stream.next_u64() % m_count) + 0.5;
    const double q = quadratic_score(f, y).value;
    const double b = brier_score(f, y).value;
    worst_qb = std::max(worst_qb, std::abs(q - (static_cast<double>(m_count) * b - 1.0)));
  }
  const bool qb_ok = worst_qb <= 1e-12;

  // (b) centered ridge differs from the raw sum of squares by exactly -1/K on
  // the simplex, 1,000 random points.
  double worst_center = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k_count = 2 + static_cast<std::size_t>(stream.next_u64() % 19);
    std::vector<double> w(k_count);
    double total = 0.0;
    for (double& x : w) total += (x = stream.next_uniform());
    for (double& x : w) x /= total;
    const double centered = penalty_value(w, PenaltySpec::ridge(1.0));
    double raw = 0.0;
    for (double x : w) raw += x * x;
    worst_center = std::max(worst_center,
                            std::abs(centered - raw + 1.0 / static_cast<double>(k_count)));
  }
  const bool center_ok = worst_center <= 1e-12;

  // (c) ...so penalizing the raw sum of squares must land on the same weights.
  PenaltyCallbacks raw_square;
  raw_square.value = [](std::span<const double> w) {
    double total = 0.0;
    for (double x : w) total += x * x;
    return total;
  };
  raw_square.gradient = [](std::span<const double> w) {
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = 2.0 * w[i];
    return g;
  };
  double worst_argmin = 0.0;
  const DgpConfig dgp10 = dgp_preset(1, 10, 15);
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const DensityMatrix d = in_sample_densities(simulate_path(dgp10, 555, rep), dgp10);
    const EstimateResult centered = estimate_weights(d, PenaltySpec::ridge(0.7));
    const EstimateResult uncentered = estimate_weights_with_penalty(
        d, raw_square, 0.7, SolverConfig{}, "ridge-uncentered", PenaltySpec::none());
    for (std::size_t k = 0; k < 10; ++k) {
      worst_argmin = std::max(
          worst_argmin, std::abs(centered.weights.weights[k] - uncentered.weights.weights[k]));
    }
  }
  const bool argmin_ok = worst_argmin <= 1e-6;

  // (d) zero-strength penalties nest the unpenalized problem.
  double worst_nest = 0.0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const DensityMatrix d = in_sample_densities(simulate_path(dgp10, 888, rep), dgp10);
    const EstimateResult base = estimate_weights(d, PenaltySpec::none());
    for (const PenaltySpec& spec :
         {PenaltySpec::ridge(0.0), PenaltySpec::total_variation(0.0), PenaltySpec::entropy(0.0),
          PenaltySpec::renyi(0.0, 2.0)}) {
      const EstimateResult nested = estimate_weights(d, spec);
      for (std::size_t k = 0; k < 10; ++k) {
        worst_nest = std::max(worst_nest,
                              std::abs(base.weights.weights[k] - nested.weights.weights[k]));
      }
    }
  }
  const bool nest_ok = worst_nest <= 1e-10;

  // (e) huge penalty strength drives ridge and entropy solutions to uniform.
  double worst_uniform = 0.0;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const DensityMatrix d = in_sample_densities(simulate_path(dgp10, 999, rep), dgp10);
    for (const PenaltySpec& spec : {PenaltySpec::ridge(1e8), PenaltySpec::entropy(1e8)}) {
      const EstimateResult r = estimate_weights(d, spec);
      for (std::size_t k = 0; k < 10; ++k) {
        worst_uniform = std::max(worst_uniform, std::abs(r.weights.weights[k] - 0.1));
      }
    }
  }
  const bool uniform_ok = worst_uniform <= 1e-3;

  // (f) the real-rate mirror leaves log scores unchanged, 1,000 random cases.
  double worst_mirror = 0.0;
  const BinGrid grid = standard_eleven_bin_grid();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> probs(grid.bin_count());
    double total = 0.0;
    for (double& p : probs) total += (p = 0.05 + stream.next_uniform());
    for (double& p : probs) p /= total;
    const HistogramForecast f(grid, probs);
    const double y = -1.5 + 6.5 * stream.next_uniform();
    const double rate = 6.0 * stream.next_uniform();
    const HistogramForecast mirrored = real_rate_transform(f, rate);
    worst_mirror = std::max(
        worst_mirror, std::abs(log_score(f, y).value - log_score(mirrored, rate - y).value));
  }
  const bool mirror_ok = worst_mirror <= 1e-12;

  const bool pass = qb_ok && center_ok && argmin_ok && nest_ok && uniform_ok && mirror_ok;
  report(5, pass,
         "quadratic-brier=" + fmt(worst_qb) + " centering=" + fmt(worst_center) + " argmin=" +
             fmt(worst_argmin) + " nesting=" + fmt(worst_nest) + " uniform=" +
             fmt(worst_uniform) + " mirror=" + fmt(worst_mirror) + " (worst abs errors)");
  CHECK(qb_ok);
  CHECK(center_ok);
  CHECK(argmin_ok);
  CHECK(nest_ok);
  CHECK(uniform_ok);
  CHECK(mirror_ok);
}

// ---------------------------------------------------------------------------
// 6. Strict propriety by exhaustive enumeration
// ---------------------------------------------------------------------------

namespace {

// All probability vectors with entries on the 0.05 grid (compositions of 20).
void enumerate_compositions(std::size_t m_count, std::vector<std::vector<double>>& out) {
  std::vector<int> parts(m_count, 0);
  const std::function<void(std::size_t, int)> recurse = [&](std::size_t index, int remaining) {
    if (index + 1 == m_count) {
      parts[index] = remaining;
      std::vector<double> probs(m_count);
      for (std::size_t j = 0; j < m_count; ++j) probs[j] = parts[j] / 20.0;
      out.push_back(std::move(probs));
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      parts[index] = v;
      recurse(index + 1, remaining - v);
    }
  };
  recurse(0, 20);
}

// Loss of candidate p when bin m is realized, for each scoring rule.
std::vector<double> loss_by_bin(ScoreRule rule, const std::vector<double>& p) {
  const std::size_t m_count = p.size();
  std::vector<double> losses(m_count);
  double sum_sq = 0.0;
  for (double x : p) sum_sq += x * x;
  std::vector<double> cumulative(m_count);
  double run = 0.0;
  for (std::size_t j = 0; j < m_count; ++j) cumulative[j] = (run += p[j]);
  for (std::size_t m = 0; m < m_count; ++m) {
    switch (rule) {
      case ScoreRule::log:
        losses[m] = p[m] > 0.0 ? -std::log(p[m]) : std::numeric_limits<double>::infinity();
        break;
      case ScoreRule::brier:
        losses[m] = (sum_sq - 2.0 * p[m] + 1.0) / static_cast<double>(m_count);
        break;
      case ScoreRule::ranked: {
        double total = 0.0;
        for (std::size_t j = 0; j < m_count; ++j) {
          const double step = j >= m ? 1.0 : 0.0;
          total += (cumulative[j] - step) * (cumulative[j] - step);
        }
        losses[m] = total;
        break;
      }
      default:
        FAIL("unexpected rule");
    }
  }
  return losses;
}

// Expected loss under truth q, skipping zero-probability bins so that
// impossible bins with infinite loss contribute nothing.
double expected_loss(const std::vector<double>& q, const std::vector<double>& losses) {
  double total = 0.0;
  for (std::size_t m = 0; m < q.size(); ++m) {
    if (q[m] > 0.0) total += q[m] * losses[m];
  }
  return total;
}

}  // namespace

TEST_CASE("criterion 6: strict propriety on the 0.05 probability grid") {
  bool pass = true;
  std::string detail;
  for (std::size_t m_count = 2; m_count <= 5 && pass; ++m_count) {
    std::vector<std::vector<double>> points;
    enumerate_compositions(m_count, points);
    for (const ScoreRule rule : {ScoreRule::log, ScoreRule::brier, ScoreRule::ranked}) {
      std::vector<std::vector<double>> losses(points.size());
      for (std::size_t c = 0; c < points.size(); ++c) losses[c] = loss_by_bin(rule, points[c]);
      for (std::size_t truth = 0; truth < points.size() && pass; ++truth) {
        const double at_truth = expected_loss(points[truth], losses[truth]);
        for (std::size_t c = 0; c < points.size(); ++c) {
          if (c == truth) continue;
          if (!(expected_loss(points[truth], losses[c]) > at_truth)) {
            pass = false;
            detail = std::string("rule ") + to_string(rule) + " not uniquely minimized at truth, M=" +
                     std::to_string(m_count);
            break;
          }
        }
      }
      if (!pass) break;
    }
  }
  if (pass) {
    detail = "log/brier/ranked uniquely minimized at the truth for all M in 2..5 (10626 points at M=5)";
  }
  report(6, pass, detail);
  CHECK(pass);
}

// ---------------------------------------------------------------------------
// 7. Calibration of the set-valued PIT under a true forecaster
// ---------------------------------------------------------------------------

TEST_CASE("criterion 7: PIT bands cover truth-drawn observations") {
  const BinGrid grid = standard_eleven_bin_grid();
  std::vector<double> representative(grid.bin_count());
  representative.front() = -1.0;
  representative.back() = 4.5;
  for (std::size_t j = 1; j + 1 < grid.bin_count(); ++j) {
    representative[j] = grid.edges()[j] + 0.25;
  }
  const auto normal_cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };

  Stream stream(31337, 0, StreamRole::generic);
  std::vector<PitSegment> segments;
  segments.reserve(2000);
  for (int t = 0; t < 2000; ++t) {
    const double mu = 1.75 + stream.next_normal();
    const double sigma = 0.8;
    std::vector<double> probs(grid.bin_count());
    double previous = 0.0;
    for (std::size_t j = 0; j < grid.bin_count(); ++j) {
      const double upper = grid.edges()[j + 1];
      const double cdf =
          std::isinf(upper) ? 1.0 : normal_cdf((upper - mu) / sigma);
      probs[j] = std::max(cdf - previous, 0.0);
      previous = cdf;
    }
    double total = 0.0;
    for (double p : probs) total += p;
    for (double& p : probs) p /= total;
    const HistogramForecast truth(grid, probs);

    const double u = stream.next_uniform();
    std::size_t realized = grid.bin_count() - 1;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < grid.bin_count(); ++j) {
      cumulative += probs[j];
      if (u <= cumulative) {
        realized = j;
        break;
      }
    }
    segments.push_back(discrete_pit(truth, representative[realized]));
  }

  const PitHistogram hist = pit_histogram(segments, 10, 0.99);
  std::size_t inside = 0;
  for (std::size_t j = 0; j < hist.bin_count; ++j) {
    if (hist.masses[j] >= hist.band_lower[j] && hist.masses[j] <= hist.band_upper[j]) ++inside;
  }
  const bool pass = inside >= 9;
  report(7, pass, std::to_string(inside) + "/10 bins inside the 99% pointwise bands");
  CHECK(pass);
}

// ---------------------------------------------------------------------------
// 8. End-to-end pipeline on the bundled survey fixture
// ---------------------------------------------------------------------------

namespace {

std::string require_env(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') {
    FAIL("environment variable " << name << " is not set");
  }
  return std::string(value);
}

struct CliRun {
  int exit_code = -1;
  std::string output;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
  static int counter = 0;
  const fs::path capture = dir / ("cli" + std::to_string(counter++) + ".out");
  const std::string command = "\"" + require_env("MIXPOOL_CLI") + "\" " + args + " > \"" +
                              capture.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  CliRun run;
  if (status != -1 && WIFEXITED(status)) run.exit_code = WEXITSTATUS(status);
  std::ifstream in(capture);
  std::stringstream buffer;
  buffer << in.rdbuf();
  run.output = buffer.str();
  return run;
}

// mean_log_predictive from a single-row summary.csv, located by header name.
double summary_mean_log_predictive(const fs::path& summary) {
  std::ifstream in(summary);
  REQUIRE(in.good());
  std::string header, row;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::getline(in, row));
  const auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
  };
  const std::vector<std::string> names = split(header);
  const std::vector<std::string> values = split(row);
  REQUIRE(names.size() == values.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "mean_log_predictive") return std::stod(values[i]);
  }
  FAIL("summary.csv lacks a mean_log_predictive column");
  return 0.0;
}

}  // namespace

TEST_CASE("criterion 8: survey pipeline end to end") {
  const fs::path data(require_env("MIXPOOL_DATA"));
  const fs::path dir = fs::temp_directory_path() / "mixpool-acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const CliRun ingest = run_cli(
      "ingest --survey \"" + (data / "survey.csv").string() + "\" --realizations \"" +
          (data / "realizations.csv").string() + "\" --add-uniform --out-dir \"" +
          (dir / "panel").string() + "\"",
      dir);
  INFO(ingest.output);
  REQUIRE(ingest.exit_code == 0);
  const bool shape_ok =
      ingest.output.find("19 forecasters x 83 rounds") != std::string::npos;

  const std::string shared = " --panel \"" + (dir / "panel" / "panel.csv").string() +
                             "\" --realizations \"" + (data / "realizations.csv").string() +
                             "\" --window 20 --burn-in 8";
  const std::vector<std::pair<std::string, std::string>> methods = {
      {"simple-average", "--method simple-average"},
      {"simplex", "--method simplex"},
      {"ridge", "--method ridge --lambda 1"},
      {"entropy", "--method entropy --lambda 0.1"},
      {"best-le-4", "--method best-le-n --n 4"},
  };

  std::map<std::string, double> scores;
  bool runs_ok = true;
  for (const auto& [label, flags] : methods) {
    const fs::path out = dir / label;
    const CliRun run = run_cli("backtest" + shared + " " + flags + " --out-dir \"" +
                                   out.string() + "\"",
                               dir);
    INFO(label << ": " << run.output);
    if (run.exit_code != 0) {
      runs_ok = false;
      continue;
    }
    for (const char* name :
         {"weights.csv", "scores.csv", "mixtures.csv", "summary.csv", "manifest.json"}) {
      if (!fs::exists(out / name)) runs_ok = false;
    }
    scores[label] = summary_mean_log_predictive(out / "summary.csv");
  }
  REQUIRE(runs_ok);

  const double simple = scores.at("simple-average");
  const double simplex = scores.at("simplex");
  const double ridge = scores.at("ridge");
  const double entropy = scores.at("entropy");
  const double le4 = scores.at("best-le-4");

  const bool regularized_ok =
      ridge >= simple - 0.05 && entropy >= simple - 0.05 && le4 >= simple - 0.05;
  const bool agreement_ok = std::abs(simplex - le4) <= 0.05;
  const bool pass = shape_ok && regularized_ok && agreement_ok;

  report(8, pass,
         "panel 19x83=" + std::string(shape_ok ? "yes" : "no") + " simple=" + fmt(simple) +
             " simplex=" + fmt(simplex) + " ridge=" + fmt(ridge) + " entropy=" + fmt(entropy) +
             " best-le-4=" + fmt(le4));
  CHECK(shape_ok);
  CHECK(regularized_ok);
  CHECK(agreement_ok);
}
