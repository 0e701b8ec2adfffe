#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mixpool/errors.hpp"
#include "mixpool/evaluation.hpp"
#include "mixpool/rng.hpp"

using namespace mixpool;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BinGrid three_bins() { return BinGrid({-kInf, 0.0, 1.0, kInf}); }

std::vector<double> random_probs(rng::Stream& stream, std::size_t m_count) {
  std::vector<double> p(m_count);
  double sum = 0.0;
  for (double& x : p) {
    x = 0.05 + stream.next_uniform();
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

// A fully observed K-forecaster panel with pseudo-random histograms and
// realizations drifting through all three bins.
ForecastPanel make_random_panel(std::uint64_t seed, std::size_t t_count, std::size_t k_count) {
  rng::Stream stream(seed, 0, rng::StreamRole::generic);
  const BinGrid grid = three_bins();
  std::vector<std::optional<HistogramForecast>> cells;
  std::vector<std::optional<double>> realizations;
  std::vector<SurveyDate> dates;
  SurveyDate date{2000, 1};
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t k = 0; k < k_count; ++k) {
      cells.emplace_back(HistogramForecast(grid, random_probs(stream, 3)));
    }
    realizations.emplace_back(3.0 * stream.next_uniform() - 1.0);
    dates.push_back(date);
    date = date.next();
  }
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < k_count; ++k) ids.push_back("F" + std::to_string(k));
  return ForecastPanel(grid, ids, dates, cells, realizations);
}

}  // namespace

TEST_CASE("combination method names round-trip") {
  for (CombinationMethod m :
       {CombinationMethod::simple_average, CombinationMethod::simplex, CombinationMethod::ridge,
        CombinationMethod::total_variation, CombinationMethod::entropy,
        CombinationMethod::renyi, CombinationMethod::best_n, CombinationMethod::best_le_n,
        CombinationMethod::peg_ridge}) {
    CHECK(parse_combination_method(to_string(m)) == m);
  }
  CHECK(std::string(to_string(CombinationMethod::total_variation)) == "tv");
  CHECK(std::string(to_string(CombinationMethod::best_le_n)) == "best-le-n");
  CHECK_THROWS_AS(parse_combination_method("lasso"), std::invalid_argument);
}

TEST_CASE("density matrices hold realized-bin probabilities") {
  const BinGrid grid = three_bins();
  std::vector<std::optional<HistogramForecast>> cells = {
      HistogramForecast(grid, {0.2, 0.5, 0.3}), HistogramForecast(grid, {0.7, 0.2, 0.1}),
      HistogramForecast(grid, {0.1, 0.1, 0.8}), HistogramForecast(grid, {0.3, 0.4, 0.3})};
  const ForecastPanel panel(grid, {"A", "B"}, {SurveyDate{2000, 1}, SurveyDate{2000, 2}},
                            cells, {0.5, 2.0});  // bins 1 and 2

  const DensityMatrix d = build_density_matrix(panel, 0, 2);
  CHECK(d.at(0, 0) == Catch::Approx(0.5));
  CHECK(d.at(0, 1) == Catch::Approx(0.2));
  CHECK(d.at(1, 0) == Catch::Approx(0.8));
  CHECK(d.at(1, 1) == Catch::Approx(0.3));

  const DensityMatrix tail = build_density_matrix(panel, 1, 2);
  CHECK(tail.t_count() == 1);
  CHECK(tail.at(0, 1) == Catch::Approx(0.3));

  CHECK_THROWS_AS(build_density_matrix(panel, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_density_matrix(panel, 0, 3), std::invalid_argument);
}

TEST_CASE("density matrices refuse missing cells or realizations") {
  const BinGrid grid = three_bins();
  std::vector<std::optional<HistogramForecast>> cells = {
      HistogramForecast(grid, {0.2, 0.5, 0.3}), std::nullopt};
  const ForecastPanel gap(grid, {"A", "B"}, {SurveyDate{2000, 1}}, cells, {0.5});
  CHECK_THROWS_AS(build_density_matrix(gap, 0, 1), MissingCellError);

  std::vector<std::optional<HistogramForecast>> full = {
      HistogramForecast(grid, {0.2, 0.5, 0.3}), HistogramForecast(grid, {0.7, 0.2, 0.1})};
  const ForecastPanel unrealized(grid, {"A", "B"}, {SurveyDate{2000, 1}}, full, {std::nullopt});
  CHECK_THROWS_AS(build_density_matrix(unrealized, 0, 1), MissingCellError);
}

TEST_CASE("backtest weights use only rounds strictly before the evaluation round") {
  const std::size_t t_count = 8, k_count = 3;
  const ForecastPanel base = make_random_panel(301, t_count, k_count);

  // Mutate the final round's forecasts and realization; every earlier round
  // is untouched, so the final round's weights must not move.
  rng::Stream mutator(999, 0, rng::StreamRole::generic);
  std::vector<std::optional<HistogramForecast>> cells(base.cells());
  std::vector<std::optional<double>> realizations(base.realizations());
  const std::size_t last = t_count - 1;
  for (std::size_t k = 0; k < k_count; ++k) {
    cells[last * k_count + k] = HistogramForecast(base.grid(), random_probs(mutator, 3));
  }
  realizations[last] = 0.25;
  const ForecastPanel mutated(base.grid(), base.forecaster_ids(), base.survey_dates(), cells,
                              realizations);

  BacktestConfig config;
  config.method = CombinationMethod::simplex;
  config.window = 4;
  config.burn_in = 2;
  const BacktestResult a = rolling_backtest(base, config);
  const BacktestResult b = rolling_backtest(mutated, config);
  REQUIRE(a.rounds.size() == b.rounds.size());
  const BacktestRound& ra = a.rounds.back();
  const BacktestRound& rb = b.rounds.back();
  REQUIRE(ra.round_index == last);
  for (std::size_t k = 0; k < k_count; ++k) {
    REQUIRE(ra.weights.weights[k] == rb.weights.weights[k]);  // bitwise equal
  }
  // The scores at the final round do differ (the target moved).
  CHECK(ra.scores[0].value != rb.scores[0].value);
}

TEST_CASE("each round's weights equal a direct estimate on its window") {
  const ForecastPanel panel = make_random_panel(302, 9, 3);
  BacktestConfig config;
  config.method = CombinationMethod::ridge;
  config.lambda = 0.3;
  config.window = 3;
  config.burn_in = 1;
  const BacktestResult result = rolling_backtest(panel, config);
  REQUIRE(result.rounds.size() == 8);
  for (const BacktestRound& round : result.rounds) {
    const std::size_t t = round.round_index;
    const std::size_t lo = t > config.window ? t - config.window : 0;
    const DensityMatrix d = build_density_matrix(panel, lo, t);
    const MixtureWeights direct = estimate_window_weights(d, config);
    for (std::size_t k = 0; k < 3; ++k) {
      REQUIRE(round.weights.weights[k] == direct.weights[k]);
    }
  }
}

TEST_CASE("expanding windows start at burn-in; strict windows wait for a full window") {
  const ForecastPanel panel = make_random_panel(303, 6, 2);
  BacktestConfig config;
  config.method = CombinationMethod::simple_average;
  config.window = 3;
  config.burn_in = 1;

  const BacktestResult expanding = rolling_backtest(panel, config);
  REQUIRE(expanding.rounds.size() == 5);
  CHECK(expanding.rounds.front().round_index == 1);

  config.strict_rolling = true;
  const BacktestResult strict = rolling_backtest(panel, config);
  REQUIRE(strict.rounds.size() == 3);
  CHECK(strict.rounds.front().round_index == 3);

  // Insufficient history is rejected up front.
  config.window = 7;
  CHECK_THROWS_AS(rolling_backtest(panel, config), std::invalid_argument);
}

TEST_CASE("backtests report log scores even when not requested") {
  const ForecastPanel panel = make_random_panel(304, 6, 2);
  BacktestConfig config;
  config.method = CombinationMethod::simple_average;
  config.rules = {ScoreRule::brier};
  const BacktestResult result = rolling_backtest(panel, config);
  REQUIRE(result.rounds.size() == 5);
  REQUIRE(result.rounds[0].scores.size() == 1);
  CHECK(result.log_report.per_period.size() == 5);
  CHECK(std::isfinite(result.log_report.mean_log_predictive));
  CHECK(result.mean_selected == Catch::Approx(2.0));  // equal weights select everyone
}

TEST_CASE("discrete PIT brackets the realized bin") {
  const HistogramForecast f(three_bins(), {0.2, 0.5, 0.3});
  const PitSegment s0 = discrete_pit(f, -1.0);
  CHECK(s0.lower == Catch::Approx(0.0).margin(1e-15));
  CHECK(s0.upper == Catch::Approx(0.2));
  const PitSegment s1 = discrete_pit(f, 0.5);
  CHECK(s1.lower == Catch::Approx(0.2));
  CHECK(s1.upper == Catch::Approx(0.7));
  const PitSegment s2 = discrete_pit(f, 5.0);
  CHECK(s2.lower == Catch::Approx(0.7));
  CHECK(s2.upper == Catch::Approx(1.0));

  // Zero-probability realized bin gives a zero-length segment.
  const HistogramForecast g(three_bins(), {0.5, 0.0, 0.5});
  const PitSegment z = discrete_pit(g, 0.5);
  CHECK(z.lower == Catch::Approx(0.5));
  CHECK(z.upper == Catch::Approx(0.5));
}

TEST_CASE("randomized PIT is deterministic and stays in its segment") {
  const HistogramForecast f(three_bins(), {0.2, 0.5, 0.3});
  const double u1 = discrete_pit_randomized(f, 0.5, 7);
  const double u2 = discrete_pit_randomized(f, 0.5, 7);
  CHECK(u1 == u2);
  CHECK(u1 >= 0.2);
  CHECK(u1 <= 0.7);
  const double u3 = discrete_pit_randomized(f, 0.5, 8);
  CHECK(u3 != u1);
}

TEST_CASE("PIT histogram spreads segment mass by overlap") {
  const std::vector<PitSegment> segments = {
      {0.0, 0.2},    // half in bin 0, half in bin 1
      {0.15, 0.35},  // bins 1/2/3 get 0.25 / 0.5 / 0.25
      {0.34, 0.34},  // an atom in bin 3
      {1.0, 1.0},    // an atom at the top lands in the last bin
  };
  const PitHistogram hist = pit_histogram(segments, 10, 0.90);
  REQUIRE(hist.masses.size() == 10);
  CHECK(hist.masses[0] == Catch::Approx(0.5));
  CHECK(hist.masses[1] == Catch::Approx(0.75));
  CHECK(hist.masses[2] == Catch::Approx(0.5));
  CHECK(hist.masses[3] == Catch::Approx(1.25));
  CHECK(hist.masses[9] == Catch::Approx(1.0));
  double total = 0.0;
  for (double m : hist.masses) total += m;
  CHECK(total == Catch::Approx(4.0));
  CHECK(hist.observation_count == 4);
  CHECK(hist.bin_count == 10);
}

TEST_CASE("binomial band quantiles match an independent computation") {
  const auto reference = [](std::size_t n, double p, double q) {
    double cdf = 0.0;
    for (std::size_t m = 0; m <= n; ++m) {
      const double log_pmf = std::lgamma(static_cast<double>(n + 1)) -
                             std::lgamma(static_cast<double>(m + 1)) -
                             std::lgamma(static_cast<double>(n - m + 1)) +
                             static_cast<double>(m) * std::log(p) +
                             static_cast<double>(n - m) * std::log1p(-p);
      cdf += std::exp(log_pmf);
      if (cdf >= q) return static_cast<double>(m);
    }
    return static_cast<double>(n);
  };
  for (std::size_t n : {std::size_t{20}, std::size_t{100}, std::size_t{1000}}) {
    for (double q : {0.05, 0.5, 0.95, 0.995}) {
      REQUIRE(detail::binomial_quantile(n, 0.1, q) == reference(n, 0.1, q));
    }
  }
  // The 90% band around n/J contains the expected count.
  const PitHistogram hist = pit_histogram(std::vector<PitSegment>(1000, {0.5, 0.5}), 10, 0.90);
  CHECK(hist.band_lower[0] < 100.0);
  CHECK(hist.band_upper[0] > 100.0);
  CHECK(hist.band_lower[0] > 60.0);
  CHECK(hist.band_upper[0] < 140.0);
}

TEST_CASE("subsample splits partition the panel at the boundary") {
  const ForecastPanel panel = make_random_panel(305, 8, 2);  // 2000-Q1 .. 2001-Q4
  const SplitPanels split = subsample_split(panel, SurveyDate{2000, 4});
  CHECK(split.first.t_count() == 4);
  CHECK(split.second.t_count() == 4);
  CHECK(split.first.survey_dates().back() == SurveyDate{2000, 4});
  CHECK(split.second.survey_dates().front() == SurveyDate{2001, 1});
  REQUIRE(split.first.cell(0, 0).has_value());
  CHECK(split.first.cell(3, 1)->probs() == panel.cell(3, 1)->probs());
  CHECK(split.second.cell(0, 0)->probs() == panel.cell(4, 0)->probs());

  // A boundary at the final date leaves the second side empty.
  const SplitPanels tail = subsample_split(panel, SurveyDate{2001, 4});
  CHECK(tail.first.t_count() == 8);
  CHECK(tail.second.t_count() == 0);

  CHECK_THROWS_AS(subsample_split(panel, SurveyDate{1999, 4}), OutOfRangeError);
  CHECK_THROWS_AS(subsample_split(panel, SurveyDate{2002, 1}), OutOfRangeError);
}

TEST_CASE("subset methods run inside backtests") {
  const ForecastPanel panel = make_random_panel(306, 8, 4);
  BacktestConfig config;
  config.method = CombinationMethod::best_le_n;
  config.subset_n = 2;
  config.burn_in = 2;
  const BacktestResult result = rolling_backtest(panel, config);
  REQUIRE(result.rounds.size() == 6);
  for (const BacktestRound& round : result.rounds) {
    CHECK(round.weights.selected_count >= 1);
    CHECK(round.weights.selected_count <= 2);
  }
  CHECK(result.mean_selected >= 1.0);
  CHECK(result.mean_selected <= 2.0);

  config.subset_n = 9;  // more than K
  CHECK_THROWS_AS(rolling_backtest(panel, config), std::invalid_argument);
}
