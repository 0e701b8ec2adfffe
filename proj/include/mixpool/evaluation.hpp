#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixpool/errors.hpp"
#include "mixpool/forecast.hpp"
#include "mixpool/optimizer.hpp"
#include "mixpool/rng.hpp"
#include "mixpool/scoring.hpp"
#include "mixpool/subset.hpp"

// Out-of-sample evaluation: rolling-origin backtests over a survey panel,
// discrete probability integral transforms (PIT) with binomial bands, and
// date-based subsample splits.

namespace mixpool {

// ---------------------------------------------------------------------------
// Combination methods
// ---------------------------------------------------------------------------

enum class CombinationMethod {
  simple_average,
  simplex,
  ridge,
  total_variation,
  entropy,
  renyi,
  best_n,
  best_le_n,
  peg_ridge,
};

inline const char* to_string(CombinationMethod method) {
  switch (method) {
    case CombinationMethod::simple_average: return "simple-average";
    case CombinationMethod::simplex: return "simplex";
    case CombinationMethod::ridge: return "ridge";
    case CombinationMethod::total_variation: return "tv";
    case CombinationMethod::entropy: return "entropy";
    case CombinationMethod::renyi: return "renyi";
    case CombinationMethod::best_n: return "best-n";
    case CombinationMethod::best_le_n: return "best-le-n";
    case CombinationMethod::peg_ridge: return "peg-ridge";
  }
  return "unknown";
}

inline CombinationMethod parse_combination_method(const std::string& name) {
  if (name == "simple-average") return CombinationMethod::simple_average;
  if (name == "simplex") return CombinationMethod::simplex;
  if (name == "ridge") return CombinationMethod::ridge;
  if (name == "tv") return CombinationMethod::total_variation;
  if (name == "entropy") return CombinationMethod::entropy;
  if (name == "renyi") return CombinationMethod::renyi;
  if (name == "best-n") return CombinationMethod::best_n;
  if (name == "best-le-n") return CombinationMethod::best_le_n;
  if (name == "peg-ridge") return CombinationMethod::peg_ridge;
  throw std::invalid_argument("unknown combination method '" + name + "'");
}

// ---------------------------------------------------------------------------
// Density matrix from a panel window
// ---------------------------------------------------------------------------

// Realized-bin probabilities for rounds [t_lo, t_hi): entry (t, k) is
// forecaster k's probability on the bin that round t's realization fell in.
inline DensityMatrix build_density_matrix(const ForecastPanel& panel, std::size_t t_lo,
                                          std::size_t t_hi) {
  if (!(t_lo < t_hi) || t_hi > panel.t_count()) {
    throw std::invalid_argument("bad density matrix round range");
  }
  const std::size_t k_count = panel.k_count();
  std::vector<double> values((t_hi - t_lo) * k_count);
  for (std::size_t t = t_lo; t < t_hi; ++t) {
    detail::require_panel_row(panel, t, 0);
    const double y = *panel.realization(t);
    for (std::size_t k = 0; k < k_count; ++k) {
      detail::require_panel_row(panel, t, k);
      values[(t - t_lo) * k_count + k] = bin_probability(*panel.cell(t, k), y).probability;
    }
  }
  return DensityMatrix(t_hi - t_lo, k_count, std::move(values));
}

// ---------------------------------------------------------------------------
// Backtest configuration and result
// ---------------------------------------------------------------------------

struct BacktestConfig {
  CombinationMethod method = CombinationMethod::simplex;
  double lambda = 0.0;     // penalized methods and peg-ridge
  double alpha = 2.0;      // renyi only
  std::size_t subset_n = 4;  // best-n / best-le-n
  std::size_t window = 20;
  // Rounds of history before the first evaluation round.
  std::size_t burn_in = 1;
  // Default policy: with fewer than `window` past rounds available the window
  // expands (uses everything), then rolls. Strict mode instead starts
  // evaluating only once a full window exists.
  bool strict_rolling = false;
  unsigned workers = 1;
  SolverConfig solver;
  std::vector<ScoreRule> rules{ScoreRule::log, ScoreRule::brier, ScoreRule::quadratic,
                               ScoreRule::ranked};

  PenaltySpec penalty_spec() const {
    switch (method) {
      case CombinationMethod::ridge: return PenaltySpec::ridge(lambda);
      case CombinationMethod::total_variation: return PenaltySpec::total_variation(lambda);
      case CombinationMethod::entropy: return PenaltySpec::entropy(lambda);
      case CombinationMethod::renyi: return PenaltySpec::renyi(lambda, alpha);
      default: return PenaltySpec::none();
    }
  }

  void validate(const ForecastPanel& panel) const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (burn_in < 1) throw std::invalid_argument("burn_in must be >= 1");
    if (first_evaluation_round() >= panel.t_count()) {
      throw std::invalid_argument("insufficient history: first evaluation round " +
                                  std::to_string(first_evaluation_round()) +
                                  " is beyond the panel's " +
                                  std::to_string(panel.t_count()) + " rounds");
    }
    if ((method == CombinationMethod::best_n || method == CombinationMethod::best_le_n) &&
        (subset_n == 0 || subset_n > panel.k_count())) {
      throw std::invalid_argument("subset size must lie in 1..K");
    }
    penalty_spec().validate();
  }

  std::size_t first_evaluation_round() const {
    return strict_rolling ? std::max(burn_in, window) : burn_in;
  }
};

// Weights for one estimation window, dispatched on the configured method.
inline MixtureWeights estimate_window_weights(const DensityMatrix& densities,
                                              const BacktestConfig& config) {
  switch (config.method) {
    case CombinationMethod::simple_average:
      return MixtureWeights::equal(densities.k_count());
    case CombinationMethod::simplex:
    case CombinationMethod::ridge:
    case CombinationMethod::total_variation:
    case CombinationMethod::entropy:
    case CombinationMethod::renyi:
      return estimate_weights(densities, config.penalty_spec(), config.solver).weights;
    case CombinationMethod::best_n:
      return best_n_average(densities, config.subset_n, config.workers).weights;
    case CombinationMethod::best_le_n:
      return best_le_n_average(densities, config.subset_n, config.workers).weights;
    case CombinationMethod::peg_ridge:
      return partially_egalitarian_ridge(densities, config.lambda, config.solver).weights;
  }
  throw std::logic_error("unreachable combination method");
}

struct BacktestRound {
  std::size_t round_index;
  SurveyDate date;
  MixtureWeights weights;
  HistogramForecast mixture_forecast;
  double realization;
  std::vector<Score> scores;  // aligned with BacktestConfig::rules
};

struct BacktestResult {
  std::vector<ScoreRule> rules;
  std::vector<BacktestRound> rounds;
  ScoreReport log_report;  // log-rule scores across evaluation rounds
  double mean_selected = 0.0;
};

// Rolling-origin backtest. For each evaluation round t (from burn_in on),
// weights are estimated from rounds strictly before t — never from round t
// itself — then the round-t mixture is scored against the round-t
// realization.
inline BacktestResult rolling_backtest(const ForecastPanel& panel,
                                       const BacktestConfig& config) {
  config.validate(panel);
  BacktestResult result;
  result.rules = config.rules;

  std::vector<Score> log_scores;
  double selected_sum = 0.0;
  for (std::size_t t = config.first_evaluation_round(); t < panel.t_count(); ++t) {
    const std::size_t lo = t > config.window ? t - config.window : 0;
    const DensityMatrix window_densities = build_density_matrix(panel, lo, t);
    MixtureWeights weights = estimate_window_weights(window_densities, config);

    std::vector<HistogramForecast> row;
    row.reserve(panel.k_count());
    for (std::size_t k = 0; k < panel.k_count(); ++k) {
      detail::require_panel_row(panel, t, k);
      row.push_back(*panel.cell(t, k));
    }
    HistogramForecast pooled = mixture(weights, row);
    const double y = *panel.realization(t);

    std::vector<Score> scores;
    scores.reserve(config.rules.size());
    for (ScoreRule rule : config.rules) scores.push_back(score(rule, pooled, y));
    for (std::size_t i = 0; i < config.rules.size(); ++i) {
      if (config.rules[i] == ScoreRule::log) log_scores.push_back(scores[i]);
    }

    selected_sum += static_cast<double>(weights.selected_count);
    result.rounds.push_back(BacktestRound{t, panel.survey_dates()[t], std::move(weights),
                                          std::move(pooled), y, std::move(scores)});
  }

  if (log_scores.empty()) {
    // The log rule is always reported even if not among the configured rules.
    for (const BacktestRound& round : result.rounds) {
      log_scores.push_back(log_score(round.mixture_forecast, round.realization));
    }
  }
  result.log_report = make_report(ScoreRule::log, std::move(log_scores));
  result.mean_selected = result.rounds.empty()
                             ? 0.0
                             : selected_sum / static_cast<double>(result.rounds.size());
  return result;
}

// ---------------------------------------------------------------------------
// Discrete PIT
// ---------------------------------------------------------------------------

struct PitSegment {
  double lower = 0.0;
  double upper = 0.0;
};

// For a discrete forecast the PIT of a realization is set-valued: the segment
// [P_{m-1}, P_m] between the cumulative probabilities bracketing the realized
// bin.
inline PitSegment discrete_pit(const HistogramForecast& f, double y) {
  const std::size_t m = f.grid().locate(y);
  double below = 0.0;
  for (std::size_t j = 0; j < m; ++j) below += f.probs()[j];
  const double lower = std::clamp(below, 0.0, 1.0);
  const double upper = std::clamp(below + f.probs()[m], lower, 1.0);
  return {lower, upper};
}

// Randomized PIT: one uniform draw from the segment under the given seed.
inline double discrete_pit_randomized(const HistogramForecast& f, double y,
                                      std::uint64_t seed) {
  const PitSegment segment = discrete_pit(f, y);
  rng::Stream stream(seed, 0, rng::StreamRole::generic);
  return segment.lower + stream.next_uniform() * (segment.upper - segment.lower);
}

struct PitHistogram {
  std::size_t bin_count = 0;
  std::size_t observation_count = 0;
  double coverage = 0.0;
  std::vector<double> masses;      // per PIT bin; sums to observation_count
  std::vector<double> band_lower;  // pointwise binomial(n, 1/J) bands
  std::vector<double> band_upper;
};

namespace detail {

// Smallest m with Binomial(n, p) CDF >= q.
inline double binomial_quantile(std::size_t n, double p, double q) {
  double pmf = std::pow(1.0 - p, static_cast<double>(n));
  double cdf = pmf;
  std::size_t m = 0;
  while (cdf < q && m < n) {
    pmf *= (static_cast<double>(n - m) / static_cast<double>(m + 1)) * (p / (1.0 - p));
    cdf += pmf;
    ++m;
  }
  return static_cast<double>(m);
}

}  // namespace detail

// Nonrandomized PIT histogram: each observation's segment spreads its unit
// mass over the PIT bins in proportion to overlap (an atom if the segment has
// zero length). Pointwise bands are Binomial(n, 1/J) quantile pairs at the
// given coverage, as for an iid uniform sample.
inline PitHistogram pit_histogram(std::span<const PitSegment> segments, std::size_t bins = 10,
                                  double coverage = 0.90) {
  if (bins == 0) throw std::invalid_argument("PIT histogram needs >= 1 bin");
  if (!(coverage > 0.0) || !(coverage < 1.0)) {
    throw std::invalid_argument("coverage must lie in (0, 1)");
  }
  PitHistogram hist;
  hist.bin_count = bins;
  hist.observation_count = segments.size();
  hist.coverage = coverage;
  hist.masses.assign(bins, 0.0);

  const double width = 1.0 / static_cast<double>(bins);
  for (const PitSegment& seg : segments) {
    const double len = seg.upper - seg.lower;
    if (!(len > 0.0)) {
      const std::size_t j = std::min(static_cast<std::size_t>(seg.upper / width), bins - 1);
      hist.masses[j] += 1.0;
      continue;
    }
    for (std::size_t j = 0; j < bins; ++j) {
      const double lo = static_cast<double>(j) * width;
      const double hi = static_cast<double>(j + 1) * width;
      const double overlap = std::min(seg.upper, hi) - std::max(seg.lower, lo);
      if (overlap > 0.0) hist.masses[j] += overlap / len;
    }
  }

  const double tail = (1.0 - coverage) / 2.0;
  const double p = 1.0 / static_cast<double>(bins);
  hist.band_lower.assign(bins, detail::binomial_quantile(segments.size(), p, tail));
  hist.band_upper.assign(bins, detail::binomial_quantile(segments.size(), p, 1.0 - tail));
  return hist;
}

// ---------------------------------------------------------------------------
// Subsample split
// ---------------------------------------------------------------------------

struct SplitPanels {
  ForecastPanel first;   // rounds with date <= boundary
  ForecastPanel second;  // rounds with date > boundary (may be empty)
};

inline ForecastPanel panel_round_range(const ForecastPanel& panel, std::size_t t_lo,
                                       std::size_t t_hi) {
  std::vector<SurveyDate> dates(panel.survey_dates().begin() + t_lo,
                                panel.survey_dates().begin() + t_hi);
  std::vector<std::optional<double>> realizations(panel.realizations().begin() + t_lo,
                                                  panel.realizations().begin() + t_hi);
  std::vector<std::optional<HistogramForecast>> cells(
      panel.cells().begin() + t_lo * panel.k_count(),
      panel.cells().begin() + t_hi * panel.k_count());
  return ForecastPanel(panel.grid(), panel.forecaster_ids(), std::move(dates), std::move(cells),
                       std::move(realizations));
}

// Split a panel into rounds dated <= boundary and rounds dated afterward.
// Every round lands in exactly one side; the boundary must lie within the
// panel's date range.
inline SplitPanels subsample_split(const ForecastPanel& panel, const SurveyDate& boundary) {
  if (boundary < panel.survey_dates().front() || panel.survey_dates().back() < boundary) {
    throw OutOfRangeError("split boundary " + boundary.to_string() +
                          " outside the panel date range");
  }
  std::size_t cut = 0;
  while (cut < panel.t_count() && !(boundary < panel.survey_dates()[cut])) ++cut;
  return SplitPanels{panel_round_range(panel, 0, cut),
                     panel_round_range(panel, cut, panel.t_count())};
}

}  // namespace mixpool
