#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mixpool/errors.hpp"
#include "mixpool/forecast.hpp"

// Proper scoring rules for histogram forecasts. Every rule is oriented as a
// loss: smaller is better. Reporting layers convert log-rule totals to the
// "average log predictive" orientation (larger is better) used in summaries.

namespace mixpool {

enum class ScoreRule { log, brier, quadratic, ranked };

inline const char* to_string(ScoreRule rule) {
  switch (rule) {
    case ScoreRule::log: return "log";
    case ScoreRule::brier: return "brier";
    case ScoreRule::quadratic: return "quadratic";
    case ScoreRule::ranked: return "ranked";
  }
  return "unknown";
}

// A score value with an explicit overflow tag. A log score overflows when the
// realized bin has zero probability; the tag replaces a raw floating infinity
// so that aggregation cannot silently launder an undefined score. Overflowing
// inputs usually mean the zero-probability repair step was skipped.
struct Score {
  double value = 0.0;
  bool overflow = false;

  static Score finite(double v) { return {v, false}; }
  static Score overflowed() { return {std::numeric_limits<double>::quiet_NaN(), true}; }

  Score& operator+=(const Score& other) {
    if (other.overflow) overflow = true;
    if (!overflow) value += other.value;
    else value = std::numeric_limits<double>::quiet_NaN();
    return *this;
  }
};

// -log of the realized-bin probability. Overflows on zero probability.
inline Score log_score(const HistogramForecast& f, double y) {
  const auto bp = bin_probability(f, y);
  if (!(bp.probability > 0.0)) return Score::overflowed();
  return Score::finite(-std::log(bp.probability));
}

// (1/M) * sum_m (p_m - 1{realized bin})^2.
inline Score brier_score(const HistogramForecast& f, double y) {
  const std::size_t realized = f.grid().locate(y);
  const auto& p = f.probs();
  double acc = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const double d = p[m] - (m == realized ? 1.0 : 0.0);
    acc += d * d;
  }
  return Score::finite(acc / static_cast<double>(p.size()));
}

// -2 * p_realized + sum_m p_m^2; equals M * brier - 1 identically.
inline Score quadratic_score(const HistogramForecast& f, double y) {
  const std::size_t realized = f.grid().locate(y);
  const auto& p = f.probs();
  double sumsq = 0.0;
  for (double pm : p) sumsq += pm * pm;
  return Score::finite(-2.0 * p[realized] + sumsq);
}

// sum_m (P_m - 1{y <= upper edge of bin m})^2 over cumulative probabilities.
inline Score ranked_score(const HistogramForecast& f, double y) {
  const std::size_t realized = f.grid().locate(y);
  const auto& p = f.probs();
  double acc = 0.0;
  double cdf = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    cdf += p[m];
    const double d = cdf - (m >= realized ? 1.0 : 0.0);
    acc += d * d;
  }
  return Score::finite(acc);
}

inline Score score(ScoreRule rule, const HistogramForecast& f, double y) {
  switch (rule) {
    case ScoreRule::log: return log_score(f, y);
    case ScoreRule::brier: return brier_score(f, y);
    case ScoreRule::quadratic: return quadratic_score(f, y);
    case ScoreRule::ranked: return ranked_score(f, y);
  }
  throw std::logic_error("unreachable score rule");
}

// -log N(y; mean, variance). Always finite.
inline double gaussian_log_score(const GaussianForecast& f, double y) {
  f.validate();
  if (!std::isfinite(y)) throw std::invalid_argument("realization must be finite");
  const double two_pi = 6.283185307179586476925286766559;
  const double d = y - f.mean;
  return 0.5 * std::log(two_pi * f.variance) + d * d / (2.0 * f.variance);
}

// ---------------------------------------------------------------------------
// Panel scoring
// ---------------------------------------------------------------------------

struct ScoreReport {
  ScoreRule rule = ScoreRule::log;
  std::vector<Score> per_period;
  Score total;
  // -total/T for the log rule (larger is better); NaN otherwise or on overflow.
  double mean_log_predictive = std::numeric_limits<double>::quiet_NaN();
};

inline ScoreReport make_report(ScoreRule rule, std::vector<Score> per_period) {
  ScoreReport report;
  report.rule = rule;
  report.per_period = std::move(per_period);
  Score total = Score::finite(0.0);
  for (const Score& s : report.per_period) total += s;
  report.total = total;
  if (rule == ScoreRule::log && !total.overflow && !report.per_period.empty()) {
    report.mean_log_predictive = -total.value / static_cast<double>(report.per_period.size());
  }
  return report;
}

namespace detail {

inline void require_panel_row(const ForecastPanel& panel, std::size_t t, std::size_t k) {
  if (!panel.cell(t, k)) {
    throw MissingCellError("missing forecast for forecaster '" + panel.forecaster_ids()[k] +
                           "' at " + panel.survey_dates()[t].to_string());
  }
  if (!panel.realization(t)) {
    throw MissingCellError("missing realization at " + panel.survey_dates()[t].to_string());
  }
}

}  // namespace detail

// Score a single forecaster across all panel rounds.
inline ScoreReport panel_score(const ForecastPanel& panel, std::size_t forecaster,
                               ScoreRule rule) {
  if (forecaster >= panel.k_count()) {
    throw std::invalid_argument("forecaster index out of range");
  }
  std::vector<Score> per_period;
  per_period.reserve(panel.t_count());
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    detail::require_panel_row(panel, t, forecaster);
    per_period.push_back(score(rule, *panel.cell(t, forecaster), *panel.realization(t)));
  }
  return make_report(rule, std::move(per_period));
}

// Score the weighted mixture of each round's forecasts across all rounds.
inline ScoreReport panel_score(const ForecastPanel& panel, const MixtureWeights& weights,
                               ScoreRule rule) {
  if (weights.weights.size() != panel.k_count()) {
    throw std::invalid_argument("weight count must match panel forecaster count");
  }
  std::vector<Score> per_period;
  per_period.reserve(panel.t_count());
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    std::vector<HistogramForecast> row;
    row.reserve(panel.k_count());
    for (std::size_t k = 0; k < panel.k_count(); ++k) {
      detail::require_panel_row(panel, t, k);
      row.push_back(*panel.cell(t, k));
    }
    per_period.push_back(score(rule, mixture(weights, row), *panel.realization(t)));
  }
  return make_report(rule, std::move(per_period));
}

}  // namespace mixpool
