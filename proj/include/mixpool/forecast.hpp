#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixpool/errors.hpp"
#include "mixpool/penalties.hpp"

// Core value types for histogram density forecasts: bin grids, single
// forecasts, survey panels, mixture weights, and the mixture operation that
// combines K forecasts into one pooled density.

namespace mixpool {

// Histogram probabilities must sum to one within this tolerance.
inline constexpr double kProbabilitySumTolerance = 1e-9;

// A weight counts as "selected" when it exceeds this threshold.
inline constexpr double kSelectionThreshold = 1e-4;

// ---------------------------------------------------------------------------
// Survey dates ("YYYY-Qn" tokens)
// ---------------------------------------------------------------------------

struct SurveyDate {
  int year = 0;
  int quarter = 0;  // 1..4

  auto operator<=>(const SurveyDate&) const = default;

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-Q%d", year, quarter);
    return buf;
  }

  static SurveyDate parse(const std::string& token) {
    if (token.size() != 7 || token[4] != '-' || token[5] != 'Q') {
      throw InputFormatError("bad survey date token '" + token + "' (expected YYYY-Qn)");
    }
    for (int i : {0, 1, 2, 3, 6}) {
      if (token[i] < '0' || token[i] > '9') {
        throw InputFormatError("bad survey date token '" + token + "' (expected YYYY-Qn)");
      }
    }
    SurveyDate d;
    d.year = std::stoi(token.substr(0, 4));
    d.quarter = token[6] - '0';
    if (d.quarter < 1 || d.quarter > 4) {
      throw InputFormatError("bad survey date token '" + token + "' (quarter must be 1..4)");
    }
    return d;
  }

  // Next calendar quarter; used to enumerate survey rounds.
  SurveyDate next() const {
    return quarter == 4 ? SurveyDate{year + 1, 1} : SurveyDate{year, quarter + 1};
  }
};

// ---------------------------------------------------------------------------
// Bin grids
// ---------------------------------------------------------------------------

// An ordered set of M+1 bin edges defining M bins. Bins are right-closed:
// bin m (0-based) covers (edges[m], edges[m+1]]. The first and last edge may
// be -inf / +inf; interior edges must be finite.
class BinGrid {
 public:
  explicit BinGrid(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 3) {
      throw std::invalid_argument("bin grid needs at least 3 edges (2 bins)");
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (std::isnan(edges_[i])) throw std::invalid_argument("bin edge is NaN");
      if (i > 0 && !(edges_[i - 1] < edges_[i])) {
        throw std::invalid_argument("bin edges must be strictly increasing");
      }
      if (i > 0 && i + 1 < edges_.size() && !std::isfinite(edges_[i])) {
        throw std::invalid_argument("interior bin edges must be finite");
      }
    }
  }

  std::size_t bin_count() const { return edges_.size() - 1; }
  const std::vector<double>& edges() const { return edges_; }
  double lower(std::size_t m) const { return edges_[m]; }
  double upper(std::size_t m) const { return edges_[m + 1]; }

  bool operator==(const BinGrid& other) const { return edges_ == other.edges_; }

  // 0-based index of the bin containing y. A value exactly on an interior
  // edge belongs to the bin whose right edge it is.
  std::size_t locate(double y) const {
    if (!std::isfinite(y)) throw std::invalid_argument("realization must be finite");
    if (!(y > edges_.front())) {
      throw OutOfRangeError("realization " + std::to_string(y) +
                            " at or below the lowest bin edge");
    }
    auto it = std::lower_bound(edges_.begin() + 1, edges_.end(), y);
    if (it == edges_.end()) {
      throw OutOfRangeError("realization " + std::to_string(y) + " above the highest bin edge");
    }
    return static_cast<std::size_t>(it - (edges_.begin() + 1));
  }

 private:
  std::vector<double> edges_;
};

// The fixed 11-bin harmonization target used for survey panels:
// (-inf,-0.5], (-0.5,0], ..., (3.5,4], (4,inf).
inline BinGrid standard_eleven_bin_grid() {
  const double inf = std::numeric_limits<double>::infinity();
  return BinGrid({-inf, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, inf});
}

// ---------------------------------------------------------------------------
// Forecasts
// ---------------------------------------------------------------------------

class HistogramForecast {
 public:
  HistogramForecast(BinGrid grid, std::vector<double> probs)
      : grid_(std::move(grid)), probs_(std::move(probs)) {
    if (probs_.size() != grid_.bin_count()) {
      throw std::invalid_argument("probability vector length must equal bin count");
    }
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("bin probabilities must be finite and >= 0");
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > kProbabilitySumTolerance) {
      throw std::invalid_argument("bin probabilities must sum to 1 (got " +
                                  std::to_string(sum) + ")");
    }
  }

  const BinGrid& grid() const { return grid_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  BinGrid grid_;
  std::vector<double> probs_;
};

struct GaussianForecast {
  double mean = 0.0;
  double variance = 1.0;

  void validate() const {
    if (!std::isfinite(mean)) throw std::invalid_argument("gaussian mean must be finite");
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw std::invalid_argument("gaussian variance must be finite and > 0");
    }
  }
};

struct BinProbability {
  std::size_t index;   // 0-based realized bin
  double probability;  // forecast mass on that bin
};

// Realized bin and its forecast probability.
inline BinProbability bin_probability(const HistogramForecast& f, double y) {
  const std::size_t m = f.grid().locate(y);
  return {m, f.probs()[m]};
}

// Cumulative probabilities P_1..P_M (length M, final entry ~ 1).
inline std::vector<double> forecast_cdf(const HistogramForecast& f) {
  std::vector<double> cdf(f.probs().size());
  double acc = 0.0;
  for (std::size_t m = 0; m < cdf.size(); ++m) {
    acc += f.probs()[m];
    cdf[m] = acc;
  }
  return cdf;
}

// ---------------------------------------------------------------------------
// Mixture weights
// ---------------------------------------------------------------------------

struct MixtureWeights {
  std::vector<double> weights;
  std::string method;
  PenaltySpec penalty;
  std::size_t selected_count = 0;

  static MixtureWeights make(std::vector<double> w, std::string method_tag,
                             PenaltySpec penalty_spec = PenaltySpec::none(),
                             double selection_threshold = kSelectionThreshold) {
    if (w.empty()) throw std::invalid_argument("weight vector must be non-empty");
    double sum = 0.0;
    for (double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("mixture weights must be finite and >= 0");
      }
      sum += x;
    }
    if (std::fabs(sum - 1.0) > kProbabilitySumTolerance) {
      throw std::invalid_argument("mixture weights must sum to 1 (got " + std::to_string(sum) +
                                  ")");
    }
    MixtureWeights out;
    out.weights = std::move(w);
    out.method = std::move(method_tag);
    out.penalty = penalty_spec;
    out.selected_count = static_cast<std::size_t>(
        std::count_if(out.weights.begin(), out.weights.end(),
                      [&](double x) { return x > selection_threshold; }));
    return out;
  }

  static MixtureWeights equal(std::size_t k_count, std::string method_tag = "simple-average") {
    if (k_count == 0) throw std::invalid_argument("weight vector must be non-empty");
    return make(std::vector<double>(k_count, 1.0 / static_cast<double>(k_count)),
                std::move(method_tag));
  }
};

// ---------------------------------------------------------------------------
// Mixtures (linear opinion pools)
// ---------------------------------------------------------------------------

// Pooled density: bin-wise convex combination of K forecasts on one grid.
inline HistogramForecast mixture(std::span<const double> weights,
                                 std::span<const HistogramForecast> forecasts) {
  if (forecasts.empty()) throw std::invalid_argument("mixture needs at least one forecast");
  if (weights.size() != forecasts.size()) {
    throw std::invalid_argument("mixture weight count (" + std::to_string(weights.size()) +
                                ") must match forecast count (" +
                                std::to_string(forecasts.size()) + ")");
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("mixture weights must be finite and >= 0");
    }
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > kProbabilitySumTolerance) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  const BinGrid& grid = forecasts[0].grid();
  for (std::size_t k = 1; k < forecasts.size(); ++k) {
    if (!(forecasts[k].grid() == grid)) {
      throw GridMismatchError("mixture forecasts must share one bin grid (forecast " +
                              std::to_string(k) + " differs)");
    }
  }
  std::vector<double> probs(grid.bin_count(), 0.0);
  for (std::size_t k = 0; k < forecasts.size(); ++k) {
    const auto& p = forecasts[k].probs();
    for (std::size_t m = 0; m < probs.size(); ++m) probs[m] += weights[k] * p[m];
  }
  return HistogramForecast(grid, std::move(probs));
}

inline HistogramForecast mixture(const MixtureWeights& weights,
                                 std::span<const HistogramForecast> forecasts) {
  return mixture(std::span<const double>(weights.weights), forecasts);
}

// ---------------------------------------------------------------------------
// Real-rate transform
// ---------------------------------------------------------------------------

// Density of r = nominal_rate - pi implied by a histogram for pi: edges are
// reflected around the nominal rate and reversed, probabilities are reversed.
// Applying the transform twice with the same rate restores the original
// probabilities bit-for-bit.
inline HistogramForecast real_rate_transform(const HistogramForecast& f, double nominal_rate) {
  if (!std::isfinite(nominal_rate)) {
    throw std::invalid_argument("nominal rate must be finite");
  }
  const auto& in_edges = f.grid().edges();
  std::vector<double> edges(in_edges.size());
  for (std::size_t i = 0; i < in_edges.size(); ++i) {
    edges[i] = nominal_rate - in_edges[in_edges.size() - 1 - i];
  }
  std::vector<double> probs(f.probs().rbegin(), f.probs().rend());
  return HistogramForecast(BinGrid(std::move(edges)), std::move(probs));
}

// ---------------------------------------------------------------------------
// Forecast panels
// ---------------------------------------------------------------------------

// A T x K survey panel: K forecaster ids, T survey rounds in increasing date
// order, an optional histogram per cell (all sharing one grid), and an
// optional realization per round.
class ForecastPanel {
 public:
  ForecastPanel(BinGrid grid, std::vector<std::string> forecaster_ids,
                std::vector<SurveyDate> survey_dates,
                std::vector<std::optional<HistogramForecast>> cells,
                std::vector<std::optional<double>> realizations)
      : grid_(std::move(grid)),
        forecaster_ids_(std::move(forecaster_ids)),
        survey_dates_(std::move(survey_dates)),
        cells_(std::move(cells)),
        realizations_(std::move(realizations)) {
    if (forecaster_ids_.empty()) throw std::invalid_argument("panel needs >= 1 forecaster");
    // A panel may hold zero rounds (e.g. the empty side of a subsample split).
    for (std::size_t i = 1; i < survey_dates_.size(); ++i) {
      if (!(survey_dates_[i - 1] < survey_dates_[i])) {
        throw std::invalid_argument("survey dates must be strictly increasing");
      }
    }
    {
      auto sorted_ids = forecaster_ids_;
      std::sort(sorted_ids.begin(), sorted_ids.end());
      if (std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) != sorted_ids.end()) {
        throw std::invalid_argument("forecaster ids must be unique");
      }
    }
    if (cells_.size() != t_count() * k_count()) {
      throw std::invalid_argument("panel cell count must be T*K");
    }
    if (realizations_.size() != t_count()) {
      throw std::invalid_argument("panel realization count must be T");
    }
    for (const auto& cell : cells_) {
      if (cell && !(cell->grid() == grid_)) {
        throw GridMismatchError("panel cell grid differs from the panel grid");
      }
    }
    for (const auto& r : realizations_) {
      if (r && !std::isfinite(*r)) throw std::invalid_argument("realization must be finite");
    }
  }

  std::size_t k_count() const { return forecaster_ids_.size(); }
  std::size_t t_count() const { return survey_dates_.size(); }
  const BinGrid& grid() const { return grid_; }
  const std::vector<std::string>& forecaster_ids() const { return forecaster_ids_; }
  const std::vector<SurveyDate>& survey_dates() const { return survey_dates_; }

  const std::optional<HistogramForecast>& cell(std::size_t t, std::size_t k) const {
    return cells_.at(t * k_count() + k);
  }
  const std::optional<double>& realization(std::size_t t) const { return realizations_.at(t); }
  const std::vector<std::optional<HistogramForecast>>& cells() const { return cells_; }
  const std::vector<std::optional<double>>& realizations() const { return realizations_; }

  std::optional<std::size_t> index_of_date(const SurveyDate& date) const {
    auto it = std::lower_bound(survey_dates_.begin(), survey_dates_.end(), date);
    if (it == survey_dates_.end() || !(*it == date)) return std::nullopt;
    return static_cast<std::size_t>(it - survey_dates_.begin());
  }

 private:
  BinGrid grid_;
  std::vector<std::string> forecaster_ids_;
  std::vector<SurveyDate> survey_dates_;
  std::vector<std::optional<HistogramForecast>> cells_;
  std::vector<std::optional<double>> realizations_;
};

}  // namespace mixpool
