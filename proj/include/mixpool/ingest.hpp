#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mixpool/errors.hpp"
#include "mixpool/forecast.hpp"
#include "mixpool/scoring.hpp"
#include "mixpool/table_io.hpp"

// Survey ingestion: reads raw histogram-survey CSV files, harmonizes
// time-varying bin layouts onto one target grid, filters forecasters with
// long participation gaps, fills the remaining gaps from performance-matched
// peer groups, repairs zero-probability realized bins, and emits a clean
// panel. Every editing step is recorded in a processing log. Re-ingesting an
// emitted panel reproduces it byte for byte.

namespace mixpool {

// ---------------------------------------------------------------------------
// Raw survey rows
// ---------------------------------------------------------------------------

struct SurveyRow {
  SurveyDate date;
  std::string forecaster_id;
  double bin_lower = 0.0;
  double bin_upper = 0.0;
  double probability = 0.0;
  std::size_t line = 0;  // 1-based source line, for error messages
};

inline const char* survey_header() {
  return "survey_date,forecaster_id,bin_lower,bin_upper,probability";
}
inline const char* realization_header() { return "survey_date,realization"; }

inline std::vector<SurveyRow> read_survey_rows(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) throw InputFormatError(source + ": empty file");
  ++line_number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != survey_header()) {
    throw InputFormatError(source + ":1: expected header '" + survey_header() + "'");
  }

  std::vector<SurveyRow> rows;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string context = source + ":" + std::to_string(line_number);
    std::vector<std::string> fields = io::split_csv_line(std::move(line));
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != 5) {
      throw InputFormatError(context + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
    }
    SurveyRow row;
    row.date = SurveyDate::parse(fields[0]);
    row.forecaster_id = fields[1];
    if (row.forecaster_id.empty()) throw InputFormatError(context + ": empty forecaster id");
    row.bin_lower = io::parse_double(fields[2], context);
    row.bin_upper = io::parse_double(fields[3], context);
    row.probability = io::parse_double(fields[4], context);
    if (!(row.bin_lower < row.bin_upper)) {
      throw InputFormatError(context + ": bin lower bound must be below its upper bound");
    }
    if (!(row.probability >= 0.0) || row.probability > 1.0 + 1e-9 ||
        !std::isfinite(row.probability)) {
      throw InputFormatError(context + ": probability must lie in [0, 1]");
    }
    row.line = line_number;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<SurveyRow> read_survey_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFormatError("cannot open '" + path.string() + "'");
  return read_survey_rows(in, path.filename().string());
}

inline std::map<SurveyDate, double> read_realizations(std::istream& in,
                                                      const std::string& source) {
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) throw InputFormatError(source + ": empty file");
  ++line_number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != realization_header()) {
    throw InputFormatError(source + ":1: expected header '" + std::string(realization_header()) +
                           "'");
  }
  std::map<SurveyDate, double> values;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string context = source + ":" + std::to_string(line_number);
    std::vector<std::string> fields = io::split_csv_line(std::move(line));
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 2) {
      throw InputFormatError(context + ": expected 2 fields, got " +
                             std::to_string(fields.size()));
    }
    const SurveyDate date = SurveyDate::parse(fields[0]);
    const double value = io::parse_double(fields[1], context);
    if (!std::isfinite(value)) throw InputFormatError(context + ": realization must be finite");
    if (!values.emplace(date, value).second) {
      throw InputFormatError(context + ": duplicate realization for " + date.to_string());
    }
  }
  return values;
}

inline std::map<SurveyDate, double> read_realizations_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFormatError("cannot open '" + path.string() + "'");
  return read_realizations(in, path.filename().string());
}

// ---------------------------------------------------------------------------
// Options and processing log
// ---------------------------------------------------------------------------

struct IngestLog {
  std::vector<std::string> lines;
  void note(std::string line) { lines.push_back(std::move(line)); }
};

struct IngestOptions {
  BinGrid target_grid = standard_eleven_bin_grid();
  // Forecasters whose longest run of missing rounds (including before entry
  // and after exit) exceeds this are dropped.
  std::size_t max_consecutive_missing = 4;
  std::size_t interpolation_groups = 5;
  double repair_amount = 0.01;
  bool add_uniform = false;
  std::string uniform_id = "UNIFORM";

  void validate() const {
    if (interpolation_groups == 0) throw std::invalid_argument("need >= 1 interpolation group");
    if (!(repair_amount > 0.0) || !(repair_amount < 1.0)) {
      throw std::invalid_argument("repair amount must lie in (0, 1)");
    }
    if (uniform_id.empty()) throw std::invalid_argument("uniform forecaster id must be nonempty");
  }
};

// ---------------------------------------------------------------------------
// Harmonization onto the target grid
// ---------------------------------------------------------------------------

namespace detail {

struct RawBin {
  double lower, upper, probability;
  std::size_t line;
};

inline std::string cell_name(const SurveyDate& date, const std::string& id) {
  return date.to_string() + " forecaster '" + id + "'";
}

// Maps one source cell's bins onto the target grid. Source bins may be any
// non-overlapping intervals; each must nest inside a single target bin.
inline std::vector<double> harmonize_cell(std::vector<RawBin> bins, const BinGrid& target,
                                          const SurveyDate& date, const std::string& id) {
  std::sort(bins.begin(), bins.end(),
            [](const RawBin& a, const RawBin& b) { return a.lower < b.lower; });
  double sum = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (i > 0 && bins[i].lower < bins[i - 1].upper) {
      throw InputFormatError("overlapping bins for " + cell_name(date, id) + " (line " +
                             std::to_string(bins[i].line) + ")");
    }
    sum += bins[i].probability;
  }
  if (sum < 0.99 || sum > 1.01) {
    throw InputFormatError("probabilities for " + cell_name(date, id) + " sum to " +
                           io::format_double(sum, "%.6g") + ", outside [0.99, 1.01]");
  }

  const std::vector<double>& edges = target.edges();
  std::vector<double> probs(target.bin_count(), 0.0);
  for (const RawBin& bin : bins) {
    const auto it = std::lower_bound(edges.begin() + 1, edges.end(), bin.upper);
    if (it == edges.end() || bin.lower < *(it - 1)) {
      throw BinStraddleError("bin (" + io::format_double(bin.lower, "%.6g") + ", " +
                             io::format_double(bin.upper, "%.6g") + "] for " +
                             cell_name(date, id) + " (line " + std::to_string(bin.line) +
                             ") does not nest inside a single target bin");
    }
    probs[static_cast<std::size_t>(it - edges.begin()) - 1] += bin.probability;
  }
  // Renormalize exactly unless already at 1 within tolerance (skipping keeps
  // re-ingestion of our own output bitwise stable).
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    for (double& p : probs) p /= sum;
  }
  return probs;
}

inline HistogramForecast mean_histogram(const BinGrid& grid,
                                        const std::vector<const HistogramForecast*>& cells) {
  std::vector<double> probs(grid.bin_count(), 0.0);
  for (const HistogramForecast* cell : cells) {
    for (std::size_t m = 0; m < probs.size(); ++m) probs[m] += cell->probs()[m];
  }
  for (double& p : probs) p /= static_cast<double>(cells.size());
  return HistogramForecast(grid, std::move(probs));
}

}  // namespace detail

// Groups raw rows into per-(date, forecaster) cells, harmonizes each onto the
// target grid, and assembles the (possibly gappy) panel.
inline ForecastPanel harmonize_survey(const std::vector<SurveyRow>& rows,
                                      const std::map<SurveyDate, double>& realizations,
                                      const BinGrid& target) {
  if (rows.empty()) throw InputFormatError("survey file contains no data rows");
  std::map<std::pair<SurveyDate, std::string>, std::vector<detail::RawBin>> raw_cells;
  for (const SurveyRow& row : rows) {
    raw_cells[{row.date, row.forecaster_id}].push_back(
        {row.bin_lower, row.bin_upper, row.probability, row.line});
  }

  std::vector<SurveyDate> dates;
  std::vector<std::string> ids;
  for (const auto& [key, bins] : raw_cells) {
    if (dates.empty() || dates.back() < key.first) dates.push_back(key.first);
    ids.push_back(key.second);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const std::size_t t_count = dates.size();
  const std::size_t k_count = ids.size();
  std::vector<std::optional<HistogramForecast>> cells(t_count * k_count);
  for (const auto& [key, bins] : raw_cells) {
    const std::size_t t = static_cast<std::size_t>(
        std::lower_bound(dates.begin(), dates.end(), key.first) - dates.begin());
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), key.second) - ids.begin());
    cells[t * k_count + k] =
        HistogramForecast(target, detail::harmonize_cell(bins, target, key.first, key.second));
  }

  std::vector<std::optional<double>> panel_realizations(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto it = realizations.find(dates[t]);
    if (it != realizations.end()) panel_realizations[t] = it->second;
  }
  return ForecastPanel(target, std::move(ids), std::move(dates), std::move(cells),
                       std::move(panel_realizations));
}

// ---------------------------------------------------------------------------
// Entry/exit filter
// ---------------------------------------------------------------------------

// Longest run of missing rounds for one forecaster, counting rounds before
// first entry and after final exit.
inline std::size_t longest_missing_run(const ForecastPanel& panel, std::size_t k) {
  std::size_t longest = 0;
  std::size_t run = 0;
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    if (panel.cell(t, k)) {
      run = 0;
    } else {
      ++run;
      longest = std::max(longest, run);
    }
  }
  return longest;
}

inline ForecastPanel filter_entry_exit(const ForecastPanel& panel, std::size_t max_missing,
                                       IngestLog& log) {
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < panel.k_count(); ++k) {
    const std::size_t run = longest_missing_run(panel, k);
    if (run > max_missing) {
      log.note("drop forecaster '" + panel.forecaster_ids()[k] + "': " + std::to_string(run) +
               " consecutive missing rounds (limit " + std::to_string(max_missing) + ")");
    } else {
      kept.push_back(k);
    }
  }
  if (kept.empty()) {
    throw Error("no forecasters survive the entry/exit filter (limit " +
                std::to_string(max_missing) + " consecutive missing rounds)");
  }
  log.note("entry/exit filter kept " + std::to_string(kept.size()) + " of " +
           std::to_string(panel.k_count()) + " forecasters");

  std::vector<std::string> ids;
  ids.reserve(kept.size());
  for (std::size_t k : kept) ids.push_back(panel.forecaster_ids()[k]);
  std::vector<std::optional<HistogramForecast>> cells;
  cells.reserve(panel.t_count() * kept.size());
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    for (std::size_t k : kept) cells.push_back(panel.cell(t, k) ? *panel.cell(t, k)
                                                                : std::optional<HistogramForecast>());
  }
  return ForecastPanel(panel.grid(), std::move(ids), panel.survey_dates(), std::move(cells),
                       panel.realizations());
}

// ---------------------------------------------------------------------------
// Gap interpolation
// ---------------------------------------------------------------------------

namespace detail {

// Contiguous performance groups: forecasters ordered by cumulative ranked
// score (smaller is better, ties by column index), split into `group_count`
// groups with the earlier groups one larger when sizes don't divide evenly.
inline std::vector<std::size_t> assign_groups(const std::vector<double>& cumulative,
                                              std::size_t group_count) {
  const std::size_t k_count = cumulative.size();
  std::vector<std::size_t> order(k_count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cumulative[a] != cumulative[b]) return cumulative[a] < cumulative[b];
    return a < b;
  });
  const std::size_t groups = std::min(group_count, k_count);
  const std::size_t base = k_count / groups;
  const std::size_t remainder = k_count % groups;
  std::vector<std::size_t> group_of(k_count);
  std::size_t position = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t size = base + (g < remainder ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) group_of[order[position++]] = g;
  }
  return group_of;
}

}  // namespace detail

// Fills every missing cell. Round 1 gaps take the average of all forecasts
// reported that round. Later gaps take the average over the missing
// forecaster's performance group — forecasters grouped by cumulative ranked
// score over all earlier rounds — falling back to the all-forecaster average
// when no group member reported that round.
inline ForecastPanel interpolate_gaps(const ForecastPanel& panel, std::size_t group_count,
                                      IngestLog& log) {
  const std::size_t t_count = panel.t_count();
  const std::size_t k_count = panel.k_count();
  std::vector<std::optional<HistogramForecast>> cells(panel.cells().begin(),
                                                      panel.cells().end());
  auto cell_at = [&](std::size_t t, std::size_t k) -> std::optional<HistogramForecast>& {
    return cells[t * k_count + k];
  };

  std::vector<double> cumulative(k_count, 0.0);
  std::size_t scored_rounds = 0;  // rounds 0..scored_rounds-1 entered `cumulative`

  for (std::size_t t = 0; t < t_count; ++t) {
    std::vector<std::size_t> reported;
    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < k_count; ++k) {
      (cell_at(t, k) ? reported : missing).push_back(k);
    }
    if (!missing.empty() && reported.empty()) {
      throw Error("round " + panel.survey_dates()[t].to_string() + " has no reported forecasts");
    }
    if (!missing.empty()) {
      std::vector<std::size_t> group_of;
      if (t > 0) {
        if (scored_rounds < t) {
          throw MissingCellError("cannot rank forecasters for gap interpolation at " +
                                 panel.survey_dates()[t].to_string() + ": realization for " +
                                 panel.survey_dates()[scored_rounds].to_string() +
                                 " is missing");
        }
        group_of = detail::assign_groups(cumulative, group_count);
      }
      for (std::size_t k : missing) {
        std::vector<const HistogramForecast*> sources;
        std::string how;
        if (t > 0) {
          for (std::size_t j : reported) {
            if (group_of[j] == group_of[k]) sources.push_back(&*cell_at(t, j));
          }
          how = "performance group " + std::to_string(group_of[k] + 1) + " average (" +
                std::to_string(sources.size()) + " members)";
        }
        if (sources.empty()) {
          for (std::size_t j : reported) sources.push_back(&*cell_at(t, j));
          how = "all-forecaster average (" + std::to_string(sources.size()) + " reporters)";
          if (t > 0) how += " [group empty]";
        }
        cell_at(t, k) = detail::mean_histogram(panel.grid(), sources);
        log.note("fill " + panel.survey_dates()[t].to_string() + " forecaster '" +
                 panel.forecaster_ids()[k] + "': " + how);
      }
    }
    if (scored_rounds == t && panel.realization(t)) {
      const double y = *panel.realization(t);
      for (std::size_t k = 0; k < k_count; ++k) {
        cumulative[k] += ranked_score(*cell_at(t, k), y).value;
      }
      scored_rounds = t + 1;
    }
  }
  return ForecastPanel(panel.grid(), panel.forecaster_ids(), panel.survey_dates(),
                       std::move(cells), panel.realizations());
}

// ---------------------------------------------------------------------------
// Zero-probability repair
// ---------------------------------------------------------------------------

// Moves `amount` of probability into the realized bin, financed by equal
// shares from the positive bins — or proportionally to their mass if any
// positive bin is smaller than the equal share.
inline std::vector<double> repair_probabilities(std::vector<double> probs,
                                                std::size_t realized_bin, double amount) {
  std::vector<std::size_t> positive;
  double positive_mass = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (j != realized_bin && probs[j] > 0.0) {
      positive.push_back(j);
      positive_mass += probs[j];
    }
  }
  if (positive.empty()) throw Error("histogram has no positive bin to draw repair mass from");
  const double share = amount / static_cast<double>(positive.size());
  bool equal_ok = true;
  for (std::size_t j : positive) equal_ok = equal_ok && probs[j] >= share;
  for (std::size_t j : positive) {
    probs[j] -= equal_ok ? share : amount * probs[j] / positive_mass;
  }
  probs[realized_bin] += amount;
  return probs;
}

// Applies the repair to every cell whose realized bin carries zero
// probability, for every round with a realization.
inline ForecastPanel repair_zero_mass(const ForecastPanel& panel, double amount,
                                      IngestLog& log) {
  std::vector<std::optional<HistogramForecast>> cells(panel.cells().begin(),
                                                      panel.cells().end());
  const std::size_t k_count = panel.k_count();
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    if (!panel.realization(t)) continue;
    const std::size_t m = panel.grid().locate(*panel.realization(t));
    for (std::size_t k = 0; k < k_count; ++k) {
      std::optional<HistogramForecast>& cell = cells[t * k_count + k];
      if (!cell || cell->probs()[m] > 0.0) continue;
      std::vector<double> probs(cell->probs().begin(), cell->probs().end());
      cell = HistogramForecast(panel.grid(), repair_probabilities(std::move(probs), m, amount));
      log.note("repair " + panel.survey_dates()[t].to_string() + " forecaster '" +
               panel.forecaster_ids()[k] + "': moved " + io::format_double(amount, "%.6g") +
               " into the realized bin");
    }
  }
  return ForecastPanel(panel.grid(), panel.forecaster_ids(), panel.survey_dates(),
                       std::move(cells), panel.realizations());
}

// ---------------------------------------------------------------------------
// Uniform benchmark forecaster
// ---------------------------------------------------------------------------

inline ForecastPanel ensure_uniform_forecaster(const ForecastPanel& panel, const std::string& id,
                                               IngestLog& log) {
  const auto& ids = panel.forecaster_ids();
  if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
    log.note("uniform forecaster '" + id + "' already present; not adding another");
    return panel;
  }
  const std::size_t m_count = panel.grid().bin_count();
  HistogramForecast uniform(panel.grid(),
                            std::vector<double>(m_count, 1.0 / static_cast<double>(m_count)));
  std::vector<std::string> new_ids = ids;
  new_ids.push_back(id);
  std::vector<std::optional<HistogramForecast>> cells;
  cells.reserve(panel.t_count() * (panel.k_count() + 1));
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    for (std::size_t k = 0; k < panel.k_count(); ++k) cells.push_back(panel.cell(t, k) ? *panel.cell(t, k) : std::optional<HistogramForecast>());
    cells.push_back(uniform);
  }
  log.note("added uniform forecaster '" + id + "'");
  return ForecastPanel(panel.grid(), std::move(new_ids), panel.survey_dates(), std::move(cells),
                       panel.realizations());
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct IngestResult {
  ForecastPanel panel;
  IngestLog log;
};

inline IngestResult ingest_pipeline(const std::vector<SurveyRow>& rows,
                                    const std::map<SurveyDate, double>& realizations,
                                    const IngestOptions& options) {
  options.validate();
  IngestLog log;
  ForecastPanel panel = harmonize_survey(rows, realizations, options.target_grid);
  log.note("harmonized " + std::to_string(panel.k_count()) + " forecasters over " +
           std::to_string(panel.t_count()) + " rounds onto " +
           std::to_string(panel.grid().bin_count()) + " target bins");
  panel = filter_entry_exit(panel, options.max_consecutive_missing, log);
  panel = interpolate_gaps(panel, options.interpolation_groups, log);
  panel = repair_zero_mass(panel, options.repair_amount, log);
  if (options.add_uniform) panel = ensure_uniform_forecaster(panel, options.uniform_id, log);
  return IngestResult{std::move(panel), std::move(log)};
}

// ---------------------------------------------------------------------------
// Panel output / re-input
// ---------------------------------------------------------------------------

// Writes the panel in the survey-row schema, rows ordered by round then
// forecaster id then bin. Probabilities are printed with enough digits to
// reparse exactly, so ingesting the written panel reproduces it byte for
// byte.
inline void write_panel_csv(const ForecastPanel& panel, std::ostream& out) {
  std::vector<std::size_t> order(panel.k_count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return panel.forecaster_ids()[a] < panel.forecaster_ids()[b];
  });
  const std::vector<double>& edges = panel.grid().edges();
  out << survey_header() << '\n';
  for (std::size_t t = 0; t < panel.t_count(); ++t) {
    for (std::size_t k : order) {
      if (!panel.cell(t, k)) continue;
      const HistogramForecast& cell = *panel.cell(t, k);
      for (std::size_t m = 0; m < panel.grid().bin_count(); ++m) {
        out << panel.survey_dates()[t].to_string() << ',' << panel.forecaster_ids()[k] << ','
            << io::format_double(edges[m]) << ',' << io::format_double(edges[m + 1]) << ','
            << io::format_double(cell.probs()[m]) << '\n';
      }
    }
  }
}

inline void write_panel_file(const ForecastPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_panel_csv(panel, out);
}

// Reads a complete panel (as written by write_panel_csv): every cell must
// carry full histograms on one shared grid, which is inferred from the first
// cell. Missing (date, forecaster) pairs stay missing; mismatched grids
// raise GridMismatchError.
inline ForecastPanel read_panel(const std::vector<SurveyRow>& rows,
                                const std::map<SurveyDate, double>& realizations) {
  if (rows.empty()) throw InputFormatError("panel file contains no data rows");
  std::map<std::pair<SurveyDate, std::string>, std::vector<detail::RawBin>> raw_cells;
  for (const SurveyRow& row : rows) {
    raw_cells[{row.date, row.forecaster_id}].push_back(
        {row.bin_lower, row.bin_upper, row.probability, row.line});
  }

  // Grid from the first cell's bins, which must tile an interval.
  std::vector<double> edges;
  {
    std::vector<detail::RawBin> bins = raw_cells.begin()->second;
    std::sort(bins.begin(), bins.end(),
              [](const detail::RawBin& a, const detail::RawBin& b) { return a.lower < b.lower; });
    edges.push_back(bins.front().lower);
    for (const detail::RawBin& bin : bins) {
      if (bin.lower != edges.back()) {
        throw GridMismatchError("panel bins do not tile an interval near line " +
                                std::to_string(bin.line));
      }
      edges.push_back(bin.upper);
    }
  }
  const BinGrid grid(edges);

  std::vector<SurveyDate> dates;
  std::vector<std::string> ids;
  for (const auto& [key, bins] : raw_cells) {
    if (dates.empty() || dates.back() < key.first) dates.push_back(key.first);
    ids.push_back(key.second);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const std::size_t t_count = dates.size();
  const std::size_t k_count = ids.size();
  std::vector<std::optional<HistogramForecast>> cells(t_count * k_count);
  for (const auto& [key, bins_const] : raw_cells) {
    std::vector<detail::RawBin> bins = bins_const;
    std::sort(bins.begin(), bins.end(),
              [](const detail::RawBin& a, const detail::RawBin& b) { return a.lower < b.lower; });
    if (bins.size() != grid.bin_count()) {
      throw GridMismatchError("cell " + detail::cell_name(key.first, key.second) + " has " +
                              std::to_string(bins.size()) + " bins, expected " +
                              std::to_string(grid.bin_count()));
    }
    std::vector<double> probs(grid.bin_count());
    for (std::size_t m = 0; m < bins.size(); ++m) {
      if (bins[m].lower != grid.edges()[m] || bins[m].upper != grid.edges()[m + 1]) {
        throw GridMismatchError("cell " + detail::cell_name(key.first, key.second) +
                                " is not on the shared panel grid (line " +
                                std::to_string(bins[m].line) + ")");
      }
      probs[m] = bins[m].probability;
    }
    const std::size_t t = static_cast<std::size_t>(
        std::lower_bound(dates.begin(), dates.end(), key.first) - dates.begin());
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), key.second) - ids.begin());
    cells[t * k_count + k] = HistogramForecast(grid, std::move(probs));
  }

  std::vector<std::optional<double>> panel_realizations(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto it = realizations.find(dates[t]);
    if (it != realizations.end()) panel_realizations[t] = it->second;
  }
  return ForecastPanel(grid, std::move(ids), std::move(dates), std::move(cells),
                       std::move(panel_realizations));
}

inline ForecastPanel read_panel_files(const std::filesystem::path& panel_path,
                                      const std::filesystem::path& realizations_path) {
  return read_panel(read_survey_file(panel_path), read_realizations_file(realizations_path));
}

}  // namespace mixpool
