// Generates the deterministic synthetic survey fixture committed under
// data/synthetic/: a histogram survey of 24 forecasters over 83 quarterly
// rounds (1999-Q1 .. 2019-Q3) with time-varying bin layouts, participation
// gaps, late entries and early exits, plus matching realization and nominal
// rate series. Six forecasters have disqualifying absence runs, so the
// ingest pipeline keeps 18 (19 with the uniform benchmark added).
//
// Usage: make_synthetic_data [OUT_DIR]   (default: data/synthetic)

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mixpool/forecast.hpp"
#include "mixpool/ingest.hpp"
#include "mixpool/rng.hpp"

namespace fs = std::filesystem;
using mixpool::SurveyDate;

namespace {

constexpr std::uint64_t kSeed = 414243;
constexpr std::size_t kForecasters = 24;  // F01..F24; F19..F24 get dropped
constexpr std::size_t kRounds = 83;       // 1999-Q1 .. 2019-Q3
constexpr std::size_t kMaxRun = 4;        // longest allowed missing run

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Three bin layouts, all nesting inside the standard 11-bin target grid.
const std::vector<std::vector<double>> kLayouts = {
    // The target grid itself (11 bins).
    {-std::numeric_limits<double>::infinity(), -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5,
     4.0, std::numeric_limits<double>::infinity()},
    // Quarter-point splits of (0, 0.5], (0.5, 1], (1, 1.5] (14 bins).
    {-std::numeric_limits<double>::infinity(), -0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0,
     2.5, 3.0, 3.5, 4.0, std::numeric_limits<double>::infinity()},
    // Split of (1.5, 2] (12 bins).
    {-std::numeric_limits<double>::infinity(), -0.5, 0.0, 0.5, 1.0, 1.5, 1.75, 2.0, 2.5, 3.0,
     3.5, 4.0, std::numeric_limits<double>::infinity()},
};

std::string forecaster_id(std::size_t k) {  // 1-based
  char buffer[8];
  std::snprintf(buffer, sizeof buffer, "F%02zu", k);
  return buffer;
}

SurveyDate round_date(std::size_t t) {
  return {static_cast<int>(1999 + t / 4), static_cast<int>(t % 4 + 1)};
}

int main_impl(const fs::path& out_dir) {
  fs::create_directories(out_dir);

  // Latent inflation path and realizations.
  mixpool::rng::Stream state(kSeed, 0, mixpool::rng::StreamRole::state_shock);
  mixpool::rng::Stream outcome(kSeed, 0, mixpool::rng::StreamRole::outcome_shock);
  mixpool::rng::Stream extras(kSeed, 0, mixpool::rng::StreamRole::generic);
  std::vector<double> pi(kRounds), y(kRounds), rate(kRounds);
  double level = 1.8;
  for (std::size_t t = 0; t < kRounds; ++t) {
    level = 1.8 + 0.85 * (level - 1.8) + 0.28 * state.next_normal();
    pi[t] = level;
    y[t] = pi[t] + 0.32 * outcome.next_normal();
    rate[t] = 2.0 + 0.6 * pi[t] + 0.15 * extras.next_normal();
  }

  // Participation: start from all-present, then carve gaps.
  std::vector<std::vector<bool>> present(kForecasters + 1,
                                         std::vector<bool>(kRounds, true));
  auto longest_run = [&](std::size_t k) {
    std::size_t longest = 0, run = 0;
    for (std::size_t t = 0; t < kRounds; ++t) {
      run = present[k][t] ? 0 : run + 1;
      longest = std::max(longest, run);
    }
    return longest;
  };
  // Kept forecasters F01..F18: scattered short gaps, never exceeding kMaxRun.
  for (std::size_t k = 1; k <= 18; ++k) {
    std::vector<std::size_t> gaps = {(7 * k + 13) % kRounds, (29 * k + 41) % kRounds,
                                     (53 * k + 5) % kRounds};
    if (k % 3 == 0) {
      const std::size_t d = (11 * k + 3) % (kRounds - 2);
      gaps.push_back(d);
      gaps.push_back(d + 1);
    }
    for (std::size_t t : gaps) {
      present[k][t] = false;
      if (longest_run(k) > kMaxRun) present[k][t] = true;  // would break the limit; skip
    }
  }
  // Dropped forecasters: late entry, early exit, or a long mid-sample hole.
  for (std::size_t k : {19, 20}) {
    for (std::size_t t = 0; t < 12; ++t) present[k][t] = false;  // join at round 13
  }
  for (std::size_t k : {21, 22}) {
    for (std::size_t t = 71; t < kRounds; ++t) present[k][t] = false;  // quit after round 71
  }
  for (std::size_t k : {23, 24}) {
    for (std::size_t t = 40; t < 48; ++t) present[k][t] = false;  // 8-round hole
  }
  for (std::size_t k = 1; k <= kForecasters; ++k) {
    const bool should_drop = k > 18;
    if ((longest_run(k) > kMaxRun) != should_drop) {
      std::cerr << "participation pattern broken for " << forecaster_id(k) << '\n';
      return 1;
    }
  }

  // Forecaster characteristics. F03 and F07 are overconfident and biased so
  // the survey contains zero-probability realized bins needing repair.
  std::vector<double> bias(kForecasters + 1), sigma(kForecasters + 1);
  for (std::size_t k = 1; k <= kForecasters; ++k) {
    bias[k] = (static_cast<double>((k * 37) % 13) - 6.0) * 0.03;
    sigma[k] = 0.5 + static_cast<double>((k * 17) % 9) * 0.04;
  }
  bias[3] = 0.5;
  sigma[3] = 0.35;
  bias[7] = -0.5;
  sigma[7] = 0.35;

  std::ofstream survey(out_dir / "survey.csv", std::ios::binary);
  survey << mixpool::survey_header() << '\n';
  std::size_t zero_realized_cells = 0;
  for (std::size_t k = 1; k <= kForecasters; ++k) {
    mixpool::rng::Stream noise(kSeed, k, mixpool::rng::StreamRole::signal_noise);
    for (std::size_t t = 0; t < kRounds; ++t) {
      const double mean = pi[t] + bias[k] + 0.25 * noise.next_normal();
      if (!present[k][t]) continue;
      const std::vector<double>& edges = kLayouts[(k * 31 + t * 7) % kLayouts.size()];
      double sum = 0.0;
      bool realized_zero = false;
      for (std::size_t m = 0; m + 1 < edges.size(); ++m) {
        const double p = normal_cdf((edges[m + 1] - mean) / sigma[k]) -
                         normal_cdf((edges[m] - mean) / sigma[k]);
        const double rounded = std::round(p * 1000.0) / 1000.0;
        const bool realized = y[t] > edges[m] && y[t] <= edges[m + 1];
        if (realized && rounded == 0.0) realized_zero = true;
        if (rounded == 0.0) continue;  // sparse output: zero bins are omitted
        sum += rounded;
        char lo[32], hi[32], pr[16];
        if (std::isinf(edges[m])) {
          std::snprintf(lo, sizeof lo, "-inf");
        } else {
          std::snprintf(lo, sizeof lo, "%g", edges[m]);
        }
        if (std::isinf(edges[m + 1])) {
          std::snprintf(hi, sizeof hi, "inf");
        } else {
          std::snprintf(hi, sizeof hi, "%g", edges[m + 1]);
        }
        std::snprintf(pr, sizeof pr, "%.3f", rounded);
        survey << round_date(t).to_string() << ',' << forecaster_id(k) << ',' << lo << ','
               << hi << ',' << pr << '\n';
      }
      if (sum < 0.99 || sum > 1.01) {
        std::cerr << "rounded sum " << sum << " out of tolerance for " << forecaster_id(k)
                  << " at " << round_date(t).to_string() << '\n';
        return 1;
      }
      if (realized_zero && k <= 18) ++zero_realized_cells;
    }
  }
  survey.close();

  std::ofstream realizations(out_dir / "realizations.csv", std::ios::binary);
  realizations << mixpool::realization_header() << '\n';
  for (std::size_t t = 0; t < kRounds; ++t) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6f", y[t]);
    realizations << round_date(t).to_string() << ',' << buffer << '\n';
  }
  realizations.close();

  std::ofstream rates(out_dir / "rates.csv", std::ios::binary);
  rates << mixpool::realization_header() << '\n';
  for (std::size_t t = 0; t < kRounds; ++t) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6f", rate[t]);
    rates << round_date(t).to_string() << ',' << buffer << '\n';
  }
  rates.close();

  std::cout << "wrote survey with " << kForecasters << " forecasters x " << kRounds
            << " rounds (" << zero_realized_cells
            << " kept cells with a zero-probability realized bin) to " << out_dir.string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out_dir = argc > 1 ? argv[1] : "data/synthetic";
  try {
    return main_impl(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
