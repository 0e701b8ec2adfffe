#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mixpool/optimizer.hpp"
#include "mixpool/penalties.hpp"
#include "mixpool/rng.hpp"
#include "mixpool/subset.hpp"

// Seeded Monte Carlo harness: a latent-state data-generating process with K
// noisy forecasters, plus an experiment runner that scores combination
// methods out of sample and averages over replications. Results are bitwise
// reproducible for a given seed regardless of worker count.

namespace mixpool {

// ---------------------------------------------------------------------------
// Data-generating process
// ---------------------------------------------------------------------------

// Latent AR(1) state x_t = phi_x * x_{t-1} + sigma_x * v_t started from its
// stationary law. Each round t the outcome is y_t = x_t + sigma_y * e_t, and
// forecaster k observes the signal z_{k,t} = x_t + sigma_z[k] * eta_{k,t},
// issuing the predictive density N(z_{k,t}, sigma_y^2). Rounds 1..T are the
// estimation sample; round T+1 is scored out of sample.
struct DgpConfig {
  std::size_t k_count = 20;
  std::size_t t_count = 20;
  double phi_x = 0.9;
  double sigma_x = 1.0;
  double sigma_y = 0.5;
  std::vector<double> sigma_z;  // length k_count

  void validate() const {
    if (k_count == 0 || t_count == 0) throw std::invalid_argument("K and T must be >= 1");
    if (!(std::abs(phi_x) < 1.0)) throw std::invalid_argument("|phi_x| must be < 1");
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
      throw std::invalid_argument("sigma_x and sigma_y must be positive");
    }
    if (sigma_z.size() != k_count) {
      throw std::invalid_argument("sigma_z must have one entry per forecaster");
    }
    for (double s : sigma_z) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("signal noise scales must be finite and >= 0");
      }
    }
  }
};

// Preset 1: all forecasters share signal noise 1. Preset 2: the first half
// keep noise 1, the second half get noise 5 (requires even K).
inline DgpConfig dgp_preset(int which, std::size_t k_count = 20, std::size_t t_count = 20) {
  DgpConfig config;
  config.k_count = k_count;
  config.t_count = t_count;
  if (which == 1) {
    config.sigma_z.assign(k_count, 1.0);
  } else if (which == 2) {
    if (k_count % 2 != 0) {
      throw std::invalid_argument("preset 2 needs an even forecaster count");
    }
    config.sigma_z.assign(k_count, 5.0);
    std::fill(config.sigma_z.begin(), config.sigma_z.begin() + k_count / 2, 1.0);
  } else {
    throw std::invalid_argument("unknown DGP preset " + std::to_string(which));
  }
  config.validate();
  return config;
}

// One simulated replication. Index i of `realizations` / `signal_means` holds
// round i+1 (rounds run 1..T+1); `latent[i]` is the state x_i (0..T+1).
struct SimulatedPath {
  std::vector<double> latent;
  std::vector<double> realizations;
  std::vector<std::vector<double>> signal_means;
};

inline SimulatedPath simulate_path(const DgpConfig& config, std::uint64_t seed,
                                   std::uint64_t replication) {
  config.validate();
  const std::size_t rounds = config.t_count + 1;
  SimulatedPath path;
  path.latent.resize(rounds + 1);
  path.realizations.resize(rounds);
  path.signal_means.assign(rounds, std::vector<double>(config.k_count));

  rng::Stream state(seed, replication, rng::StreamRole::state_shock);
  const double stationary_sd = config.sigma_x / std::sqrt(1.0 - config.phi_x * config.phi_x);
  path.latent[0] = stationary_sd * state.next_normal();
  for (std::size_t i = 1; i <= rounds; ++i) {
    path.latent[i] = config.phi_x * path.latent[i - 1] + config.sigma_x * state.next_normal();
  }

  rng::Stream outcome(seed, replication, rng::StreamRole::outcome_shock);
  for (std::size_t i = 0; i < rounds; ++i) {
    path.realizations[i] = path.latent[i + 1] + config.sigma_y * outcome.next_normal();
  }

  rng::Stream signal(seed, replication, rng::StreamRole::signal_noise);
  for (std::size_t i = 0; i < rounds; ++i) {
    for (std::size_t k = 0; k < config.k_count; ++k) {
      path.signal_means[i][k] = path.latent[i + 1] + config.sigma_z[k] * signal.next_normal();
    }
  }
  return path;
}

namespace detail {

inline double normal_pdf(double y, double mean, double variance) {
  const double d = y - mean;
  return std::exp(-0.5 * d * d / variance) /
         std::sqrt(2.0 * std::numbers::pi_v<double> * variance);
}

}  // namespace detail

// Realized density values for the estimation rounds 1..T: entry (t, k) is
// forecaster k's predictive density at the round-(t+1) realization.
inline DensityMatrix in_sample_densities(const SimulatedPath& path, const DgpConfig& config) {
  const std::size_t t_count = config.t_count;
  const double variance = config.sigma_y * config.sigma_y;
  std::vector<double> values(t_count * config.k_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t k = 0; k < config.k_count; ++k) {
      values[t * config.k_count + k] =
          detail::normal_pdf(path.realizations[t], path.signal_means[t][k], variance);
    }
  }
  return DensityMatrix(t_count, config.k_count, std::move(values));
}

// Predictive density values of every forecaster at the held-out round T+1.
inline std::vector<double> out_of_sample_densities(const SimulatedPath& path,
                                                   const DgpConfig& config) {
  const double variance = config.sigma_y * config.sigma_y;
  const double y = path.realizations[config.t_count];
  std::vector<double> values(config.k_count);
  for (std::size_t k = 0; k < config.k_count; ++k) {
    values[k] = detail::normal_pdf(y, path.signal_means[config.t_count][k], variance);
  }
  return values;
}

// ---------------------------------------------------------------------------
// Penalty grids
// ---------------------------------------------------------------------------

inline std::vector<double> equispaced(double lo, double hi, std::size_t count) {
  if (count < 2) throw std::invalid_argument("grid needs >= 2 points");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

// Concatenate two penalty grids, returning the sorted union without exact
// duplicates.
inline std::vector<double> join_grids(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  std::vector<double> joined;
  joined.reserve(a.size() + b.size());
  for (double v : a) joined.push_back(v);
  for (double v : b) joined.push_back(v);
  std::sort(joined.begin(), joined.end());
  joined.erase(std::unique(joined.begin(), joined.end()), joined.end());
  return joined;
}

// Default search grids: a fine range near zero followed by a coarse range of
// large penalties (20 points each).
inline std::vector<double> default_ridge_grid() {
  return join_grids(equispaced(1e-15, 10.0, 10), equispaced(15.0, 10000.0, 10));
}

inline std::vector<double> default_entropy_grid() {
  return join_grids(equispaced(1e-15, 0.2, 10), equispaced(0.3, 20.0, 10));
}

// ---------------------------------------------------------------------------
// Experiment harness
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  DgpConfig dgp;
  std::uint64_t seed = 0;
  std::size_t replications = 10000;
  std::vector<double> ridge_grid;    // empty → skip ridge
  std::vector<double> entropy_grid;  // empty → skip entropy
  bool run_simple_average = true;
  bool run_simplex = true;
  bool run_subsets = true;  // equally weighted best-subset rows
  std::vector<std::size_t> best_n_sizes;   // defaults to {1..10, 15, 20} ∩ [1, K]
  std::vector<std::size_t> best_le_sizes;  // defaults to {2, 3, 5, 10, 15, 20} ∩ [1, K]
  bool run_comparisons = true;  // per-forecaster order statistics
  unsigned workers = 1;
  SolverConfig solver;
};

struct ExperimentRow {
  std::string method;
  std::optional<std::size_t> n;
  std::optional<double> lambda;
  double mean_log_predictive = 0.0;
  std::optional<double> mean_selected;
};

struct PenaltyCurvePoint {
  PenaltyKind kind = PenaltyKind::ridge;
  double lambda = 0.0;
  double mean_log_predictive = 0.0;
  double mean_selected = 0.0;
};

struct ExperimentResult {
  std::size_t replications = 0;
  std::vector<ExperimentRow> table;
  std::vector<PenaltyCurvePoint> curve;
};

namespace detail {

// Fixed-shape pairwise summation: the reduction tree depends only on the
// element count, so totals are bitwise independent of how work was split
// across workers.
inline double pairwise_sum(const double* values, std::size_t stride, std::size_t count) {
  if (count <= 16) {
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) total += values[i * stride];
    return total;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, stride, half) +
         pairwise_sum(values + half * stride, stride, count - half);
}

// Linear-interpolation quantile of an ascending sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Cell layout of the per-replication result matrix.
struct ExperimentLayout {
  std::optional<std::size_t> simple;
  std::optional<std::size_t> simplex;
  std::size_t ridge_base = 0;
  std::size_t entropy_base = 0;
  std::size_t subset_base = 0;  // K cells, one per subset size
  std::size_t le_base = 0;
  std::size_t comparison_base = 0;
  std::size_t cell_count = 0;

  std::vector<double> ridge_grid;
  std::vector<double> entropy_grid;
  std::vector<std::size_t> best_le_sizes;
  bool subsets = false;
  bool comparisons = false;
  std::size_t k_count = 0;

  static ExperimentLayout make(const ExperimentConfig& config) {
    ExperimentLayout layout;
    layout.ridge_grid = config.ridge_grid;
    layout.entropy_grid = config.entropy_grid;
    layout.best_le_sizes = config.best_le_sizes;
    layout.subsets = config.run_subsets;
    layout.comparisons = config.run_comparisons;
    layout.k_count = config.dgp.k_count;
    std::size_t next = 0;
    if (config.run_simple_average) layout.simple = next++;
    if (config.run_simplex) layout.simplex = next++;
    layout.ridge_base = next;
    next += layout.ridge_grid.size();
    layout.entropy_base = next;
    next += layout.entropy_grid.size();
    layout.subset_base = next;
    if (layout.subsets) next += layout.k_count;
    layout.le_base = next;
    if (layout.subsets) next += layout.best_le_sizes.size();
    layout.comparison_base = next;
    if (layout.comparisons) next += 5;
    layout.cell_count = next;
    return layout;
  }
};

inline double mixture_log_density(std::span<const double> weights,
                                  std::span<const double> densities) {
  double pooled = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) pooled += weights[k] * densities[k];
  return std::log(pooled);
}

inline double equal_subset_log_density(std::span<const std::size_t> members,
                                       std::span<const double> densities) {
  double pooled = 0.0;
  for (std::size_t k : members) pooled += densities[k];
  return std::log(pooled / static_cast<double>(members.size()));
}

inline void run_one_replication(const ExperimentConfig& config, const ExperimentLayout& layout,
                                std::uint64_t replication, double* score_row,
                                double* selected_row) {
  const SimulatedPath path = simulate_path(config.dgp, config.seed, replication);
  const DensityMatrix densities = in_sample_densities(path, config.dgp);
  const std::vector<double> oos = out_of_sample_densities(path, config.dgp);
  const std::size_t k_count = config.dgp.k_count;

  if (layout.simple) {
    const std::vector<double> equal(k_count, 1.0 / static_cast<double>(k_count));
    score_row[*layout.simple] = mixture_log_density(equal, oos);
    selected_row[*layout.simple] = static_cast<double>(k_count);
  }
  if (layout.simplex) {
    const EstimateResult fit = estimate_weights(densities, PenaltySpec::none(), config.solver);
    score_row[*layout.simplex] = mixture_log_density(fit.weights.weights, oos);
    selected_row[*layout.simplex] = static_cast<double>(fit.weights.selected_count);
  }
  for (std::size_t i = 0; i < layout.ridge_grid.size(); ++i) {
    const EstimateResult fit =
        estimate_weights(densities, PenaltySpec::ridge(layout.ridge_grid[i]), config.solver);
    score_row[layout.ridge_base + i] = mixture_log_density(fit.weights.weights, oos);
    selected_row[layout.ridge_base + i] = static_cast<double>(fit.weights.selected_count);
  }
  for (std::size_t i = 0; i < layout.entropy_grid.size(); ++i) {
    const EstimateResult fit =
        estimate_weights(densities, PenaltySpec::entropy(layout.entropy_grid[i]), config.solver);
    score_row[layout.entropy_base + i] = mixture_log_density(fit.weights.weights, oos);
    selected_row[layout.entropy_base + i] = static_cast<double>(fit.weights.selected_count);
  }
  if (layout.subsets) {
    const std::vector<SubsetResult> by_size = best_per_size(densities);
    for (std::size_t n = 1; n <= k_count; ++n) {
      const SubsetResult& best = by_size[n - 1];
      score_row[layout.subset_base + n - 1] = equal_subset_log_density(best.member_indices, oos);
      selected_row[layout.subset_base + n - 1] = static_cast<double>(n);
    }
    for (std::size_t i = 0; i < layout.best_le_sizes.size(); ++i) {
      const std::size_t cap = std::min(layout.best_le_sizes[i], k_count);
      std::size_t winner = 0;
      for (std::size_t n = 1; n < cap; ++n) {
        if (subset_better(by_size[n].in_sample_objective, by_size[n].member_indices,
                          by_size[winner].in_sample_objective,
                          by_size[winner].member_indices)) {
          winner = n;
        }
      }
      score_row[layout.le_base + i] =
          equal_subset_log_density(by_size[winner].member_indices, oos);
      selected_row[layout.le_base + i] = static_cast<double>(winner + 1);
    }
  }
  if (layout.comparisons) {
    std::vector<double> individual(k_count);
    for (std::size_t k = 0; k < k_count; ++k) individual[k] = std::log(oos[k]);
    std::sort(individual.begin(), individual.end());
    score_row[layout.comparison_base + 0] = individual.back();
    score_row[layout.comparison_base + 1] = sorted_quantile(individual, 0.95);
    score_row[layout.comparison_base + 2] = sorted_quantile(individual, 0.50);
    score_row[layout.comparison_base + 3] = sorted_quantile(individual, 0.05);
    score_row[layout.comparison_base + 4] = individual.front();
    for (std::size_t j = 0; j < 5; ++j) selected_row[layout.comparison_base + j] = 0.0;
  }
}

}  // namespace detail

inline void normalize_experiment_config(ExperimentConfig& config) {
  config.dgp.validate();
  if (config.replications == 0) throw std::invalid_argument("need >= 1 replication");
  if (config.workers == 0) throw std::invalid_argument("need >= 1 worker");
  for (double l : config.ridge_grid) PenaltySpec::ridge(l).validate();
  for (double l : config.entropy_grid) PenaltySpec::entropy(l).validate();
  const std::size_t k_count = config.dgp.k_count;
  if (config.run_subsets && config.best_n_sizes.empty()) {
    for (std::size_t n = 1; n <= std::min<std::size_t>(10, k_count); ++n) {
      config.best_n_sizes.push_back(n);
    }
    if (k_count >= 15) config.best_n_sizes.push_back(15);
    if (k_count >= 20) config.best_n_sizes.push_back(20);
  }
  if (config.run_subsets && config.best_le_sizes.empty()) {
    for (std::size_t n : {2, 3, 5, 10, 15, 20}) {
      if (n <= k_count) config.best_le_sizes.push_back(n);
    }
  }
  for (std::size_t n : config.best_n_sizes) {
    if (n == 0 || n > k_count) throw std::invalid_argument("subset size outside 1..K");
  }
  for (std::size_t n : config.best_le_sizes) {
    if (n == 0 || n > k_count) throw std::invalid_argument("subset size cap outside 1..K");
  }
}

// Runs the full experiment: simulates `replications` independent paths,
// fits every requested combination method per path, scores it on the
// held-out round, and reports per-method means. Output is bitwise identical
// for a given seed regardless of `workers`.
inline ExperimentResult run_experiment(ExperimentConfig config) {
  normalize_experiment_config(config);
  const detail::ExperimentLayout layout = detail::ExperimentLayout::make(config);
  const std::size_t cells = layout.cell_count;
  const std::size_t reps = config.replications;

  std::vector<double> scores(reps * cells, 0.0);
  std::vector<double> selected(reps * cells, 0.0);

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      detail::run_one_replication(config, layout, r, scores.data() + r * cells,
                                  selected.data() + r * cells);
    }
  };
  const std::size_t workers = std::min<std::size_t>(config.workers, reps);
  if (workers <= 1) {
    run_range(0, reps);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = reps * w / workers;
      const std::size_t hi = reps * (w + 1) / workers;
      pool.emplace_back(run_range, lo, hi);
    }
    for (std::thread& t : pool) t.join();
  }

  const double denom = static_cast<double>(reps);
  auto mean_score = [&](std::size_t cell) {
    return detail::pairwise_sum(scores.data() + cell, cells, reps) / denom;
  };
  auto mean_selected = [&](std::size_t cell) {
    return detail::pairwise_sum(selected.data() + cell, cells, reps) / denom;
  };

  ExperimentResult result;
  result.replications = reps;
  if (layout.simple) {
    result.table.push_back({"simple-average", std::nullopt, std::nullopt,
                            mean_score(*layout.simple), mean_selected(*layout.simple)});
  }
  if (layout.simplex) {
    result.table.push_back({"simplex", std::nullopt, std::nullopt, mean_score(*layout.simplex),
                            mean_selected(*layout.simplex)});
  }
  auto add_penalty_rows = [&](PenaltyKind kind, const std::vector<double>& grid,
                              std::size_t base, const char* label) {
    if (grid.empty()) return;
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double value = mean_score(base + i);
      result.curve.push_back({kind, grid[i], value, mean_selected(base + i)});
      if (value > mean_score(base + best)) best = i;
    }
    result.table.push_back({label, std::nullopt, grid[best], mean_score(base + best),
                            mean_selected(base + best)});
  };
  add_penalty_rows(PenaltyKind::ridge, layout.ridge_grid, layout.ridge_base, "ridge");
  add_penalty_rows(PenaltyKind::entropy, layout.entropy_grid, layout.entropy_base, "entropy");
  if (layout.subsets) {
    for (std::size_t n : config.best_n_sizes) {
      result.table.push_back({"best-n", n, std::nullopt, mean_score(layout.subset_base + n - 1),
                              static_cast<double>(n)});
    }
    for (std::size_t i = 0; i < layout.best_le_sizes.size(); ++i) {
      result.table.push_back({"best-le-n", layout.best_le_sizes[i], std::nullopt,
                              mean_score(layout.le_base + i), mean_selected(layout.le_base + i)});
    }
  }
  if (layout.comparisons) {
    static constexpr const char* kLabels[5] = {"individual-best", "individual-p95",
                                               "individual-median", "individual-p05",
                                               "individual-worst"};
    for (std::size_t j = 0; j < 5; ++j) {
      result.table.push_back({kLabels[j], std::nullopt, std::nullopt,
                              mean_score(layout.comparison_base + j), std::nullopt});
    }
  }
  return result;
}

}  // namespace mixpool
