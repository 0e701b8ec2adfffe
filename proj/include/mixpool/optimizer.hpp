#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixpool/errors.hpp"
#include "mixpool/forecast.hpp"
#include "mixpool/penalties.hpp"

// Simplex-constrained estimation of mixture weights by projected gradient
// descent with Armijo backtracking. The objective is the summed negative log
// predictive density of the pooled forecast plus lambda times a divergence
// penalty:
//
//   F(w) = -sum_t log( sum_k w_k f_{t,k} ) + lambda * D(w),   w on the simplex.
//
// Identical inputs and configuration produce bitwise-identical results.

namespace mixpool {

// ---------------------------------------------------------------------------
// Density matrix
// ---------------------------------------------------------------------------

// T x K matrix of predictive density values f_{t,k}: forecaster k's density
// (or realized-bin probability) at the round-t realization.
class DensityMatrix {
 public:
  DensityMatrix(std::size_t t_count, std::size_t k_count, std::vector<double> values)
      : t_count_(t_count), k_count_(k_count), values_(std::move(values)) {
    if (t_count_ == 0 || k_count_ == 0) {
      throw std::invalid_argument("density matrix must have T >= 1 and K >= 1");
    }
    if (values_.size() != t_count_ * k_count_) {
      throw std::invalid_argument("density matrix storage size must be T*K");
    }
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("density values must be finite and >= 0");
      }
    }
  }

  std::size_t t_count() const { return t_count_; }
  std::size_t k_count() const { return k_count_; }
  double at(std::size_t t, std::size_t k) const { return values_[t * k_count_ + k]; }
  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * k_count_, k_count_};
  }

  // Column-subset copy, preserving row order.
  DensityMatrix columns(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw std::invalid_argument("column subset must be non-empty");
    std::vector<double> values(t_count_ * indices.size());
    for (std::size_t t = 0; t < t_count_; ++t) {
      for (std::size_t j = 0; j < indices.size(); ++j) {
        if (indices[j] >= k_count_) throw std::invalid_argument("column index out of range");
        values[t * indices.size() + j] = at(t, indices[j]);
      }
    }
    return DensityMatrix(t_count_, indices.size(), std::move(values));
  }

 private:
  std::size_t t_count_;
  std::size_t k_count_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Simplex projection
// ---------------------------------------------------------------------------

// Euclidean projection onto the probability simplex (sort-based algorithm).
inline std::vector<double> simplex_project(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("cannot project an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw std::domain_error("simplex projection input must be finite");
  }
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (1.0 - cumsum) / static_cast<double>(j + 1);
    if (u[j] + candidate > 0.0) {
      rho = j + 1;
      tau = candidate;
    }
  }
  (void)rho;
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] + tau, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Solver configuration and result
// ---------------------------------------------------------------------------

struct SolverConfig {
  std::size_t max_iterations = 10000;
  // Stop when |F_prev - F_new| <= objective_tolerance * max(1, |F_prev|).
  double objective_tolerance = 1e-10;
  // Lower bound applied to iterates before evaluating barrier penalties.
  double weight_floor = 1e-12;
  // Armijo backtracking shrink factor.
  double line_search_shrink = 0.5;
  std::optional<std::vector<double>> initial_weights;
  bool record_trace = false;

  void validate(std::size_t k_count) const {
    if (max_iterations == 0) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(objective_tolerance > 0.0)) {
      throw std::invalid_argument("objective_tolerance must be > 0");
    }
    if (!(weight_floor > 0.0) || !(weight_floor < 1.0 / static_cast<double>(k_count))) {
      throw std::invalid_argument("weight_floor must lie in (0, 1/K)");
    }
    if (!(line_search_shrink > 0.0) || !(line_search_shrink < 1.0)) {
      throw std::invalid_argument("line_search_shrink must lie in (0, 1)");
    }
    if (initial_weights && initial_weights->size() != k_count) {
      throw std::invalid_argument("initial_weights length must equal K");
    }
  }
};

struct EstimateResult {
  MixtureWeights weights;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Objective after every accepted step (nonincreasing); filled when
  // SolverConfig::record_trace is set.
  std::vector<double> objective_trace;
};

// A penalty supplied as callables; lets callers solve with divergences beyond
// PenaltySpec (the library itself routes PenaltySpec through this).
struct PenaltyCallbacks {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  // Barrier penalties need iterates kept interior via the weight floor.
  bool barrier = false;
};

namespace detail {

inline void check_feasible_rows(const DensityMatrix& densities) {
  for (std::size_t t = 0; t < densities.t_count(); ++t) {
    bool any_positive = false;
    for (std::size_t k = 0; k < densities.k_count(); ++k) {
      if (densities.at(t, k) > 0.0) {
        any_positive = true;
        break;
      }
    }
    if (!any_positive) {
      throw InfeasibleObjectiveError("density row " + std::to_string(t) +
                                     " is all zeros; no weight vector has finite loss");
    }
  }
}

inline double negative_log_pool(const DensityMatrix& densities, std::span<const double> w) {
  double acc = 0.0;
  for (std::size_t t = 0; t < densities.t_count(); ++t) {
    const auto row = densities.row(t);
    double dot = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) dot += w[k] * row[k];
    if (!(dot > 0.0)) return std::numeric_limits<double>::infinity();
    acc -= std::log(dot);
  }
  return acc;
}

// Clamp weights up to the floor; renormalize only if something was clamped,
// then clamp again so every component is >= floor after the renormalization.
inline void floor_and_renormalize(std::vector<double>& w, double floor) {
  bool clamped = false;
  for (double& x : w) {
    if (x < floor) {
      x = floor;
      clamped = true;
    }
  }
  if (!clamped) return;
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= sum;
  for (double& x : w) x = std::max(x, floor);
}

}  // namespace detail

// Objective value F(w) for a weight vector on the simplex.
inline double pool_objective(const DensityMatrix& densities, std::span<const double> weights,
                             const PenaltySpec& penalty) {
  if (weights.size() != densities.k_count()) {
    throw std::invalid_argument("weight count must match density matrix columns");
  }
  double value = detail::negative_log_pool(densities, weights);
  if (penalty.lambda > 0.0) value += penalty.lambda * penalty_value(weights, penalty);
  return value;
}

inline EstimateResult estimate_weights_with_penalty(const DensityMatrix& densities,
                                                    const PenaltyCallbacks& penalty,
                                                    double lambda, const SolverConfig& config,
                                                    std::string method_tag,
                                                    PenaltySpec recorded_spec) {
  const std::size_t k_count = densities.k_count();
  config.validate(k_count);
  detail::check_feasible_rows(densities);
  const bool penalized = lambda > 0.0;
  const bool barrier = penalized && penalty.barrier;

  const auto objective = [&](std::span<const double> w) {
    double value = detail::negative_log_pool(densities, w);
    if (penalized && std::isfinite(value)) {
      const double p = penalty.value(w);
      value = std::isfinite(p) ? value + lambda * p
                               : std::numeric_limits<double>::infinity();
    }
    return value;
  };

  const auto gradient = [&](std::span<const double> w) {
    std::vector<double> g(k_count, 0.0);
    for (std::size_t t = 0; t < densities.t_count(); ++t) {
      const auto row = densities.row(t);
      double dot = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) dot += w[k] * row[k];
      for (std::size_t k = 0; k < k_count; ++k) g[k] -= row[k] / dot;
    }
    if (penalized) {
      const auto pg = penalty.gradient(w);
      for (std::size_t k = 0; k < k_count; ++k) g[k] += lambda * pg[k];
    }
    return g;
  };

  std::vector<double> w;
  if (config.initial_weights) {
    w = simplex_project(*config.initial_weights);
  } else {
    w.assign(k_count, 1.0 / static_cast<double>(k_count));
  }
  if (barrier) detail::floor_and_renormalize(w, config.weight_floor);

  double f_current = objective(w);
  if (!std::isfinite(f_current)) {
    throw InfeasibleObjectiveError("objective is not finite at the initial weights");
  }

  EstimateResult result;
  if (config.record_trace) result.objective_trace.push_back(f_current);

  constexpr double kArmijoSlope = 1e-4;
  constexpr double kMinStep = 1e-20;
  double step = 1.0;
  bool converged = false;
  std::size_t iteration = 0;

  for (; iteration < config.max_iterations; ++iteration) {
    const auto g = gradient(w);
    std::vector<double> candidate;
    double f_candidate = std::numeric_limits<double>::infinity();
    bool accepted = false;
    bool stationary = false;

    double s = step;
    while (s >= kMinStep) {
      std::vector<double> moved(k_count);
      for (std::size_t k = 0; k < k_count; ++k) moved[k] = w[k] - s * g[k];
      candidate = simplex_project(moved);
      if (barrier) detail::floor_and_renormalize(candidate, config.weight_floor);

      double decrease = 0.0;  // <g, w - candidate>, positive along descent
      double movement = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = w[k] - candidate[k];
        decrease += g[k] * d;
        movement += d * d;
      }
      if (movement == 0.0 || decrease <= 0.0) {
        // The projected point does not move (or does not descend): with a
        // convex objective this means w is stationary at this step size;
        // shrinking further cannot help once s is already tiny.
        if (movement == 0.0) {
          stationary = true;
          break;
        }
        s *= config.line_search_shrink;
        continue;
      }
      f_candidate = objective(candidate);
      if (f_candidate <= f_current - kArmijoSlope * decrease) {
        accepted = true;
        break;
      }
      s *= config.line_search_shrink;
    }

    if (stationary || !accepted) {
      converged = true;
      break;
    }

    const double f_previous = f_current;
    w = std::move(candidate);
    f_current = f_candidate;
    step = std::min(s * 2.0, 1e12);  // warm-start the next line search just above what worked
    if (config.record_trace) result.objective_trace.push_back(f_current);

    if (std::fabs(f_previous - f_current) <=
        config.objective_tolerance * std::max(1.0, std::fabs(f_previous))) {
      ++iteration;
      converged = true;
      break;
    }
  }

  result.weights = MixtureWeights::make(std::move(w), std::move(method_tag), recorded_spec);
  result.objective = f_current;
  result.iterations = iteration;
  result.converged = converged;
  return result;
}

// Solve for mixture weights under a PenaltySpec. The method tag is "simplex"
// for the unpenalized estimator and the penalty kind's name otherwise.
inline EstimateResult estimate_weights(const DensityMatrix& densities, const PenaltySpec& spec,
                                       const SolverConfig& config = SolverConfig{}) {
  spec.validate();
  PenaltyCallbacks callbacks;
  callbacks.value = [spec](std::span<const double> w) { return penalty_value(w, spec); };
  callbacks.gradient = [spec](std::span<const double> w) { return penalty_gradient(w, spec); };
  callbacks.barrier = spec.is_barrier();
  const std::string tag =
      spec.kind == PenaltyKind::none ? "simplex" : to_string(spec.kind);
  return estimate_weights_with_penalty(densities, callbacks, spec.lambda, config, tag, spec);
}

// ---------------------------------------------------------------------------
// Partially egalitarian ridge
// ---------------------------------------------------------------------------

struct PegResult {
  MixtureWeights weights;           // full-length weights, zero off the subset
  std::vector<std::size_t> members; // sorted selected indices
  double objective = 0.0;
};

namespace detail {

inline bool next_combination(std::vector<std::size_t>& c, std::size_t k_count) {
  const std::size_t n = c.size();
  std::size_t i = n;
  while (i > 0) {
    --i;
    if (c[i] < k_count - n + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Two-stage select-then-shrink estimator: enumerate every nonempty subset of
// forecasters, solve a ridge-penalized simplex problem restricted to the
// subset (centered on equal weights within it), and keep the subset with the
// lowest penalized objective. Exhaustive enumeration is guarded to K <= 12.
// lambda = 0 reduces to the unpenalized full-set estimator; lambda -> infinity
// reduces to picking the best equally weighted subset average.
inline PegResult partially_egalitarian_ridge(const DensityMatrix& densities, double lambda,
                                             const SolverConfig& config = SolverConfig{}) {
  const std::size_t k_count = densities.k_count();
  if (k_count > 12) {
    throw std::invalid_argument(
        "partially_egalitarian_ridge enumerates all subsets and is guarded to K <= 12 (got " +
        std::to_string(k_count) + ")");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  detail::check_feasible_rows(densities);

  std::optional<PegResult> best;
  for (std::size_t size = 1; size <= k_count; ++size) {
    std::vector<std::size_t> members(size);
    for (std::size_t j = 0; j < size; ++j) members[j] = j;
    do {
      const DensityMatrix restricted = densities.columns(members);
      EstimateResult sub;
      try {
        sub = estimate_weights(restricted, PenaltySpec::ridge(lambda), config);
      } catch (const InfeasibleObjectiveError&) {
        continue;  // some row has zero density on this subset; skip it
      }
      if (!best || sub.objective < best->objective) {
        std::vector<double> full(k_count, 0.0);
        for (std::size_t j = 0; j < size; ++j) full[members[j]] = sub.weights.weights[j];
        PegResult candidate;
        candidate.weights =
            MixtureWeights::make(std::move(full), "peg-ridge", PenaltySpec::ridge(lambda));
        candidate.members = members;
        candidate.objective = sub.objective;
        best = std::move(candidate);
      }
    } while (detail::next_combination(members, k_count));
  }
  if (!best) {
    throw InfeasibleObjectiveError("no feasible subset found");
  }
  return *std::move(best);
}

}  // namespace mixpool
