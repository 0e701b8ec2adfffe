#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mixpool/forecast.hpp"
#include "mixpool/optimizer.hpp"

// Equally weighted subset averaging: enumerate candidate subsets of the K
// forecasters, score each equally weighted subset mixture in sample, and keep
// the best. Ties are broken toward the lexicographically smallest sorted
// index set, so results are deterministic and independent of enumeration
// chunking and worker count.

namespace mixpool {

struct SubsetResult {
  std::vector<std::size_t> member_indices;  // sorted ascending
  std::size_t size = 0;
  // Mean negative log predictive of the equally weighted subset mixture
  // (a loss; smaller is better; +infinity if some row has zero pooled mass).
  double in_sample_objective = 0.0;
  MixtureWeights weights;
};

// ---------------------------------------------------------------------------
// Combination counting / unranking
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t binomial_checked(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    const std::uint64_t factor = n - r + i;
    if (result > std::numeric_limits<std::uint64_t>::max() / factor) {
      throw std::overflow_error("binomial coefficient overflows 64 bits");
    }
    result = result * factor / i;  // exact: result*factor is divisible by i here
  }
  return result;
}

// Lexicographic rank -> sorted index combination (combinatorial number system).
inline std::vector<std::size_t> combination_unrank(std::size_t k_count, std::size_t n,
                                                   std::uint64_t rank) {
  std::vector<std::size_t> out;
  out.reserve(n);
  std::size_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (true) {
      const std::uint64_t below = binomial_checked(k_count - 1 - v, n - 1 - i);
      if (below > rank) break;
      rank -= below;
      ++v;
    }
    out.push_back(v);
    ++v;
  }
  return out;
}

// Objective of one equally weighted subset, computed from scratch so the
// value is a pure function of the subset (independent of enumeration order).
inline double subset_objective(const DensityMatrix& densities,
                               std::span<const std::size_t> members) {
  const double log_n = std::log(static_cast<double>(members.size()));
  double acc = 0.0;
  for (std::size_t t = 0; t < densities.t_count(); ++t) {
    const auto row = densities.row(t);
    double pooled = 0.0;
    for (std::size_t j : members) pooled += row[j];
    if (!(pooled > 0.0)) return std::numeric_limits<double>::infinity();
    acc -= std::log(pooled);
  }
  return acc / static_cast<double>(densities.t_count()) + log_n;
}

/// Strict ordering: objective first, then lexicographic on sorted members.
inline bool subset_better(double obj_a, std::span<const std::size_t> a, double obj_b,
                          std::span<const std::size_t> b) {
  if (obj_a < obj_b) return true;
  if (obj_b < obj_a) return false;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline SubsetResult make_subset_result(const DensityMatrix& densities,
                                       std::vector<std::size_t> members, double objective,
                                       std::string method_tag) {
  SubsetResult result;
  result.size = members.size();
  std::vector<double> w(densities.k_count(), 0.0);
  for (std::size_t j : members) w[j] = 1.0 / static_cast<double>(members.size());
  result.weights = MixtureWeights::make(std::move(w), std::move(method_tag));
  result.member_indices = std::move(members);
  result.in_sample_objective = objective;
  return result;
}

}  // namespace detail

// Number of candidate subsets of size 1..n_max out of k forecasters.
inline std::uint64_t subset_candidate_count(std::size_t k_count, std::size_t n_max) {
  if (k_count == 0 || n_max == 0 || n_max > k_count) {
    throw std::invalid_argument("need 1 <= n_max <= K");
  }
  std::uint64_t total = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const std::uint64_t c = detail::binomial_checked(k_count, n);
    if (total > std::numeric_limits<std::uint64_t>::max() - c) {
      throw std::overflow_error("candidate count overflows 64 bits");
    }
    total += c;
  }
  return total;
}

// Best equally weighted average over all C(K, n) subsets of exactly n
// forecasters. Enumeration is split into contiguous lexicographic chunks,
// one per worker; each subset's objective is a pure function of the subset,
// and the final reduction uses a strict total order, so the result is
// identical for any worker count.
inline SubsetResult best_n_average(const DensityMatrix& densities, std::size_t n,
                                   unsigned workers = 1) {
  const std::size_t k_count = densities.k_count();
  if (n == 0 || n > k_count) throw std::invalid_argument("need 1 <= n <= K");
  const std::uint64_t count = detail::binomial_checked(k_count, n);

  struct Best {
    double objective = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> members;
  };

  const unsigned worker_count =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(workers, 1u), count));
  std::vector<Best> bests(worker_count);

  const auto scan = [&](unsigned worker_index) {
    const std::uint64_t lo = count * worker_index / worker_count;
    const std::uint64_t hi = count * (worker_index + 1) / worker_count;
    if (lo >= hi) return;
    std::vector<std::size_t> members = detail::combination_unrank(k_count, n, lo);
    Best& best = bests[worker_index];
    for (std::uint64_t r = lo; r < hi; ++r) {
      const double obj = detail::subset_objective(densities, members);
      if (best.members.empty() ||
          detail::subset_better(obj, members, best.objective, best.members)) {
        best.objective = obj;
        best.members = members;
      }
      if (r + 1 < hi) detail::next_combination(members, k_count);
    }
  };

  if (worker_count == 1) {
    scan(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (unsigned i = 0; i < worker_count; ++i) threads.emplace_back(scan, i);
    for (auto& th : threads) th.join();
  }

  Best overall;
  for (const Best& b : bests) {
    if (b.members.empty()) continue;
    if (overall.members.empty() ||
        detail::subset_better(b.objective, b.members, overall.objective, overall.members)) {
      overall = b;
    }
  }
  return detail::make_subset_result(densities, std::move(overall.members), overall.objective,
                                    "best-n");
}

// Best equally weighted average over all subsets of size 1..n_max.
// Ties across sizes also resolve to the lexicographically smallest sorted
// index set (which prefers the smaller subset when one is a prefix).
inline SubsetResult best_le_n_average(const DensityMatrix& densities, std::size_t n_max,
                                      unsigned workers = 1) {
  const std::size_t k_count = densities.k_count();
  if (n_max == 0 || n_max > k_count) throw std::invalid_argument("need 1 <= n_max <= K");
  std::optional<SubsetResult> best;
  for (std::size_t n = 1; n <= n_max; ++n) {
    SubsetResult candidate = best_n_average(densities, n, workers);
    if (!best || detail::subset_better(candidate.in_sample_objective,
                                       candidate.member_indices, best->in_sample_objective,
                                       best->member_indices)) {
      best = std::move(candidate);
    }
  }
  best->weights.method = "best-le-n";
  return *std::move(best);
}

// Best subset for every size n = 1..K in a single sequential sweep.
// Pooled row sums are updated incrementally along the lexicographic
// enumeration (only changed columns are added/removed), which makes the full
// 2^K - 1 sweep cheap; used by the Monte Carlo experiment where every size is
// needed. Deterministic (always single-threaded).
inline std::vector<SubsetResult> best_per_size(const DensityMatrix& densities) {
  const std::size_t k_count = densities.k_count();
  const std::size_t t_count = densities.t_count();
  std::vector<SubsetResult> out;
  out.reserve(k_count);

  std::vector<double> pooled(t_count);
  for (std::size_t n = 1; n <= k_count; ++n) {
    std::vector<std::size_t> members(n);
    for (std::size_t j = 0; j < n; ++j) members[j] = j;
    std::fill(pooled.begin(), pooled.end(), 0.0);
    for (std::size_t j : members) {
      for (std::size_t t = 0; t < t_count; ++t) pooled[t] += densities.at(t, j);
    }
    const double log_n = std::log(static_cast<double>(n));

    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_members;
    while (true) {
      double acc = 0.0;
      for (std::size_t t = 0; t < t_count; ++t) {
        acc -= std::log(std::max(pooled[t], 0.0));  // clamp tiny negative drift
      }
      const double obj = acc / static_cast<double>(t_count) + log_n;
      if (best_members.empty() ||
          detail::subset_better(obj, members, best_obj, best_members)) {
        best_obj = obj;
        best_members = members;
      }

      // Advance to the lexicographic successor, patching only changed columns.
      std::size_t i = n;
      bool advanced = false;
      while (i > 0) {
        --i;
        if (members[i] < k_count - n + i) {
          for (std::size_t j = i; j < n; ++j) {
            for (std::size_t t = 0; t < t_count; ++t) pooled[t] -= densities.at(t, members[j]);
          }
          ++members[i];
          for (std::size_t j = i + 1; j < n; ++j) members[j] = members[j - 1] + 1;
          for (std::size_t j = i; j < n; ++j) {
            for (std::size_t t = 0; t < t_count; ++t) pooled[t] += densities.at(t, members[j]);
          }
          advanced = true;
          break;
        }
      }
      if (!advanced) break;
    }
    out.push_back(detail::make_subset_result(densities, std::move(best_members), best_obj,
                                             "best-n"));
  }
  return out;
}

}  // namespace mixpool
