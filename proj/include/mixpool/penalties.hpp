#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Divergence penalties that shrink a weight vector on the K-simplex toward
// the equal-weight point 1/K. All penalties are convex on the simplex
// interior and attain their minimum at equal weights; ridge and total
// variation are exactly zero there.

namespace mixpool {

enum class PenaltyKind { none, ridge, total_variation, entropy, renyi };

inline const char* to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::none: return "none";
    case PenaltyKind::ridge: return "ridge";
    case PenaltyKind::total_variation: return "total_variation";
    case PenaltyKind::entropy: return "entropy";
    case PenaltyKind::renyi: return "renyi";
  }
  return "unknown";
}

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;
  // Rényi order; used only when kind == renyi. Must be > 0 and != 1.
  double alpha = 2.0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("penalty lambda must be finite and >= 0");
    }
    if (kind == PenaltyKind::renyi) {
      if (!std::isfinite(alpha) || !(alpha > 0.0) || alpha == 1.0) {
        throw std::invalid_argument("renyi alpha must be finite, > 0 and != 1");
      }
    }
  }

  static PenaltySpec none() { return PenaltySpec{}; }
  static PenaltySpec ridge(double lambda) { return {PenaltyKind::ridge, lambda, 2.0}; }
  static PenaltySpec total_variation(double lambda) {
    return {PenaltyKind::total_variation, lambda, 2.0};
  }
  static PenaltySpec entropy(double lambda) { return {PenaltyKind::entropy, lambda, 2.0}; }
  static PenaltySpec renyi(double lambda, double alpha) {
    return {PenaltyKind::renyi, lambda, alpha};
  }

  // Barrier penalties blow up at the simplex boundary and need interior
  // iterates; see the weight floor in the solver.
  bool is_barrier() const {
    return (kind == PenaltyKind::entropy || kind == PenaltyKind::renyi) && lambda > 0.0;
  }
};

namespace detail {

inline void check_weights_dimension(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("weight vector must be non-empty");
}

}  // namespace detail

// Divergence D(w) from equal weights (without the lambda factor).
//  ridge            sum_k (w_k - 1/K)^2
//  total_variation  sum_k |w_k - 1/K|
//  entropy          -sum_k log w_k          (the -log K constant is dropped;
//                                            it does not move any argmin)
//  renyi            1/(a-1) * log( sum_k K^-a * w_k^(1-a) )
// Entropy and Rényi return +infinity on the simplex boundary.
inline double penalty_value(std::span<const double> weights, const PenaltySpec& spec) {
  detail::check_weights_dimension(weights);
  spec.validate();
  const std::size_t k_count = weights.size();
  const double center = 1.0 / static_cast<double>(k_count);
  switch (spec.kind) {
    case PenaltyKind::none:
      return 0.0;
    case PenaltyKind::ridge: {
      double acc = 0.0;
      for (double w : weights) {
        const double d = w - center;
        acc += d * d;
      }
      return acc;
    }
    case PenaltyKind::total_variation: {
      double acc = 0.0;
      for (double w : weights) acc += std::fabs(w - center);
      return acc;
    }
    case PenaltyKind::entropy: {
      double acc = 0.0;
      for (double w : weights) {
        if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
        acc -= std::log(w);
      }
      return acc;
    }
    case PenaltyKind::renyi: {
      const double a = spec.alpha;
      double acc = 0.0;
      for (double w : weights) {
        if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
        acc += std::pow(center, a) * std::pow(w, 1.0 - a);
      }
      return std::log(acc) / (a - 1.0);
    }
  }
  throw std::logic_error("unreachable penalty kind");
}

// Gradient of penalty_value. The total-variation subgradient is 0 at the
// kink w_k == 1/K. Barrier gradients require strictly positive weights.
inline std::vector<double> penalty_gradient(std::span<const double> weights,
                                            const PenaltySpec& spec) {
  detail::check_weights_dimension(weights);
  spec.validate();
  const std::size_t k_count = weights.size();
  const double center = 1.0 / static_cast<double>(k_count);
  std::vector<double> grad(k_count, 0.0);
  switch (spec.kind) {
    case PenaltyKind::none:
      return grad;
    case PenaltyKind::ridge:
      for (std::size_t k = 0; k < k_count; ++k) grad[k] = 2.0 * (weights[k] - center);
      return grad;
    case PenaltyKind::total_variation:
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = weights[k] - center;
        grad[k] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      }
      return grad;
    case PenaltyKind::entropy:
      for (std::size_t k = 0; k < k_count; ++k) {
        if (!(weights[k] > 0.0)) {
          throw std::domain_error("entropy gradient requires strictly positive weights");
        }
        grad[k] = -1.0 / weights[k];
      }
      return grad;
    case PenaltyKind::renyi: {
      const double a = spec.alpha;
      double s = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        if (!(weights[k] > 0.0)) {
          throw std::domain_error("renyi gradient requires strictly positive weights");
        }
        s += std::pow(center, a) * std::pow(weights[k], 1.0 - a);
      }
      for (std::size_t k = 0; k < k_count; ++k) {
        grad[k] = -std::pow(center, a) * std::pow(weights[k], -a) / s;
      }
      return grad;
    }
  }
  throw std::logic_error("unreachable penalty kind");
}

struct DirichletMoments {
  double mean;
  double variance;
};

// Mean and variance of one component of a symmetric Dirichlet(alpha)
// posterior-style weight vector of dimension K:
//   E[w_k] = 1/K,  Var[w_k] = (K-1) / (alpha*K^3 + K^2).
// alpha -> 0 gives the maximal variance (K-1)/K^2; alpha -> infinity
// collapses on equal weights.
inline DirichletMoments dirichlet_moments(std::size_t k_count, double alpha) {
  if (k_count == 0) throw std::invalid_argument("dirichlet_moments: K must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("dirichlet_moments: alpha must be finite and >= 0");
  }
  const double k = static_cast<double>(k_count);
  return {1.0 / k, (k - 1.0) / (alpha * k * k * k + k * k)};
}

}  // namespace mixpool
