#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sdg/core_math.hpp"

namespace sdg {

/// A small explicit candidate set for an exact rate-distortion solve.
struct DiscreteBAInstance {
  std::vector<ParamVector> candidates;    // G_1..G_K
  std::vector<double> penalty;            // Pen(G_k)
  std::vector<ParamVector> domain_grads;  // grad L^e
  double beta = 0.0;
  double gamma = 1.0;

  std::size_t num_candidates() const noexcept { return candidates.size(); }
  std::size_t num_domains() const noexcept { return domain_grads.size(); }
  /// ||G_k - grad L^e||_2 (unsquared).
  double distortion(std::size_t k, std::size_t e) const;
  /// Throws DimensionError / ParameterError when the shape invariants fail.
  void validate() const;
};

struct BAResult {
  std::vector<double> marginal;                   // p(G_k)
  std::vector<std::vector<double>> conditionals;  // [e][k] = p(G_k | E = e)
  double expected_penalty = 0.0;
  double expected_distortion = 0.0;
  double mutual_information = 0.0;  // nats
};

/// Fills the expectation and information fields of `result` from its conditionals.
void summarize(const DiscreteBAInstance& instance, BAResult& result);

/// E[Pen] + gamma * I(G;E) + beta * E[d], the Lagrangian the iteration minimizes.
double regularized_objective(const DiscreteBAInstance& instance, const BAResult& result);

using BaObserver = std::function<void(std::size_t iteration, const BAResult&)>;

/// Uniform start, then `iterations` rounds of domain reweighting by
/// p(G_k) exp(-(Pen_k + beta d(G_k, e)) / gamma), per-domain normalization and
/// marginalization with p(E = e) = 1/|E|. The observer, if given, sees the
/// state after each round.
BAResult discrete_ba_solve(const DiscreteBAInstance& instance, std::size_t iterations,
                           const BaObserver& observer = {});

struct RdPoint {
  double beta = 0.0;
  double expected_distortion = 0.0;
  double expected_penalty = 0.0;
  double mutual_information = 0.0;
};

/// One solve per beta (ascending, non-negative); `instance.beta` is ignored.
std::vector<RdPoint> rd_curve(const DiscreteBAInstance& instance, std::span<const double> betas,
                              std::size_t iterations);

/// Expected penalty when each domain puts all mass on its distortion-minimizing
/// candidate (ties to the lowest index).
double zero_distortion_penalty(const DiscreteBAInstance& instance);

/// Penalty non-increasing in distortion, within `slack`.
bool is_monotone(std::span<const RdPoint> points, double slack = 1e-8);
/// Every interior point lies on or below the chord through its neighbours,
/// within `slack`. Points with equal distortion are merged first.
bool is_convex(std::span<const RdPoint> points, double slack = 1e-6);

}  // namespace sdg
