#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "sdg/core_math.hpp"

namespace sdg {

class Rng;

/// Per-domain gradients for one step together with their sign accumulations.
struct DomainGradientSet {
  std::vector<ParamVector> per_domain;  // G_e = (1/|E|) grad L^e
  ParamVector g_plus;                   // sum_e max(G_e, 0)
  ParamVector g_minus;                  // sum_e min(G_e, 0)
  ParamVector penalty_grad;

  std::size_t num_domains() const noexcept { return per_domain.size(); }
  std::size_t num_params() const noexcept { return g_plus.size(); }
  /// g_plus + g_minus, i.e. the mean of the raw domain gradients.
  ParamVector erm_grad() const { return vec_add(g_plus, g_minus); }
};

DomainGradientSet build_gradient_set(std::span<const ParamVector> per_domain_raw, ParamVector penalty_grad);

/// Which two values a parameter's update may take.
///   accumulations: g_plus[p] or g_minus[p]
///   signed_erm:    +(grad L)[p] or -(grad L)[p]
enum class BranchMode { kAccumulations, kSignedErm };

BranchMode parse_branch_mode(std::string_view name);
std::string_view to_string(BranchMode mode);

struct Branches {
  ParamVector plus;
  ParamVector minus;
};

Branches branch_values(const DomainGradientSet& gradset, BranchMode mode);

struct BaParams {
  double beta = 0.0;
  double gamma = 1.0;
  std::size_t iterations = 25;
  BranchMode branch_mode = BranchMode::kAccumulations;
};

struct SignDistribution {
  ParamVector prob_plus;                // marginal P(branch = plus), per parameter
  std::vector<ParamVector> prob_plus_e; // per-domain conditionals from the last round
};

/// Per-round diagnostics; entry l is taken after round l + 1.
struct BaTrace {
  std::vector<double> max_disagreement;  // max_{e,p} |prob_plus_e - prob_plus|
};

/// Cost of each branch for domain e, before the -1/gamma factor:
///   beta * (grad L^e - branch)^2 - penalty_grad * branch
/// grad L^e is the unscaled domain gradient, |E| * G_e. The update is applied
/// as theta - eta * branch, so -penalty_grad * branch is the first-order change
/// of the penalty (up to the factor eta).
double branch_cost(double beta, double domain_grad, double branch, double penalty_grad);

/// Two-branch Blahut-Arimoto iteration run independently per parameter.
/// Starts from prob_plus = 0.5, reweights per domain, normalizes, and averages
/// the conditionals back into the marginal, `iterations` times.
/// Throws ParameterError for gamma <= 0 or iterations == 0.
SignDistribution ba_solve(const DomainGradientSet& gradset, const BaParams& params, BaTrace* trace = nullptr);

/// One Bernoulli(prob_plus[p]) draw per parameter, in parameter order.
ParamVector sample_update(const DomainGradientSet& gradset, const SignDistribution& dist, Rng& rng,
                          BranchMode mode = BranchMode::kAccumulations);

/// prob_plus * plus + (1 - prob_plus) * minus.
ParamVector expected_update(const DomainGradientSet& gradset, const SignDistribution& dist,
                            BranchMode mode = BranchMode::kAccumulations);

/// Mean of |branch_cost| over parameters, both branches and all domains.
/// This is the observation fed to the gamma running average.
double mean_branch_cost(const DomainGradientSet& gradset, double beta, BranchMode mode = BranchMode::kAccumulations);

}  // namespace sdg
