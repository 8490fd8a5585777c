#include "sdg/sign_ba.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdg/errors.hpp"
#include "sdg/rng.hpp"

namespace sdg {

DomainGradientSet build_gradient_set(std::span<const ParamVector> per_domain_raw, ParamVector penalty_grad) {
  if (per_domain_raw.empty()) throw InsufficientDataError("build_gradient_set: no domain gradients");
  const std::size_t n = per_domain_raw.front().size();
  if (penalty_grad.size() != n) throw DimensionError("build_gradient_set: penalty gradient length mismatch");

  DomainGradientSet gs;
  gs.g_plus = ParamVector(n);
  gs.g_minus = ParamVector(n);
  gs.penalty_grad = std::move(penalty_grad);
  const double scale = 1.0 / static_cast<double>(per_domain_raw.size());
  for (const auto& raw : per_domain_raw) {
    if (raw.size() != n) throw DimensionError("build_gradient_set: domain gradient length mismatch");
    ParamVector g = vec_scale(scale, raw);
    for (std::size_t p = 0; p < n; ++p) {
      if (g[p] > 0.0) gs.g_plus[p] += g[p];
      else if (g[p] < 0.0) gs.g_minus[p] += g[p];
    }
    gs.per_domain.push_back(std::move(g));
  }
  return gs;
}

BranchMode parse_branch_mode(std::string_view name) {
  if (name == "accumulations") return BranchMode::kAccumulations;
  if (name == "signed_erm") return BranchMode::kSignedErm;
  throw ParameterError("unknown branch mode '" + std::string(name) + "' (expected accumulations|signed_erm)");
}

std::string_view to_string(BranchMode mode) {
  return mode == BranchMode::kSignedErm ? "signed_erm" : "accumulations";
}

Branches branch_values(const DomainGradientSet& gradset, BranchMode mode) {
  if (mode == BranchMode::kAccumulations) return {gradset.g_plus, gradset.g_minus};
  ParamVector erm = gradset.erm_grad();
  return {erm, vec_scale(-1.0, erm)};
}

double branch_cost(double beta, double domain_grad, double branch, double penalty_grad) {
  const double dev = domain_grad - branch;
  return beta * dev * dev - penalty_grad * branch;
}

SignDistribution ba_solve(const DomainGradientSet& gradset, const BaParams& params, BaTrace* trace) {
  if (!(params.gamma > 0.0)) throw ParameterError("ba_solve: gamma must be positive");
  if (params.iterations == 0) throw ParameterError("ba_solve: iterations must be >= 1");
  const std::size_t n = gradset.num_params();
  const std::size_t domains = gradset.num_domains();
  const Branches br = branch_values(gradset, params.branch_mode);
  const double inv_gamma = 1.0 / params.gamma;
  const double edom = static_cast<double>(domains);

  // Scores are fixed across rounds; only the prior changes.
  std::vector<std::vector<double>> score_plus(domains, std::vector<double>(n));
  std::vector<std::vector<double>> score_minus(domains, std::vector<double>(n));
  for (std::size_t e = 0; e < domains; ++e) {
    const ParamVector& ge = gradset.per_domain[e];
    for (std::size_t p = 0; p < n; ++p) {
      const double full = edom * ge[p];
      score_plus[e][p] = -inv_gamma * branch_cost(params.beta, full, br.plus[p], gradset.penalty_grad[p]);
      score_minus[e][p] = -inv_gamma * branch_cost(params.beta, full, br.minus[p], gradset.penalty_grad[p]);
    }
  }

  SignDistribution dist;
  dist.prob_plus = ParamVector(n, 0.5);
  dist.prob_plus_e.assign(domains, ParamVector(n, 0.5));
  if (trace != nullptr) trace->max_disagreement.clear();

  for (std::size_t it = 0; it < params.iterations; ++it) {
    for (std::size_t e = 0; e < domains; ++e) {
      for (std::size_t p = 0; p < n; ++p) {
        const double prior = dist.prob_plus[p];
        const double a = std::log(prior) + score_plus[e][p];
        const double b = std::log1p(-prior) + score_minus[e][p];
        const double m = std::max(a, b);
        const double ea = std::exp(a - m);
        const double eb = std::exp(b - m);
        dist.prob_plus_e[e][p] = ea / (ea + eb);
      }
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double s = 0.0;
      for (std::size_t e = 0; e < domains; ++e) s += dist.prob_plus_e[e][p];
      const double marginal = std::clamp(s / edom, 0.0, 1.0);
      dist.prob_plus[p] = marginal;
      for (std::size_t e = 0; e < domains; ++e) worst = std::max(worst, std::abs(dist.prob_plus_e[e][p] - marginal));
    }
    if (!all_finite(dist.prob_plus.span())) throw NumericError("ba_solve: non-finite probability");
    if (trace != nullptr) trace->max_disagreement.push_back(worst);
  }
  return dist;
}

ParamVector sample_update(const DomainGradientSet& gradset, const SignDistribution& dist, Rng& rng,
                          BranchMode mode) {
  if (dist.prob_plus.size() != gradset.num_params()) throw DimensionError("sample_update: length mismatch");
  const Branches br = branch_values(gradset, mode);
  ParamVector g(gradset.num_params());
  for (std::size_t p = 0; p < g.size(); ++p) g[p] = rng.bernoulli(dist.prob_plus[p]) ? br.plus[p] : br.minus[p];
  return g;
}

ParamVector expected_update(const DomainGradientSet& gradset, const SignDistribution& dist, BranchMode mode) {
  if (dist.prob_plus.size() != gradset.num_params()) throw DimensionError("expected_update: length mismatch");
  const Branches br = branch_values(gradset, mode);
  ParamVector g(gradset.num_params());
  for (std::size_t p = 0; p < g.size(); ++p) {
    g[p] = dist.prob_plus[p] * br.plus[p] + (1.0 - dist.prob_plus[p]) * br.minus[p];
  }
  return g;
}

double mean_branch_cost(const DomainGradientSet& gradset, double beta, BranchMode mode) {
  const std::size_t n = gradset.num_params();
  const std::size_t domains = gradset.num_domains();
  if (n == 0 || domains == 0) return 0.0;
  const Branches br = branch_values(gradset, mode);
  const double edom = static_cast<double>(domains);
  double total = 0.0;
  for (std::size_t e = 0; e < domains; ++e) {
    for (std::size_t p = 0; p < n; ++p) {
      const double full = edom * gradset.per_domain[e][p];
      total += std::abs(branch_cost(beta, full, br.plus[p], gradset.penalty_grad[p]));
      total += std::abs(branch_cost(beta, full, br.minus[p], gradset.penalty_grad[p]));
    }
  }
  return total / (2.0 * edom * static_cast<double>(n));
}

}  // namespace sdg
