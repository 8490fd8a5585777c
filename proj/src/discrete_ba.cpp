#include "sdg/discrete_ba.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdg/errors.hpp"

namespace sdg {

double DiscreteBAInstance::distortion(std::size_t k, std::size_t e) const {
  return norm2(vec_sub(candidates[k], domain_grads[e]));
}

void DiscreteBAInstance::validate() const {
  if (candidates.size() < 2) throw DimensionError("DiscreteBAInstance: need K >= 2 candidates");
  if (domain_grads.empty()) throw DimensionError("DiscreteBAInstance: need at least one domain");
  if (penalty.size() != candidates.size()) throw DimensionError("DiscreteBAInstance: one penalty per candidate");
  const std::size_t n = candidates.front().size();
  for (const auto& c : candidates)
    if (c.size() != n) throw DimensionError("DiscreteBAInstance: candidate length mismatch");
  for (const auto& g : domain_grads)
    if (g.size() != n) throw DimensionError("DiscreteBAInstance: domain gradient length mismatch");
  if (!(gamma > 0.0)) throw ParameterError("DiscreteBAInstance: gamma must be positive");
  if (!(beta >= 0.0)) throw ParameterError("DiscreteBAInstance: beta must be non-negative");
}

void summarize(const DiscreteBAInstance& instance, BAResult& result) {
  const std::size_t kk = instance.num_candidates();
  const std::size_t ee = instance.num_domains();
  const double w = 1.0 / static_cast<double>(ee);
  result.expected_penalty = 0.0;
  result.expected_distortion = 0.0;
  result.mutual_information = 0.0;
  for (std::size_t e = 0; e < ee; ++e) {
    for (std::size_t k = 0; k < kk; ++k) {
      const double q = result.conditionals[e][k];
      result.expected_penalty += w * q * instance.penalty[k];
      result.expected_distortion += w * q * instance.distortion(k, e);
      if (q > 0.0) result.mutual_information += w * q * std::log(q / result.marginal[k]);
    }
  }
}

double regularized_objective(const DiscreteBAInstance& instance, const BAResult& result) {
  return result.expected_penalty + instance.gamma * result.mutual_information +
         instance.beta * result.expected_distortion;
}

BAResult discrete_ba_solve(const DiscreteBAInstance& instance, std::size_t iterations, const BaObserver& observer) {
  instance.validate();
  if (iterations == 0) throw ParameterError("discrete_ba_solve: iterations must be >= 1");
  const std::size_t kk = instance.num_candidates();
  const std::size_t ee = instance.num_domains();

  // cost[e][k] / gamma, constant across rounds.
  std::vector<std::vector<double>> scaled_cost(ee, std::vector<double>(kk));
  for (std::size_t e = 0; e < ee; ++e)
    for (std::size_t k = 0; k < kk; ++k)
      scaled_cost[e][k] = (instance.penalty[k] + instance.beta * instance.distortion(k, e)) / instance.gamma;

  BAResult res;
  res.marginal.assign(kk, 1.0 / static_cast<double>(kk));
  res.conditionals.assign(ee, res.marginal);

  std::vector<double> logw(kk);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t e = 0; e < ee; ++e) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < kk; ++k) {
        logw[k] = std::log(res.marginal[k]) - scaled_cost[e][k];
        top = std::max(top, logw[k]);
      }
      double z = 0.0;
      for (std::size_t k = 0; k < kk; ++k) {
        res.conditionals[e][k] = std::exp(logw[k] - top);
        z += res.conditionals[e][k];
      }
      for (std::size_t k = 0; k < kk; ++k) res.conditionals[e][k] /= z;
    }
    for (std::size_t k = 0; k < kk; ++k) {
      double s = 0.0;
      for (std::size_t e = 0; e < ee; ++e) s += res.conditionals[e][k];
      res.marginal[k] = s / static_cast<double>(ee);
    }
    if (observer) {
      summarize(instance, res);
      observer(it, res);
    }
  }
  summarize(instance, res);
  if (!std::isfinite(res.expected_penalty) || !std::isfinite(res.mutual_information))
    throw NumericError("discrete_ba_solve: non-finite result");
  return res;
}

std::vector<RdPoint> rd_curve(const DiscreteBAInstance& instance, std::span<const double> betas,
                              std::size_t iterations) {
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] >= 0.0)) throw ParameterError("rd_curve: betas must be non-negative");
    if (i > 0 && betas[i] < betas[i - 1]) throw ParameterError("rd_curve: betas must be sorted ascending");
  }
  std::vector<RdPoint> out;
  out.reserve(betas.size());
  DiscreteBAInstance inst = instance;
  for (double b : betas) {
    inst.beta = b;
    const BAResult r = discrete_ba_solve(inst, iterations);
    out.push_back({b, r.expected_distortion, r.expected_penalty, r.mutual_information});
  }
  return out;
}

double zero_distortion_penalty(const DiscreteBAInstance& instance) {
  instance.validate();
  double total = 0.0;
  for (std::size_t e = 0; e < instance.num_domains(); ++e) {
    std::size_t best = 0;
    double best_d = instance.distortion(0, e);
    for (std::size_t k = 1; k < instance.num_candidates(); ++k) {
      const double d = instance.distortion(k, e);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    total += instance.penalty[best];
  }
  return total / static_cast<double>(instance.num_domains());
}

namespace {

std::vector<RdPoint> sorted_by_distortion(std::span<const RdPoint> points) {
  std::vector<RdPoint> v(points.begin(), points.end());
  std::sort(v.begin(), v.end(), [](const RdPoint& a, const RdPoint& b) {
    if (a.expected_distortion != b.expected_distortion) return a.expected_distortion < b.expected_distortion;
    return a.expected_penalty > b.expected_penalty;
  });
  return v;
}

}  // namespace

bool is_monotone(std::span<const RdPoint> points, double slack) {
  const auto v = sorted_by_distortion(points);
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].expected_penalty > v[i - 1].expected_penalty + slack) return false;
  }
  return true;
}

bool is_convex(std::span<const RdPoint> points, double slack) {
  auto v = sorted_by_distortion(points);
  std::vector<RdPoint> merged;
  for (const auto& p : v) {
    if (!merged.empty() && std::abs(p.expected_distortion - merged.back().expected_distortion) <= 1e-12) {
      merged.back().expected_penalty = std::min(merged.back().expected_penalty, p.expected_penalty);
    } else {
      merged.push_back(p);
    }
  }
  for (std::size_t i = 1; i + 1 < merged.size(); ++i) {
    const double d0 = merged[i - 1].expected_distortion;
    const double d1 = merged[i].expected_distortion;
    const double d2 = merged[i + 1].expected_distortion;
    const double chord = ((d2 - d1) * merged[i - 1].expected_penalty + (d1 - d0) * merged[i + 1].expected_penalty) /
                         (d2 - d0);
    if (chord - merged[i].expected_penalty < -slack) return false;
  }
  return true;
}

}  // namespace sdg
