#include "sdg/penalties.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "sdg/errors.hpp"
#include "sdg/rng.hpp"

namespace sdg {

PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "none") return PenaltyKind::kNone;
  if (name == "coral") return PenaltyKind::kCoral;
  if (name == "vrex") return PenaltyKind::kVrex;
  throw ParameterError("unknown penalty kind '" + std::string(name) + "' (expected none|coral|vrex)");
}

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::kNone: return "none";
    case PenaltyKind::kCoral: return "coral";
    case PenaltyKind::kVrex: return "vrex";
  }
  return "none";
}

PenaltyEvaluation coral_penalty(const MlpModel& model, std::span<const DomainBatch> batches, double weight) {
  if (batches.empty()) throw InsufficientDataError("coral_penalty: no domains");
  for (const auto& b : batches) {
    if (b.size() < 2) throw InsufficientDataError("coral_penalty: every domain needs at least 2 samples");
  }
  PenaltyEvaluation eval{0.0, ParamVector(model.num_params())};
  const std::size_t m = batches.size();
  if (m < 2) return eval;

  std::vector<ForwardCache> caches;
  std::vector<Matrix> covs;
  caches.reserve(m);
  covs.reserve(m);
  for (const auto& b : batches) {
    caches.push_back(model.forward(b.inputs));
    covs.push_back(covariance(caches.back().features()));
  }

  const double d = static_cast<double>(model.feature_dim());
  const double pairs = static_cast<double>(m * (m - 1) / 2);
  const double value_scale = 1.0 / (4.0 * d * d * pairs);

  // dP/dC_a = sum_b (C_a - C_b) / (2 d^2 pairs); symmetric.
  const std::size_t fd = model.feature_dim();
  std::vector<Matrix> d_cov(m, Matrix(fd, fd));
  std::vector<double> pair_terms;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      pair_terms.push_back(frobenius_sq_diff(covs[a], covs[b]));
      for (std::size_t i = 0; i < fd * fd; ++i) {
        const double diff = covs[a].data()[i] - covs[b].data()[i];
        d_cov[a].data()[i] += diff;
        d_cov[b].data()[i] -= diff;
      }
    }
  }
  eval.value = weight * sorted_sum(std::move(pair_terms)) * value_scale;

  // C = Xc^T Xc / (B - 1)  =>  dP/dX = Xc (G + G^T) / (B - 1); G symmetric here.
  const double grad_scale = weight / (2.0 * d * d * pairs);
  for (std::size_t e = 0; e < m; ++e) {
    const Matrix& x = caches[e].features();
    const std::size_t n = x.rows();
    std::vector<double> mean(fd, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < fd; ++c) mean[c] += x(r, c);
    for (double& v : mean) v /= static_cast<double>(n);

    const double s = grad_scale * 2.0 / static_cast<double>(n - 1);
    Matrix d_feat(n, fd);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < fd; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < fd; ++i) acc += (x(r, i) - mean[i]) * d_cov[e](i, j);
        d_feat(r, j) = s * acc;
      }
    }
    const ParamVector g = model.backward(caches[e], nullptr, &d_feat);
    for (std::size_t p = 0; p < g.size(); ++p) eval.grad[p] += g[p];
  }
  return eval;
}

PenaltyEvaluation vrex_penalty(const MlpModel& model, std::span<const DomainBatch> batches, double weight) {
  const std::size_t m = batches.size();
  if (m < 2) throw InsufficientDataError("vrex_penalty: need at least 2 domains");
  std::vector<double> losses(m);
  std::vector<ParamVector> grads(m);
  double mean = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    const ForwardCache cache = model.forward(batches[e].inputs);
    losses[e] = model.loss(cache.outputs(), batches[e]);
    const Matrix d_out = model.loss_output_grad(cache.outputs(), batches[e]);
    grads[e] = model.backward(cache, &d_out, nullptr);
    mean += losses[e];
  }
  mean /= static_cast<double>(m);

  PenaltyEvaluation eval{0.0, ParamVector(model.num_params())};
  // Equal risks: the variance and its gradient are exactly zero; skip the rounding noise in `mean`.
  if (std::all_of(losses.begin(), losses.end(), [&](double l) { return l == losses.front(); })) return eval;
  double var = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    const double dev = losses[e] - mean;
    var += dev * dev;
    // d/dtheta of (1/M) sum (L_e - mean)^2 = (2/M) sum (L_e - mean) dL_e.
    const double coef = weight * 2.0 * dev / static_cast<double>(m);
    for (std::size_t p = 0; p < grads[e].size(); ++p) eval.grad[p] += coef * grads[e][p];
  }
  eval.value = weight * var / static_cast<double>(m);
  return eval;
}

PenaltyEvaluation evaluate_penalty(PenaltyKind kind, double weight, const MlpModel& model,
                                   std::span<const DomainBatch> batches) {
  switch (kind) {
    case PenaltyKind::kCoral: return coral_penalty(model, batches, weight);
    case PenaltyKind::kVrex: return vrex_penalty(model, batches, weight);
    case PenaltyKind::kNone: break;
  }
  return {0.0, ParamVector(model.num_params())};
}

ParamVector fish_penalty_grad(const MlpModel& model, std::span<const DomainBatch> batches, double inner_lr,
                              std::size_t inner_steps, Rng& rng) {
  if (batches.empty()) throw InsufficientDataError("fish_penalty_grad: no domains");
  if (!(inner_lr >= 0.0)) throw ParameterError("fish_penalty_grad: inner_lr must be non-negative");
  if (inner_steps == 0) throw ParameterError("fish_penalty_grad: inner_steps must be >= 1");

  MlpModel inner = model;
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < inner_steps; ++s) {
    const std::size_t slot = s % batches.size();
    if (slot == 0) order = rng.permutation(batches.size());
    const ParamVector g = domain_grad(inner, batches[order[slot]]);
    inner.set_params(vec_axpy(-inner_lr, g, inner.params()));
  }
  return vec_sub(inner.params(), model.params());
}

}  // namespace sdg
