#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "sdg/core_math.hpp"
#include "sdg/mlp.hpp"

namespace sdg {

class Rng;

struct PenaltyEvaluation {
  double value = 0.0;
  ParamVector grad;
};

enum class PenaltyKind { kNone, kCoral, kVrex };

PenaltyKind parse_penalty_kind(std::string_view name);
std::string_view to_string(PenaltyKind kind);

/// Mean over unordered domain pairs of ||C_a - C_b||_F^2 / (4 d^2), where C_e
/// is the covariance of domain e's penultimate features. Zero for a single
/// domain. `weight` scales both value and gradient.
PenaltyEvaluation coral_penalty(const MlpModel& model, std::span<const DomainBatch> batches, double weight = 1.0);

/// Population variance of the per-domain mean losses. Needs >= 2 domains.
PenaltyEvaluation vrex_penalty(const MlpModel& model, std::span<const DomainBatch> batches, double weight = 1.0);

/// Dispatch on kind; kNone yields a zero value and a zero gradient.
PenaltyEvaluation evaluate_penalty(PenaltyKind kind, double weight, const MlpModel& model,
                                   std::span<const DomainBatch> batches);

/// Displacement theta~ - theta after `inner_steps` plain SGD steps on a copy of
/// the model. Each pass visits every batch once in a fresh seeded order.
/// inner_lr = 0 gives the zero vector.
ParamVector fish_penalty_grad(const MlpModel& model, std::span<const DomainBatch> batches, double inner_lr,
                              std::size_t inner_steps, Rng& rng);

}  // namespace sdg
