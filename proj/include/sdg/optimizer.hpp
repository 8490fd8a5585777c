#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sdg/datagen.hpp"
#include "sdg/mlp.hpp"
#include "sdg/penalties.hpp"
#include "sdg/sign_ba.hpp"

namespace sdg {

class Rng;

/// beta^t schedule state plus the running average that sets gamma.
struct SdgSchedule {
  double beta_zero = 1.0;
  std::size_t horizon_T = 1;
  std::size_t current_t = 1;
  double gamma_ema = 1.0;
  double ema_decay = 0.99;
};

inline constexpr double kGammaFloor = 1e-8;

/// beta_zero * sqrt(t / T). Throws ParameterError unless 1 <= t <= T.
double beta_schedule(const SdgSchedule& sched);

/// gamma <- decay * gamma + (1 - decay) * max(observed_mean, 1e-8); returns the new gamma.
double gamma_update(SdgSchedule& sched, double observed_mean);

/// B_D distinct domains uniformly without replacement, then B rows per domain
/// uniformly with replacement. Domains with no rows are never drawn.
std::vector<DomainBatch> group_sample(std::span<const DomainBatch> domains, std::size_t domains_per_batch,
                                      std::size_t samples_per_domain, Rng& rng);

enum class Method { kErm, kJoint, kSdg, kAndMask, kFishSdg };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

struct TrainConfig {
  Method method = Method::kErm;
  PenaltyKind penalty_kind = PenaltyKind::kNone;
  double penalty_weight = 1.0;
  double learning_rate = 0.15;
  std::size_t epochs = 300;
  std::size_t domains_per_batch = 4;
  std::size_t samples_per_domain = 64;
  std::size_t steps_per_epoch = 0;  // 0: one pass over the training rows
  double beta_zero = 1.0;
  std::size_t ba_iterations = 25;
  BranchMode branch_mode = BranchMode::kAccumulations;
  double gamma_init = 1.0;
  double gamma_decay = 0.99;
  std::size_t fish_inner_steps = 0;  // 0: one pass over the step's domains
  std::vector<std::size_t> hidden{16};
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
  PenaltyKind eval_penalty = PenaltyKind::kCoral;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct StepRecord {
  std::vector<double> domain_losses;
  double penalty = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double update_norm = 0.0;
};

/// Satisficing step: per-domain risk gradients, penalty gradient, sign-BA
/// solve at beta = beta_schedule(sched) and gamma = sched.gamma_ema, gamma
/// update, sampled update theta <- theta - eta * G.
StepRecord sdg_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config,
                    SdgSchedule& sched, Rng& rng);

/// SGD on the mean domain risk.
StepRecord erm_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config);

/// SGD on mean domain risk + weighted penalty.
StepRecord joint_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config);

/// Per-domain gradients of (risk + penalty); a coordinate survives only if no
/// two domains disagree in sign (zero agrees with both). Survivors get the
/// mean per-domain gradient.
StepRecord andmask_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config);

/// The mask rule on its own, exposed for testing.
ParamVector and_mask(std::span<const ParamVector> per_domain);

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t step = 0;  // steps taken so far
  StepRecord last_step;  // empty for epoch 0
  std::vector<double> domain_losses;  // full training data, one per domain
  double in_dist_loss = 0.0;
  double in_dist_acc = 0.0;
  double unseen_loss = 0.0;
  double unseen_acc = 0.0;
  double penalty = 0.0;  // eval_penalty on the full training domains, unweighted
  double gen_gap = 0.0;  // unseen_loss - in_dist_loss
};

struct RunResult {
  std::vector<StepRecord> steps;
  std::vector<EpochMetrics> epochs;  // epochs[0] is the initial evaluation
  ParamVector final_params;
};

MlpModel make_model(const TrainConfig& config, std::size_t input_dim, std::size_t output_dim);

/// Evaluates `model` on the splits of `data` (shared by train and the CLI).
EpochMetrics evaluate(const MlpModel& model, const TaskData& data, PenaltyKind eval_penalty);

RunResult train(const TaskData& data, const TrainConfig& config);
RunResult train(const SyntheticTask& task, const TrainConfig& config);

}  // namespace sdg
