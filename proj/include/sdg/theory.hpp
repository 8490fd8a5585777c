#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sdg/core_math.hpp"
#include "sdg/datagen.hpp"
#include "sdg/optimizer.hpp"

namespace sdg {

/// Biased-SGD experiment on a registered test objective.
struct Prop1Config {
  std::string objective = "quadratic";
  std::size_t dim = 10;
  double init_scale = 2.0;  // theta^1 ~ U[-init_scale, init_scale]^dim
  double bias_D = 0.0;
  std::size_t steps = 1000;
  double noise_scale = 0.5;  // per-coordinate U[-s, s] noise
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
};

/// Constants valid on every iterate the configured run can reach.
struct CertifiedConstants {
  double delta = 0.0;      // half-range of R over the reachable region
  double smoothness = 0.0; // mu
  double lipschitz = 0.0;  // L, also a bound on ||grad R||
  double second_moment = 0.0;  // V >= E||G||^2
};

/// A smooth test objective that can certify its own constants.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::string name() const = 0;
  virtual double value(const ParamVector& theta) const = 0;
  virtual ParamVector grad(const ParamVector& theta) const = 0;
  /// Throws ConfigError if the configuration leaves the certified regime.
  virtual CertifiedConstants certify(const Prop1Config& config) const = 0;
};

/// Names accepted by find_objective.
std::vector<std::string> registered_objectives();
/// Throws ConfigError for unknown names.
std::unique_ptr<Objective> find_objective(const std::string& name);

struct Prop1Result {
  CertifiedConstants constants;
  double step_size = 0.0;
  double avg_sq_grad_norm = 0.0;     // mean over seeds of (1/T) sum ||grad R(theta^t)||^2
  double bound_value = 0.0;          // 2 (sqrt(Delta mu V) + L D) sqrt(1/T)
  std::vector<double> per_seed_avg;  // (1/T) sum ||grad R||^2 for each seed
  std::vector<double> trajectory;    // seed-averaged ||grad R(theta^t)||, t = 1..T
  std::vector<double> bias_norms;    // ||b^t|| of the first seed

  bool bound_satisfied() const { return avg_sq_grad_norm <= bound_value; }
};

/// T updates theta <- theta - eta (grad R + noise + b^t) with ||b^t|| = D/sqrt(t)
/// in a fresh uniform direction, eta = 2 sqrt(Delta / (mu T V)).
Prop1Result run_prop1(const Prop1Config& config);

struct SweepRow {
  double beta_zero = 0.0;
  double in_dist_loss = 0.0;
  double in_dist_acc = 0.0;
  double penalty = 0.0;
  double unseen_loss = 0.0;
  double unseen_acc = 0.0;
};

/// One full training run per beta_zero (ascending), all with the base seed.
std::vector<SweepRow> tradeoff_sweep(const TaskData& data, const TrainConfig& base_config,
                                     std::span<const double> beta_zeros);
std::vector<SweepRow> tradeoff_sweep(const SyntheticTask& task, const TrainConfig& base_config,
                                     std::span<const double> beta_zeros);

}  // namespace sdg
