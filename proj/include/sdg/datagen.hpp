#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "sdg/mlp.hpp"

namespace sdg {

enum class TaskKind { kSpuriousLinear, kRotatedMoons };

TaskKind parse_task_kind(std::string_view name);
std::string_view to_string(TaskKind kind);

/// Seeded multi-domain classification task.
///
/// spurious_linear: x_core ~ N(0, c_e^2 I) with per-domain scale c_e,
/// y = [w . x_core > 0] flipped with probability label_noise; each spurious
/// coordinate is s * mu_e + N(0, 1) where s = +-1 is the noise-free class
/// sign. Training domains use `core_scale` / `spurious_strength`, unseen
/// domains `unseen_core_scale` / `unseen_strength` (negative: the shortcut
/// flips). The label depends on x_core only through its direction, so the
/// core-only rule is optimal on every domain.
///
/// rotated_moons: two-moons data in the plane rotated by
/// `rotation_step_deg * e` for training domain e; unseen domain u uses
/// `rotation_step_deg * (M + u)`. Spurious coordinates are appended as above.
struct SyntheticTask {
  TaskKind kind = TaskKind::kSpuriousLinear;
  std::size_t core_dim = 2;
  std::size_t spurious_dim = 5;
  std::size_t domain_count = 4;
  std::size_t unseen_count = 1;
  std::vector<double> spurious_strength{0.3, 0.3, 0.3, 0.3};
  std::vector<double> unseen_strength{-0.3};
  std::vector<double> core_scale{0.5, 1.0, 2.0, 4.0};
  std::vector<double> unseen_core_scale{1.5};
  double label_noise = 0.05;
  std::size_t samples_per_domain = 500;
  std::size_t test_samples_per_domain = 200;
  double rotation_step_deg = 15.0;
  std::uint64_t seed = 0;

  std::size_t input_dim() const noexcept { return core_dim + spurious_dim; }
  /// Throws ConfigError when dimensions or strengths are inconsistent.
  void validate() const;
};

/// Generated splits. Every sample carries a task-unique id.
struct TaskData {
  std::vector<DomainBatch> train;
  std::vector<DomainBatch> test;  // held-out samples from the training domains
  std::vector<DomainBatch> unseen;
  std::vector<std::vector<std::size_t>> train_ids;
  std::vector<std::vector<std::size_t>> test_ids;
  std::vector<std::vector<std::size_t>> unseen_ids;
  ParamVector core_direction;  // w (spurious_linear only)
};

TaskData generate(const SyntheticTask& task);

/// One row per sample: x0..x{d-1},label,domain_id,split
void write_dataset_csv(std::ostream& os, const TaskData& data);

}  // namespace sdg
