#include "sdg/datagen.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "sdg/errors.hpp"
#include "sdg/format.hpp"
#include "sdg/rng.hpp"

namespace sdg {

TaskKind parse_task_kind(std::string_view name) {
  if (name == "spurious_linear") return TaskKind::kSpuriousLinear;
  if (name == "rotated_moons") return TaskKind::kRotatedMoons;
  throw ConfigError("unknown task kind '" + std::string(name) + "' (expected spurious_linear|rotated_moons)");
}

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kRotatedMoons ? "rotated_moons" : "spurious_linear";
}

void SyntheticTask::validate() const {
  if (domain_count < 2) throw ConfigError("task.domain_count must be >= 2");
  if (unseen_count < 1) throw ConfigError("task.unseen_count must be >= 1");
  if (core_dim < 1) throw ConfigError("task.core_dim must be >= 1");
  if (kind == TaskKind::kRotatedMoons && core_dim != 2) throw ConfigError("rotated_moons needs task.core_dim = 2");
  if (spurious_dim > 0) {
    if (spurious_strength.size() != domain_count)
      throw ConfigError("task.spurious_strength needs one entry per training domain");
    if (unseen_strength.size() != unseen_count)
      throw ConfigError("task.unseen_strength needs one entry per unseen domain");
  }
  if (core_scale.size() != domain_count) throw ConfigError("task.core_scale needs one entry per training domain");
  if (unseen_core_scale.size() != unseen_count)
    throw ConfigError("task.unseen_core_scale needs one entry per unseen domain");
  for (double c : core_scale)
    if (!(c > 0.0)) throw ConfigError("task.core_scale entries must be > 0");
  for (double c : unseen_core_scale)
    if (!(c > 0.0)) throw ConfigError("task.unseen_core_scale entries must be > 0");
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw ConfigError("task.label_noise must be in [0, 1)");
  if (samples_per_domain < 2) throw ConfigError("task.samples_per_domain must be >= 2");
  if (test_samples_per_domain < 1) throw ConfigError("task.test_samples_per_domain must be >= 1");
}

namespace {

struct Sampler {
  const SyntheticTask& task;
  const ParamVector& w;
  Rng& rng;
  std::size_t& next_id;

  DomainBatch draw(std::size_t n, int domain_id, double strength, double core_scale, double angle_rad,
                   std::vector<std::size_t>& ids) {
    const std::size_t d = task.input_dim();
    DomainBatch b;
    b.domain_id = domain_id;
    b.inputs = Matrix(n, d);
    b.targets = Matrix(n, 1);
    b.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      bool clean = false;
      if (task.kind == TaskKind::kSpuriousLinear) {
        double proj = 0.0;
        for (std::size_t c = 0; c < task.core_dim; ++c) {
          b.inputs(r, c) = core_scale * rng.normal();
          proj += w[c] * b.inputs(r, c);
        }
        clean = proj > 0.0;
      } else {
        clean = rng.bernoulli(0.5);
        const double t = rng.uniform() * std::numbers::pi;
        double x = clean ? 1.0 - std::cos(t) : std::cos(t);
        double y = clean ? 0.5 - std::sin(t) : std::sin(t);
        x += 0.1 * rng.normal() - 0.5;
        y += 0.1 * rng.normal() - 0.25;
        b.inputs(r, 0) = core_scale * (std::cos(angle_rad) * x - std::sin(angle_rad) * y);
        b.inputs(r, 1) = core_scale * (std::sin(angle_rad) * x + std::cos(angle_rad) * y);
      }
      const double sign = clean ? 1.0 : -1.0;
      for (std::size_t c = 0; c < task.spurious_dim; ++c) {
        b.inputs(r, task.core_dim + c) = sign * strength + rng.normal();
      }
      const bool flip = task.label_noise > 0.0 && rng.bernoulli(task.label_noise);
      const bool label = clean != flip;
      b.labels[r] = label ? 1 : 0;
      b.targets(r, 0) = label ? 1.0 : -1.0;
      ids.push_back(next_id++);
    }
    return b;
  }
};

}  // namespace

TaskData generate(const SyntheticTask& task) {
  task.validate();
  Rng rng(task.seed);
  TaskData data;

  data.core_direction = ParamVector(task.core_dim);
  if (task.kind == TaskKind::kSpuriousLinear) {
    for (std::size_t c = 0; c < task.core_dim; ++c) data.core_direction[c] = rng.normal();
    const double nrm = norm2(data.core_direction);
    for (std::size_t c = 0; c < task.core_dim; ++c) data.core_direction[c] /= nrm;
  }

  std::size_t next_id = 0;
  Sampler sampler{task, data.core_direction, rng, next_id};
  const double step = task.rotation_step_deg * std::numbers::pi / 180.0;
  auto strength = [&](const std::vector<double>& v, std::size_t i) { return task.spurious_dim > 0 ? v[i] : 0.0; };

  for (std::size_t e = 0; e < task.domain_count; ++e) {
    const double mu = strength(task.spurious_strength, e);
    const double scale = task.core_scale[e];
    const double angle = step * static_cast<double>(e);
    const int id = static_cast<int>(e);
    data.train_ids.emplace_back();
    data.train.push_back(sampler.draw(task.samples_per_domain, id, mu, scale, angle, data.train_ids.back()));
    data.test_ids.emplace_back();
    data.test.push_back(sampler.draw(task.test_samples_per_domain, id, mu, scale, angle, data.test_ids.back()));
  }
  for (std::size_t u = 0; u < task.unseen_count; ++u) {
    const double mu = strength(task.unseen_strength, u);
    const double angle = step * static_cast<double>(task.domain_count + u);
    const int id = static_cast<int>(task.domain_count + u);
    data.unseen_ids.emplace_back();
    data.unseen.push_back(
        sampler.draw(task.samples_per_domain, id, mu, task.unseen_core_scale[u], angle, data.unseen_ids.back()));
  }
  return data;
}

void write_dataset_csv(std::ostream& os, const TaskData& data) {
  if (data.train.empty()) return;
  const std::size_t d = data.train.front().inputs.cols();
  for (std::size_t c = 0; c < d; ++c) os << 'x' << c << ',';
  os << "label,domain_id,split\n";
  auto emit = [&](const std::vector<DomainBatch>& set, const char* split) {
    for (const auto& b : set) {
      for (std::size_t r = 0; r < b.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) os << format_double(b.inputs(r, c)) << ',';
        os << b.labels[r] << ',' << b.domain_id << ',' << split << '\n';
      }
    }
  };
  emit(data.train, "train");
  emit(data.test, "test");
  emit(data.unseen, "unseen");
}

}  // namespace sdg
