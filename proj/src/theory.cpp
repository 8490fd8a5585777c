#include "sdg/theory.hpp"

#include <algorithm>
#include <cmath>

#include "sdg/errors.hpp"
#include "sdg/rng.hpp"

namespace sdg {
namespace {

double noise_second_moment(const Prop1Config& c) {
  // E||n||^2 for i.i.d. U[-s, s] coordinates.
  return static_cast<double>(c.dim) * c.noise_scale * c.noise_scale / 3.0;
}

// R = 1/2 ||theta||^2. With eta <= 1 each step is a contraction toward the
// origin plus a perturbation of norm <= D + s sqrt(P), so every iterate stays
// in the ball of radius r = max(||theta^1||, D + s sqrt(P)).
class Quadratic final : public Objective {
 public:
  std::string name() const override { return "quadratic"; }
  double value(const ParamVector& theta) const override { return 0.5 * dot(theta, theta); }
  ParamVector grad(const ParamVector& theta) const override { return theta; }
  CertifiedConstants certify(const Prop1Config& c) const override {
    const double sqrt_p = std::sqrt(static_cast<double>(c.dim));
    const double r = std::max(c.init_scale * sqrt_p, c.bias_D + c.noise_scale * sqrt_p);
    CertifiedConstants k;
    k.delta = r * r / 4.0;
    k.smoothness = 1.0;
    k.lipschitz = r;
    k.second_moment = (r + c.bias_D) * (r + c.bias_D) + noise_second_moment(c);
    return k;
  }
};

// R = sum_i a/2 (theta_i - s)^2 + c cos(w theta_i), non-convex since c w^2 > a.
// Per coordinate u = theta_i - s obeys |u'| <= (1 - eta a)|u| + eta (c w + D + s_n),
// so |u| stays below rho = max(|u^1|, (c w + D + s_n) / a) while eta a <= 1.
class SinusoidQuadratic final : public Objective {
 public:
  static constexpr double kCurv = 1.0;
  static constexpr double kAmp = 1.0;
  static constexpr double kFreq = 2.0;
  static constexpr double kShift = 0.5;

  std::string name() const override { return "sinusoid_quadratic"; }
  double value(const ParamVector& theta) const override {
    double s = 0.0;
    for (double x : theta) s += 0.5 * kCurv * (x - kShift) * (x - kShift) + kAmp * std::cos(kFreq * x);
    return s;
  }
  ParamVector grad(const ParamVector& theta) const override {
    ParamVector g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
      g[i] = kCurv * (theta[i] - kShift) - kAmp * kFreq * std::sin(kFreq * theta[i]);
    return g;
  }
  CertifiedConstants certify(const Prop1Config& c) const override {
    const double p = static_cast<double>(c.dim);
    const double rho =
        std::max(c.init_scale + std::abs(kShift), (kAmp * kFreq + c.bias_D + c.noise_scale) / kCurv);
    CertifiedConstants k;
    k.lipschitz = std::sqrt(p) * (kCurv * rho + kAmp * kFreq);
    k.smoothness = kCurv + kAmp * kFreq * kFreq;
    k.delta = p * (0.5 * kCurv * rho * rho + 2.0 * kAmp) / 2.0;
    k.second_moment = (k.lipschitz + c.bias_D) * (k.lipschitz + c.bias_D) + noise_second_moment(c);
    return k;
  }
};

// R = -sum_i cos(theta_i): globally bounded, Lipschitz and smooth.
class Cosine final : public Objective {
 public:
  std::string name() const override { return "cosine"; }
  double value(const ParamVector& theta) const override {
    double s = 0.0;
    for (double x : theta) s -= std::cos(x);
    return s;
  }
  ParamVector grad(const ParamVector& theta) const override {
    ParamVector g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = std::sin(theta[i]);
    return g;
  }
  CertifiedConstants certify(const Prop1Config& c) const override {
    const double p = static_cast<double>(c.dim);
    CertifiedConstants k;
    k.lipschitz = std::sqrt(p);
    k.smoothness = 1.0;
    k.delta = p;
    k.second_moment = (k.lipschitz + c.bias_D) * (k.lipschitz + c.bias_D) + noise_second_moment(c);
    return k;
  }
};

double step_size(const CertifiedConstants& k, std::size_t steps) {
  return 2.0 * std::sqrt(k.delta / (k.smoothness * static_cast<double>(steps) * k.second_moment));
}

}  // namespace

std::vector<std::string> registered_objectives() { return {"quadratic", "sinusoid_quadratic", "cosine"}; }

std::unique_ptr<Objective> find_objective(const std::string& name) {
  if (name == "quadratic") return std::make_unique<Quadratic>();
  if (name == "sinusoid_quadratic") return std::make_unique<SinusoidQuadratic>();
  if (name == "cosine") return std::make_unique<Cosine>();
  throw ConfigError("no certified constants for objective '" + name + "'");
}

Prop1Result run_prop1(const Prop1Config& config) {
  if (config.dim < 1) throw ConfigError("prop1.dim must be >= 1");
  if (config.steps < 1) throw ConfigError("prop1.steps must be >= 1");
  if (config.seeds < 1) throw ConfigError("prop1.seeds must be >= 1");
  if (!(config.bias_D >= 0.0)) throw ConfigError("prop1.bias_D must be >= 0");
  if (!(config.noise_scale >= 0.0)) throw ConfigError("prop1.noise_scale must be >= 0");
  if (!(config.init_scale >= 0.0)) throw ConfigError("prop1.init_scale must be >= 0");
  const auto objective = find_objective(config.objective);

  Prop1Result res;
  res.constants = objective->certify(config);
  const CertifiedConstants& k = res.constants;
  if (!(k.delta > 0.0 && k.smoothness > 0.0 && k.lipschitz > 0.0 && k.second_moment > 0.0))
    throw ConfigError("prop1: degenerate constants for '" + config.objective + "'");
  res.step_size = step_size(k, config.steps);
  if (res.step_size * k.smoothness > 2.0 || (config.objective != "cosine" && res.step_size > 1.0))
    throw ConfigError("prop1: step size " + std::to_string(res.step_size) + " leaves the certified regime");

  const double t_total = static_cast<double>(config.steps);
  res.bound_value = 2.0 * (std::sqrt(k.delta * k.smoothness * k.second_moment) + k.lipschitz * config.bias_D) *
                    std::sqrt(1.0 / t_total);
  res.trajectory.assign(config.steps, 0.0);

  const std::size_t p = config.dim;
  for (std::size_t run = 0; run < config.seeds; ++run) {
    Rng rng(Rng::derive_seed(config.seed, run));
    ParamVector theta(p);
    for (double& x : theta) x = rng.uniform(-config.init_scale, config.init_scale);

    double sum_sq = 0.0;
    ParamVector dir(p);
    for (std::size_t t = 1; t <= config.steps; ++t) {
      const ParamVector g = objective->grad(theta);
      const double gn = norm2(g);
      if (gn > k.lipschitz * (1.0 + 1e-12))
        throw NumericError("prop1: gradient norm exceeded the certified Lipschitz constant");
      sum_sq += gn * gn;
      res.trajectory[t - 1] += gn / static_cast<double>(config.seeds);

      double dn = 0.0;
      do {
        for (double& x : dir) x = rng.normal();
        dn = norm2(dir);
      } while (dn == 0.0);
      const double bias_norm = config.bias_D / std::sqrt(static_cast<double>(t));
      for (std::size_t i = 0; i < p; ++i) {
        const double noise = rng.uniform(-config.noise_scale, config.noise_scale);
        const double bias = dir[i] / dn * bias_norm;
        theta[i] -= res.step_size * (g[i] + noise + bias);
      }
      if (run == 0) res.bias_norms.push_back(norm2(vec_scale(bias_norm / dn, dir)));
    }
    res.per_seed_avg.push_back(sum_sq / t_total);
  }
  double total = 0.0;
  for (double v : res.per_seed_avg) total += v;
  res.avg_sq_grad_norm = total / static_cast<double>(config.seeds);
  return res;
}

std::vector<SweepRow> tradeoff_sweep(const TaskData& data, const TrainConfig& base_config,
                                     std::span<const double> beta_zeros) {
  if (beta_zeros.empty()) throw ConfigError("sweep.beta_zeros must not be empty");
  for (std::size_t i = 1; i < beta_zeros.size(); ++i) {
    if (beta_zeros[i] < beta_zeros[i - 1]) throw ConfigError("sweep.beta_zeros must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  for (double b0 : beta_zeros) {
    TrainConfig cfg = base_config;
    cfg.beta_zero = b0;
    const RunResult run = train(data, cfg);
    const EpochMetrics& last = run.epochs.back();
    rows.push_back({b0, last.in_dist_loss, last.in_dist_acc, last.penalty, last.unseen_loss, last.unseen_acc});
  }
  return rows;
}

std::vector<SweepRow> tradeoff_sweep(const SyntheticTask& task, const TrainConfig& base_config,
                                     std::span<const double> beta_zeros) {
  return tradeoff_sweep(generate(task), base_config, beta_zeros);
}

}  // namespace sdg
