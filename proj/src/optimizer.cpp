#include "sdg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdg/errors.hpp"
#include "sdg/rng.hpp"

namespace sdg {

double beta_schedule(const SdgSchedule& sched) {
  if (sched.horizon_T == 0 || sched.current_t < 1 || sched.current_t > sched.horizon_T) {
    throw ParameterError("beta_schedule: t=" + std::to_string(sched.current_t) + " outside [1, " +
                         std::to_string(sched.horizon_T) + "]");
  }
  return sched.beta_zero *
         std::sqrt(static_cast<double>(sched.current_t) / static_cast<double>(sched.horizon_T));
}

double gamma_update(SdgSchedule& sched, double observed_mean) {
  if (!std::isfinite(observed_mean)) throw NumericError("gamma_update: non-finite observation");
  sched.gamma_ema = sched.ema_decay * sched.gamma_ema + (1.0 - sched.ema_decay) * std::max(observed_mean, kGammaFloor);
  return sched.gamma_ema;
}

std::vector<DomainBatch> group_sample(std::span<const DomainBatch> domains, std::size_t domains_per_batch,
                                      std::size_t samples_per_domain, Rng& rng) {
  std::vector<std::size_t> available;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (domains[i].size() > 0) available.push_back(i);
  }
  if (domains_per_batch == 0 || domains_per_batch > available.size()) {
    throw SamplingError("group_sample: cannot draw " + std::to_string(domains_per_batch) + " domains from " +
                        std::to_string(available.size()) + " non-empty domains");
  }
  // Partial Fisher-Yates: the first B_D slots are a uniform draw without replacement.
  for (std::size_t i = 0; i < domains_per_batch; ++i) {
    const std::size_t j = i + rng.index(available.size() - i);
    std::swap(available[i], available[j]);
  }
  std::vector<DomainBatch> out;
  out.reserve(domains_per_batch);
  for (std::size_t i = 0; i < domains_per_batch; ++i) {
    const DomainBatch& src = domains[available[i]];
    std::vector<std::size_t> rows(samples_per_domain);
    for (auto& r : rows) r = rng.index(src.size());
    out.push_back(select_rows(src, rows));
  }
  return out;
}

Method parse_method(std::string_view name) {
  if (name == "erm") return Method::kErm;
  if (name == "joint") return Method::kJoint;
  if (name == "sdg") return Method::kSdg;
  if (name == "andmask") return Method::kAndMask;
  if (name == "fish_sdg") return Method::kFishSdg;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected erm|joint|sdg|andmask|fish_sdg)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kErm: return "erm";
    case Method::kJoint: return "joint";
    case Method::kSdg: return "sdg";
    case Method::kAndMask: return "andmask";
    case Method::kFishSdg: return "fish_sdg";
  }
  return "erm";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (domains_per_batch < 1) throw ConfigError("train.domains_per_batch must be >= 1");
  if (samples_per_domain < 1) throw ConfigError("train.samples_per_domain must be >= 1");
  if (penalty_kind == PenaltyKind::kCoral && samples_per_domain < 2)
    throw ConfigError("train.samples_per_domain must be >= 2 with the coral penalty");
  if (penalty_kind == PenaltyKind::kVrex && domains_per_batch < 2)
    throw ConfigError("train.domains_per_batch must be >= 2 with the vrex penalty");
  if (!(penalty_weight >= 0.0)) throw ConfigError("train.penalty_weight must be >= 0");
  if (!(beta_zero >= 0.0)) throw ConfigError("train.beta_zero must be >= 0");
  if (ba_iterations < 1) throw ConfigError("train.ba_iterations must be >= 1");
  if (!(gamma_init > 0.0)) throw ConfigError("train.gamma_init must be > 0");
  if (!(gamma_decay >= 0.0 && gamma_decay < 1.0)) throw ConfigError("train.gamma_decay must be in [0, 1)");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("train.hidden widths must be >= 1");
}

namespace {

struct DomainTerms {
  std::vector<double> losses;
  std::vector<ParamVector> grads;
};

DomainTerms per_domain_terms(const MlpModel& model, std::span<const DomainBatch> batches) {
  DomainTerms t;
  for (const auto& b : batches) {
    const ForwardCache cache = model.forward(b.inputs);
    t.losses.push_back(model.loss(cache.outputs(), b));
    const Matrix d_out = model.loss_output_grad(cache.outputs(), b);
    t.grads.push_back(model.backward(cache, &d_out, nullptr));
  }
  return t;
}

ParamVector mean_of(const std::vector<ParamVector>& vs) {
  ParamVector out(vs.front().size());
  for (const auto& v : vs)
    for (std::size_t p = 0; p < v.size(); ++p) out[p] += v[p];
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (double& x : out) x *= inv;
  return out;
}

double apply_update(MlpModel& model, const ParamVector& direction, double lr) {
  if (!all_finite(direction.span())) throw NumericError("non-finite update direction");
  model.set_params(vec_axpy(-lr, direction, model.params()));
  return lr * norm2(direction);
}

void require_batches(std::span<const DomainBatch> batches) {
  if (batches.empty()) throw InsufficientDataError("step: no domain batches");
}

}  // namespace

StepRecord sdg_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config,
                    SdgSchedule& sched, Rng& rng) {
  require_batches(batches);
  DomainTerms terms = per_domain_terms(model, batches);
  StepRecord rec;
  rec.domain_losses = terms.losses;

  ParamVector penalty_grad;
  if (config.method == Method::kFishSdg) {
    const std::size_t inner = config.fish_inner_steps == 0 ? batches.size() : config.fish_inner_steps;
    if (config.penalty_kind != PenaltyKind::kNone)
      rec.penalty = evaluate_penalty(config.penalty_kind, config.penalty_weight, model, batches).value;
    // The inner-loop displacement is a descent direction; its negation stands in for the penalty gradient.
    penalty_grad = vec_scale(-1.0, fish_penalty_grad(model, batches, config.learning_rate, inner, rng));
  } else {
    PenaltyEvaluation pen = evaluate_penalty(config.penalty_kind, config.penalty_weight, model, batches);
    rec.penalty = pen.value;
    penalty_grad = std::move(pen.grad);
  }

  const DomainGradientSet gs = build_gradient_set(terms.grads, std::move(penalty_grad));
  BaParams params;
  params.beta = beta_schedule(sched);
  params.gamma = sched.gamma_ema;
  params.iterations = config.ba_iterations;
  params.branch_mode = config.branch_mode;
  const SignDistribution dist = ba_solve(gs, params);
  rec.beta = params.beta;
  rec.gamma = params.gamma;
  gamma_update(sched, mean_branch_cost(gs, params.beta, params.branch_mode));

  const ParamVector g = sample_update(gs, dist, rng, params.branch_mode);
  rec.update_norm = apply_update(model, g, config.learning_rate);
  return rec;
}

StepRecord erm_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config) {
  require_batches(batches);
  DomainTerms terms = per_domain_terms(model, batches);
  StepRecord rec;
  rec.domain_losses = terms.losses;
  if (config.penalty_kind != PenaltyKind::kNone)
    rec.penalty = evaluate_penalty(config.penalty_kind, config.penalty_weight, model, batches).value;
  rec.update_norm = apply_update(model, mean_of(terms.grads), config.learning_rate);
  return rec;
}

StepRecord joint_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config) {
  require_batches(batches);
  DomainTerms terms = per_domain_terms(model, batches);
  const PenaltyEvaluation pen = evaluate_penalty(config.penalty_kind, config.penalty_weight, model, batches);
  StepRecord rec;
  rec.domain_losses = terms.losses;
  rec.penalty = pen.value;
  rec.update_norm = apply_update(model, vec_add(mean_of(terms.grads), pen.grad), config.learning_rate);
  return rec;
}

ParamVector and_mask(std::span<const ParamVector> per_domain) {
  if (per_domain.empty()) throw InsufficientDataError("and_mask: no domains");
  const std::size_t n = per_domain.front().size();
  ParamVector out(n);
  for (std::size_t p = 0; p < n; ++p) {
    bool any_pos = false;
    bool any_neg = false;
    double sum = 0.0;
    for (const auto& g : per_domain) {
      if (g.size() != n) throw DimensionError("and_mask: length mismatch");
      any_pos = any_pos || g[p] > 0.0;
      any_neg = any_neg || g[p] < 0.0;
      sum += g[p];
    }
    out[p] = (any_pos && any_neg) ? 0.0 : sum / static_cast<double>(per_domain.size());
  }
  return out;
}

StepRecord andmask_step(MlpModel& model, std::span<const DomainBatch> batches, const TrainConfig& config) {
  require_batches(batches);
  DomainTerms terms = per_domain_terms(model, batches);
  const PenaltyEvaluation pen = evaluate_penalty(config.penalty_kind, config.penalty_weight, model, batches);
  std::vector<ParamVector> combined;
  combined.reserve(terms.grads.size());
  for (const auto& g : terms.grads) combined.push_back(vec_add(g, pen.grad));
  StepRecord rec;
  rec.domain_losses = terms.losses;
  rec.penalty = pen.value;
  rec.update_norm = apply_update(model, and_mask(combined), config.learning_rate);
  return rec;
}

MlpModel make_model(const TrainConfig& config, std::size_t input_dim, std::size_t output_dim) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(output_dim);
  return MlpModel(dims, config.loss);
}

namespace {

struct SplitScore {
  double loss = 0.0;
  double acc = 0.0;
};

// Sample-weighted loss and accuracy over a list of domains.
SplitScore score(const MlpModel& model, const std::vector<DomainBatch>& split) {
  SplitScore s;
  std::size_t total = 0;
  for (const auto& b : split) {
    const ForwardCache cache = model.forward(b.inputs);
    const double n = static_cast<double>(b.size());
    s.loss += n * model.loss(cache.outputs(), b);
    s.acc += n * model.accuracy(cache.outputs(), b);
    total += b.size();
  }
  if (total > 0) {
    s.loss /= static_cast<double>(total);
    s.acc /= static_cast<double>(total);
  }
  return s;
}

}  // namespace

EpochMetrics evaluate(const MlpModel& model, const TaskData& data, PenaltyKind eval_penalty) {
  EpochMetrics m;
  const SplitScore in = score(model, data.test);
  const SplitScore out = score(model, data.unseen);
  m.in_dist_loss = in.loss;
  m.in_dist_acc = in.acc;
  m.unseen_loss = out.loss;
  m.unseen_acc = out.acc;
  m.gen_gap = out.loss - in.loss;
  for (const auto& batch : data.train) m.domain_losses.push_back(domain_loss(model, batch));
  if (eval_penalty != PenaltyKind::kNone) {
    m.penalty = evaluate_penalty(eval_penalty, 1.0, model, data.train).value;
  }
  return m;
}

RunResult train(const TaskData& data, const TrainConfig& config) {
  config.validate();
  if (data.train.empty()) throw InsufficientDataError("train: no training domains");
  const std::size_t input_dim = data.train.front().inputs.cols();
  const std::size_t output_dim = config.loss == LossKind::kSoftmaxCrossEntropy ? 2 : 1;
  MlpModel model = make_model(config, input_dim, output_dim);
  Rng init_rng(Rng::derive_seed(config.seed, 0));
  model.initialize(init_rng);
  Rng rng(Rng::derive_seed(config.seed, 1));

  std::size_t rows = 0;
  for (const auto& b : data.train) rows += b.size();
  const std::size_t per_step = config.domains_per_batch * config.samples_per_domain;
  const std::size_t steps_per_epoch =
      config.steps_per_epoch > 0 ? config.steps_per_epoch : std::max<std::size_t>(1, (rows + per_step - 1) / per_step);

  SdgSchedule sched;
  sched.beta_zero = config.beta_zero;
  sched.horizon_T = std::max<std::size_t>(config.epochs, 1);
  sched.gamma_ema = config.gamma_init;
  sched.ema_decay = config.gamma_decay;

  RunResult result;
  result.epochs.push_back(evaluate(model, data, config.eval_penalty));
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    sched.current_t = epoch;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const auto batches = group_sample(data.train, config.domains_per_batch, config.samples_per_domain, rng);
      StepRecord rec;
      switch (config.method) {
        case Method::kErm: rec = erm_step(model, batches, config); break;
        case Method::kJoint: rec = joint_step(model, batches, config); break;
        case Method::kAndMask: rec = andmask_step(model, batches, config); break;
        case Method::kSdg:
        case Method::kFishSdg: rec = sdg_step(model, batches, config, sched, rng); break;
      }
      result.steps.push_back(std::move(rec));
      ++step;
    }
    EpochMetrics m = evaluate(model, data, config.eval_penalty);
    m.epoch = epoch;
    m.step = step;
    if (!result.steps.empty()) m.last_step = result.steps.back();
    result.epochs.push_back(std::move(m));
  }
  result.final_params = model.params();
  return result;
}

RunResult train(const SyntheticTask& task, const TrainConfig& config) { return train(generate(task), config); }

}  // namespace sdg
