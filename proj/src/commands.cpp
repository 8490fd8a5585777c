#include "sdg/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sdg/config.hpp"
#include "sdg/errors.hpp"
#include "sdg/format.hpp"

#ifndef SDG_VERSION
#define SDG_VERSION "unknown"
#endif

namespace sdg {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

class OutputCollision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// JSON has no NaN/Inf literals; those go out as strings.
Json number(double x) {
  if (!std::isfinite(x)) return format_double(x);
  return x;
}

std::string join(const std::vector<double>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += sep;
    out += format_double(xs[i]);
  }
  return out;
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& columns) : width_(columns.size()) { line(columns); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    line(cells);
  }
  std::string str() const { return os_.str(); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i > 0 ? "," : "") << cells[i];
    os_ << '\n';
  }

  std::size_t width_;
  std::ostringstream os_;
};

Json task_json(const SyntheticTask& t) {
  return {{"kind", std::string(to_string(t.kind))},
          {"core_dim", t.core_dim},
          {"spurious_dim", t.spurious_dim},
          {"domain_count", t.domain_count},
          {"unseen_count", t.unseen_count},
          {"spurious_strength", t.spurious_strength},
          {"unseen_strength", t.unseen_strength},
          {"core_scale", t.core_scale},
          {"unseen_core_scale", t.unseen_core_scale},
          {"label_noise", t.label_noise},
          {"samples_per_domain", t.samples_per_domain},
          {"test_samples_per_domain", t.test_samples_per_domain},
          {"rotation_step_deg", t.rotation_step_deg},
          {"seed", t.seed}};
}

Json train_json(const TrainConfig& c) {
  return {{"method", std::string(to_string(c.method))},
          {"penalty", std::string(to_string(c.penalty_kind))},
          {"penalty_weight", c.penalty_weight},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"domains_per_batch", c.domains_per_batch},
          {"samples_per_domain", c.samples_per_domain},
          {"steps_per_epoch", c.steps_per_epoch},
          {"beta_zero", c.beta_zero},
          {"ba_iterations", c.ba_iterations},
          {"branch_mode", std::string(to_string(c.branch_mode))},
          {"gamma_init", c.gamma_init},
          {"gamma_decay", c.gamma_decay},
          {"fish_inner_steps", c.fish_inner_steps},
          {"hidden", c.hidden},
          {"loss", std::string(to_string(c.loss))},
          {"eval_penalty", std::string(to_string(c.eval_penalty))},
          {"seed", c.seed}};
}

Json prop1_json(const Prop1Config& c) {
  return {{"objective", c.objective}, {"dim", c.dim},           {"init_scale", c.init_scale},
          {"bias_norm", c.bias_D},    {"steps", c.steps},       {"noise_scale", c.noise_scale},
          {"seeds", c.seeds},         {"seed", c.seed}};
}

Json rows_json(const std::vector<ParamVector>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(std::vector<double>(r.begin(), r.end()));
  return out;
}

Json rdcurve_json(const RdCurveConfig& c) {
  return {{"betas", c.betas},
          {"gamma", c.instance.gamma},
          {"iterations", c.iterations},
          {"candidates", rows_json(c.instance.candidates)},
          {"penalty", c.instance.penalty},
          {"domain_grads", rows_json(c.instance.domain_grads)}};
}

Json sweep_json(const SweepConfig& c) { return {{"beta_zeros", c.beta_zeros}, {"seeds", c.seeds}}; }

struct RunContext {
  std::string command;
  CommandOptions options;
  ExperimentConfig config;
  fs::path metrics_path;
  fs::path summary_path;
  std::string started_at;
};

void write_outputs(const RunContext& ctx, const std::string& metrics, Json results, Json snapshot) {
  Json manifest = {{"command", ctx.command},
                   {"version", SDG_VERSION},
                   {"seed", ctx.config.seed},
                   {"config_path", ctx.options.config_path.string()},
                   {"config", std::move(snapshot)},
                   {"started_at", ctx.started_at},
                   {"finished_at", utc_now()},
                   {"outputs", {ctx.metrics_path.filename().string(), ctx.summary_path.filename().string()}}};
  Json summary = {{"results", std::move(results)}, {"manifest", std::move(manifest)}};
  write_file_atomic(ctx.metrics_path, metrics);
  write_file_atomic(ctx.summary_path, summary.dump(2) + "\n");
}

template <typename Body>
int guarded(std::string_view command, const CommandOptions& options, std::ostream& err, Body&& body) {
  try {
    RunContext ctx;
    ctx.command = std::string(command);
    ctx.options = options;
    ctx.config = load_config(options.config_path);
    if (options.seed) ctx.config.apply_seed(*options.seed);
    ctx.config.validate();

    const fs::path out_dir = options.out_dir.empty() ? fs::path("runs") / ctx.command : options.out_dir;
    ctx.metrics_path = out_dir / "metrics.csv";
    ctx.summary_path = out_dir / "summary.json";
    if (!options.overwrite && (fs::exists(ctx.metrics_path) || fs::exists(ctx.summary_path)))
      throw OutputCollision("outputs already exist in '" + out_dir.string() + "' (pass --overwrite to replace them)");
    fs::create_directories(out_dir);
    ctx.started_at = utc_now();
    body(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const OutputCollision& e) {
    err << "output collision: " << e.what() << '\n';
    return kExitOutputCollision;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumericError;
  } catch (const std::invalid_argument& e) {
    // Shape, sampling and parameter errors all trace back to the configuration.
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

const std::map<std::string, std::vector<std::string>, std::less<>> kColumns = {
    {"train",
     {"epoch", "step", "domain_losses", "penalty", "beta", "gamma", "in_dist_loss", "in_dist_acc", "unseen_loss",
      "unseen_acc", "gen_gap"}},
    {"prop1", {"row", "seed", "avg_sq_grad_norm", "bound_value", "bound_satisfied"}},
    {"rdcurve", {"beta", "expected_distortion", "expected_penalty", "mutual_information"}},
    {"sweep", {"seed", "beta_zero", "in_dist_loss", "in_dist_acc", "penalty", "unseen_loss", "unseen_acc"}},
};

}  // namespace

const std::vector<std::string>& metrics_columns(std::string_view command) {
  const auto it = kColumns.find(command);
  if (it == kColumns.end()) throw ConfigError("unknown command '" + std::string(command) + "'");
  return it->second;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

int cmd_train(const CommandOptions& options, std::ostream& err) {
  return guarded("train", options, err, [](RunContext& ctx) {
    ctx.config.require_section("train");
    const TaskData data = generate(ctx.config.task);
    const RunResult run = train(data, ctx.config.train);

    Csv csv(metrics_columns("train"));
    for (const auto& m : run.epochs) {
      csv.row({std::to_string(m.epoch), std::to_string(m.step), join(m.domain_losses, ';'), format_double(m.penalty),
               format_double(m.last_step.beta), format_double(m.last_step.gamma), format_double(m.in_dist_loss),
               format_double(m.in_dist_acc), format_double(m.unseen_loss), format_double(m.unseen_acc),
               format_double(m.gen_gap)});
    }
    const EpochMetrics& last = run.epochs.back();
    Json results = {{"epochs", ctx.config.train.epochs},
                    {"steps", last.step},
                    {"in_dist_loss", number(last.in_dist_loss)},
                    {"in_dist_acc", number(last.in_dist_acc)},
                    {"unseen_loss", number(last.unseen_loss)},
                    {"unseen_acc", number(last.unseen_acc)},
                    {"penalty", number(last.penalty)},
                    {"gen_gap", number(last.gen_gap)}};
    write_outputs(ctx, csv.str(), std::move(results),
                  {{"task", task_json(ctx.config.task)}, {"train", train_json(ctx.config.train)}});
  });
}

int cmd_prop1(const CommandOptions& options, std::ostream& err) {
  return guarded("prop1", options, err, [](RunContext& ctx) {
    ctx.config.require_section("prop1");
    const Prop1Result res = run_prop1(ctx.config.prop1);

    Csv csv(metrics_columns("prop1"));
    for (std::size_t s = 0; s < res.per_seed_avg.size(); ++s) {
      csv.row({"seed", std::to_string(s), format_double(res.per_seed_avg[s]), format_double(res.bound_value),
               res.per_seed_avg[s] <= res.bound_value ? "true" : "false"});
    }
    csv.row({"aggregate", "", format_double(res.avg_sq_grad_norm), format_double(res.bound_value),
             res.bound_satisfied() ? "true" : "false"});

    Json results = {{"objective", ctx.config.prop1.objective},
                    {"seeds", res.per_seed_avg.size()},
                    {"steps", ctx.config.prop1.steps},
                    {"bias_norm", ctx.config.prop1.bias_D},
                    {"delta", number(res.constants.delta)},
                    {"smoothness", number(res.constants.smoothness)},
                    {"lipschitz", number(res.constants.lipschitz)},
                    {"second_moment", number(res.constants.second_moment)},
                    {"step_size", number(res.step_size)},
                    {"avg_sq_grad_norm", number(res.avg_sq_grad_norm)},
                    {"bound_value", number(res.bound_value)},
                    {"bound_satisfied", res.bound_satisfied()}};
    write_outputs(ctx, csv.str(), std::move(results), {{"prop1", prop1_json(ctx.config.prop1)}});
  });
}

int cmd_rdcurve(const CommandOptions& options, std::ostream& err) {
  return guarded("rdcurve", options, err, [](RunContext& ctx) {
    ctx.config.require_section("rdcurve");
    const RdCurveConfig& rc = ctx.config.rdcurve;
    const std::vector<RdPoint> points = rd_curve(rc.instance, rc.betas, rc.iterations);

    Csv csv(metrics_columns("rdcurve"));
    for (const auto& p : points) {
      csv.row({format_double(p.beta), format_double(p.expected_distortion), format_double(p.expected_penalty),
               format_double(p.mutual_information)});
    }
    Json monotone = "not_applicable";
    Json convex = "not_applicable";
    if (points.size() > 1) {
      monotone = is_monotone(points);
      convex = is_convex(points);
    }
    Json results = {{"points", points.size()},
                    {"monotone", monotone},
                    {"convex", convex},
                    {"zero_distortion_penalty", number(zero_distortion_penalty(rc.instance))}};
    write_outputs(ctx, csv.str(), std::move(results), {{"rdcurve", rdcurve_json(rc)}});
  });
}

int cmd_sweep(const CommandOptions& options, std::ostream& err) {
  return guarded("sweep", options, err, [](RunContext& ctx) {
    ctx.config.require_section("sweep");
    const SweepConfig& sc = ctx.config.sweep;
    const std::size_t n = sc.beta_zeros.size();
    std::vector<SweepRow> mean(n);

    Csv csv(metrics_columns("sweep"));
    for (std::size_t s = 0; s < sc.seeds; ++s) {
      SyntheticTask task = ctx.config.task;
      TrainConfig base = ctx.config.train;
      task.seed = ctx.config.seed + s;
      base.seed = ctx.config.seed + s;
      const std::vector<SweepRow> rows = tradeoff_sweep(task, base, sc.beta_zeros);
      for (std::size_t i = 0; i < n; ++i) {
        const SweepRow& r = rows[i];
        csv.row({std::to_string(task.seed), format_double(r.beta_zero), format_double(r.in_dist_loss),
                 format_double(r.in_dist_acc), format_double(r.penalty), format_double(r.unseen_loss),
                 format_double(r.unseen_acc)});
        const double w = 1.0 / static_cast<double>(sc.seeds);
        mean[i].beta_zero = r.beta_zero;
        mean[i].in_dist_loss += w * r.in_dist_loss;
        mean[i].in_dist_acc += w * r.in_dist_acc;
        mean[i].penalty += w * r.penalty;
        mean[i].unseen_loss += w * r.unseen_loss;
        mean[i].unseen_acc += w * r.unseen_acc;
      }
    }
    Json table = Json::array();
    for (const auto& r : mean) {
      // Seed-mean rows only add information when there is more than one seed.
      if (sc.seeds > 1) {
        csv.row({"mean", format_double(r.beta_zero), format_double(r.in_dist_loss), format_double(r.in_dist_acc),
                 format_double(r.penalty), format_double(r.unseen_loss), format_double(r.unseen_acc)});
      }
      table.push_back({{"beta_zero", r.beta_zero},
                       {"in_dist_loss", number(r.in_dist_loss)},
                       {"in_dist_acc", number(r.in_dist_acc)},
                       {"penalty", number(r.penalty)},
                       {"unseen_loss", number(r.unseen_loss)},
                       {"unseen_acc", number(r.unseen_acc)}});
    }
    Json results = {{"seeds", sc.seeds}, {"mean", std::move(table)}};
    write_outputs(ctx, csv.str(), std::move(results),
                  {{"task", task_json(ctx.config.task)},
                   {"train", train_json(ctx.config.train)},
                   {"sweep", sweep_json(sc)}});
  });
}

int run_command(std::string_view command, const CommandOptions& options, std::ostream& err) {
  if (command == "train") return cmd_train(options, err);
  if (command == "prop1") return cmd_prop1(options, err);
  if (command == "rdcurve") return cmd_rdcurve(options, err);
  if (command == "sweep") return cmd_sweep(options, err);
  err << "config error: unknown command '" << command << "' (expected train|prop1|rdcurve|sweep)\n";
  return kExitConfigError;
}

}  // namespace sdg
