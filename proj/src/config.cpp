#include "sdg/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "sdg/errors.hpp"

namespace sdg {

namespace {

const std::map<std::string, std::set<std::string>, std::less<>> kSectionKeys = {
    {"task",
     {"kind", "core_dim", "spurious_dim", "domain_count", "unseen_count", "spurious_strength", "unseen_strength",
      "core_scale", "unseen_core_scale", "label_noise", "samples_per_domain", "test_samples_per_domain",
      "rotation_step_deg"}},
    {"train",
     {"method", "penalty", "penalty_weight", "learning_rate", "epochs", "domains_per_batch", "samples_per_domain",
      "steps_per_epoch", "beta_zero", "ba_iterations", "branch_mode", "gamma_init", "gamma_decay",
      "fish_inner_steps", "hidden", "loss", "eval_penalty"}},
    {"prop1", {"objective", "dim", "init_scale", "bias_norm", "steps", "noise_scale", "seeds"}},
    {"rdcurve", {"betas", "gamma", "iterations", "candidates", "penalty", "domain_grads"}},
    {"sweep", {"beta_zeros", "seeds"}},
};

int line_of(const toml::node& node) { return static_cast<int>(node.source().begin.line); }

double as_real(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>(); v && node.is_number()) return *v;
  throw ConfigError(key + " must be a number", line_of(node));
}

std::uint64_t as_u64(const toml::node& node, const std::string& key) {
  const auto* v = node.as_integer();
  if (v == nullptr || v->get() < 0) throw ConfigError(key + " must be a non-negative integer", line_of(node));
  return static_cast<std::uint64_t>(v->get());
}

std::size_t as_count(const toml::node& node, const std::string& key) {
  return static_cast<std::size_t>(as_u64(node, key));
}

std::string as_text(const toml::node& node, const std::string& key) {
  if (const auto* v = node.as_string()) return v->get();
  throw ConfigError(key + " must be a string", line_of(node));
}

const toml::array& as_array(const toml::node& node, const std::string& key) {
  if (const auto* a = node.as_array()) return *a;
  throw ConfigError(key + " must be an array", line_of(node));
}

std::vector<double> as_reals(const toml::node& node, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : as_array(node, key)) out.push_back(as_real(item, key));
  return out;
}

std::vector<std::size_t> as_counts(const toml::node& node, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : as_array(node, key)) out.push_back(as_count(item, key));
  return out;
}

std::vector<ParamVector> as_rows(const toml::node& node, const std::string& key) {
  std::vector<ParamVector> out;
  for (const auto& item : as_array(node, key)) out.emplace_back(as_reals(item, key));
  return out;
}

// Runs a name parser and re-throws its complaint against the key's line.
template <typename Fn>
auto parse_name(const toml::node& node, const std::string& key, Fn&& fn) {
  const std::string name = as_text(node, key);
  try {
    return fn(name);
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what(), line_of(node));
  }
}

void read_task(const std::string& key, const toml::node& v, SyntheticTask& t) {
  const std::string name = key.substr(key.find('.') + 1);
  if (name == "kind") t.kind = parse_name(v, key, [](const std::string& s) { return parse_task_kind(s); });
  else if (name == "core_dim") t.core_dim = as_count(v, key);
  else if (name == "spurious_dim") t.spurious_dim = as_count(v, key);
  else if (name == "domain_count") t.domain_count = as_count(v, key);
  else if (name == "unseen_count") t.unseen_count = as_count(v, key);
  else if (name == "spurious_strength") t.spurious_strength = as_reals(v, key);
  else if (name == "unseen_strength") t.unseen_strength = as_reals(v, key);
  else if (name == "core_scale") t.core_scale = as_reals(v, key);
  else if (name == "unseen_core_scale") t.unseen_core_scale = as_reals(v, key);
  else if (name == "label_noise") t.label_noise = as_real(v, key);
  else if (name == "samples_per_domain") t.samples_per_domain = as_count(v, key);
  else if (name == "test_samples_per_domain") t.test_samples_per_domain = as_count(v, key);
  else if (name == "rotation_step_deg") t.rotation_step_deg = as_real(v, key);
}

void read_train(const std::string& key, const toml::node& v, TrainConfig& c) {
  const std::string name = key.substr(key.find('.') + 1);
  if (name == "method") c.method = parse_name(v, key, [](const std::string& s) { return parse_method(s); });
  else if (name == "penalty")
    c.penalty_kind = parse_name(v, key, [](const std::string& s) { return parse_penalty_kind(s); });
  else if (name == "eval_penalty")
    c.eval_penalty = parse_name(v, key, [](const std::string& s) { return parse_penalty_kind(s); });
  else if (name == "branch_mode")
    c.branch_mode = parse_name(v, key, [](const std::string& s) { return parse_branch_mode(s); });
  else if (name == "loss") c.loss = parse_name(v, key, [](const std::string& s) { return parse_loss_kind(s); });
  else if (name == "penalty_weight") c.penalty_weight = as_real(v, key);
  else if (name == "learning_rate") c.learning_rate = as_real(v, key);
  else if (name == "epochs") c.epochs = as_count(v, key);
  else if (name == "domains_per_batch") c.domains_per_batch = as_count(v, key);
  else if (name == "samples_per_domain") c.samples_per_domain = as_count(v, key);
  else if (name == "steps_per_epoch") c.steps_per_epoch = as_count(v, key);
  else if (name == "beta_zero") c.beta_zero = as_real(v, key);
  else if (name == "ba_iterations") c.ba_iterations = as_count(v, key);
  else if (name == "gamma_init") c.gamma_init = as_real(v, key);
  else if (name == "gamma_decay") c.gamma_decay = as_real(v, key);
  else if (name == "fish_inner_steps") c.fish_inner_steps = as_count(v, key);
  else if (name == "hidden") c.hidden = as_counts(v, key);
}

void read_prop1(const std::string& key, const toml::node& v, Prop1Config& c) {
  const std::string name = key.substr(key.find('.') + 1);
  if (name == "objective") c.objective = as_text(v, key);
  else if (name == "dim") c.dim = as_count(v, key);
  else if (name == "init_scale") c.init_scale = as_real(v, key);
  else if (name == "bias_norm") c.bias_D = as_real(v, key);
  else if (name == "steps") c.steps = as_count(v, key);
  else if (name == "noise_scale") c.noise_scale = as_real(v, key);
  else if (name == "seeds") c.seeds = as_count(v, key);
}

void read_rdcurve(const std::string& key, const toml::node& v, RdCurveConfig& c) {
  const std::string name = key.substr(key.find('.') + 1);
  if (name == "betas") c.betas = as_reals(v, key);
  else if (name == "gamma") c.instance.gamma = as_real(v, key);
  else if (name == "iterations") c.iterations = as_count(v, key);
  else if (name == "candidates") c.instance.candidates = as_rows(v, key);
  else if (name == "penalty") c.instance.penalty = as_reals(v, key);
  else if (name == "domain_grads") c.instance.domain_grads = as_rows(v, key);
}

void read_sweep(const std::string& key, const toml::node& v, SweepConfig& c) {
  const std::string name = key.substr(key.find('.') + 1);
  if (name == "beta_zeros") c.beta_zeros = as_reals(v, key);
  else if (name == "seeds") c.seeds = as_count(v, key);
}

ExperimentConfig from_table(const toml::table& root) {
  ExperimentConfig out;
  out.rdcurve.instance = demo_rd_instance();
  bool custom_instance = false;

  for (const auto& [raw_key, node] : root) {
    const std::string section(raw_key.str());
    if (!node.is_table()) {
      if (section != "seed") throw ConfigError("unknown top-level key '" + section + "'", line_of(node));
      out.seed = as_u64(node, "seed");
      out.key_lines["seed"] = line_of(node);
      continue;
    }
    const auto allowed = kSectionKeys.find(section);
    if (allowed == kSectionKeys.end()) throw ConfigError("unknown section [" + section + "]", line_of(node));
    out.sections.insert(section);
    out.key_lines[section] = line_of(node);
    for (const auto& [raw_name, value] : *node.as_table()) {
      const std::string name(raw_name.str());
      const std::string key = section + "." + name;
      if (allowed->second.count(name) == 0) throw ConfigError("unknown key '" + key + "'", line_of(value));
      out.key_lines[key] = line_of(value);
      if (section == "task") read_task(key, value, out.task);
      else if (section == "train") read_train(key, value, out.train);
      else if (section == "prop1") read_prop1(key, value, out.prop1);
      else if (section == "rdcurve") {
        if (name == "candidates" || name == "penalty" || name == "domain_grads") {
          if (!custom_instance) out.rdcurve.instance = DiscreteBAInstance{{}, {}, {}, 0.0, out.rdcurve.instance.gamma};
          custom_instance = true;
        }
        read_rdcurve(key, value, out.rdcurve);
      } else if (section == "sweep") read_sweep(key, value, out.sweep);
    }
  }

  auto require_key = [&](const std::string& section, const std::string& name) {
    if (out.has_section(section) && out.key_lines.count(section + "." + name) == 0)
      throw ConfigError(section + "." + name + " is required", out.key_lines[section]);
  };
  require_key("prop1", "objective");
  require_key("rdcurve", "betas");
  require_key("sweep", "beta_zeros");
  out.apply_seed(out.seed);
  return out;
}

toml::table table_from_json(const nlohmann::json& j);

void append_json(toml::array& arr, const nlohmann::json& j);

template <typename Sink>
void insert_json(Sink&& sink, const nlohmann::json& j) {
  if (j.is_object()) sink(table_from_json(j));
  else if (j.is_array()) {
    toml::array arr;
    for (const auto& item : j) append_json(arr, item);
    sink(std::move(arr));
  } else if (j.is_boolean()) sink(j.get<bool>());
  else if (j.is_number_integer()) sink(j.get<std::int64_t>());
  else if (j.is_number()) sink(j.get<double>());
  else if (j.is_string()) sink(j.get<std::string>());
  else throw ConfigError("null values are not allowed");
}

void append_json(toml::array& arr, const nlohmann::json& j) {
  insert_json([&](auto&& v) { arr.push_back(std::forward<decltype(v)>(v)); }, j);
}

toml::table table_from_json(const nlohmann::json& j) {
  toml::table table;
  for (const auto& [key, value] : j.items())
    insert_json([&](auto&& v) { table.insert_or_assign(key, std::forward<decltype(v)>(v)); }, value);
  return table;
}

ExperimentConfig parse_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t end = std::min(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
    throw ConfigError(std::string("invalid JSON: ") + e.what(), line);
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object", 1);
  return from_table(table_from_json(j));
}

ExperimentConfig parse_toml_text(std::string_view text) {
  try {
    return from_table(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()), static_cast<int>(e.source().begin.line));
  }
}

std::string leading_key(const std::string& message) {
  const std::size_t end = message.find_first_of(" :");
  return message.substr(0, end);
}

}  // namespace

void ExperimentConfig::require_section(std::string_view name) const {
  if (!has_section(name)) throw ConfigError("missing [" + std::string(name) + "] section");
}

void ExperimentConfig::apply_seed(std::uint64_t value) {
  seed = value;
  task.seed = value;
  train.seed = value;
  prop1.seed = value;
}

void ExperimentConfig::validate() const {
  try {
    task.validate();
    train.validate();
    if (has_section("prop1")) {
      find_objective(prop1.objective);
      if (prop1.dim < 1) throw ConfigError("prop1.dim must be >= 1");
      if (prop1.steps < 1) throw ConfigError("prop1.steps must be >= 1");
      if (prop1.seeds < 1) throw ConfigError("prop1.seeds must be >= 1");
      if (!(prop1.bias_D >= 0.0)) throw ConfigError("prop1.bias_norm must be >= 0");
      if (!(prop1.noise_scale >= 0.0)) throw ConfigError("prop1.noise_scale must be >= 0");
      if (!(prop1.init_scale >= 0.0)) throw ConfigError("prop1.init_scale must be >= 0");
    }
    if (has_section("rdcurve")) {
      if (rdcurve.betas.empty()) throw ConfigError("rdcurve.betas must not be empty");
      for (std::size_t i = 0; i < rdcurve.betas.size(); ++i) {
        if (!(rdcurve.betas[i] >= 0.0)) throw ConfigError("rdcurve.betas must be >= 0");
        if (i > 0 && rdcurve.betas[i] < rdcurve.betas[i - 1])
          throw ConfigError("rdcurve.betas must be sorted ascending");
      }
      if (rdcurve.iterations < 1) throw ConfigError("rdcurve.iterations must be >= 1");
      if (!(rdcurve.instance.gamma > 0.0)) throw ConfigError("rdcurve.gamma must be > 0");
      try {
        rdcurve.instance.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("rdcurve.candidates: ") + e.what());
      }
    }
    if (has_section("sweep")) {
      if (sweep.beta_zeros.empty()) throw ConfigError("sweep.beta_zeros must not be empty");
      for (std::size_t i = 1; i < sweep.beta_zeros.size(); ++i)
        if (sweep.beta_zeros[i] < sweep.beta_zeros[i - 1])
          throw ConfigError("sweep.beta_zeros must be sorted ascending");
      if (sweep.seeds < 1) throw ConfigError("sweep.seeds must be >= 1");
    }
  } catch (const ConfigError& e) {
    if (e.line() > 0) throw;
    const auto it = key_lines.find(leading_key(e.what()));
    if (it == key_lines.end()) throw;
    throw ConfigError(e.what(), it->second);
  }
}

ExperimentConfig parse_config(std::string_view text, ConfigFormat format) {
  if (format == ConfigFormat::kAuto) {
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    format = (first != std::string_view::npos && text[first] == '{') ? ConfigFormat::kJson : ConfigFormat::kToml;
  }
  return format == ConfigFormat::kJson ? parse_json_text(text) : parse_toml_text(text);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const ConfigFormat format = path.extension() == ".json" ? ConfigFormat::kJson : ConfigFormat::kAuto;
  return parse_config(buffer.str(), format);
}

DiscreteBAInstance demo_rd_instance() {
  DiscreteBAInstance inst;
  inst.domain_grads = {ParamVector{1.0, 1.0}, ParamVector{1.0, -1.0}};
  inst.candidates = {ParamVector{1.0, 1.0}, ParamVector{1.0, -1.0}, ParamVector{1.0, 0.0}, ParamVector{0.0, 0.0}};
  inst.penalty = {1.0, 0.8, 0.1, 0.0};
  inst.beta = 0.0;
  inst.gamma = 0.1;
  return inst;
}

}  // namespace sdg
