#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sdg/datagen.hpp"
#include "sdg/discrete_ba.hpp"
#include "sdg/optimizer.hpp"
#include "sdg/theory.hpp"

namespace sdg {

struct RdCurveConfig {
  DiscreteBAInstance instance;  // the demo instance unless the file lists candidates
  std::vector<double> betas;
  std::size_t iterations = 500;
};

struct SweepConfig {
  std::vector<double> beta_zeros;
  std::size_t seeds = 1;  // run i uses seed + i for both the task and training
};

/// Everything a command can read from one config file. Sections absent from
/// the file keep their defaults; `sections` records which ones were present.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  SyntheticTask task;
  TrainConfig train;
  Prop1Config prop1;
  RdCurveConfig rdcurve;
  SweepConfig sweep;
  std::set<std::string> sections;
  std::map<std::string, int> key_lines;  // "section.key" -> source line (0 for JSON)

  bool has_section(std::string_view name) const { return sections.count(std::string(name)) > 0; }
  /// Throws ConfigError unless the section was present.
  void require_section(std::string_view name) const;
  /// Copies `seed` into the task, training and prop1 configs.
  void apply_seed(std::uint64_t value);
  /// Runs every validator; ConfigErrors that name a key get that key's line.
  void validate() const;
};

enum class ConfigFormat { kAuto, kToml, kJson };

/// TOML-shaped key/value text with one [section] per module, or the same
/// structure as a JSON object. kAuto picks JSON when the first non-blank
/// character is '{'. Throws ConfigError with the offending line.
ExperimentConfig parse_config(std::string_view text, ConfigFormat format = ConfigFormat::kAuto);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Four candidate updates in the plane against two disagreeing domains; used
/// when an [rdcurve] section does not list its own candidates.
DiscreteBAInstance demo_rd_instance();

}  // namespace sdg
