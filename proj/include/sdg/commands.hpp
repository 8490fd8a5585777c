#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sdg {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitNumericError = 3,
  kExitOutputCollision = 4,
};

struct CommandOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  bool overwrite = false;
};

/// Column names of metrics.csv per command, in emission order.
const std::vector<std::string>& metrics_columns(std::string_view command);

/// Every command writes <out>/metrics.csv and <out>/summary.json, each via a
/// temporary file renamed into place. Diagnostics go to `err`.
int cmd_train(const CommandOptions& options, std::ostream& err);
int cmd_prop1(const CommandOptions& options, std::ostream& err);
int cmd_rdcurve(const CommandOptions& options, std::ostream& err);
int cmd_sweep(const CommandOptions& options, std::ostream& err);

/// Dispatches on "train" | "prop1" | "rdcurve" | "sweep"; unknown names give 2.
int run_command(std::string_view command, const CommandOptions& options, std::ostream& err);

/// Writes `contents` to `path` through a sibling temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace sdg
