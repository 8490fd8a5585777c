#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdg/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Satisficing domain generalization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;

  for (const char* name : {"train", "prop1", "rdcurve", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "TOML or JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (default runs/<command>)");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_flag("--overwrite", overwrite, "replace existing outputs");
  }
  app.get_subcommand("train")->description("train one model and log per-epoch metrics");
  app.get_subcommand("prop1")->description("biased-SGD convergence check against its certified bound");
  app.get_subcommand("rdcurve")->description("penalty-distortion curve of a discrete instance");
  app.get_subcommand("sweep")->description("final metrics across a grid of beta schedules");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sdg::kExitConfigError;
  }

  sdg::CommandOptions options;
  options.config_path = config_path;
  options.out_dir = out_dir;
  options.seed = seed;
  options.overwrite = overwrite;
  return sdg::run_command(app.get_subcommands().front()->get_name(), options, std::cerr);
}
