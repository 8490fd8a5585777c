#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include "sdg/config.hpp"
#include "sdg/errors.hpp"

using namespace sdg;

namespace {

// Line number carried by the ConfigError that `fn` throws, or -1.
template <typename Fn>
int error_line(Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults survive an empty file") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.sections.empty());
  CHECK(c.seed == 0);
  CHECK(c.train.learning_rate == TrainConfig{}.learning_rate);
  CHECK(c.task.samples_per_domain == SyntheticTask{}.samples_per_domain);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("toml values land in the right fields") {
  const ExperimentConfig c = parse_config(R"(seed = 7

[task]
kind = "rotated_moons"
domain_count = 3
spurious_strength = [0.1, 0.2, 0.3]
core_scale = [1.0, 1.0, 1.0]
label_noise = 0.0

[train]
method = "fish_sdg"
penalty = "vrex"
penalty_weight = 2.5
learning_rate = 0.05
epochs = 12
hidden = [8, 4]
loss = "squared_error"
branch_mode = "signed_erm"
gamma_decay = 0.9
)");
  CHECK(c.seed == 7);
  CHECK(c.has_section("task"));
  CHECK(c.has_section("train"));
  CHECK_FALSE(c.has_section("prop1"));
  CHECK(c.task.kind == TaskKind::kRotatedMoons);
  CHECK(c.task.domain_count == 3);
  CHECK(c.task.spurious_strength == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(c.task.label_noise == 0.0);
  CHECK(c.train.method == Method::kFishSdg);
  CHECK(c.train.penalty_kind == PenaltyKind::kVrex);
  CHECK(c.train.penalty_weight == 2.5);
  CHECK(c.train.epochs == 12);
  CHECK(c.train.hidden == std::vector<std::size_t>{8, 4});
  CHECK(c.train.loss == LossKind::kSquaredError);
  CHECK(c.train.branch_mode == BranchMode::kSignedErm);
  CHECK(c.train.gamma_decay == 0.9);
  CHECK(c.key_lines.at("train.epochs") == 15);
}

TEST_CASE("json and toml agree") {
  const ExperimentConfig t = parse_config("seed = 3\n[train]\nepochs = 4\nhidden = [5]\n[sweep]\nbeta_zeros = [0.1, 1.0]\nseeds = 2\n");
  const ExperimentConfig j = parse_config(
      R"({"seed": 3, "train": {"epochs": 4, "hidden": [5]}, "sweep": {"beta_zeros": [0.1, 1.0], "seeds": 2}})");
  CHECK(t.seed == j.seed);
  CHECK(t.train.epochs == j.train.epochs);
  CHECK(t.train.hidden == j.train.hidden);
  CHECK(t.sweep.beta_zeros == j.sweep.beta_zeros);
  CHECK(t.sweep.seeds == j.sweep.seeds);
  CHECK(t.sections == j.sections);
  CHECK_THROWS_AS(parse_config("[train]\nepochs = 4\n", ConfigFormat::kJson), ConfigError);
}

TEST_CASE("prop1 and rdcurve sections") {
  const ExperimentConfig p = parse_config("[prop1]\nobjective = \"cosine\"\nbias_norm = 0.5\nsteps = 50\nseeds = 3\n");
  CHECK(p.prop1.objective == "cosine");
  CHECK(p.prop1.bias_D == 0.5);
  CHECK(p.prop1.steps == 50);
  CHECK(p.prop1.seeds == 3);

  const ExperimentConfig r = parse_config("[rdcurve]\nbetas = [0.0, 1.0]\ngamma = 0.2\n");
  CHECK(r.rdcurve.betas == std::vector<double>{0.0, 1.0});
  CHECK(r.rdcurve.instance.gamma == 0.2);
  CHECK(r.rdcurve.instance.candidates == demo_rd_instance().candidates);

  const ExperimentConfig custom = parse_config(
      "[rdcurve]\nbetas = [1.0]\ncandidates = [[0.0], [1.0]]\npenalty = [0.0, 1.0]\ndomain_grads = [[1.0]]\n");
  CHECK(custom.rdcurve.instance.candidates.size() == 2);
  CHECK(custom.rdcurve.instance.domain_grads.size() == 1);
  CHECK_NOTHROW(custom.validate());
}

TEST_CASE("demo instance is well formed") {
  const DiscreteBAInstance d = demo_rd_instance();
  CHECK_NOTHROW(d.validate());
  CHECK(d.num_candidates() == 4);
  CHECK(d.num_domains() == 2);
}

TEST_CASE("errors carry the offending line") {
  CHECK(error_line([] { parse_config("[train]\nepochs = 3\nbogus = 1\n"); }) == 3);
  CHECK(error_line([] { parse_config("[nonsense]\nx = 1\n"); }) >= 1);
  CHECK(error_line([] { parse_config("[train]\nepochs = \"many\"\n"); }) == 2);
  CHECK(error_line([] { parse_config("[train]\nepochs = -1\n"); }) == 2);
  CHECK(error_line([] { parse_config("[train]\nmethod = \"sgd\"\n"); }) == 2);
  CHECK(error_line([] { parse_config("[train]\nepochs = [\n"); }) >= 2);
  CHECK(error_line([] { parse_config("seed = 1\n\n[train]\nlearning_rate = 0.0\n").validate(); }) == 4);
  CHECK(error_line([] { parse_config("[prop1]\nsteps = 10\n"); }) >= 1);
  CHECK(error_line([] { parse_config("[rdcurve]\nbetas = [1.0, 0.5]\n").validate(); }) == 2);
  CHECK(error_line([] { parse_config("[sweep]\nbeta_zeros = []\n").validate(); }) == 2);
  CHECK(error_line([] { parse_config("extra = 1\n"); }) == 1);
  CHECK(error_line([] { parse_config("{\"train\": [1]}"); }) >= 0);
  CHECK(error_line([] { parse_config("{\"train\": {\"epochs\": 1,}}"); }) >= 1);
}

TEST_CASE("error messages name the key") {
  CHECK(error_text("[train]\nlearning_rate = -1.0\n").find("train.learning_rate") != std::string::npos);
  CHECK(error_text("[prop1]\nsteps = 10\n").find("prop1.objective") != std::string::npos);
  CHECK(error_text("[prop1]\nobjective = \"nope\"\n").find("nope") != std::string::npos);
  CHECK(error_text("[task]\ndomain_count = 1\n").find("task.domain_count") != std::string::npos);
  CHECK(error_text("[train]\nmethod = \"sdg\"\n") == "");
}

TEST_CASE("seed override reaches every consumer") {
  ExperimentConfig c = parse_config("seed = 1\n");
  c.apply_seed(99);
  CHECK(c.seed == 99);
  CHECK(c.task.seed == 99);
  CHECK(c.train.seed == 99);
  CHECK(c.prop1.seed == 99);
}

TEST_CASE("shipped configs load and validate") {
  const std::filesystem::path dir = SDG_CONFIG_DIR;
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()).validate());
    ++count;
  }
  CHECK(count >= 4);
  CHECK_THROWS_AS(load_config(dir / "missing.toml"), ConfigError);
}
