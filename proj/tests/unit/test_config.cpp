#include <doctest.h>

#include <sstream>

#include "fairauction/config.hpp"

using namespace fairauction;

namespace {

std::string resolved(const ExperimentConfig& cfg) {
  std::ostringstream out;
  write_resolved_config(cfg, out);
  return out.str();
}

}  // namespace

TEST_CASE("a minimal config takes the documented defaults") {
  const ExperimentConfig cfg = parse_config_text("setting: A\nd: 1.0\n");
  CHECK(cfg.setting.id == "A");
  CHECK(cfg.setting.agents == 1);
  CHECK(cfg.d == 1.0);
  CHECK(cfg.seed == 0);
  CHECK(cfg.train.epochs == 120);
  CHECK(cfg.train.samples == 640000);
  CHECK(cfg.train.batch_size == 128);
  CHECK(cfg.train.misreport_steps == 25);
  CHECK(cfg.train.hidden_layers == 2);
  CHECK(cfg.train.hidden_width == 100);
  CHECK(cfg.eval.steps == 1000);
  CHECK(cfg.eval.restarts == 10);
  CHECK(cfg.sweep_d == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
  CHECK(cfg.fairness().categories.size() == 1);
  CHECK(cfg.fairness().categories[0].distance == uniform_distance(2, 1.0));
}

TEST_CASE("hidden layers follow the setting") {
  CHECK(parse_config_text("setting: {id: C, agents: 2, items: 3}\n").train.hidden_layers == 2);
  CHECK(parse_config_text("setting: {id: C, agents: 5, items: 6}\n").train.hidden_layers == 5);
  CHECK(parse_config_text("setting: {id: C, agents: 4, items: 4}\n").train.hidden_layers == 3);
  CHECK(parse_config_text("setting: B\n").train.hidden_layers == 2);
  CHECK(parse_config_text("setting: D\n").train.hidden_layers == 3);
  CHECK(parse_config_text("setting: {id: C, agents: 2, items: 2}\ntrain: {hidden_layers: 4}\n").train.hidden_layers == 4);
  CHECK(default_hidden_layers(setting_c(3, 5)) == 3);
}

TEST_CASE("seeds, shifts and fairness partitions") {
  const ExperimentConfig d = parse_config_text("setting: {id: D, b: 0.5}\nd: 0.25\nseed: 12\n");
  CHECK(d.setting.shift == 0.5);
  CHECK(d.seed == 12);
  CHECK(d.train.seed == 12);
  CHECK(d.eval.seed == 12);
  CHECK(d.fairness().categories[0].distance == feature_distance(setting_d(0.5).feature2, 0.25));
  CHECK(d.setting_at(1.0).shift == 1.0);
  CHECK(d.setting_at(1.0).support().low[3] == 1.0);
  CHECK(d.setting_at(1.0).support().high[0] == 1.0);

  const ExperimentConfig custom = parse_config_text(
      "setting: {id: custom, agents: 3, items: 2, feature1: [0, 1], feature2: [1, 1]}\n"
      "d: 0.5\n"
      "fairness:\n"
      "  categories:\n"
      "    - {agents: [1, 3], metric: f1}\n"
      "    - {agents: [2]}\n");
  const FairnessSpec f = custom.fairness();
  REQUIRE(f.categories.size() == 2);
  CHECK(f.categories[0].agents == std::vector<std::size_t>{0, 2});
  CHECK(f.categories[0].distance == feature_distance(std::vector<int>{0, 1}, 0.5));
  CHECK(f.categories[1].distance == uniform_distance(2, 0.5));
  CHECK(custom.fairness_at(1.0).categories[0].distance == uniform_distance(2, 1.0));
}

TEST_CASE("invalid configs name the offending key") {
  const auto rejects = [](const std::string& text, const std::string& fragment) {
    INFO(text);
    CHECK_THROWS_WITH_AS(parse_config_text(text), doctest::Contains(fragment.c_str()), ConfigError);
  };
  rejects("setting: A\nd: 1.5\n", "d outside [0,1]");
  rejects("setting: A\nd: -0.1\n", "d: d outside [0,1]");
  rejects("setting: A\ntrain: {epochs: 3, learnin_rate: 0.1}\n", "train.learnin_rate");
  rejects("setting: A\nbogus: 1\n", "bogus");
  rejects("setting: A\neval: {samples: many}\n", "eval.samples");
  rejects("setting: G\n", "setting");
  rejects("d: 0.5\n", "setting: required");
  rejects("setting: {id: A, agents: 3}\n", "setting");
  rejects("setting: {id: D, feature1: [0, 0, 1, 1]}\n", "setting.feature1");
  rejects("setting: A\nsweep: {d: [1.0, 2.0]}\n", "sweep.d[1]");
  rejects("setting: A\nsweep: {b: [-1]}\n", "sweep.b[0]");
  rejects("setting: A\ntrain: {batch_size: 0}\n", "batch");
  rejects("setting: A\nfairness: {categories: [{agents: [0]}]}\n", "fairness.categories[0].agents");
  rejects("setting: {id: C, agents: 2, items: 2}\nfairness: {categories: [{agents: [1]}]}\n", "fairness");
  rejects("setting: A\nformat: other-v9\n", "format");
  rejects("setting: A\nheatmap: {resolution: 0}\n", "heatmap.resolution");
  rejects("- 1\n- 2\n", "<root>");
  CHECK_THROWS_AS(parse_config("/nonexistent/config.yaml"), std::exception);
}

TEST_CASE("resolved configs read back unchanged") {
  for (const char* text :
       {"setting: A\nd: 0.5\n",
        "setting: {id: C, agents: 3, items: 4}\nd: 0.25\nseed: 77\n"
        "train: {epochs: 5, samples: 1000, misreport_rate: 0.05, holdout_every: 2}\n"
        "eval: {samples: 100, regret_samples: 0, misreport_rate: 0.2}\n"
        "sweep: {d: [1, 0], b: [0, 0.5]}\nheatmap: {resolution: 0.05}\n",
        "setting: {id: E, b: 0.75}\n",
        "setting: {id: custom, agents: 2, items: 2, bidder_type: unit-demand, low: [1, 2], high: [2, 4]}\n"
        "fairness: {categories: [{agents: [2], metric: uniform}, {agents: [1], metric: f2}]}\n"}) {
    INFO(text);
    const ExperimentConfig first = parse_config_text(text);
    const std::string once = resolved(first);
    CHECK(once.find(kConfigFormat) != std::string::npos);
    const ExperimentConfig second = parse_config_text(once);
    CHECK(resolved(second) == once);
    CHECK(second.setting.support().low == first.setting.support().low);
    CHECK(second.train.misreport_rate == first.train.misreport_rate);
    CHECK(second.sweep_b == first.sweep_b);
  }
}
