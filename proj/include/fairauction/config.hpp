#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairauction/fairness.hpp"
#include "fairauction/reporting.hpp"
#include "fairauction/trainer.hpp"
#include "fairauction/valuations.hpp"

namespace fairauction {

// Rejected configuration; the message starts with the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kConfigFormat = "fairauction-config-v1";

enum class CategoryMetric { Uniform, Feature1, Feature2 };

struct CategoryConfig {
  std::vector<std::size_t> agents;  // one-based, as written in the file
  CategoryMetric metric = CategoryMetric::Uniform;
};

struct ExperimentConfig {
  SettingSpec setting;
  double d = 1.0;
  // Empty means the setting's default partition.
  std::vector<CategoryConfig> categories;
  TrainConfig train;
  EvalOptions eval;
  std::vector<double> sweep_d = {1.0, 0.75, 0.5, 0.25, 0.0};
  std::vector<double> sweep_b;  // empty: keep the setting's b
  double heatmap_resolution = 0.01;
  std::uint64_t seed = 0;

  // Sets the seed everywhere it is consumed.
  void set_seed(std::uint64_t value);
  FairnessSpec fairness() const { return fairness_at(d); }
  FairnessSpec fairness_at(double d_value) const;
  // Same setting with its value shift replaced.
  SettingSpec setting_at(double b) const;
};

// Hidden layers per (n, m) for setting C; 2 for A and B, 3 otherwise.
std::size_t default_hidden_layers(const SettingSpec& setting);

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Every resolved field, in a form parse_config_text reads back unchanged.
void write_resolved_config(const ExperimentConfig& config, std::ostream& out);

}  // namespace fairauction
