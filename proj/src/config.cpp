#include "fairauction/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fairauction/checkpoint.hpp"

namespace fairauction {

namespace {

// Table of hidden-layer counts for setting C, indexed [n-1][m-2].
constexpr std::size_t kSettingCLayers[5][5] = {
    {2, 2, 2, 2, 2},
    {2, 2, 2, 3, 3},
    {2, 2, 3, 3, 3},
    {2, 3, 3, 4, 4},
    {3, 3, 4, 4, 5},
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void reject(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void require_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) reject(path.empty() ? "<root>" : path, "expected a mapping");
}

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) reject(join(path, key), "unknown key");
  }
}

template <typename T>
T read(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    reject(path, "malformed value '" + YAML::Dump(node) + "'");
  }
}

template <>
double read<double>(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) reject(path, "expected a number");
  try {
    return parse_double(node.Scalar());
  } catch (const std::exception&) {
    reject(path, "expected a number, got '" + node.Scalar() + "'");
  }
}

template <>
std::size_t read<std::size_t>(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) reject(path, "expected a non-negative integer");
  const std::string& s = node.Scalar();
  std::size_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    reject(path, "expected a non-negative integer, got '" + s + "'");
  }
  return value;
}

template <typename T>
void read_into(const YAML::Node& parent, const std::string& path, const char* key, T& target) {
  if (const YAML::Node node = parent[key]) target = read<T>(node, join(path, key));
}

template <typename T>
std::vector<T> read_list(const YAML::Node& node, const std::string& path) {
  std::vector<T> out;
  if (node.IsScalar()) {
    out.push_back(read<T>(node, path));
    return out;
  }
  if (!node.IsSequence()) reject(path, "expected a list");
  for (std::size_t k = 0; k < node.size(); ++k) out.push_back(read<T>(node[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

void check_unit(double v, const std::string& path) {
  if (!(v >= 0.0 && v <= 1.0)) reject(path, "d outside [0,1]: " + format_double(v, 6));
}

CategoryMetric parse_metric(const std::string& text, const std::string& path) {
  if (text == "uniform") return CategoryMetric::Uniform;
  if (text == "f1") return CategoryMetric::Feature1;
  if (text == "f2") return CategoryMetric::Feature2;
  reject(path, "unknown metric '" + text + "' (expected uniform, f1 or f2)");
}

const char* metric_name(CategoryMetric m) {
  switch (m) {
    case CategoryMetric::Uniform:
      return "uniform";
    case CategoryMetric::Feature1:
      return "f1";
    case CategoryMetric::Feature2:
      return "f2";
  }
  return "uniform";
}

SettingSpec parse_setting(const YAML::Node& root) {
  const YAML::Node s = root["setting"];
  if (!s) reject("setting", "required");
  std::string id;
  YAML::Node detail;
  if (s.IsScalar()) {
    id = s.Scalar();
  } else {
    require_map(s, "setting");
    check_keys(s, "setting",
               {"id", "agents", "items", "bidder_type", "distribution", "low", "high", "feature1", "feature2", "b"});
    if (!s["id"]) reject("setting.id", "required");
    id = read<std::string>(s["id"], "setting.id");
    detail = s;
  }

  std::size_t agents = 1;
  std::size_t items = 2;
  double b = 0.0;
  if (detail) {
    read_into(detail, "setting", "agents", agents);
    read_into(detail, "setting", "items", items);
    read_into(detail, "setting", "b", b);
  }
  if (b < 0.0) reject("setting.b", "must be >= 0");

  SettingSpec spec;
  if (id == "custom") {
    spec.id = "custom";
    spec.agents = agents;
    spec.items = items;
    if (detail["bidder_type"]) {
      try {
        spec.bidder_type = parse_bidder_type(read<std::string>(detail["bidder_type"], "setting.bidder_type"));
      } catch (const std::invalid_argument& e) {
        reject("setting.bidder_type", e.what());
      }
    }
    read_into(detail, "setting", "distribution", spec.distribution);
    const auto bounds = [&](const char* key, double fallback) {
      if (!detail[key]) return std::vector<double>(items, fallback);
      std::vector<double> v = read_list<double>(detail[key], join("setting", key));
      if (v.size() == 1) v.assign(items, v.front());
      return v;
    };
    spec.base_low = bounds("low", 0.0);
    spec.base_high = bounds("high", 1.0);
    spec.feature1 = detail["feature1"] ? read_list<int>(detail["feature1"], "setting.feature1") : std::vector<int>(items, 0);
    spec.feature2 = detail["feature2"] ? read_list<int>(detail["feature2"], "setting.feature2") : std::vector<int>(items, 0);
    spec.shift = b;
  } else {
    if (detail) {
      for (const char* key : {"bidder_type", "distribution", "low", "high", "feature1", "feature2"}) {
        if (detail[key]) reject(join("setting", key), "only allowed for custom settings");
      }
      if (id != "C" && (detail["agents"] || detail["items"])) {
        reject("setting", "agents and items are fixed for setting " + id);
      }
    }
    try {
      spec = setting_by_id(id, agents, items, b);
    } catch (const std::invalid_argument& e) {
      reject(s.IsScalar() ? "setting" : "setting.id", e.what());
    }
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    reject("setting", e.what());
  }
  return spec;
}

void parse_train(const YAML::Node& node, TrainConfig& t) {
  const std::string p = "train";
  require_map(node, p);
  check_keys(node, p,
             {"epochs", "samples", "batch_size", "misreport_steps", "misreport_rate", "learning_rate",
              "lambda_period_regret", "lambda_period_fairness", "rho_period_epochs", "rho_increment",
              "lambda_init_regret", "lambda_init_fairness", "rho_init_regret", "rho_init_fairness", "hidden_layers",
              "hidden_width", "holdout_every", "holdout_samples"});
  read_into(node, p, "epochs", t.epochs);
  read_into(node, p, "samples", t.samples);
  read_into(node, p, "batch_size", t.batch_size);
  read_into(node, p, "misreport_steps", t.misreport_steps);
  if (node["misreport_rate"]) t.misreport_rate = read<double>(node["misreport_rate"], "train.misreport_rate");
  read_into(node, p, "learning_rate", t.learning_rate);
  read_into(node, p, "lambda_period_regret", t.lambda_period_regret);
  read_into(node, p, "lambda_period_fairness", t.lambda_period_fairness);
  read_into(node, p, "rho_period_epochs", t.rho_period_epochs);
  read_into(node, p, "rho_increment", t.rho_increment);
  read_into(node, p, "lambda_init_regret", t.lambda_init_regret);
  read_into(node, p, "lambda_init_fairness", t.lambda_init_fairness);
  read_into(node, p, "rho_init_regret", t.rho_init_regret);
  read_into(node, p, "rho_init_fairness", t.rho_init_fairness);
  read_into(node, p, "hidden_layers", t.hidden_layers);
  read_into(node, p, "hidden_width", t.hidden_width);
  read_into(node, p, "holdout_every", t.holdout_every);
  read_into(node, p, "holdout_samples", t.holdout_samples);
}

void parse_eval(const YAML::Node& node, EvalOptions& e) {
  const std::string p = "eval";
  require_map(node, p);
  check_keys(node, p, {"samples", "regret_samples", "steps", "restarts", "misreport_rate", "chunk", "myerson_samples"});
  read_into(node, p, "samples", e.samples);
  read_into(node, p, "regret_samples", e.regret_samples);
  read_into(node, p, "steps", e.steps);
  read_into(node, p, "restarts", e.restarts);
  if (node["misreport_rate"]) e.rate = read<double>(node["misreport_rate"], "eval.misreport_rate");
  read_into(node, p, "chunk", e.chunk);
  read_into(node, p, "myerson_samples", e.myerson_samples);
  if (e.samples == 0) reject("eval.samples", "must be >= 1");
  if (e.rate && !(*e.rate > 0.0)) reject("eval.misreport_rate", "must be > 0");
}

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t value) {
  seed = value;
  train.seed = value;
  eval.seed = value;
}

FairnessSpec ExperimentConfig::fairness_at(double d_value) const {
  if (categories.empty()) return fairness_for_setting(setting, d_value);
  FairnessSpec spec;
  spec.label = "custom";
  for (const CategoryConfig& c : categories) {
    FairnessCategory cat;
    for (std::size_t a : c.agents) cat.agents.push_back(a - 1);
    switch (c.metric) {
      case CategoryMetric::Uniform:
        cat.distance = uniform_distance(setting.items, d_value);
        break;
      case CategoryMetric::Feature1:
        cat.distance = feature_distance(setting.feature1, d_value);
        break;
      case CategoryMetric::Feature2:
        cat.distance = feature_distance(setting.feature2, d_value);
        break;
    }
    spec.categories.push_back(std::move(cat));
  }
  return spec;
}

SettingSpec ExperimentConfig::setting_at(double b) const {
  SettingSpec s = setting;
  s.shift = b;
  s.validate();
  return s;
}

std::size_t default_hidden_layers(const SettingSpec& setting) {
  if (setting.id == "A" || setting.id == "B") return 2;
  if (setting.id == "C" && setting.agents >= 1 && setting.agents <= 5 && setting.items >= 2 && setting.items <= 6) {
    return kSettingCLayers[setting.agents - 1][setting.items - 2];
  }
  return 3;
}

ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("<root>: malformed file: ") + e.what());
  }
  require_map(root, "");
  check_keys(root, "", {"format", "setting", "d", "fairness", "train", "eval", "sweep", "heatmap", "seed"});
  if (root["format"] && read<std::string>(root["format"], "format") != kConfigFormat) {
    reject("format", "unsupported format marker");
  }

  ExperimentConfig cfg;
  cfg.setting = parse_setting(root);
  read_into(root, "", "d", cfg.d);
  check_unit(cfg.d, "d");

  if (const YAML::Node f = root["fairness"]) {
    require_map(f, "fairness");
    check_keys(f, "fairness", {"categories"});
    if (const YAML::Node cats = f["categories"]) {
      if (!cats.IsSequence()) reject("fairness.categories", "expected a list");
      for (std::size_t k = 0; k < cats.size(); ++k) {
        const std::string path = "fairness.categories[" + std::to_string(k) + "]";
        require_map(cats[k], path);
        check_keys(cats[k], path, {"agents", "metric"});
        CategoryConfig c;
        if (!cats[k]["agents"]) reject(join(path, "agents"), "required");
        c.agents = read_list<std::size_t>(cats[k]["agents"], join(path, "agents"));
        for (std::size_t a : c.agents) {
          if (a == 0) reject(join(path, "agents"), "agents are numbered from 1");
        }
        if (cats[k]["metric"]) c.metric = parse_metric(read<std::string>(cats[k]["metric"], join(path, "metric")), join(path, "metric"));
        cfg.categories.push_back(std::move(c));
      }
    }
  }

  cfg.train.hidden_layers = default_hidden_layers(cfg.setting);
  if (const YAML::Node t = root["train"]) parse_train(t, cfg.train);
  if (const YAML::Node e = root["eval"]) parse_eval(e, cfg.eval);

  if (const YAML::Node s = root["sweep"]) {
    require_map(s, "sweep");
    check_keys(s, "sweep", {"d", "b"});
    if (s["d"]) cfg.sweep_d = read_list<double>(s["d"], "sweep.d");
    if (s["b"]) cfg.sweep_b = read_list<double>(s["b"], "sweep.b");
    for (std::size_t k = 0; k < cfg.sweep_d.size(); ++k) check_unit(cfg.sweep_d[k], "sweep.d[" + std::to_string(k) + "]");
    for (std::size_t k = 0; k < cfg.sweep_b.size(); ++k) {
      if (!(cfg.sweep_b[k] >= 0.0)) reject("sweep.b[" + std::to_string(k) + "]", "must be >= 0");
    }
    if (cfg.sweep_d.empty()) reject("sweep.d", "must not be empty");
  }
  if (const YAML::Node h = root["heatmap"]) {
    require_map(h, "heatmap");
    check_keys(h, "heatmap", {"resolution"});
    read_into(h, "heatmap", "resolution", cfg.heatmap_resolution);
    if (!(cfg.heatmap_resolution > 0.0 && cfg.heatmap_resolution <= 1.0)) {
      reject("heatmap.resolution", "must be in (0, 1]");
    }
  }
  std::uint64_t seed = 0;
  read_into(root, "", "seed", seed);
  cfg.set_seed(seed);

  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    cfg.fairness().validate(cfg.setting.agents, cfg.setting.items);
  } catch (const std::invalid_argument& e) {
    reject("fairness", e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<root>: cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void write_resolved_config(const ExperimentConfig& c, std::ostream& out) {
  const auto num = [](double v) { return format_double(v); };
  const auto nums = [&](const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(num(x));
    return s;
  };
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "format" << YAML::Value << kConfigFormat;
  e << YAML::Key << "seed" << YAML::Value << c.seed;

  const SettingSpec& s = c.setting;
  e << YAML::Key << "setting" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "id" << YAML::Value << s.id;
  if (s.id == "C" || s.id == "custom") {
    e << YAML::Key << "agents" << YAML::Value << s.agents;
    e << YAML::Key << "items" << YAML::Value << s.items;
  }
  if (s.id == "custom") {
    e << YAML::Key << "bidder_type" << YAML::Value << to_string(s.bidder_type);
    e << YAML::Key << "distribution" << YAML::Value << s.distribution;
    e << YAML::Key << "low" << YAML::Value << YAML::Flow << nums(s.base_low);
    e << YAML::Key << "high" << YAML::Value << YAML::Flow << nums(s.base_high);
    if (!s.feature1.empty()) e << YAML::Key << "feature1" << YAML::Value << YAML::Flow << s.feature1;
    if (!s.feature2.empty()) e << YAML::Key << "feature2" << YAML::Value << YAML::Flow << s.feature2;
  }
  if (s.id != "A" && s.id != "B" && s.id != "C") e << YAML::Key << "b" << YAML::Value << num(s.shift);
  e << YAML::EndMap;

  e << YAML::Key << "d" << YAML::Value << num(c.d);
  if (!c.categories.empty()) {
    e << YAML::Key << "fairness" << YAML::Value << YAML::BeginMap << YAML::Key << "categories" << YAML::Value
      << YAML::BeginSeq;
    for (const CategoryConfig& cat : c.categories) {
      e << YAML::BeginMap << YAML::Key << "agents" << YAML::Value << YAML::Flow << cat.agents;
      e << YAML::Key << "metric" << YAML::Value << metric_name(cat.metric) << YAML::EndMap;
    }
    e << YAML::EndSeq << YAML::EndMap;
  }

  const TrainConfig& t = c.train;
  e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "epochs" << YAML::Value << t.epochs;
  e << YAML::Key << "samples" << YAML::Value << t.samples;
  e << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  e << YAML::Key << "misreport_steps" << YAML::Value << t.misreport_steps;
  if (t.misreport_rate) e << YAML::Key << "misreport_rate" << YAML::Value << num(*t.misreport_rate);
  e << YAML::Key << "learning_rate" << YAML::Value << num(t.learning_rate);
  e << YAML::Key << "lambda_period_regret" << YAML::Value << t.lambda_period_regret;
  e << YAML::Key << "lambda_period_fairness" << YAML::Value << t.lambda_period_fairness;
  e << YAML::Key << "rho_period_epochs" << YAML::Value << t.rho_period_epochs;
  e << YAML::Key << "rho_increment" << YAML::Value << num(t.rho_increment);
  e << YAML::Key << "lambda_init_regret" << YAML::Value << num(t.lambda_init_regret);
  e << YAML::Key << "lambda_init_fairness" << YAML::Value << num(t.lambda_init_fairness);
  e << YAML::Key << "rho_init_regret" << YAML::Value << num(t.rho_init_regret);
  e << YAML::Key << "rho_init_fairness" << YAML::Value << num(t.rho_init_fairness);
  e << YAML::Key << "hidden_layers" << YAML::Value << t.hidden_layers;
  e << YAML::Key << "hidden_width" << YAML::Value << t.hidden_width;
  e << YAML::Key << "holdout_every" << YAML::Value << t.holdout_every;
  e << YAML::Key << "holdout_samples" << YAML::Value << t.holdout_samples;
  e << YAML::EndMap;

  const EvalOptions& v = c.eval;
  e << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "samples" << YAML::Value << v.samples;
  e << YAML::Key << "regret_samples" << YAML::Value << v.regret_samples;
  e << YAML::Key << "steps" << YAML::Value << v.steps;
  e << YAML::Key << "restarts" << YAML::Value << v.restarts;
  if (v.rate) e << YAML::Key << "misreport_rate" << YAML::Value << num(*v.rate);
  e << YAML::Key << "chunk" << YAML::Value << v.chunk;
  e << YAML::Key << "myerson_samples" << YAML::Value << v.myerson_samples;
  e << YAML::EndMap;

  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "d" << YAML::Value << YAML::Flow << nums(c.sweep_d);
  if (!c.sweep_b.empty()) e << YAML::Key << "b" << YAML::Value << YAML::Flow << nums(c.sweep_b);
  e << YAML::EndMap;

  e << YAML::Key << "heatmap" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "resolution" << YAML::Value << num(c.heatmap_resolution);
  e << YAML::EndMap;
  e << YAML::EndMap;
  out << e.c_str() << '\n';
}

}  // namespace fairauction
