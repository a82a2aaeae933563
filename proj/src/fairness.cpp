#include "fairauction/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fairauction {

namespace {

void check_unit_interval(double d) {
  if (!(d >= 0.0 && d <= 1.0)) {
    throw std::invalid_argument("d outside [0,1]: " + std::to_string(d));
  }
}

bool is_identity_order(const std::vector<std::size_t>& agents, std::size_t n) {
  if (agents.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (agents[i] != i) return false;
  }
  return true;
}

}  // namespace

void FairnessSpec::validate(std::size_t agents, std::size_t items) const {
  if (categories.empty()) throw std::invalid_argument("fairness: no categories");
  std::vector<int> seen(agents, 0);
  for (std::size_t k = 0; k < categories.size(); ++k) {
    const auto& cat = categories[k];
    const std::string where = "fairness.categories[" + std::to_string(k) + "]";
    for (std::size_t i : cat.agents) {
      if (i >= agents) throw std::invalid_argument(where + ": agent " + std::to_string(i + 1) + " > n");
      if (seen[i]++) throw std::invalid_argument(where + ": agent " + std::to_string(i + 1) + " listed twice");
    }
    if (cat.distance.shape() != diff::Shape{items, items}) {
      throw std::invalid_argument(where + ": distance must be " + std::to_string(items) + "x" +
                                  std::to_string(items));
    }
    for (std::size_t a = 0; a < items; ++a) {
      if (cat.distance.at(a, a) != 0.0) throw std::invalid_argument(where + ": nonzero diagonal");
      for (std::size_t b = 0; b < items; ++b) {
        const double v = cat.distance.at(a, b);
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(where + ": distance outside [0,1]");
        if (v != cat.distance.at(b, a)) throw std::invalid_argument(where + ": distance not symmetric");
      }
    }
  }
  for (std::size_t i = 0; i < agents; ++i) {
    if (!seen[i]) {
      throw std::invalid_argument("fairness: partition does not cover agent " + std::to_string(i + 1));
    }
  }
}

diff::Tensor uniform_distance(std::size_t items, double d) {
  check_unit_interval(d);
  diff::Tensor out({items, items}, d);
  for (std::size_t j = 0; j < items; ++j) out.at(j, j) = 0.0;
  return out;
}

diff::Tensor feature_distance(std::span<const int> features, double d) {
  check_unit_interval(d);
  const std::size_t m = features.size();
  diff::Tensor out({m, m});
  for (std::size_t a = 0; a < m; ++a) {
    if (features[a] != 0 && features[a] != 1) {
      throw std::invalid_argument("feature_distance: features must be binary");
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const double gap = std::abs(features[a] - features[b]);
      out.at(a, b) = 1.0 - (1.0 - d) * (1.0 - gap);
    }
  }
  return out;
}

FairnessSpec uniform_fairness(std::size_t agents, std::size_t items, double d) {
  FairnessSpec spec;
  FairnessCategory all;
  all.agents.resize(agents);
  std::iota(all.agents.begin(), all.agents.end(), std::size_t{0});
  all.distance = uniform_distance(items, d);
  spec.categories.push_back(std::move(all));
  spec.label = "uniform";
  return spec;
}

FairnessSpec fairness_for_setting(const SettingSpec& setting, double d) {
  const std::string& id = setting.id;
  if (id == "D" || id == "E") {
    FairnessSpec spec;
    FairnessCategory all;
    all.agents.resize(setting.agents);
    std::iota(all.agents.begin(), all.agents.end(), std::size_t{0});
    all.distance = feature_distance(setting.feature2, d);
    spec.categories.push_back(std::move(all));
    spec.label = "f2";
    return spec;
  }
  if (id == "F") {
    if (setting.agents != 3) throw std::invalid_argument("setting F expects 3 agents");
    FairnessSpec spec;
    spec.categories.push_back({{0, 1}, feature_distance(setting.feature2, d)});
    spec.categories.push_back({{2}, feature_distance(setting.feature1, d)});
    spec.label = "f2/f1";
    return spec;
  }
  return uniform_fairness(setting.agents, setting.items, d);
}

Unfairness unfairness(const diff::Tensor& alloc, const FairnessSpec& spec) {
  if (alloc.rank() != 2) throw diff::ShapeError("unfairness: alloc must be agents x items");
  const std::size_t n = alloc.dim(0);
  const std::size_t m = alloc.dim(1);
  spec.validate(n, m);
  Unfairness out;
  out.per_item.assign(m, 0.0);
  for (const auto& cat : spec.categories) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        double gap = 0.0;
        for (std::size_t i : cat.agents) gap += std::max(0.0, alloc.at(i, j) - alloc.at(i, k));
        out.per_item[j] += std::max(0.0, gap - cat.distance.at(j, k));
      }
    }
  }
  for (double v : out.per_item) out.total += v;
  return out;
}

diff::Var unfairness(diff::Var alloc, const FairnessSpec& spec) {
  const diff::Shape& shape = alloc.shape();
  if (shape.size() != 3) {
    throw diff::ShapeError("unfairness: alloc must be [batch, agents, items], got " + diff::to_string(shape));
  }
  const std::size_t n = shape[1];
  spec.validate(n, shape[2]);
  diff::Tape& tape = *alloc.tape;

  // [B, n, m, m]: positive part of z_ij - z_ij'.
  const diff::Var gaps = diff::relu(diff::pairwise_diff(alloc, 2));
  diff::Var total{};
  bool first = true;
  for (const auto& cat : spec.categories) {
    if (cat.agents.empty()) continue;
    const diff::Var members = is_identity_order(cat.agents, n) ? gaps : diff::select(gaps, 1, cat.agents);
    const diff::Var summed = diff::sum(members, 1);  // [B, m, m]
    const diff::Var excess = diff::relu(diff::sub(summed, tape.constant(cat.distance)));
    const diff::Var per_item = diff::sum(excess, 2);  // [B, m]
    total = first ? per_item : diff::add(total, per_item);
    first = false;
  }
  return total;
}

}  // namespace fairauction
