#pragma once

#include <span>
#include <vector>

#include "fairauction/diffcore.hpp"
#include "fairauction/valuations.hpp"

namespace fairauction {

struct FairnessCategory {
  std::vector<std::size_t> agents;  // zero-based agent indices
  diff::Tensor distance;            // items x items, symmetric, zero diagonal, entries in [0,1]
};

// Partition of the agents into categories, each with its own item distance.
struct FairnessSpec {
  std::vector<FairnessCategory> categories;
  std::string label = "custom";

  void validate(std::size_t agents, std::size_t items) const;
};

// Off-diagonal d, zero diagonal.
diff::Tensor uniform_distance(std::size_t items, double d);

// D(j, j') = 1 - (1 - d)(1 - |f(j) - f(j')|).
diff::Tensor feature_distance(std::span<const int> features, double d);

FairnessSpec uniform_fairness(std::size_t agents, std::size_t items, double d);

// A, B, C and custom: uniform d over all agents. D, E: all agents on the f2
// metric. F: agents 1-2 on f2, agent 3 on f1.
FairnessSpec fairness_for_setting(const SettingSpec& setting, double d);

struct Unfairness {
  std::vector<double> per_item;
  double total = 0.0;
};

// unf_j = sum_{j'} sum_k max(0, sum_{i in C_k} max(0, z_ij - z_ij') - d^k(j, j')).
// alloc is agents x items.
Unfairness unfairness(const diff::Tensor& alloc, const FairnessSpec& spec);

// Differentiable variant over a batch: alloc [B, n, m] -> per-sample per-item [B, m].
diff::Var unfairness(diff::Var alloc, const FairnessSpec& spec);

}  // namespace fairauction
