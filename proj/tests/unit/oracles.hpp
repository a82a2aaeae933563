#pragma once

// Reference computations written independently of the library, shared by the
// unit tests and the acceptance gate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fairauction/diffcore.hpp"
#include "fairauction/fairness.hpp"
#include "test_support.hpp"

namespace testing {

namespace diff = fairauction::diff;

// Reduces y to a scalar with fixed random weights so every output coordinate matters.
inline diff::Var weighted_sum(diff::Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return diff::sum(diff::mul(y, y.tape->constant(random_tensor(rng, y.shape(), 0.5, 1.5))));
}

using PointSource = std::function<diff::Tensor(std::mt19937_64&)>;

inline double worst_over_points(const diff::ScalarFunction& f, const PointSource& point, int points = 100) {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int k = 0; k < points; ++k) worst = std::max(worst, diff::grad_check(f, point(rng), 1e-5));
  return worst;
}

struct GradCase {
  std::string name;
  diff::ScalarFunction f;
  PointSource point;
};

// One case per primitive and operand position; kinked primitives draw points away from their kinks.
inline std::vector<GradCase> primitive_grad_cases() {
  using namespace fairauction::diff;
  std::mt19937_64 side(23);
  const Tensor w = random_tensor(side, {4, 3});
  const Tensor other = random_tensor(side, {5, 4});
  const Tensor row = random_tensor(side, {4});
  const Tensor zeros6({6}, 0.0);
  const auto pt = [](Shape s) -> PointSource { return [s](std::mt19937_64& r) { return random_tensor(r, s); }; };
  const auto kinkless = [](Shape s) -> PointSource { return [s](std::mt19937_64& r) { return away_from_zero(r, s); }; };

  std::vector<GradCase> cases = {
      {"matmul left", [=](Tape& t, Var x) { return weighted_sum(matmul(x, t.constant(w)), 1); }, pt({5, 4})},
      {"matmul right", [=](Tape& t, Var x) { return weighted_sum(matmul(t.constant(other), x), 2); }, pt({4, 3})},
      {"add", [=](Tape& t, Var x) { return weighted_sum(add(x, t.constant(other)), 3); }, pt({5, 4})},
      {"add broadcast", [=](Tape& t, Var x) { return weighted_sum(add(t.constant(other), x), 4); }, pt({4})},
      {"sub right", [=](Tape& t, Var x) { return weighted_sum(sub(t.constant(other), x), 5); }, pt({5, 4})},
      {"sub broadcast", [=](Tape& t, Var x) { return weighted_sum(sub(x, t.constant(row)), 6); }, pt({5, 4})},
      {"mul", [=](Tape& t, Var x) { return weighted_sum(mul(x, t.constant(other)), 7); }, pt({5, 4})},
      {"mul broadcast", [=](Tape& t, Var x) { return weighted_sum(mul(t.constant(other), x), 8); }, pt({4})},
      {"mul self", [](Tape&, Var x) { return weighted_sum(mul(x, x), 9); }, pt({5, 4})},
      {"minimum left", [=](Tape& t, Var x) { return weighted_sum(minimum(x, t.constant(zeros6)), 10); }, kinkless({6})},
      {"minimum right", [=](Tape& t, Var x) { return weighted_sum(minimum(t.constant(zeros6), x), 11); }, kinkless({6})},
      {"abs_diff", [=](Tape& t, Var x) { return weighted_sum(abs_diff(x, t.constant(zeros6)), 12); }, kinkless({6})},
      {"relu", [](Tape&, Var x) { return weighted_sum(relu(x), 13); }, kinkless({3, 4})},
      {"tanh", [](Tape&, Var x) { return weighted_sum(fairauction::diff::tanh(x), 14); }, pt({3, 4})},
      {"sigmoid", [](Tape&, Var x) { return weighted_sum(sigmoid(scale(x, 4.0)), 15); }, pt({3, 4})},
      {"square", [](Tape&, Var x) { return weighted_sum(square(x), 16); }, pt({3, 4})},
      {"sum", [](Tape&, Var x) { return square(sum(x)); }, pt({3, 4})},
      {"mean", [](Tape&, Var x) { return square(mean(x)); }, pt({3, 4})},
      {"narrow", [](Tape&, Var x) { return weighted_sum(square(narrow(x, 1, 1, 2)), 27); }, pt({2, 3, 4})},
      {"select", [](Tape&, Var x) { return weighted_sum(square(select(x, 2, {3, 0, 3, 1})), 28); }, pt({2, 3, 4})},
      {"pairwise_diff", [](Tape&, Var x) { return weighted_sum(square(pairwise_diff(x, 1)), 29); }, pt({2, 3, 4})},
      {"reshape", [](Tape&, Var x) { return weighted_sum(square(reshape(x, {6, 4})), 30); }, pt({2, 3, 4})},
  };
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const std::string a = " axis " + std::to_string(axis);
    cases.push_back({"softmax" + a, [axis](Tape&, Var x) { return weighted_sum(softmax(scale(x, 3.0), axis), 17 + axis); },
                     pt({2, 3, 4})});
    cases.push_back({"sum" + a, [axis](Tape&, Var x) { return weighted_sum(square(sum(x, axis)), 21 + axis); }, pt({2, 3, 4})});
    cases.push_back({"mean" + a, [axis](Tape&, Var x) { return weighted_sum(square(mean(x, axis)), 24 + axis); },
                     pt({2, 3, 4})});
  }
  return cases;
}

// Straight triple loop over (j, j', k) with an inner sum over the category's agents.
inline std::vector<double> brute_unfairness(const diff::Tensor& z, const fairauction::FairnessSpec& spec) {
  const std::size_t m = z.dim(1);
  std::vector<double> unf(m, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t jp = 0; jp < m; ++jp)
      for (const fairauction::FairnessCategory& cat : spec.categories) {
        double gap = 0.0;
        for (std::size_t i : cat.agents) gap += std::max(0.0, z.at(i, j) - z.at(i, jp));
        unf[j] += std::max(0.0, gap - cat.distance.at(j, jp));
      }
  return unf;
}

// True when every category-summed positive gap is within its distance.
inline bool satisfies_constraint(const diff::Tensor& z, const fairauction::FairnessSpec& spec) {
  const std::size_t m = z.dim(1);
  for (const fairauction::FairnessCategory& cat : spec.categories)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t jp = 0; jp < m; ++jp) {
        double gap = 0.0;
        for (std::size_t i : cat.agents) gap += std::max(0.0, z.at(i, j) - z.at(i, jp));
        if (gap > cat.distance.at(j, jp)) return false;
      }
  return true;
}

// Feasible allocation: each column is a random split of at most one unit.
inline diff::Tensor random_alloc(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  diff::Tensor z({n, m});
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> w(n + 1);
    for (double& x : w) x = u(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) z.at(i, j) = w[i] / total;
  }
  return z;
}

inline diff::Tensor random_distance(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  diff::Tensor d({m, m});
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = j + 1; k < m; ++k) d.at(j, k) = d.at(k, j) = u(rng) < 0.2 ? 0.0 : u(rng);
  return d;
}

// Random partition of the agents into categories with random distances.
inline fairauction::FairnessSpec random_spec(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::vector<std::size_t> agents(n);
  std::iota(agents.begin(), agents.end(), std::size_t{0});
  std::shuffle(agents.begin(), agents.end(), rng);
  const std::size_t cats = 1 + rng() % n;
  fairauction::FairnessSpec spec;
  for (std::size_t k = 0; k < cats; ++k) spec.categories.push_back({{}, random_distance(rng, m)});
  for (std::size_t idx = 0; idx < n; ++idx) spec.categories[idx < cats ? idx : rng() % cats].agents.push_back(agents[idx]);
  return spec;
}

// Expected revenue of one item sold by second price with reserve r to n i.i.d. U[0,1]
// bidders: the integral over t of P(payment > t), by the trapezoid rule.
inline double quadrature_myerson(std::size_t n, double r) {
  const double nn = static_cast<double>(n);
  double total = r * (1.0 - std::pow(r, nn));
  const int steps = 200000;
  const double h = (1.0 - r) / steps;
  for (int k = 0; k <= steps; ++k) {
    const double t = r + h * k;
    const double tail = 1.0 - std::pow(t, nn) - nn * std::pow(t, nn - 1.0) * (1.0 - t);
    total += (k == 0 || k == steps ? 0.5 : 1.0) * h * tail;
  }
  return total;
}

}  // namespace testing
