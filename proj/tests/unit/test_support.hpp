#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fairauction/diffcore.hpp"

namespace testing {

using fairauction::diff::Shape;
using fairauction::diff::Tensor;

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Entries with magnitude in [margin, margin + 1] and random sign: clear of a kink at 0.
inline Tensor away_from_zero(std::mt19937_64& rng, Shape shape, double margin = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = (u(rng) < 0.5 ? -1.0 : 1.0) * (margin + u(rng));
  return t;
}

}  // namespace testing
