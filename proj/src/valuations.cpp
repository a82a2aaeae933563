#include "fairauction/valuations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairauction {

std::string to_string(BidderType type) {
  return type == BidderType::Additive ? "additive" : "unit-demand";
}

BidderType parse_bidder_type(const std::string& text) {
  if (text == "additive") return BidderType::Additive;
  if (text == "unit-demand" || text == "unit_demand") return BidderType::UnitDemand;
  throw std::invalid_argument("unknown bidder_type '" + text + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, Stream stream, std::uint64_t substream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(stream) << 32 ^ substream))) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

void SettingSpec::validate() const {
  if (distribution != "uniform") {
    throw std::invalid_argument("setting: unsupported distribution '" + distribution + "'");
  }
  if (agents == 0 || items == 0) throw std::invalid_argument("setting needs n >= 1 and m >= 1");
  if (base_low.size() != items || base_high.size() != items) {
    throw std::invalid_argument("setting: per-item bounds must have length m=" + std::to_string(items));
  }
  for (std::size_t j = 0; j < items; ++j) {
    if (!(base_low[j] < base_high[j]) || !std::isfinite(base_low[j]) || !std::isfinite(base_high[j])) {
      throw std::invalid_argument("setting: item " + std::to_string(j + 1) + " needs low < high");
    }
  }
  const auto check_features = [&](const std::vector<int>& f, const char* name) {
    if (f.size() != items) {
      throw std::invalid_argument(std::string("setting: ") + name + " length " +
                                  std::to_string(f.size()) + " != m=" + std::to_string(items));
    }
    for (int v : f) {
      if (v != 0 && v != 1) throw std::invalid_argument(std::string("setting: ") + name + " must be binary");
    }
  };
  check_features(feature1, "f1");
  check_features(feature2, "f2");
  if (!(shift >= 0.0) || !std::isfinite(shift)) {
    throw std::invalid_argument("setting: discriminatory shift b must be >= 0");
  }
}

SupportBox SettingSpec::support() const {
  SupportBox box;
  for (std::size_t j = 0; j < items; ++j) {
    const double offset = shift * feature1[j];
    box.low.push_back(base_low[j] + offset);
    box.high.push_back(base_high[j] + offset);
  }
  return box;
}

namespace {

SettingSpec uniform_setting(std::string id, std::size_t n, std::size_t m, BidderType type,
                            double low, double high) {
  SettingSpec s;
  s.id = std::move(id);
  s.agents = n;
  s.items = m;
  s.bidder_type = type;
  s.base_low.assign(m, low);
  s.base_high.assign(m, high);
  s.feature1.assign(m, 0);
  s.feature2.assign(m, 0);
  return s;
}

SettingSpec featured_setting(std::string id, double shift, std::vector<int> f1, std::vector<int> f2) {
  SettingSpec s = uniform_setting(std::move(id), 3, 4, BidderType::Additive, 0.0, 1.0);
  s.feature1 = std::move(f1);
  s.feature2 = std::move(f2);
  s.shift = shift;
  s.validate();
  return s;
}

}  // namespace

SettingSpec setting_a() { return uniform_setting("A", 1, 2, BidderType::Additive, 0.0, 1.0); }
SettingSpec setting_b() { return uniform_setting("B", 1, 2, BidderType::UnitDemand, 2.0, 3.0); }

SettingSpec setting_c(std::size_t agents, std::size_t items) {
  SettingSpec s = uniform_setting("C", agents, items, BidderType::Additive, 0.0, 1.0);
  s.validate();
  return s;
}

SettingSpec setting_d(double shift) { return featured_setting("D", shift, {0, 0, 1, 1}, {0, 1, 0, 1}); }
SettingSpec setting_e(double shift) { return featured_setting("E", shift, {0, 0, 1, 1}, {1, 1, 0, 1}); }
SettingSpec setting_f(double shift) { return featured_setting("F", shift, {0, 0, 1, 1}, {0, 1, 0, 1}); }

SettingSpec setting_by_id(const std::string& id, std::size_t agents, std::size_t items, double shift) {
  if (id == "A") return setting_a();
  if (id == "B") return setting_b();
  if (id == "C") return setting_c(agents, items);
  if (id == "D") return setting_d(shift);
  if (id == "E") return setting_e(shift);
  if (id == "F") return setting_f(shift);
  throw std::invalid_argument("unknown setting '" + id + "'");
}

diff::Tensor sample_profiles(const SettingSpec& spec, std::size_t count, std::uint64_t seed, Stream stream) {
  spec.validate();
  if (count == 0) throw std::invalid_argument("sample_profiles: count must be >= 1");
  const SupportBox box = spec.support();
  Rng rng(seed, stream);
  diff::Tensor out({count, spec.agents, spec.items});
  std::size_t k = 0;
  for (std::size_t l = 0; l < count; ++l) {
    for (std::size_t i = 0; i < spec.agents; ++i) {
      for (std::size_t j = 0; j < spec.items; ++j) out[k++] = rng.uniform(box.low[j], box.high[j]);
    }
  }
  return out;
}

double myerson_reserve(double low, double high) {
  // Virtual value 2v - high crosses zero at high/2; never below the support.
  return std::max(low, 0.5 * high);
}

double myerson_revenue_uniform01(std::size_t agents) {
  const double n = static_cast<double>(agents);
  return 2.0 * n / (n + 1.0) * (1.0 - std::pow(0.5, n + 1.0)) - (1.0 - std::pow(0.5, n));
}

MyersonEstimate itemwise_myerson_revenue(const SettingSpec& spec, std::size_t samples, std::uint64_t seed) {
  spec.validate();
  if (samples == 0) throw std::invalid_argument("itemwise_myerson_revenue: samples must be >= 1");
  const SupportBox box = spec.support();
  Rng rng(seed, Stream::Evaluation);
  double total = 0.0;
  double total_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double revenue = 0.0;
    for (std::size_t j = 0; j < spec.items; ++j) {
      const double reserve = myerson_reserve(box.low[j], box.high[j]);
      double first = -INFINITY;
      double second = -INFINITY;
      for (std::size_t i = 0; i < spec.agents; ++i) {
        const double v = rng.uniform(box.low[j], box.high[j]);
        if (v > first) {
          second = first;
          first = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (first >= reserve) revenue += std::max(reserve, second);
    }
    total += revenue;
    total_sq += revenue * revenue;
  }
  const double n = static_cast<double>(samples);
  const double mean = total / n;
  const double var = std::max(0.0, total_sq / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace fairauction
