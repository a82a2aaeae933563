#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fairauction/diffcore.hpp"

namespace fairauction {

enum class BidderType { Additive, UnitDemand };

std::string to_string(BidderType type);
BidderType parse_bidder_type(const std::string& text);

// Independent random streams derived from one user seed. Each purpose gets its
// own mt19937_64 seeded through splitmix64(seed, purpose), so drawing more from
// one stream never shifts another.
enum class Stream : std::uint64_t {
  TrainingData = 1,
  Shuffle = 2,
  MisreportInit = 3,
  WeightInit = 4,
  Evaluation = 5,
  Holdout = 6,
};

class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0);

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double low, double high) { return low + (high - low) * uniform(); }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Per-item box [low_j, high_j] shared by all agents.
struct SupportBox {
  std::vector<double> low;
  std::vector<double> high;

  double width(std::size_t item) const { return high[item] - low[item]; }
  bool contains(std::size_t item, double value) const {
    return value >= low[item] && value <= high[item];
  }
};

struct SettingSpec {
  std::string id = "custom";  // A..F or custom
  std::size_t agents = 1;
  std::size_t items = 2;
  BidderType bidder_type = BidderType::Additive;
  std::string distribution = "uniform";  // only uniform is supported
  std::vector<double> base_low;   // per-item uniform support before the shift
  std::vector<double> base_high;
  std::vector<int> feature1;      // f1 per item; shifts item values by b when set
  std::vector<int> feature2;
  double shift = 0.0;             // b

  // Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  SupportBox support() const;
};

SettingSpec setting_a();
SettingSpec setting_b();
SettingSpec setting_c(std::size_t agents, std::size_t items);
SettingSpec setting_d(double shift);
SettingSpec setting_e(double shift);
SettingSpec setting_f(double shift);
SettingSpec setting_by_id(const std::string& id, std::size_t agents, std::size_t items, double shift);

// count x agents x items tensor of i.i.d. values drawn uniformly from the support.
diff::Tensor sample_profiles(const SettingSpec& spec, std::size_t count, std::uint64_t seed,
                             Stream stream = Stream::TrainingData);

struct MyersonEstimate {
  double revenue = 0.0;
  double std_error = 0.0;
};

// Reserve price of the revenue-optimal single-item auction for U[low, high].
double myerson_reserve(double low, double high);

// Closed form for i.i.d. U[0,1] bidders: E[max(0, 2 v_max - 1)].
double myerson_revenue_uniform01(std::size_t agents);

// Monte Carlo revenue of selling every item separately by second price with the
// Myerson reserve.
MyersonEstimate itemwise_myerson_revenue(const SettingSpec& spec, std::size_t samples,
                                         std::uint64_t seed);

}  // namespace fairauction
