#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fairauction/auction_model.hpp"
#include "fairauction/diffcore.hpp"
#include "fairauction/valuations.hpp"

namespace fairauction {

enum class MisreportInit { Truthful, UniformRandom };

struct AscentOptions {
  std::size_t steps = 25;
  // Step size in value units; unset means 0.1 x the widest item support.
  std::optional<double> rate;
  MisreportInit init = MisreportInit::Truthful;
  // Restart 0 starts from `init`; every further restart from a uniform draw.
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  // Profiles per forward/backward chunk; 0 processes the whole batch at once.
  std::size_t chunk = 0;
};

double default_misreport_rate(const SupportBox& box);

// Entry [l, i, :] is agent i's misreport for profile l.
struct MisreportSet {
  diff::Tensor misreports;  // [B, n, m]
  diff::Tensor utility;     // [B, n], agent utility (true values) at the misreport
};

// Projected gradient ascent on each agent's utility, one agent at a time with
// the others bidding truthfully. Returns the best iterate seen along each
// trajectory and across restarts.
MisreportSet optimize_misreports(const Mechanism& mechanism, const diff::Tensor& profiles,
                                 const SupportBox& box, const AscentOptions& options);

struct RegretEstimate {
  std::vector<double> per_agent_mean;  // mean over profiles of max(0, u(v'; v) - u(v; v))
  diff::Tensor per_sample;             // [B, n]
};

RegretEstimate regret_estimate(const Mechanism& mechanism, const diff::Tensor& profiles,
                               const diff::Tensor& misreports, std::size_t chunk = 0);

// Batch layout shared by ascent and the training loss: row l*n + i of the
// expanded batch is profile l with agent i's bid replaced by its misreport.
diff::Tensor expand_misreports(const diff::Tensor& profiles, const diff::Tensor& misreports);
diff::Tensor tile_profiles(const diff::Tensor& profiles);
diff::Tensor own_agent_mask(std::size_t profiles, std::size_t agents);

// Single-item second price auction with a reserve, written out by hand. Used as
// a strategyproof reference when validating the regret estimator.
class SecondPriceMechanism : public Mechanism {
 public:
  SecondPriceMechanism(std::size_t agents, double reserve) : agents_(agents), reserve_(reserve) {}
  std::size_t agents() const override { return agents_; }
  std::size_t items() const override { return 1; }
  Outcome run(diff::Var bids) const override;

 private:
  std::size_t agents_;
  double reserve_;
};

}  // namespace fairauction
