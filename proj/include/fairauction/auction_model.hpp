#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairauction/diffcore.hpp"
#include "fairauction/valuations.hpp"

namespace fairauction {

// Mechanism outcome recorded on a tape: alloc [B, n, m], payments [B, n].
struct Outcome {
  diff::Var alloc;
  diff::Var payments;
};

// Anything that maps a batch of bid profiles to allocations and payments.
// Implementations must be safe to call concurrently on distinct tapes.
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual std::size_t agents() const = 0;
  virtual std::size_t items() const = 0;
  virtual Outcome run(diff::Var bids) const = 0;
};

struct Topology {
  BidderType bidder_type = BidderType::Additive;
  std::size_t agents = 1;
  std::size_t items = 2;
  std::size_t hidden_layers = 2;
  std::size_t hidden_width = 100;

  std::size_t inputs() const { return agents * items; }
  // Additive: (n+1) x m item-wise logits. Unit-demand adds n x (m+1) agent-wise logits.
  std::size_t allocation_outputs() const;
  void validate() const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

struct Parameter {
  std::string name;
  diff::Tensor value;
};

// Concrete outcome for plain (non-taped) evaluation.
struct OutcomeValues {
  diff::Tensor alloc;             // [B, n, m]
  diff::Tensor payment_fraction;  // [B, n]
  diff::Tensor payments;          // [B, n]
};

// Allocation network ending in softmax heads and a separate payment network
// ending in a sigmoid payment fraction. Feasibility and IR hold by construction.
class AuctionModel : public Mechanism {
 public:
  // Weights uniform in +-1/sqrt(fan_in) from the WeightInit stream; biases zero.
  AuctionModel(Topology topology, std::uint64_t seed);
  // All parameters zero; used when loading checkpoints.
  static AuctionModel zeros(Topology topology);

  const Topology& topology() const { return topology_; }
  std::size_t agents() const override { return topology_.agents; }
  std::size_t items() const override { return topology_.items; }

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  Parameter& parameter(const std::string& name);
  std::size_t parameter_count() const;

  // Parameters placed on a tape as leaves, in parameters() order.
  struct Bound {
    std::vector<diff::Var> vars;
  };
  Bound bind(diff::Tape& tape, bool requires_grad) const;

  struct Heads {
    diff::Var alloc;             // [B, n, m]
    diff::Var payment_fraction;  // [B, n]
    diff::Var payments;          // [B, n]
  };
  Heads forward(const Bound& bound, diff::Var bids) const;

  Outcome run(diff::Var bids) const override;
  OutcomeValues evaluate(const diff::Tensor& bids) const;

  friend bool operator==(const AuctionModel& a, const AuctionModel& b);

 private:
  explicit AuctionModel(Topology topology);
  diff::Var mlp(const Bound& bound, std::size_t first_param, diff::Var x) const;
  diff::Var allocation_head(diff::Var logits) const;

  Topology topology_;
  std::vector<Parameter> params_;
  std::size_t payment_offset_ = 0;  // index of the first payment-network parameter
};

// alloc = softmax-based allocation, the remaining operations compose the
// payment and utility rules on a tape.
diff::Var allocate(const AuctionModel& model, diff::Var bids);

// p_i = fraction_i * sum_j z_ij v_ij. fraction [B, n], alloc and valuations [B, n, m].
diff::Var payments(diff::Var fraction, diff::Var alloc, diff::Var valuations);

// u_i = sum_j v_ij z_ij - p_i.
diff::Var utilities(diff::Var valuations, diff::Var alloc, diff::Var payments);

// Plain-value helpers on a single profile (agents x items).
std::vector<double> payments(std::span<const double> fraction, const diff::Tensor& alloc,
                             const diff::Tensor& valuations);
std::vector<double> utilities(const diff::Tensor& valuations, const diff::Tensor& alloc,
                              std::span<const double> payments);

}  // namespace fairauction
