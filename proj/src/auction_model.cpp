#include "fairauction/auction_model.hpp"

#include <cmath>
#include <stdexcept>

namespace fairauction {

std::size_t Topology::allocation_outputs() const {
  const std::size_t itemwise = (agents + 1) * items;
  if (bidder_type == BidderType::Additive) return itemwise;
  return itemwise + agents * (items + 1);
}

void Topology::validate() const {
  if (agents == 0 || items == 0) throw std::invalid_argument("topology needs n >= 1 and m >= 1");
  if (hidden_width == 0) throw std::invalid_argument("topology needs hidden_width >= 1");
}

AuctionModel::AuctionModel(Topology topology) : topology_(topology) {
  topology_.validate();
  const auto add_net = [&](const std::string& prefix, std::size_t outputs) {
    std::size_t fan_in = topology_.inputs();
    for (std::size_t l = 0; l <= topology_.hidden_layers; ++l) {
      const std::size_t fan_out = l == topology_.hidden_layers ? outputs : topology_.hidden_width;
      const std::string base = prefix + "." + std::to_string(l);
      params_.push_back({base + ".weight", diff::Tensor({fan_in, fan_out})});
      params_.push_back({base + ".bias", diff::Tensor({fan_out})});
      fan_in = fan_out;
    }
  };
  add_net("alloc", topology_.allocation_outputs());
  payment_offset_ = params_.size();
  add_net("pay", topology_.agents);
}

AuctionModel::AuctionModel(Topology topology, std::uint64_t seed) : AuctionModel(topology) {
  Rng rng(seed, Stream::WeightInit);
  for (Parameter& p : params_) {
    if (p.value.rank() != 2) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.dim(0)));
    for (double& w : p.value.values()) w = rng.uniform(-bound, bound);
  }
}

AuctionModel AuctionModel::zeros(Topology topology) { return AuctionModel(topology); }

Parameter& AuctionModel::parameter(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t AuctionModel::parameter_count() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.value.size();
  return total;
}

AuctionModel::Bound AuctionModel::bind(diff::Tape& tape, bool requires_grad) const {
  Bound b;
  b.vars.reserve(params_.size());
  for (const Parameter& p : params_) b.vars.push_back(tape.leaf(p.value, requires_grad));
  return b;
}

diff::Var AuctionModel::mlp(const Bound& bound, std::size_t first_param, diff::Var x) const {
  const std::size_t layers = topology_.hidden_layers + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const diff::Var w = bound.vars[first_param + 2 * l];
    const diff::Var b = bound.vars[first_param + 2 * l + 1];
    x = diff::add(diff::matmul(x, w), b);
    if (l + 1 < layers) x = diff::tanh(x);
  }
  return x;
}

diff::Var AuctionModel::allocation_head(diff::Var logits) const {
  const std::size_t batch = logits.shape()[0];
  const std::size_t n = topology_.agents;
  const std::size_t m = topology_.items;
  const std::size_t itemwise_count = (n + 1) * m;

  // Per item: softmax over the n agents plus a dummy slot that keeps the item.
  diff::Var itemwise = topology_.bidder_type == BidderType::Additive
                           ? logits
                           : diff::narrow(logits, 1, 0, itemwise_count);
  itemwise = diff::reshape(itemwise, {batch, n + 1, m});
  itemwise = diff::narrow(diff::softmax(itemwise, 1), 1, 0, n);
  if (topology_.bidder_type == BidderType::Additive) return itemwise;

  // Per agent: softmax over the m items plus a dummy "nothing" slot.
  diff::Var agentwise = diff::narrow(logits, 1, itemwise_count, n * (m + 1));
  agentwise = diff::reshape(agentwise, {batch, n, m + 1});
  agentwise = diff::narrow(diff::softmax(agentwise, 2), 2, 0, m);
  return diff::minimum(itemwise, agentwise);
}

AuctionModel::Heads AuctionModel::forward(const Bound& bound, diff::Var bids) const {
  const diff::Shape& shape = bids.shape();
  if (shape.size() != 3 || shape[1] != topology_.agents || shape[2] != topology_.items) {
    throw diff::ShapeError("model expects bids [batch, " + std::to_string(topology_.agents) + ", " +
                           std::to_string(topology_.items) + "], got " + diff::to_string(shape));
  }
  const std::size_t batch = shape[0];
  const diff::Var flat = diff::reshape(bids, {batch, topology_.inputs()});

  Heads h;
  h.alloc = allocation_head(mlp(bound, 0, flat));
  h.payment_fraction = diff::sigmoid(mlp(bound, payment_offset_, flat));
  h.payments = fairauction::payments(h.payment_fraction, h.alloc, bids);
  return h;
}

Outcome AuctionModel::run(diff::Var bids) const {
  const Heads h = forward(bind(*bids.tape, false), bids);
  return {h.alloc, h.payments};
}

OutcomeValues AuctionModel::evaluate(const diff::Tensor& bids) const {
  diff::Tape tape;
  const Heads h = forward(bind(tape, false), tape.constant(bids));
  return {h.alloc.value(), h.payment_fraction.value(), h.payments.value()};
}

bool operator==(const AuctionModel& a, const AuctionModel& b) {
  if (!(a.topology_ == b.topology_) || a.params_.size() != b.params_.size()) return false;
  for (std::size_t k = 0; k < a.params_.size(); ++k) {
    if (a.params_[k].name != b.params_[k].name || !(a.params_[k].value == b.params_[k].value)) return false;
  }
  return true;
}

diff::Var allocate(const AuctionModel& model, diff::Var bids) { return model.run(bids).alloc; }

diff::Var payments(diff::Var fraction, diff::Var alloc, diff::Var valuations) {
  const diff::Var allocated_value = diff::sum(diff::mul(alloc, valuations), 2);
  return diff::mul(fraction, allocated_value);
}

diff::Var utilities(diff::Var valuations, diff::Var alloc, diff::Var payments) {
  return diff::sub(diff::sum(diff::mul(alloc, valuations), 2), payments);
}

namespace {

void check_profile(const diff::Tensor& a, const diff::Tensor& b, std::size_t agents) {
  if (a.rank() != 2 || a.shape() != b.shape() || a.dim(0) != agents) {
    throw diff::ShapeError("profile shapes disagree: " + diff::to_string(a.shape()) + " vs " +
                           diff::to_string(b.shape()));
  }
}

}  // namespace

std::vector<double> payments(std::span<const double> fraction, const diff::Tensor& alloc,
                             const diff::Tensor& valuations) {
  check_profile(alloc, valuations, fraction.size());
  std::vector<double> out(fraction.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double value = 0.0;
    for (std::size_t j = 0; j < alloc.dim(1); ++j) value += alloc.at(i, j) * valuations.at(i, j);
    out[i] = fraction[i] * value;
  }
  return out;
}

std::vector<double> utilities(const diff::Tensor& valuations, const diff::Tensor& alloc,
                              std::span<const double> payments) {
  check_profile(alloc, valuations, payments.size());
  std::vector<double> out(payments.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double value = 0.0;
    for (std::size_t j = 0; j < alloc.dim(1); ++j) value += valuations.at(i, j) * alloc.at(i, j);
    out[i] = value - payments[i];
  }
  return out;
}

}  // namespace fairauction
