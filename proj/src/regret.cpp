#include "fairauction/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairauction {

namespace {

void check_profiles(const Mechanism& mech, const diff::Tensor& profiles) {
  if (profiles.rank() != 3 || profiles.dim(1) != mech.agents() || profiles.dim(2) != mech.items()) {
    throw diff::ShapeError("profiles must be [B, " + std::to_string(mech.agents()) + ", " +
                           std::to_string(mech.items()) + "], got " + diff::to_string(profiles.shape()));
  }
}

diff::Tensor slice_batch(const diff::Tensor& t, std::size_t begin, std::size_t count) {
  diff::Shape shape = t.shape();
  const std::size_t stride = t.size() / shape[0];
  shape[0] = count;
  std::vector<double> values(t.data() + begin * stride, t.data() + (begin + count) * stride);
  return diff::Tensor(shape, std::move(values));
}

void write_batch(diff::Tensor& dst, std::size_t begin, const diff::Tensor& src) {
  std::copy(src.values().begin(), src.values().end(), dst.data() + begin * (dst.size() / dst.dim(0)));
}

// Utility of each (profile, agent) under its own misreport: [B*n] values.
struct OwnUtility {
  diff::Var x;    // expanded bids leaf
  diff::Var own;  // [B*n]
};

OwnUtility own_utility(diff::Tape& tape, const Mechanism& mech, const diff::Tensor& profiles,
                       const diff::Tensor& misreports, bool track_input) {
  const std::size_t batch = profiles.dim(0);
  const std::size_t n = profiles.dim(1);
  OwnUtility r;
  r.x = tape.leaf(expand_misreports(profiles, misreports), track_input);
  const Outcome out = mech.run(r.x);
  const diff::Var truth = tape.constant(tile_profiles(profiles));
  const diff::Var u = utilities(truth, out.alloc, out.payments);
  r.own = diff::sum(diff::mul(u, tape.constant(own_agent_mask(batch, n))), 1);
  return r;
}

}  // namespace

double default_misreport_rate(const SupportBox& box) {
  double widest = 0.0;
  for (std::size_t j = 0; j < box.low.size(); ++j) widest = std::max(widest, box.width(j));
  return 0.1 * widest;
}

diff::Tensor expand_misreports(const diff::Tensor& profiles, const diff::Tensor& misreports) {
  if (profiles.shape() != misreports.shape() || profiles.rank() != 3) {
    throw diff::ShapeError("misreports " + diff::to_string(misreports.shape()) + " do not match profiles " +
                           diff::to_string(profiles.shape()));
  }
  const std::size_t batch = profiles.dim(0);
  const std::size_t n = profiles.dim(1);
  const std::size_t m = profiles.dim(2);
  diff::Tensor out({batch * n, n, m});
  for (std::size_t l = 0; l < batch; ++l) {
    const double* src = profiles.data() + l * n * m;
    for (std::size_t i = 0; i < n; ++i) {
      double* dst = out.data() + (l * n + i) * n * m;
      std::copy(src, src + n * m, dst);
      const double* mis = misreports.data() + (l * n + i) * m;
      std::copy(mis, mis + m, dst + i * m);
    }
  }
  return out;
}

diff::Tensor tile_profiles(const diff::Tensor& profiles) {
  const std::size_t batch = profiles.dim(0);
  const std::size_t n = profiles.dim(1);
  const std::size_t stride = n * profiles.dim(2);
  diff::Tensor out({batch * n, n, profiles.dim(2)});
  for (std::size_t l = 0; l < batch; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(profiles.data() + l * stride, profiles.data() + (l + 1) * stride, out.data() + (l * n + i) * stride);
    }
  }
  return out;
}

diff::Tensor own_agent_mask(std::size_t profiles, std::size_t agents) {
  diff::Tensor out({profiles * agents, agents});
  for (std::size_t l = 0; l < profiles; ++l) {
    for (std::size_t i = 0; i < agents; ++i) out.at(l * agents + i, i) = 1.0;
  }
  return out;
}

MisreportSet optimize_misreports(const Mechanism& mech, const diff::Tensor& profiles, const SupportBox& box,
                                 const AscentOptions& options) {
  check_profiles(mech, profiles);
  const std::size_t batch = profiles.dim(0);
  const std::size_t n = profiles.dim(1);
  const std::size_t m = profiles.dim(2);
  const double rate = options.rate.value_or(default_misreport_rate(box));
  if (!(rate > 0.0)) throw std::invalid_argument("misreport rate must be > 0");
  const std::size_t chunk = options.chunk == 0 ? batch : std::min(options.chunk, batch);

  MisreportSet result{profiles, diff::Tensor({batch, n}, -std::numeric_limits<double>::infinity())};
  Rng rng(options.seed, Stream::MisreportInit);

  for (std::size_t begin = 0; begin < batch; begin += chunk) {
    const std::size_t count = std::min(chunk, batch - begin);
    const diff::Tensor truth = slice_batch(profiles, begin, count);
    diff::Tensor best = truth;
    diff::Tensor best_u({count, n}, -std::numeric_limits<double>::infinity());

    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
      diff::Tensor current = truth;
      if (r > 0 || options.init == MisreportInit::UniformRandom) {
        for (std::size_t k = 0; k < current.size(); ++k) {
          const std::size_t j = k % m;
          current[k] = rng.uniform(box.low[j], box.high[j]);
        }
      }
      std::vector<char> active(count * n, 1);

      for (std::size_t step = 0;; ++step) {
        const bool last = step == options.steps;
        diff::Tape tape;
        const OwnUtility ou = own_utility(tape, mech, truth, current, !last);
        const diff::Tensor& own = ou.own.value();
        for (std::size_t k = 0; k < count * n; ++k) {
          if (!active[k]) continue;
          if (!std::isfinite(own[k])) {
            active[k] = 0;
            continue;
          }
          if (own[k] > best_u[k]) {
            best_u[k] = own[k];
            std::copy(current.data() + k * m, current.data() + (k + 1) * m, best.data() + k * m);
          }
        }
        if (last) break;

        const diff::Tensor grad = diff::backward(tape, diff::sum(ou.own)).of(ou.x);
        for (std::size_t k = 0; k < count * n; ++k) {
          if (!active[k]) continue;
          const std::size_t agent = k % n;
          const double* g = grad.data() + (k * n + agent) * m;
          if (!std::all_of(g, g + m, [](double v) { return std::isfinite(v); })) {
            active[k] = 0;
            continue;
          }
          double* v = current.data() + k * m;
          for (std::size_t j = 0; j < m; ++j) v[j] = std::clamp(v[j] + rate * g[j], box.low[j], box.high[j]);
        }
      }
    }
    write_batch(result.misreports, begin, best);
    write_batch(result.utility, begin, best_u);
  }
  return result;
}

RegretEstimate regret_estimate(const Mechanism& mech, const diff::Tensor& profiles, const diff::Tensor& misreports,
                               std::size_t chunk) {
  check_profiles(mech, profiles);
  const std::size_t batch = profiles.dim(0);
  const std::size_t n = profiles.dim(1);
  chunk = chunk == 0 ? batch : std::min(chunk, batch);

  RegretEstimate est;
  est.per_sample = diff::Tensor({batch, n});
  est.per_agent_mean.assign(n, 0.0);
  for (std::size_t begin = 0; begin < batch; begin += chunk) {
    const std::size_t count = std::min(chunk, batch - begin);
    const diff::Tensor truth = slice_batch(profiles, begin, count);
    diff::Tape tape;
    const OwnUtility ou = own_utility(tape, mech, truth, slice_batch(misreports, begin, count), false);
    const diff::Var bids = tape.constant(truth);
    const Outcome honest = mech.run(bids);
    const diff::Tensor& u_true = utilities(bids, honest.alloc, honest.payments).value();
    const diff::Tensor& u_mis = ou.own.value();
    for (std::size_t k = 0; k < count * n; ++k) {
      const double r = std::max(0.0, u_mis[k] - u_true[k]);
      est.per_sample[begin * n + k] = r;
      est.per_agent_mean[k % n] += r;
    }
  }
  for (double& v : est.per_agent_mean) v /= static_cast<double>(batch);
  return est;
}

Outcome SecondPriceMechanism::run(diff::Var bids) const {
  const diff::Tensor& b = bids.value();
  if (b.rank() != 3 || b.dim(1) != agents_ || b.dim(2) != 1) {
    throw diff::ShapeError("second price expects bids [B, " + std::to_string(agents_) + ", 1], got " +
                           diff::to_string(b.shape()));
  }
  const std::size_t batch = b.dim(0);
  diff::Tensor alloc({batch, agents_, 1});
  diff::Tensor pay({batch, agents_});
  for (std::size_t l = 0; l < batch; ++l) {
    std::size_t winner = 0;
    for (std::size_t i = 1; i < agents_; ++i) {
      if (b.at(l, i, 0) > b.at(l, winner, 0)) winner = i;
    }
    if (b.at(l, winner, 0) < reserve_) continue;
    double price = reserve_;
    for (std::size_t i = 0; i < agents_; ++i) {
      if (i != winner) price = std::max(price, b.at(l, i, 0));
    }
    alloc.at(l, winner, 0) = 1.0;
    pay.at(l, winner) = price;
  }
  diff::Tape& tape = *bids.tape;
  return {tape.constant(std::move(alloc)), tape.constant(std::move(pay))};
}

}  // namespace fairauction
