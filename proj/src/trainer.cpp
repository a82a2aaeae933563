#include "fairauction/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fairauction/checkpoint.hpp"

namespace fairauction {

void TrainConfig::validate() const {
  const auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("train.") + name + " must be >= 1");
  };
  positive(samples, "samples");
  positive(batch_size, "batch_size");
  positive(lambda_period_regret, "lambda_period_regret");
  positive(lambda_period_fairness, "lambda_period_fairness");
  positive(rho_period_epochs, "rho_period_epochs");
  positive(hidden_width, "hidden_width");
  positive(holdout_samples, "holdout_samples");
  if (batch_size > samples) throw std::invalid_argument("train.batch_size exceeds train.samples");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
  if (misreport_rate && !(*misreport_rate > 0.0)) throw std::invalid_argument("train.misreport_rate must be > 0");
  for (const auto& [v, name] : {std::pair{lambda_init_regret, "lambda_init_regret"},
                                 {lambda_init_fairness, "lambda_init_fairness"},
                                 {rho_init_regret, "rho_init_regret"},
                                 {rho_init_fairness, "rho_init_fairness"},
                                 {rho_increment, "rho_increment"}}) {
    if (!(v >= 0.0)) throw std::invalid_argument(std::string("train.") + name + " must be >= 0");
  }
}

TrainState initial_state(const TrainConfig& config, const SettingSpec& setting) {
  Topology topo;
  topo.bidder_type = setting.bidder_type;
  topo.agents = setting.agents;
  topo.items = setting.items;
  topo.hidden_layers = config.hidden_layers;
  topo.hidden_width = config.hidden_width;
  TrainState state{AuctionModel(topo, config.seed)};
  state.multipliers.lambda_regret.assign(setting.agents, config.lambda_init_regret);
  state.multipliers.lambda_fairness.assign(setting.items, config.lambda_init_fairness);
  state.multipliers.rho_regret = config.rho_init_regret;
  state.multipliers.rho_fairness = config.rho_init_fairness;
  for (const Parameter& p : state.model.parameters()) {
    state.adam.first.emplace_back(p.value.shape());
    state.adam.second.emplace_back(p.value.shape());
  }
  state.window_regret.assign(setting.agents, 0.0);
  state.window_fairness.assign(setting.items, 0.0);
  state.iterations_per_epoch = std::max<std::size_t>(1, config.samples / config.batch_size);
  return state;
}

diff::Var combine_lagrangian(diff::Var revenue, diff::Var regret, diff::Var unfairness, const Multipliers& mult) {
  diff::Tape& tape = *revenue.tape;
  const diff::Var lr = tape.constant(diff::Tensor::vector(mult.lambda_regret));
  const diff::Var lf = tape.constant(diff::Tensor::vector(mult.lambda_fairness));
  const diff::Var regret_terms =
      diff::add(diff::sum(diff::mul(regret, lr)), diff::scale(diff::square(diff::sum(regret)), 0.5 * mult.rho_regret));
  const diff::Var fairness_terms = diff::add(diff::sum(diff::mul(unfairness, lf)),
                                             diff::scale(diff::square(diff::sum(unfairness)), 0.5 * mult.rho_fairness));
  return diff::add(diff::add(diff::scale(revenue, -1.0), regret_terms), fairness_terms);
}

double combine_lagrangian(double revenue, std::span<const double> regret, std::span<const double> unfairness,
                          const Multipliers& mult) {
  double loss = -revenue;
  double regret_total = 0.0;
  for (std::size_t i = 0; i < regret.size(); ++i) {
    loss += mult.lambda_regret.at(i) * regret[i];
    regret_total += regret[i];
  }
  double unfair_total = 0.0;
  for (std::size_t j = 0; j < unfairness.size(); ++j) {
    loss += mult.lambda_fairness.at(j) * unfairness[j];
    unfair_total += unfairness[j];
  }
  return loss + 0.5 * mult.rho_regret * regret_total * regret_total +
         0.5 * mult.rho_fairness * unfair_total * unfair_total;
}

LossTerms lagrangian_loss(const AuctionModel& model, const AuctionModel::Bound& bound, const diff::Tensor& batch,
                          const diff::Tensor& misreports, const FairnessSpec& fairness, const Multipliers& mult) {
  diff::Tape& tape = *bound.vars.front().tape;
  const std::size_t b = batch.dim(0);
  const std::size_t n = batch.dim(1);

  const diff::Var truth = tape.constant(batch);
  const AuctionModel::Heads honest = model.forward(bound, truth);
  const diff::Var u_true = utilities(truth, honest.alloc, honest.payments);  // [B, n]

  const AuctionModel::Heads lying = model.forward(bound, tape.constant(expand_misreports(batch, misreports)));
  const diff::Var u_lie = utilities(tape.constant(tile_profiles(batch)), lying.alloc, lying.payments);
  const diff::Var u_own = diff::reshape(diff::sum(diff::mul(u_lie, tape.constant(own_agent_mask(b, n))), 1), {b, n});

  LossTerms t;
  t.sample_revenue = diff::sum(honest.payments, 1);
  t.revenue = diff::mean(t.sample_revenue);
  t.sample_regret = diff::relu(diff::sub(u_own, u_true));
  t.regret = diff::mean(t.sample_regret, 0);
  t.sample_unfairness = unfairness(honest.alloc, fairness);
  t.unfairness = diff::mean(t.sample_unfairness, 0);
  t.loss = combine_lagrangian(t.revenue, t.regret, t.unfairness, mult);
  return t;
}

namespace {

void adam_update(AuctionModel& model, AdamState& adam, const std::vector<diff::Tensor>& grads, double rate) {
  ++adam.steps;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.steps));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.steps));
  auto& params = model.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].value.values();
    auto m1 = adam.first[k].values();
    auto m2 = adam.second[k].values();
    const auto g = grads[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m1[i] = adam.beta1 * m1[i] + (1.0 - adam.beta1) * g[i];
      m2[i] = adam.beta2 * m2[i] + (1.0 - adam.beta2) * g[i] * g[i];
      w[i] -= rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + adam.epsilon);
    }
  }
}

BatchMetrics collect_metrics(const LossTerms& t) {
  BatchMetrics bm;
  bm.loss = t.loss.value().item();
  const diff::Tensor& rev = t.sample_revenue.value();
  for (double r : rev.values()) {
    bm.revenue_sum += r;
    bm.revenue_sq_sum += r * r;
  }
  bm.count = rev.size();
  bm.revenue_mean = bm.revenue_sum / static_cast<double>(bm.count);
  bm.revenue_std = std::sqrt(std::max(0.0, bm.revenue_sq_sum / static_cast<double>(bm.count) -
                                              bm.revenue_mean * bm.revenue_mean));
  const auto rg = t.regret.value().values();
  bm.regret.assign(rg.begin(), rg.end());
  for (double r : t.sample_regret.value().values()) bm.regret_max = std::max(bm.regret_max, r);
  const auto uf = t.unfairness.value().values();
  bm.unfairness.assign(uf.begin(), uf.end());
  const diff::Tensor& su = t.sample_unfairness.value();
  const std::size_t m = su.dim(1);
  for (std::size_t l = 0; l < su.dim(0); ++l) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += su.at(l, j);
    bm.unfairness_max = std::max(bm.unfairness_max, total);
  }
  return bm;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

bool train_step(TrainState& state, const diff::Tensor& minibatch, const SupportBox& box,
                const FairnessSpec& fairness, const TrainConfig& config) {
  AscentOptions ascent;
  ascent.steps = config.misreport_steps;
  ascent.rate = config.misreport_rate;
  ascent.init = MisreportInit::Truthful;
  const MisreportSet mis = optimize_misreports(state.model, minibatch, box, ascent);

  diff::Tape tape;
  const AuctionModel::Bound bound = state.model.bind(tape, true);
  const LossTerms terms = lagrangian_loss(state.model, bound, minibatch, mis.misreports, fairness, state.multipliers);
  if (!std::isfinite(terms.loss.value().item())) {
    ++state.consecutive_rejections;
    state.events.push_back("iteration " + std::to_string(state.iteration) + ": non-finite loss, step rejected");
    return false;
  }
  const diff::Gradients grads = diff::backward(tape, terms.loss);
  std::vector<diff::Tensor> weight_grads;
  weight_grads.reserve(bound.vars.size());
  for (const diff::Var& v : bound.vars) weight_grads.push_back(grads.of(v));
  for (const diff::Tensor& g : weight_grads) {
    if (!g.all_finite()) {
      ++state.consecutive_rejections;
      state.events.push_back("iteration " + std::to_string(state.iteration) + ": non-finite gradient, step rejected");
      return false;
    }
  }
  adam_update(state.model, state.adam, weight_grads, config.learning_rate);
  state.consecutive_rejections = 0;

  BatchMetrics bm = collect_metrics(terms);
  bm.iteration = ++state.iteration;
  for (std::size_t i = 0; i < bm.regret.size(); ++i) state.window_regret[i] += bm.regret[i];
  for (std::size_t j = 0; j < bm.unfairness.size(); ++j) state.window_fairness[j] += bm.unfairness[j];
  ++state.window_regret_count;
  ++state.window_fairness_count;
  state.history.push_back(std::move(bm));
  return true;
}

void update_multipliers(TrainState& state, const TrainConfig& config) {
  if (state.iteration == 0) return;
  Multipliers& mult = state.multipliers;
  if (state.iteration % config.lambda_period_regret == 0 && state.window_regret_count > 0) {
    const double inv = 1.0 / static_cast<double>(state.window_regret_count);
    for (std::size_t i = 0; i < mult.lambda_regret.size(); ++i) {
      mult.lambda_regret[i] += mult.rho_regret * state.window_regret[i] * inv;
    }
    std::fill(state.window_regret.begin(), state.window_regret.end(), 0.0);
    state.window_regret_count = 0;
  }
  if (state.iteration % config.lambda_period_fairness == 0 && state.window_fairness_count > 0) {
    const double inv = 1.0 / static_cast<double>(state.window_fairness_count);
    for (std::size_t j = 0; j < mult.lambda_fairness.size(); ++j) {
      mult.lambda_fairness[j] += mult.rho_fairness * state.window_fairness[j] * inv;
    }
    std::fill(state.window_fairness.begin(), state.window_fairness.end(), 0.0);
    state.window_fairness_count = 0;
  }
  const std::size_t rho_period = config.rho_period_epochs * state.iterations_per_epoch;
  if (rho_period > 0 && state.iteration % rho_period == 0) {
    mult.rho_regret += config.rho_increment;
    mult.rho_fairness += config.rho_increment;
  }
}

void write_history_csv(const std::vector<HistoryRow>& rows, std::ostream& out) {
  out << kHistoryHeader << '\n';
  for (const HistoryRow& r : rows) {
    out << r.epoch << ',' << r.iteration;
    for (double v : {r.revenue_mean, r.revenue_std, r.regret_mean, r.regret_max, r.unfairness_mean,
                     r.unfairness_max, r.lambda_regret_mean, r.lambda_fairness_mean, r.rho_regret, r.rho_fairness}) {
      out << ',' << format_double(v, 10);
    }
    out << '\n';
  }
}

namespace {

diff::Tensor gather_rows(const diff::Tensor& data, std::span<const std::size_t> rows) {
  const std::size_t stride = data.size() / data.dim(0);
  diff::Shape shape = data.shape();
  shape[0] = rows.size();
  diff::Tensor out(shape);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::copy(data.data() + rows[k] * stride, data.data() + (rows[k] + 1) * stride, out.data() + k * stride);
  }
  return out;
}

void stamp_multipliers(HistoryRow& row, const TrainState& state) {
  row.iteration = state.iteration;
  row.lambda_regret_mean = mean_of(state.multipliers.lambda_regret);
  row.lambda_fairness_mean = mean_of(state.multipliers.lambda_fairness);
  row.rho_regret = state.multipliers.rho_regret;
  row.rho_fairness = state.multipliers.rho_fairness;
}

HistoryRow pool_epoch(std::span<const BatchMetrics> batches, std::size_t epoch, const TrainState& state) {
  HistoryRow row;
  row.epoch = epoch;
  double sum = 0.0;
  double sq = 0.0;
  std::size_t count = 0;
  for (const BatchMetrics& b : batches) {
    sum += b.revenue_sum;
    sq += b.revenue_sq_sum;
    count += b.count;
    row.regret_mean += mean_of(b.regret);
    row.regret_max = std::max(row.regret_max, b.regret_max);
    row.unfairness_mean += sum_of(b.unfairness);
    row.unfairness_max = std::max(row.unfairness_max, b.unfairness_max);
  }
  if (!batches.empty()) {
    const double nb = static_cast<double>(batches.size());
    row.regret_mean /= nb;
    row.unfairness_mean /= nb;
  }
  if (count > 0) {
    row.revenue_mean = sum / static_cast<double>(count);
    row.revenue_std = std::sqrt(std::max(0.0, sq / static_cast<double>(count) - row.revenue_mean * row.revenue_mean));
  }
  stamp_multipliers(row, state);
  return row;
}

// Cheap held-out check at training-time ascent settings.
HistoryRow holdout_row(const TrainState& state, const diff::Tensor& holdout, const SupportBox& box,
                       const FairnessSpec& fairness, const TrainConfig& config, std::size_t epoch) {
  AscentOptions ascent;
  ascent.steps = config.misreport_steps;
  ascent.rate = config.misreport_rate;
  ascent.chunk = 256;
  const MisreportSet mis = optimize_misreports(state.model, holdout, box, ascent);
  const RegretEstimate rgt = regret_estimate(state.model, holdout, mis.misreports, 256);
  const OutcomeValues out = state.model.evaluate(holdout);

  HistoryRow row;
  row.epoch = epoch;
  const std::size_t count = holdout.dim(0);
  const std::size_t n = holdout.dim(1);
  const std::size_t m = holdout.dim(2);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t l = 0; l < count; ++l) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += out.payments.at(l, i);
    sum += r;
    sq += r * r;
    diff::Tensor z({n, m}, std::vector<double>(out.alloc.data() + l * n * m, out.alloc.data() + (l + 1) * n * m));
    const double unf = unfairness(z, fairness).total;
    row.unfairness_mean += unf;
    row.unfairness_max = std::max(row.unfairness_max, unf);
  }
  const double c = static_cast<double>(count);
  row.revenue_mean = sum / c;
  row.revenue_std = std::sqrt(std::max(0.0, sq / c - row.revenue_mean * row.revenue_mean));
  row.unfairness_mean /= c;
  row.regret_mean = mean_of(rgt.per_agent_mean);
  for (double r : rgt.per_sample.values()) row.regret_max = std::max(row.regret_max, r);
  stamp_multipliers(row, state);
  return row;
}

}  // namespace

TrainResult train(const TrainConfig& config, const SettingSpec& setting, const FairnessSpec& fairness,
                  const ProgressCallback& progress) {
  config.validate();
  setting.validate();
  fairness.validate(setting.agents, setting.items);

  TrainResult result{initial_state(config, setting)};
  if (config.epochs == 0) return result;

  TrainState& state = result.state;
  const SupportBox box = setting.support();
  const diff::Tensor data = sample_profiles(setting, config.samples, config.seed, Stream::TrainingData);
  const diff::Tensor holdout = sample_profiles(setting, config.holdout_samples, config.seed, Stream::Holdout);
  std::vector<std::size_t> order(config.samples);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle(config.seed, Stream::Shuffle, epoch);
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[static_cast<std::size_t>(shuffle.next() % k)]);
    }
    const std::size_t first_batch = state.history.size();
    for (std::size_t it = 0; it < state.iterations_per_epoch; ++it) {
      const std::span<const std::size_t> rows(order.data() + it * config.batch_size, config.batch_size);
      train_step(state, gather_rows(data, rows), box, fairness, config);
      if (state.consecutive_rejections >= kMaxConsecutiveRejections) {
        state.events.push_back("aborted after " + std::to_string(kMaxConsecutiveRejections) +
                               " consecutive non-finite losses");
        result.aborted = true;
        return result;
      }
      update_multipliers(state, config);
    }
    const std::span<const BatchMetrics> batches(state.history.data() + first_batch,
                                                state.history.size() - first_batch);
    result.history.push_back(pool_epoch(batches, epoch, state));
    if (progress) progress(result.history.back());

    const bool due = config.holdout_every > 0 && epoch % config.holdout_every == 0;
    if (due || epoch == config.epochs) {
      result.holdout.push_back(holdout_row(state, holdout, box, fairness, config, epoch));
    }
  }
  return result;
}

}  // namespace fairauction
