#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairauction/auction_model.hpp"
#include "fairauction/fairness.hpp"
#include "fairauction/regret.hpp"
#include "fairauction/valuations.hpp"

namespace fairauction {

struct TrainConfig {
  std::size_t epochs = 120;
  std::size_t samples = 640000;
  std::size_t batch_size = 128;
  std::size_t misreport_steps = 25;
  std::optional<double> misreport_rate;  // default 0.1 x support width
  double learning_rate = 1e-3;
  std::size_t lambda_period_regret = 100;    // Q_r, iterations
  std::size_t lambda_period_fairness = 100;  // Q_f, iterations
  std::size_t rho_period_epochs = 2;
  double rho_increment = 1.0;
  double lambda_init_regret = 5.0;
  double lambda_init_fairness = 5.0;
  double rho_init_regret = 1.0;
  double rho_init_fairness = 1.0;
  std::size_t hidden_layers = 2;
  std::size_t hidden_width = 100;
  std::size_t holdout_every = 0;  // epochs between holdout evaluations; 0 = final only
  std::size_t holdout_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Multipliers {
  std::vector<double> lambda_regret;    // per agent
  std::vector<double> lambda_fairness;  // per item
  double rho_regret = 1.0;
  double rho_fairness = 1.0;
};

struct AdamState {
  std::vector<diff::Tensor> first;
  std::vector<diff::Tensor> second;
  std::size_t steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct BatchMetrics {
  std::size_t iteration = 0;
  double loss = 0.0;
  double revenue_mean = 0.0;
  double revenue_std = 0.0;
  std::vector<double> regret;      // per agent, batch mean
  double regret_max = 0.0;         // over samples and agents
  std::vector<double> unfairness;  // per item, batch mean
  double unfairness_max = 0.0;     // over samples, of the per-sample total
  // Running sums for pooling into epoch rows.
  double revenue_sum = 0.0;
  double revenue_sq_sum = 0.0;
  std::size_t count = 0;
};

struct TrainState {
  AuctionModel model;
  Multipliers multipliers;
  AdamState adam;
  std::size_t iteration = 0;
  std::size_t iterations_per_epoch = 0;
  // Constraint violations accumulated since the last multiplier update.
  std::vector<double> window_regret;
  std::vector<double> window_fairness;
  std::size_t window_regret_count = 0;
  std::size_t window_fairness_count = 0;
  std::size_t consecutive_rejections = 0;
  std::vector<BatchMetrics> history;
  std::vector<std::string> events;
};

TrainState initial_state(const TrainConfig& config, const SettingSpec& setting);

struct LossTerms {
  diff::Var loss;
  diff::Var revenue;     // scalar, batch mean of sum_i p_i
  diff::Var regret;      // [n], batch mean
  diff::Var unfairness;  // [m], batch mean
  diff::Var sample_revenue;     // [B]
  diff::Var sample_regret;      // [B, n]
  diff::Var sample_unfairness;  // [B, m]
};

// -revenue + sum_i lr_i rgt_i + rho_r/2 (sum_i rgt_i)^2 + sum_j lf_j unf_j + rho_f/2 (sum_j unf_j)^2
diff::Var combine_lagrangian(diff::Var revenue, diff::Var regret, diff::Var unfairness, const Multipliers& mult);
double combine_lagrangian(double revenue, std::span<const double> regret, std::span<const double> unfairness,
                          const Multipliers& mult);

// Misreports enter as constants; gradients flow only through the model weights in `bound`.
LossTerms lagrangian_loss(const AuctionModel& model, const AuctionModel::Bound& bound, const diff::Tensor& batch,
                          const diff::Tensor& misreports, const FairnessSpec& fairness, const Multipliers& mult);

// One ascent-then-descent iteration. Returns false when the loss was not finite
// and the step was rejected.
bool train_step(TrainState& state, const diff::Tensor& minibatch, const SupportBox& box,
                const FairnessSpec& fairness, const TrainConfig& config);

// Applies the dual updates due at state.iteration, then the rho schedule.
void update_multipliers(TrainState& state, const TrainConfig& config);

struct HistoryRow {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  double revenue_mean = 0.0;
  double revenue_std = 0.0;
  double regret_mean = 0.0;
  double regret_max = 0.0;
  double unfairness_mean = 0.0;
  double unfairness_max = 0.0;
  double lambda_regret_mean = 0.0;
  double lambda_fairness_mean = 0.0;
  double rho_regret = 0.0;
  double rho_fairness = 0.0;
};

inline constexpr const char* kHistoryHeader =
    "epoch,iter,revenue_mean,revenue_std,regret_mean,regret_max,unfairness_mean,unfairness_max,"
    "lambda_r_mean,lambda_f_mean,rho_r,rho_f";

void write_history_csv(const std::vector<HistoryRow>& rows, std::ostream& out);

struct TrainResult {
  TrainState state;                 // final weights in state.model
  std::vector<HistoryRow> history;  // one row per epoch
  std::vector<HistoryRow> holdout;  // holdout evaluations
  bool aborted = false;
};

using ProgressCallback = std::function<void(const HistoryRow&)>;

TrainResult train(const TrainConfig& config, const SettingSpec& setting, const FairnessSpec& fairness,
                  const ProgressCallback& progress = {});

inline constexpr std::size_t kMaxConsecutiveRejections = 100;

}  // namespace fairauction
