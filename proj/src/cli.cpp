#include "fairauction/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fairauction/checkpoint.hpp"
#include "fairauction/config.hpp"
#include "fairauction/reporting.hpp"
#include "fairauction/trainer.hpp"

namespace fairauction {

namespace {

namespace fs = std::filesystem;

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
};

// Reported as a rejected precondition.
class Rejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Rejected("cannot write " + path.string());
  return out;
}

fs::path checkpoint_path(const Args& args) {
  const fs::path p = args.checkpoint.empty() ? fs::path(args.out) / "checkpoint.txt" : fs::path(args.checkpoint);
  if (!fs::is_regular_file(p)) throw Rejected("missing checkpoint " + p.string());
  return p;
}

AuctionModel load_for(const fs::path& path, const SettingSpec& setting) {
  AuctionModel model = load_model(path, setting.bidder_type);
  if (model.agents() != setting.agents || model.items() != setting.items) {
    throw Rejected("checkpoint is " + std::to_string(model.agents()) + "x" + std::to_string(model.items()) +
                   " but the setting is " + std::to_string(setting.agents) + "x" + std::to_string(setting.items));
  }
  return model;
}

void write_run_files(const TrainResult& result, const fs::path& dir) {
  {
    std::ofstream f = open_out(dir / "history.csv");
    write_history_csv(result.history, f);
  }
  {
    std::ofstream f = open_out(dir / "holdout.csv");
    write_history_csv(result.holdout, f);
  }
  std::ofstream f = open_out(dir / "events.log");
  for (const std::string& e : result.state.events) f << e << '\n';
}

// Trains one cell into dir; returns false when training aborted.
bool train_into(const TrainConfig& train_cfg, const SettingSpec& setting, const FairnessSpec& fairness,
                const fs::path& dir, std::ostream& err) {
  const TrainResult result = train(train_cfg, setting, fairness, [&](const HistoryRow& row) {
    err << "epoch " << row.epoch << " iter " << row.iteration << " revenue " << format_double(row.revenue_mean, 5)
        << " regret " << format_double(row.regret_mean, 4) << " unfairness " << format_double(row.unfairness_mean, 4)
        << '\n';
  });
  write_run_files(result, dir);
  if (result.aborted) {
    err << "training aborted: " << result.state.events.back() << '\n';
    return false;
  }
  save_model(result.state.model, dir / "checkpoint.txt");
  return true;
}

void write_report(const EvalReport& report, const fs::path& dir) {
  {
    std::ofstream f = open_out(dir / "report.json");
    write_report_json(report, f);
  }
  std::ofstream f = open_out(dir / "report.csv");
  write_report_csv(report, f);
}

std::string cell_name(double b, double d) { return "b" + format_double(b, 6) + "_d" + format_double(d, 6); }

int cmd_train(const ExperimentConfig& cfg, const Args& args, std::ostream& out, std::ostream& err) {
  if (!train_into(cfg.train, cfg.setting, cfg.fairness(), args.out, err)) return kExitTrainingAborted;
  out << "checkpoint written to " << (fs::path(args.out) / "checkpoint.txt").string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const ExperimentConfig& cfg, const Args& args, std::ostream& out, std::ostream&) {
  const AuctionModel model = load_for(checkpoint_path(args), cfg.setting);
  const EvalReport report = evaluate(model, cfg.setting, cfg.fairness(), cfg.d, cfg.eval);
  write_report(report, args.out);
  out << "revenue " << format_cell(report.revenue) << " regret " << format_cell(report.regret) << " unfairness "
      << format_cell(report.unfairness) << '\n';
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const Args& args, std::ostream& out, std::ostream& err) {
  const std::vector<double> shifts = cfg.sweep_b.empty() ? std::vector<double>{cfg.setting.shift} : cfg.sweep_b;
  std::vector<EvalReport> reports;
  for (double b : shifts) {
    const SettingSpec setting = cfg.setting_at(b);
    for (double d : cfg.sweep_d) {
      const fs::path dir = fs::path(args.out) / "cells" / cell_name(b, d);
      fs::create_directories(dir);
      err << "cell b=" << format_double(b, 6) << " d=" << format_double(d, 6) << '\n';
      const FairnessSpec fairness = cfg.fairness_at(d);
      if (!train_into(cfg.train, setting, fairness, dir, err)) return kExitTrainingAborted;
      const AuctionModel model = load_model(dir / "checkpoint.txt", setting.bidder_type);
      reports.push_back(evaluate(model, setting, fairness, d, cfg.eval));
      write_report(reports.back(), dir);
    }
  }
  emit_tables(reports, cfg.sweep_b.empty() ? TableLayout::DSweep : TableLayout::ShiftByDSweep, args.out);
  out << "tables written to " << args.out << '\n';
  return kExitOk;
}

int cmd_heatmap(const ExperimentConfig& cfg, const Args& args, std::ostream& out, std::ostream&) {
  const AuctionModel model = load_for(checkpoint_path(args), cfg.setting);
  const HeatGrid grid = heatmap_sweep(model, cfg.setting.support(), cfg.heatmap_resolution);
  std::ofstream f = open_out(fs::path(args.out) / "heatmap.csv");
  write_heatmap_csv(grid, f);
  out << "grid points with |z1 - z2| <= 0.05: " << format_double(100.0 * equal_share_fraction(grid, 0.05), 4)
      << "%\n";
  return kExitOk;
}

int cmd_baseline(const ExperimentConfig& cfg, const Args& args, std::ostream& out, std::ostream&) {
  const std::size_t samples = cfg.eval.myerson_samples == 0 ? 1000000 : cfg.eval.myerson_samples;
  const MyersonEstimate est = itemwise_myerson_revenue(cfg.setting, samples, cfg.seed);
  const SupportBox box = cfg.setting.support();
  bool unit_box = true;
  for (std::size_t j = 0; j < box.low.size(); ++j) unit_box = unit_box && box.low[j] == 0.0 && box.high[j] == 1.0;

  std::ofstream f = open_out(fs::path(args.out) / "baseline.csv");
  f << "setting,agents,items,b,samples,revenue,std_error,analytic\n";
  f << cfg.setting.id << ',' << cfg.setting.agents << ',' << cfg.setting.items << ','
    << format_double(cfg.setting.shift) << ',' << samples << ',' << format_double(est.revenue) << ','
    << format_double(est.std_error) << ',';
  out << "itemwise Myerson revenue " << format_double(est.revenue, 6) << " +- " << format_double(est.std_error, 2)
      << " (" << samples << " samples)";
  if (unit_box) {
    const double analytic = static_cast<double>(cfg.setting.items) * myerson_revenue_uniform01(cfg.setting.agents);
    f << format_double(analytic);
    out << ", analytic " << format_double(analytic, 6);
  }
  f << '\n';
  out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train and evaluate fair neural auctions"};
  app.require_subcommand(1);
  Args args;
  const std::pair<const char*, const char*> subcommands[] = {
      {"train", "train a mechanism and write its checkpoint and history"},
      {"evaluate", "report revenue, regret and unfairness of a checkpoint"},
      {"sweep", "train and evaluate one cell per (b, d) and write the tables"},
      {"heatmap", "allocation grid over the first agent's bids on two items"},
      {"baseline", "itemwise Myerson revenue for the setting"},
  };
  for (const auto& [name, description] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", args.config, "experiment config (YAML)")->required();
    sub->add_option("--out", args.out, "output directory")->required();
    sub->add_option("--seed", args.seed, "overrides the config seed");
    sub->add_option("--checkpoint", args.checkpoint, "model checkpoint (evaluate, heatmap)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitRejected;
  }

  try {
    ExperimentConfig cfg = parse_config(args.config);
    if (args.seed) cfg.set_seed(*args.seed);
    fs::create_directories(args.out);
    {
      std::ofstream f = open_out(fs::path(args.out) / "config.resolved.yaml");
      write_resolved_config(cfg, f);
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "train") return cmd_train(cfg, args, out, err);
    if (name == "evaluate") return cmd_evaluate(cfg, args, out, err);
    if (name == "sweep") return cmd_sweep(cfg, args, out, err);
    if (name == "heatmap") return cmd_heatmap(cfg, args, out, err);
    return cmd_baseline(cfg, args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRejected;
  }
}

}  // namespace fairauction
