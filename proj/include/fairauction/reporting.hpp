#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairauction/auction_model.hpp"
#include "fairauction/fairness.hpp"
#include "fairauction/valuations.hpp"

namespace fairauction {

struct EvalOptions {
  std::size_t samples = 10000;
  // Profiles used for the regret search, taken from the front of the sample; 0 = all.
  std::size_t regret_samples = 1000;
  std::size_t steps = 1000;
  std::size_t restarts = 10;
  std::optional<double> rate;
  std::size_t chunk = 250;
  std::size_t myerson_samples = 100000;
  std::uint64_t seed = 0;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct EvalReport {
  std::string setting_id;
  std::string fairness_label;
  BidderType bidder_type = BidderType::Additive;
  std::size_t agents = 0;
  std::size_t items = 0;
  double shift = 0.0;
  double d = 0.0;
  std::size_t samples = 0;
  std::size_t regret_samples = 0;

  Stat revenue;                        // per-sample sum_i p_i
  std::vector<Stat> regret_per_agent;  // per-sample regret of each agent
  Stat regret;                         // per-sample mean over agents
  double regret_max = 0.0;             // over samples and agents
  std::vector<Stat> unfairness_per_item;
  Stat unfairness;                     // per-sample sum_j unf_j
  double unfairness_max = 0.0;
  double min_truthful_utility = 0.0;
  MyersonEstimate myerson;
};

// Fresh profiles from the Evaluation stream; d is copied into the report as a label.
EvalReport evaluate(const Mechanism& mechanism, const SettingSpec& setting, const FairnessSpec& fairness, double d,
                    const EvalOptions& options);

void write_report_json(const EvalReport& report, std::ostream& out);
void write_report_csv(const EvalReport& report, std::ostream& out);

// Allocation of a single bidder over a (b1, b2) grid; row-major with b1 outer.
struct HeatGrid {
  std::size_t steps = 0;  // grid points per axis = steps + 1
  std::vector<double> b1;
  std::vector<double> b2;
  std::vector<double> z1;
  std::vector<double> z2;
};

// resolution is a fraction of each item's support width and must divide 1.
HeatGrid heatmap_sweep(const Mechanism& mechanism, const SupportBox& box, double resolution = 0.01);
void write_heatmap_csv(const HeatGrid& grid, std::ostream& out);
// Share of grid points with |z1 - z2| <= tolerance.
double equal_share_fraction(const HeatGrid& grid, double tolerance);

enum class TableLayout {
  DSweep,         // rows: agents x items, columns: d
  ShiftByDSweep,  // rows: b, columns: d
};

enum class TableMetric { Revenue, Regret, Unfairness };

struct Table {
  std::string corner;
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<std::vector<std::string>> cells;  // empty string where no report exists
};

// Throws std::invalid_argument when the reports do not share one setting.
Table build_table(const std::vector<EvalReport>& reports, TableLayout layout, TableMetric metric);
void write_table_csv(const Table& table, std::ostream& out);
// Writes revenue.csv, regret.csv and unfairness.csv into dir.
void emit_tables(const std::vector<EvalReport>& reports, TableLayout layout, const std::filesystem::path& dir);

// "mean (std)" at three decimals.
std::string format_cell(const Stat& stat);

}  // namespace fairauction
