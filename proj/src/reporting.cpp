#include "fairauction/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "fairauction/checkpoint.hpp"
#include "fairauction/regret.hpp"

namespace fairauction {

namespace {

class Accumulator {
 public:
  void add(double x) {
    sum_ += x;
    sq_ += x * x;
    ++count_;
  }
  Stat stat() const {
    if (count_ == 0) return {};
    const double c = static_cast<double>(count_);
    const double mean = sum_ / c;
    return {mean, std::sqrt(std::max(0.0, sq_ / c - mean * mean))};
  }

 private:
  double sum_ = 0.0;
  double sq_ = 0.0;
  std::size_t count_ = 0;
};

diff::Tensor profile_rows(const diff::Tensor& t, std::size_t begin, std::size_t count) {
  diff::Shape shape = t.shape();
  const std::size_t stride = t.size() / shape[0];
  shape[0] = count;
  return diff::Tensor(shape, std::vector<double>(t.data() + begin * stride, t.data() + (begin + count) * stride));
}

std::string fixed(double v, int decimals) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  std::string s(buf, res.ptr);
  if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);  // no "-0.000"
  return s;
}

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

std::string format_cell(const Stat& stat) { return fixed(stat.mean, 3) + " (" + fixed(stat.std, 3) + ")"; }

EvalReport evaluate(const Mechanism& mechanism, const SettingSpec& setting, const FairnessSpec& fairness, double d,
                    const EvalOptions& options) {
  if (options.samples == 0) throw std::invalid_argument("evaluation needs at least one sample");
  setting.validate();
  fairness.validate(setting.agents, setting.items);
  if (mechanism.agents() != setting.agents || mechanism.items() != setting.items) {
    throw std::invalid_argument("mechanism shape does not match setting " + setting.id);
  }
  const std::size_t n = setting.agents;
  const std::size_t m = setting.items;
  const diff::Tensor profiles = sample_profiles(setting, options.samples, options.seed, Stream::Evaluation);

  EvalReport report;
  report.setting_id = setting.id;
  report.fairness_label = fairness.label;
  report.bidder_type = setting.bidder_type;
  report.agents = n;
  report.items = m;
  report.shift = setting.shift;
  report.d = d;
  report.samples = options.samples;

  Accumulator revenue;
  Accumulator unfair_total;
  std::vector<Accumulator> unfair_item(m);
  report.min_truthful_utility = std::numeric_limits<double>::infinity();
  const std::size_t chunk = options.chunk == 0 ? options.samples : options.chunk;
  for (std::size_t begin = 0; begin < options.samples; begin += chunk) {
    const std::size_t count = std::min(chunk, options.samples - begin);
    const diff::Tensor bids = profile_rows(profiles, begin, count);
    diff::Tape tape;
    const Outcome out = mechanism.run(tape.constant(bids));
    const diff::Tensor& z = out.alloc.value();
    const diff::Tensor& p = out.payments.value();
    for (std::size_t l = 0; l < count; ++l) {
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        r += p.at(l, i);
        double u = -p.at(l, i);
        for (std::size_t j = 0; j < m; ++j) u += bids.at(l, i, j) * z.at(l, i, j);
        report.min_truthful_utility = std::min(report.min_truthful_utility, u);
      }
      revenue.add(r);
      const diff::Tensor zl({n, m}, std::vector<double>(z.data() + l * n * m, z.data() + (l + 1) * n * m));
      const Unfairness unf = unfairness(zl, fairness);
      for (std::size_t j = 0; j < m; ++j) unfair_item[j].add(unf.per_item[j]);
      unfair_total.add(unf.total);
      report.unfairness_max = std::max(report.unfairness_max, unf.total);
    }
  }
  report.revenue = revenue.stat();
  report.unfairness = unfair_total.stat();
  for (const Accumulator& a : unfair_item) report.unfairness_per_item.push_back(a.stat());

  const std::size_t rs = options.regret_samples == 0 ? options.samples : std::min(options.regret_samples, options.samples);
  report.regret_samples = rs;
  if (rs > 0) {
    const diff::Tensor subset = profile_rows(profiles, 0, rs);
    AscentOptions ascent;
    ascent.steps = options.steps;
    ascent.rate = options.rate;
    ascent.restarts = options.restarts;
    ascent.seed = options.seed;
    ascent.chunk = options.chunk;
    const MisreportSet mis = optimize_misreports(mechanism, subset, setting.support(), ascent);
    const RegretEstimate est = regret_estimate(mechanism, subset, mis.misreports, options.chunk);
    std::vector<Accumulator> per_agent(n);
    Accumulator overall;
    for (std::size_t l = 0; l < rs; ++l) {
      double row = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = est.per_sample.at(l, i);
        per_agent[i].add(r);
        row += r;
        report.regret_max = std::max(report.regret_max, r);
      }
      overall.add(row / static_cast<double>(n));
    }
    for (const Accumulator& a : per_agent) report.regret_per_agent.push_back(a.stat());
    report.regret = overall.stat();
  }

  if (options.myerson_samples > 0) {
    report.myerson = itemwise_myerson_revenue(setting, options.myerson_samples, options.seed);
  }
  return report;
}

void write_report_json(const EvalReport& r, std::ostream& out) {
  nlohmann::json j;
  j["setting"] = r.setting_id;
  j["fairness"] = r.fairness_label;
  j["bidder_type"] = to_string(r.bidder_type);
  j["agents"] = r.agents;
  j["items"] = r.items;
  j["b"] = r.shift;
  j["d"] = r.d;
  j["samples"] = r.samples;
  j["regret_samples"] = r.regret_samples;
  j["revenue"] = stat_json(r.revenue);
  j["regret"] = stat_json(r.regret);
  j["regret_max"] = r.regret_max;
  j["regret_per_agent"] = nlohmann::json::array();
  for (const Stat& s : r.regret_per_agent) j["regret_per_agent"].push_back(stat_json(s));
  j["unfairness"] = stat_json(r.unfairness);
  j["unfairness_max"] = r.unfairness_max;
  j["unfairness_per_item"] = nlohmann::json::array();
  for (const Stat& s : r.unfairness_per_item) j["unfairness_per_item"].push_back(stat_json(s));
  j["min_truthful_utility"] = r.min_truthful_utility;
  j["myerson"] = {{"revenue", r.myerson.revenue}, {"std_error", r.myerson.std_error}};
  out << j.dump(2) << '\n';
}

void write_report_csv(const EvalReport& r, std::ostream& out) {
  out << "metric,index,mean,std\n";
  const auto row = [&](const std::string& metric, const std::string& index, double mean, double std) {
    out << metric << ',' << index << ',' << format_double(mean) << ',' << format_double(std) << '\n';
  };
  row("revenue", "", r.revenue.mean, r.revenue.std);
  row("regret", "", r.regret.mean, r.regret.std);
  for (std::size_t i = 0; i < r.regret_per_agent.size(); ++i) {
    row("regret_agent", std::to_string(i + 1), r.regret_per_agent[i].mean, r.regret_per_agent[i].std);
  }
  row("unfairness", "", r.unfairness.mean, r.unfairness.std);
  for (std::size_t j = 0; j < r.unfairness_per_item.size(); ++j) {
    row("unfairness_item", std::to_string(j + 1), r.unfairness_per_item[j].mean, r.unfairness_per_item[j].std);
  }
  row("myerson", "", r.myerson.revenue, r.myerson.std_error);
}

HeatGrid heatmap_sweep(const Mechanism& mechanism, const SupportBox& box, double resolution) {
  if (mechanism.agents() != 1) throw std::invalid_argument("heatmap requires a single bidder");
  if (mechanism.items() != 2 || box.low.size() != 2) throw std::invalid_argument("heatmap requires two items");
  if (!(resolution > 0.0) || resolution > 1.0) throw std::invalid_argument("heatmap resolution must be in (0, 1]");
  const double steps_real = 1.0 / resolution;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real) {
    throw std::invalid_argument("heatmap resolution must divide the support evenly");
  }
  const std::size_t side = steps + 1;
  HeatGrid grid;
  grid.steps = steps;
  diff::Tensor bids({side * side, 1, 2});
  for (std::size_t a = 0; a < side; ++a) {
    for (std::size_t b = 0; b < side; ++b) {
      const double x = box.low[0] + box.width(0) * static_cast<double>(a) / static_cast<double>(steps);
      const double y = box.low[1] + box.width(1) * static_cast<double>(b) / static_cast<double>(steps);
      bids.at(a * side + b, 0, 0) = x;
      bids.at(a * side + b, 0, 1) = y;
      grid.b1.push_back(x);
      grid.b2.push_back(y);
    }
  }
  diff::Tape tape;
  const diff::Tensor& z = mechanism.run(tape.constant(bids)).alloc.value();
  for (std::size_t k = 0; k < side * side; ++k) {
    grid.z1.push_back(z.at(k, 0, 0));
    grid.z2.push_back(z.at(k, 0, 1));
  }
  return grid;
}

void write_heatmap_csv(const HeatGrid& grid, std::ostream& out) {
  out << "b1,b2,z_item1,z_item2\n";
  for (std::size_t k = 0; k < grid.b1.size(); ++k) {
    out << format_double(grid.b1[k], 10) << ',' << format_double(grid.b2[k], 10) << ',' << format_double(grid.z1[k])
        << ',' << format_double(grid.z2[k]) << '\n';
  }
}

double equal_share_fraction(const HeatGrid& grid, double tolerance) {
  if (grid.z1.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t k = 0; k < grid.z1.size(); ++k) ok += std::abs(grid.z1[k] - grid.z2[k]) <= tolerance;
  return static_cast<double>(ok) / static_cast<double>(grid.z1.size());
}

Table build_table(const std::vector<EvalReport>& reports, TableLayout layout, TableMetric metric) {
  if (reports.empty()) throw std::invalid_argument("no reports to tabulate");
  const EvalReport& first = reports.front();
  for (const EvalReport& r : reports) {
    bool same = r.setting_id == first.setting_id && r.bidder_type == first.bidder_type;
    if (layout == TableLayout::ShiftByDSweep) same = same && r.agents == first.agents && r.items == first.items;
    if (!same) throw std::invalid_argument("mixed settings in one table: " + first.setting_id + " and " + r.setting_id);
  }

  // Rows ascend; d columns descend.
  using RowKey = std::pair<double, double>;
  const auto row_key = [&](const EvalReport& r) -> RowKey {
    if (layout == TableLayout::DSweep) return {static_cast<double>(r.agents), static_cast<double>(r.items)};
    return {r.shift, 0.0};
  };
  std::map<RowKey, std::size_t> rows;
  std::map<double, std::size_t, std::greater<>> cols;
  for (const EvalReport& r : reports) {
    rows.emplace(row_key(r), 0);
    cols.emplace(r.d, 0);
  }
  Table table;
  table.corner = layout == TableLayout::DSweep ? "n x m" : "b";
  for (auto& [key, idx] : rows) {
    idx = table.row_labels.size();
    table.row_labels.push_back(layout == TableLayout::DSweep
                                   ? std::to_string(static_cast<std::size_t>(key.first)) + " x " +
                                         std::to_string(static_cast<std::size_t>(key.second))
                                   : fixed(key.first, 2));
  }
  for (auto& [d, idx] : cols) {
    idx = table.column_labels.size();
    table.column_labels.push_back("d=" + fixed(d, 2));
  }
  table.cells.assign(rows.size(), std::vector<std::string>(cols.size()));
  for (const EvalReport& r : reports) {
    std::string& cell = table.cells[rows.at(row_key(r))][cols.at(r.d)];
    if (!cell.empty()) throw std::invalid_argument("two reports for one table cell");
    const Stat& s = metric == TableMetric::Revenue ? r.revenue : metric == TableMetric::Regret ? r.regret : r.unfairness;
    cell = format_cell(s);
  }
  return table;
}

void write_table_csv(const Table& table, std::ostream& out) {
  out << table.corner;
  for (const std::string& c : table.column_labels) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    out << table.row_labels[r];
    for (const std::string& cell : table.cells[r]) out << ',' << cell;
    out << '\n';
  }
}

void emit_tables(const std::vector<EvalReport>& reports, TableLayout layout, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [metric, name] : {std::pair{TableMetric::Revenue, "revenue.csv"},
                                      {TableMetric::Regret, "regret.csv"},
                                      {TableMetric::Unfairness, "unfairness.csv"}}) {
    const Table table = build_table(reports, layout, metric);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    write_table_csv(table, out);
  }
}

}  // namespace fairauction
