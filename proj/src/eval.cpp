#include "gmethods/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "gmethods/error.hpp"
#include "gmethods/parallel.hpp"
#include "gmethods/simgen.hpp"

namespace gmethods {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::vector<ReplicationRow> run_cell(int scenario, int replication, Method method, const LongitudinalDataset& ds,
                                     const MethodConfig& config, int horizon) {
  std::vector<ReplicationRow> rows;
  const auto ids = all_estimands(horizon);
  rows.reserve(ids.size());
  std::optional<EstimateSet> est;
  std::string message;
  try {
    est = run_method(method, ds, config);
  } catch (const Error& e) {
    message = e.what();
  }
  for (const auto& id : ids) {
    ReplicationRow row;
    row.scenario = scenario;
    row.replication = replication;
    row.method = std::string(label(method));
    row.id = id;
    if (est) {
      const auto k = static_cast<std::size_t>(estimand_index(id, horizon));
      row.status = est->status[k];
      row.estimate = est->status[k] == CellStatus::ok ? est->estimate[k] : kNaN;
      if (row.status != CellStatus::ok) row.message = "not estimable: no follower of a compared strategy";
    } else {
      row.status = CellStatus::failed;
      row.estimate = kNaN;
      row.message = message;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ReplicationTable run_study(const StudyConfig& config) {
  if (config.n_sim < 1) throw Error(ErrorKind::invalid_argument, "n_sim must be >= 1");
  std::vector<ScenarioSpec> specs;
  for (int id : config.scenarios) specs.push_back(scenario_spec(id));
  const int horizon = specs.empty() ? 5 : specs.front().horizon;
  for (const auto& s : specs) {
    if (s.horizon != horizon) throw Error(ErrorKind::invalid_argument, "scenarios differ in horizon");
  }
  const std::size_t tasks = specs.size() * static_cast<std::size_t>(config.n_sim);
  std::vector<std::vector<ReplicationRow>> results(tasks);
  std::mutex progress_mutex;
  int done = 0;
  parallel_for(
      tasks,
      [&](std::size_t task) {
        const ScenarioSpec& spec = specs[task / static_cast<std::size_t>(config.n_sim)];
        const int rep = static_cast<int>(task % static_cast<std::size_t>(config.n_sim));
        const LongitudinalDataset ds =
            generate(spec, config.n, SeedSpec{config.master_seed, static_cast<std::uint64_t>(rep)});
        MethodConfig mc = config.method_config;
        mc.gformula.seed = config.master_seed;
        mc.gformula.replication = static_cast<std::uint64_t>(spec.id) * 1000000ULL + static_cast<std::uint64_t>(rep);
        auto& out = results[task];
        for (Method m : config.methods) {
          auto rows = run_cell(spec.id, rep, m, ds, mc, horizon);
          out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
        }
        if (config.progress) {
          std::lock_guard lock(progress_mutex);
          config.progress(++done, static_cast<int>(tasks));
        }
      },
      config.threads);
  ReplicationTable table;
  table.horizon = horizon;
  for (auto& r : results) {
    table.rows.insert(table.rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return table;
}

PerformanceCell performance_cell(std::span<const double> estimates, double theta) {
  if (estimates.size() < 2) {
    throw Error(ErrorKind::insufficient_replications,
                fmt::format("{} successful replication(s); need at least 2", estimates.size()));
  }
  std::vector<double> v(estimates.begin(), estimates.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double e : v) sum += e;
  const double mean = sum / n;
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  PerformanceCell cell;
  cell.n_effective = static_cast<int>(v.size());
  cell.mean = mean;
  cell.bias = mean - theta;
  cell.empse = std::sqrt(ss / (n - 1.0));
  cell.bias_mcse = cell.empse / std::sqrt(n);
  cell.empse_mcse = cell.empse / std::sqrt(2.0 * (n - 1.0));
  return cell;
}

const PerformanceRow* PerformanceReport::find(int scenario, std::string_view method, EstimandId id) const {
  for (const auto& r : rows) {
    if (r.scenario == scenario && r.method == method && r.id == id) return &r;
  }
  return nullptr;
}

PerformanceReport performance(const ReplicationTable& table, const std::map<int, TrueEffects>& truth) {
  // Key order gives a deterministic row order: scenario, method name, estimand.
  std::map<std::tuple<int, std::string, int, int>, std::vector<double>> cells;
  for (const auto& row : table.rows) {
    auto& v = cells[{row.scenario, row.method, static_cast<int>(row.id.comparison), row.id.horizon}];
    if (row.status == CellStatus::ok) v.push_back(row.estimate);
  }
  PerformanceReport report;
  report.horizon = table.horizon;
  for (const auto& [key, estimates] : cells) {
    const auto& [scenario, method, comparison, horizon] = key;
    const auto it = truth.find(scenario);
    if (it == truth.end()) {
      throw Error(ErrorKind::invalid_argument, fmt::format("no truth supplied for scenario {}", scenario));
    }
    PerformanceRow row;
    row.scenario = scenario;
    row.method = method;
    row.id = {static_cast<Comparison>(comparison), horizon};
    row.theta = it->second.at(row.id);
    if (estimates.size() >= 2) {
      row.cell = performance_cell(estimates, row.theta);
    } else {
      row.sufficient = false;
      row.cell = {kNaN, kNaN, kNaN, kNaN, kNaN, static_cast<int>(estimates.size())};
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ComparisonSummary compare_report(const PerformanceReport& report) {
  std::set<std::string> methods;
  for (const auto& r : report.rows) methods.insert(r.method);
  if (methods.size() < 2) throw Error(ErrorKind::invalid_argument, "comparison needs at least two methods");
  ComparisonSummary out;
  std::set<int> scenarios;
  for (const auto& r : report.rows) scenarios.insert(r.scenario);
  const int T = report.horizon;

  for (int s : scenarios) {
    for (const auto& m : methods) {
      for (auto c : kComparisons) {
        MonotoneFlag f{s, m, c, 0, 0, false, false};
        for (int h = 2; h <= T; ++h) {
          const PerformanceRow* a = report.find(s, m, {c, h - 1});
          const PerformanceRow* b = report.find(s, m, {c, h});
          if (!a || !b || !a->sufficient || !b->sufficient) continue;
          ++f.steps;
          if (b->cell.empse > a->cell.empse) ++f.increasing_steps;
        }
        if (f.steps == 0) continue;
        f.strictly = f.increasing_steps == f.steps;
        f.majority = f.increasing_steps >= f.steps - 1;
        out.monotone.push_back(f);
      }
    }
    for (const auto& id : all_estimands(T)) {
      EmpseRanking rank{s, id, {}};
      std::vector<std::pair<double, std::string>> order;
      for (const auto& m : methods) {
        const PerformanceRow* r = report.find(s, m, id);
        if (!r || !r->sufficient) continue;
        order.emplace_back(r->cell.empse, m);
        BiasFlag b{s, m, id, 0.0, false};
        b.ratio = r->cell.bias_mcse > 0 ? std::abs(r->cell.bias) / r->cell.bias_mcse
                                        : (r->cell.bias == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        b.flagged = b.ratio > 3.0;
        out.bias.push_back(b);
      }
      std::sort(order.begin(), order.end());
      for (auto& [e, m] : order) rank.methods.push_back(m);
      if (!rank.methods.empty()) out.rankings.push_back(std::move(rank));
    }
  }
  return out;
}

double Retention::fraction(Combo z) const {
  const auto k = static_cast<std::size_t>(index(z));
  return starters[k] > 0 ? static_cast<double>(sustained[k]) / starters[k] : kNaN;
}

Retention sustained_retention(const LongitudinalDataset& ds, int through) {
  if (through < 0) through = ds.horizon() - 1;
  if (through >= ds.horizon()) {
    throw Error(ErrorKind::index_out_of_range, fmt::format("time {} beyond the last treatment time", through));
  }
  Retention r;
  for (int i = 0; i < ds.size(); ++i) {
    const Combo z0 = ds.z(i, 0);
    const auto k = static_cast<std::size_t>(index(z0));
    ++r.starters[k];
    bool kept = true;
    for (int t = 1; t <= through && kept; ++t) kept = ds.treatment_observed(i, t) && ds.z(i, t) == z0;
    if (kept) ++r.sustained[k];
  }
  return r;
}

}  // namespace gmethods
