#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmethods/estimators.hpp"
#include "gmethods/longdata.hpp"
#include "gmethods/oracle.hpp"

namespace gmethods {

struct ReplicationRow {
  int scenario = 0;
  int replication = 0;
  std::string method;
  EstimandId id;
  double estimate = 0.0;  // NaN unless status is ok
  CellStatus status = CellStatus::ok;
  std::string message;
};

struct ReplicationTable {
  int horizon = 5;
  std::vector<ReplicationRow> rows;
};

struct StudyConfig {
  std::vector<int> scenarios = {1};
  std::vector<Method> methods = {kMethods.begin(), kMethods.end()};
  int n_sim = 200;
  int n = 10000;
  std::uint64_t master_seed = 6122020;
  MethodConfig method_config;
  int threads = 1;
  // Called after each finished (scenario, replication) with the count done so far.
  std::function<void(int done, int total)> progress;
};

// Rows are ordered by scenario, replication, method (config order) and
// estimand, independent of the worker count.
ReplicationTable run_study(const StudyConfig& config);

// Rows for one dataset and one method; failures become `failed` rows.
std::vector<ReplicationRow> run_cell(int scenario, int replication, Method method, const LongitudinalDataset& ds,
                                     const MethodConfig& config, int horizon);

struct PerformanceCell {
  double mean = 0.0;
  double bias = 0.0;  // mean - theta
  double bias_mcse = 0.0;
  double empse = 0.0;
  double empse_mcse = 0.0;
  int n_effective = 0;
};

// Throws InsufficientReplications for fewer than 2 estimates. Estimates are
// sorted first so the result does not depend on their order.
PerformanceCell performance_cell(std::span<const double> estimates, double theta);

struct PerformanceRow {
  int scenario = 0;
  std::string method;
  EstimandId id;
  double theta = 0.0;
  PerformanceCell cell;
  bool sufficient = true;  // false: fewer than 2 successful replications, values NaN
};

struct PerformanceReport {
  int horizon = 5;
  std::vector<PerformanceRow> rows;

  const PerformanceRow* find(int scenario, std::string_view method, EstimandId id) const;
};

// Truth per scenario id.
PerformanceReport performance(const ReplicationTable& table, const std::map<int, TrueEffects>& truth);

struct MonotoneFlag {
  int scenario = 0;
  std::string method;
  Comparison comparison = Comparison::a_vs_nil;
  int increasing_steps = 0;
  int steps = 0;
  bool strictly = false;  // every step increases
  bool majority = false;  // at least steps - 1 of the steps increase
};

struct BiasFlag {
  int scenario = 0;
  std::string method;
  EstimandId id;
  double ratio = 0.0;  // |bias| / bias_mcse
  bool flagged = false;  // |bias| > 3 * bias_mcse
};

struct EmpseRanking {
  int scenario = 0;
  EstimandId id;
  std::vector<std::string> methods;  // ascending EmpSE
};

struct ComparisonSummary {
  std::vector<MonotoneFlag> monotone;
  std::vector<BiasFlag> bias;
  std::vector<EmpseRanking> rankings;
};

// Requires at least two methods in the report.
ComparisonSummary compare_report(const PerformanceReport& report);

// Individuals starting on each combo at time 0 and those who keep it at every
// treatment time through `through` (default: the last treatment time).
struct Retention {
  std::array<int, 4> starters{};
  std::array<int, 4> sustained{};

  double fraction(Combo z) const;
};

Retention sustained_retention(const LongitudinalDataset& ds, int through = -1);

}  // namespace gmethods
