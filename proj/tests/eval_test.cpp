#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmethods/error.hpp"
#include "gmethods/eval.hpp"
#include "gmethods/oracle.hpp"
#include "gmethods/report_io.hpp"
#include "gmethods/svg.hpp"
#include "support.hpp"

using namespace gmethods;

namespace {

ReplicationTable synthetic_table(const std::vector<double>& estimates, const std::string& method = "iptw") {
  ReplicationTable t;
  t.horizon = 1;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    for (auto c : kComparisons) {
      ReplicationRow r;
      r.scenario = 1;
      r.replication = static_cast<int>(k);
      r.method = method;
      r.id = {c, 1};
      r.estimate = estimates[k];
      t.rows.push_back(r);
    }
  }
  return t;
}

TrueEffects constant_truth(double theta, int horizon) {
  TrueEffects t;
  t.scenario = 1;
  t.horizon = horizon;
  t.theta.assign(static_cast<std::size_t>(6 * horizon), theta);
  return t;
}

StudyConfig small_study() {
  StudyConfig c;
  c.scenarios = {1};
  c.methods = {Method::iptw, Method::gest};
  c.n_sim = 3;
  c.n = 1500;
  c.master_seed = 17;
  return c;
}

}  // namespace

TEST(Performance, TwoPointFormulas) {
  const std::vector<double> est = {0.9, 1.1};
  const auto cell = performance_cell(est, 1.0);
  EXPECT_NEAR(cell.bias, 0.0, 1e-15);
  EXPECT_NEAR(cell.empse, std::sqrt(0.02), 1e-15);
  EXPECT_NEAR(cell.empse, 0.1414213562, 1e-9);
  EXPECT_NEAR(cell.empse_mcse, 0.1, 1e-15);
  EXPECT_NEAR(cell.bias_mcse, 0.1, 1e-15);
  EXPECT_EQ(cell.n_effective, 2);
}

TEST(Performance, ConstantEstimates) {
  const std::vector<double> exact = {1.0, 1.0, 1.0};
  EXPECT_EQ(performance_cell(exact, 1.0).empse, 0.0);
  EXPECT_EQ(performance_cell(exact, 1.0).bias, 0.0);
  const std::vector<double> offset = {1.2, 1.2, 1.2, 1.2};
  const auto cell = performance_cell(offset, 1.0);
  EXPECT_NEAR(cell.bias, 0.2, 1e-15);
  EXPECT_EQ(cell.empse, 0.0);
}

TEST(Performance, MatchesTwoPassAndTableFormula) {
  const std::vector<double> est = {0.3, 1.7, 0.95, 1.2, 0.8, 1.05};
  const auto cell = performance_cell(est, 1.0);
  double mean = 0.0;
  for (double e : est) mean += e;
  mean /= est.size();
  double ss = 0.0;
  for (double e : est) ss += (e - mean) * (e - mean);
  const double n = static_cast<double>(est.size());
  EXPECT_NEAR(cell.empse, std::sqrt(ss / (n - 1)), 1e-12);
  EXPECT_NEAR(cell.bias_mcse, std::sqrt(ss / (n * (n - 1))), 1e-12);
  EXPECT_DOUBLE_EQ(cell.bias + 1.0, cell.mean);
}

TEST(Performance, OrderInvariant) {
  std::vector<double> est = {0.3, 1.7, 0.95, 1.2, 0.8, 1.05, 0.1, 2.2};
  const auto a = performance_cell(est, 1.0);
  std::reverse(est.begin(), est.end());
  std::swap(est[1], est[5]);
  const auto b = performance_cell(est, 1.0);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.empse, b.empse);
}

TEST(Performance, InsufficientReplications) {
  const std::vector<double> one = {1.0};
  try {
    performance_cell(one, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_replications);
  }
}

TEST(Performance, FailedCellsExcluded) {
  auto table = synthetic_table({0.9, 1.1, 5.0});
  for (auto& r : table.rows) {
    if (r.replication == 2) {
      r.status = CellStatus::failed;
      r.estimate = std::nan("");
    }
  }
  const auto report = performance(table, {{1, constant_truth(1.0, 1)}});
  const auto* row = report.find(1, "iptw", {Comparison::ab_vs_b, 1});
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->cell.n_effective, 2);
  EXPECT_NEAR(row->cell.empse, std::sqrt(0.02), 1e-15);

  auto thin = synthetic_table({0.9, 1.1});
  thin.rows.front().status = CellStatus::empty_arm;
  const auto r2 = performance(thin, {{1, constant_truth(1.0, 1)}});
  const auto* a0 = r2.find(1, "iptw", {Comparison::a_vs_nil, 1});
  ASSERT_NE(a0, nullptr);
  EXPECT_FALSE(a0->sufficient);
  EXPECT_EQ(a0->cell.n_effective, 1);
}

TEST(Study, RowCountAndOrder) {
  StudyConfig c = small_study();
  c.methods = {Method::iptw};
  c.n_sim = 1;
  const auto t = run_study(c);
  EXPECT_EQ(t.rows.size(), 30u);
}

TEST(Study, DeterministicAcrossThreads) {
  StudyConfig c = small_study();
  c.threads = 1;
  const auto a = run_study(c);
  c.threads = 3;
  const auto b = run_study(c);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  ASSERT_EQ(a.rows.size(), 3u * 2u * 30u);
  std::ostringstream sa, sb;
  write_raw_csv(sa, a);
  write_raw_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Study, FailuresBecomeRows) {
  StudyConfig c = small_study();
  c.n = 30;  // too small for the sequential-trials design to fit
  c.methods = {Method::seqtrial};
  const auto t = run_study(c);
  EXPECT_EQ(t.rows.size(), 3u * 30u);
  for (const auto& r : t.rows) {
    if (r.status != CellStatus::ok) EXPECT_TRUE(std::isnan(r.estimate));
    if (r.status == CellStatus::failed) EXPECT_FALSE(r.message.empty());
  }
}

TEST(Compare, MonotoneAndBiasFlags) {
  PerformanceReport report;
  report.horizon = 3;
  for (const std::string m : {"a", "b"}) {
    for (int h = 1; h <= 3; ++h) {
      PerformanceRow r;
      r.scenario = 1;
      r.method = m;
      r.id = {Comparison::ab_vs_b, h};
      r.cell.empse = m == "a" ? 0.1 * h : 0.3 - 0.05 * h;
      r.cell.bias_mcse = 0.01;
      r.cell.bias = m == "a" ? 0.0 : 0.05;
      r.cell.n_effective = 10;
      report.rows.push_back(r);
    }
  }
  const auto summary = compare_report(report);
  int checked = 0;
  for (const auto& f : summary.monotone) {
    if (f.comparison != Comparison::ab_vs_b) continue;
    ++checked;
    EXPECT_EQ(f.strictly, f.method == "a");
    EXPECT_EQ(f.steps, 2);
  }
  EXPECT_EQ(checked, 2);
  for (const auto& b : summary.bias) EXPECT_EQ(b.flagged, b.method == "b");
  for (const auto& r : summary.rankings) {
    if (r.id.horizon == 3) EXPECT_EQ(r.methods.front(), "b");
  }
  PerformanceReport single = report;
  single.rows.resize(3);
  EXPECT_THROW(compare_report(single), Error);
}

TEST(Retention, CountsSustainedStarters) {
  const auto ds = gmethods::testing::parse_csv(
      "id,time,a,b,l,y\n"
      "p1,0,0,1,0,0\np1,1,0,1,0,0\np1,2,,,,0\n"
      "p2,0,0,1,0,0\np2,1,1,1,0,0\np2,2,,,,0\n"
      "p3,0,1,1,0,0\np3,1,1,1,0,0\np3,2,,,,0\n");
  const auto r = sustained_retention(ds);
  EXPECT_EQ(r.starters[2], 2);
  EXPECT_EQ(r.sustained[2], 1);
  EXPECT_DOUBLE_EQ(r.fraction(Combo::b_only), 0.5);
  EXPECT_DOUBLE_EQ(r.fraction(Combo::both), 1.0);
}

TEST(ReportIo, RawRoundTrip) {
  auto table = synthetic_table({0.123456789012345, -2.5e-7});
  table.rows[3].status = CellStatus::failed;
  table.rows[3].estimate = std::nan("");
  table.rows[3].message = "Separation: \"quoted\", with comma";
  std::stringstream s;
  write_raw_csv(s, table);
  const auto back = read_raw_csv(s);
  ASSERT_EQ(back.rows.size(), table.rows.size());
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    EXPECT_EQ(back.rows[k].status, table.rows[k].status);
    EXPECT_EQ(back.rows[k].message, table.rows[k].message);
    if (table.rows[k].status == CellStatus::ok) EXPECT_EQ(back.rows[k].estimate, table.rows[k].estimate);
  }
}

TEST(ReportIo, ReportRoundTrip) {
  const auto report = performance(synthetic_table({0.91, 1.13, 1.0 / 3.0}), {{1, constant_truth(1.0, 1)}});
  std::stringstream s;
  write_report_csv(s, report);
  const auto back = read_report_csv(s);
  ASSERT_EQ(back.rows.size(), report.rows.size());
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    EXPECT_NEAR(back.rows[k].cell.bias, report.rows[k].cell.bias, 1e-10);
    EXPECT_NEAR(back.rows[k].cell.empse, report.rows[k].cell.empse, 1e-10);
    EXPECT_EQ(back.rows[k].cell.n_effective, report.rows[k].cell.n_effective);
  }
  std::stringstream empty;
  write_report_csv(empty, PerformanceReport{});
  std::string text = empty.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(ReportIo, TruthCsvHasReferenceRow) {
  std::stringstream s;
  write_truth_csv(s, {published_truth(1)});
  EXPECT_NE(s.str().find("1,AB-B,5,1.13,NA"), std::string::npos);
  const auto back = read_truth_csv(s);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].theta, published_truth(1).theta);
}

TEST(ReportIo, RealFormatting) {
  EXPECT_EQ(format_real(std::nan("")), "NA");
  EXPECT_EQ(parse_real_field(format_real(0.1 + 0.2)), 0.1 + 0.2);
  EXPECT_TRUE(std::isnan(parse_real_field("NA")));
  EXPECT_THROW(parse_real_field("abc"), Error);
}

TEST(ReportIo, EmitFileErrors) {
  EXPECT_THROW(emit_file("/proc/forbidden/x.csv", [](std::ostream& o) { o << "x"; }), Error);
}

TEST(Svg, PanelsPerComparison) {
  PerformanceReport report = performance(synthetic_table({0.9, 1.1, 1.05}, "iptw"), {{1, constant_truth(1.0, 1)}});
  const auto more = performance(synthetic_table({0.8, 1.2, 1.0}, "gest"), {{1, constant_truth(1.0, 1)}});
  report.horizon = 1;
  report.rows.insert(report.rows.end(), more.rows.begin(), more.rows.end());
  const std::string svg = render_figure(report, Comparison::ab_vs_b, PanelMeasure::bias);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("iptw"), std::string::npos);
  EXPECT_NE(svg.find("gest"), std::string::npos);
  const auto dir = std::filesystem::temp_directory_path() / "gmethods_svg_test";
  std::filesystem::remove_all(dir);
  const auto files = write_figures(report, dir);
  EXPECT_EQ(files.size(), 12u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
  std::filesystem::remove_all(dir);
}
