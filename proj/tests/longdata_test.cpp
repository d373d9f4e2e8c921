#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "gmethods/error.hpp"
#include "gmethods/longdata.hpp"
#include "support.hpp"

using namespace gmethods;
using gmethods::testing::parse_csv;

namespace {

void expect_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

const char* kTwoPeople =
    "id,time,a,b,l,y\n"
    "p1,0,1,0,0.5,1.0\n"
    "p1,1,1,1,0.2,2.0\n"
    "p1,2,,,,3.0\n"
    "p2,0,0,1,-0.1,0.0\n"
    "p2,1,0,0,0.3,0.5\n"
    "p2,2,,,,0.25\n";

}  // namespace

TEST(Combo, EncodingRoundTrips) {
  for (int a = 0; a <= 1; ++a) {
    for (int b = 0; b <= 1; ++b) {
      const Combo z = encode_combo(a != 0, b != 0);
      EXPECT_EQ(index(z), a + 2 * b);
      EXPECT_EQ(decode_combo(z), std::make_pair(a, b));
    }
  }
  expect_kind(ErrorKind::invalid_argument, [] { combo_from_int(4); });
}

TEST(Comparison, LabelsParseBack) {
  for (auto c : kComparisons) EXPECT_EQ(parse_comparison(label(c)), c);
  EXPECT_EQ(arms(Comparison::ab_vs_b), std::make_pair(Combo::both, Combo::b_only));
}

TEST(Estimands, ComparisonMajorIndex) {
  const auto all = all_estimands(5);
  ASSERT_EQ(all.size(), 30u);
  for (std::size_t k = 0; k < all.size(); ++k) EXPECT_EQ(estimand_index(all[k], 5), static_cast<int>(k));
  EXPECT_EQ(estimand_index({Comparison::a_vs_b, 1}, 5), 10);
}

TEST(LoadCsv, ReadsPanel) {
  const auto ds = parse_csv(kTwoPeople);
  EXPECT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.horizon(), 2);
  EXPECT_EQ(ds.id(1), "p2");
  EXPECT_EQ(ds.z(0, 0), Combo::a_only);
  EXPECT_EQ(ds.z(0, 1), Combo::both);
  EXPECT_EQ(ds.z(1, 0), Combo::b_only);
  EXPECT_DOUBLE_EQ(ds.l(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(ds.y(1, 2), 0.25);
  EXPECT_FALSE(ds.has_censoring());
  EXPECT_FALSE(ds.treatment_observed(0, 2));
}

TEST(LoadCsv, RowOrderDoesNotMatter) {
  const auto ds = parse_csv(
      "id,time,a,b,l,y\n"
      "p1,2,,,,3.0\n"
      "p1,0,1,0,0.5,1.0\n"
      "p1,1,1,1,0.2,2.0\n");
  EXPECT_DOUBLE_EQ(ds.y(0, 2), 3.0);
  EXPECT_EQ(ds.z(0, 1), Combo::both);
}

TEST(LoadCsv, RoundTripsThroughWriter) {
  const auto ds = gmethods::testing::scenario_data(1, 50);
  std::ostringstream out;
  write_long_csv(ds, out);
  const auto back = parse_csv(out.str());
  ASSERT_EQ(back.size(), ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    for (int t = 0; t <= ds.horizon(); ++t) {
      EXPECT_EQ(back.y(i, t), ds.y(i, t));
      if (t < ds.horizon()) {
        EXPECT_EQ(back.z(i, t), ds.z(i, t));
        EXPECT_EQ(back.l(i, t), ds.l(i, t));
      }
    }
  }
}

TEST(LoadCsv, CensoringRowsSetLastObserved) {
  const auto ds = parse_csv(
      "id,time,a,b,l,y,censored\n"
      "p1,0,1,0,0.5,1.0,0\n"
      "p1,1,,,,,1\n"
      "p2,0,0,0,0.1,1.0,0\n"
      "p2,1,0,0,0.1,1.0,0\n"
      "p2,2,,,,2.0,0\n");
  EXPECT_TRUE(ds.has_censoring());
  EXPECT_EQ(ds.last_observed(0), 0);
  EXPECT_EQ(ds.last_observed(1), 2);
  EXPECT_TRUE(ds.censored(0, 1));
  EXPECT_FALSE(ds.outcome_observed(0, 1));
  const auto written = [&] {
    std::ostringstream o;
    write_long_csv(ds, o);
    return o.str();
  }();
  const auto back = parse_csv(written);
  EXPECT_EQ(back.last_observed(0), 0);
}

TEST(LoadCsv, MultipleCovariates) {
  const auto ds = parse_csv(
      "id,time,a,b,l1,l2,y\n"
      "p1,0,0,0,1.5,2.5,0\n"
      "p1,1,,,,,1\n");
  EXPECT_EQ(ds.covariate_width(), 2);
  EXPECT_DOUBLE_EQ(ds.l(0, 0, 1), 2.5);
}

TEST(LoadCsv, Errors) {
  expect_kind(ErrorKind::missing_column, [] { parse_csv("id,time,a,b,y\np,0,0,0,1\np,1,,,2\n"); });
  expect_kind(ErrorKind::non_binary_treatment, [] { parse_csv("id,time,a,b,l,y\np,0,2,0,0,1\np,1,,,,2\n"); });
  expect_kind(ErrorKind::non_contiguous_time, [] { parse_csv("id,time,a,b,l,y\np,0,0,0,0,1\np,2,,,,2\n"); });
  expect_kind(ErrorKind::duplicate_row,
              [] { parse_csv("id,time,a,b,l,y\np,0,0,0,0,1\np,0,0,0,0,1\np,1,,,,2\n"); });
  expect_kind(ErrorKind::parse_error, [] { parse_csv("id,time,a,b,l,y\np,0,0,0,x,1\np,1,,,,2\n"); });
  expect_kind(ErrorKind::empty_input, [] { parse_csv(""); });
  expect_kind(ErrorKind::io_error, [] { load_long_csv(std::filesystem::path("/nonexistent/data.csv")); });
}

TEST(HistoryIndicators, OneHotPerTime) {
  const auto ds = parse_csv(kTwoPeople);
  // p1: z0 = A only (1), z1 = both (3)
  EXPECT_EQ(history_indicators(ds, 0, 1), (std::vector<int>{1, 0, 0, 0, 0, 1}));
  // p2: z0 = B only (2), z1 = none
  EXPECT_EQ(history_indicators(ds, 1, 1), (std::vector<int>{0, 1, 0, 0, 0, 0}));
  expect_kind(ErrorKind::index_out_of_range, [&] { history_indicators(ds, 0, 2); });
  expect_kind(ErrorKind::index_out_of_range, [&] { history_indicators(ds, 5, 0); });
}

TEST(Resample, RepeatsGetDistinctIds) {
  const auto ds = parse_csv(kTwoPeople);
  const std::vector<int> pick = {1, 1, 0};
  const auto r = ds.resample(pick);
  ASSERT_EQ(r.size(), 3);
  EXPECT_NE(r.id(0), r.id(1));
  EXPECT_EQ(r.y(1, 2), ds.y(1, 2));
  EXPECT_EQ(r.z(2, 1), ds.z(0, 1));
}
