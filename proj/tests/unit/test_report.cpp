#include <gtest/gtest.h>

#include "greenview/error.hpp"
#include "greenview/report.hpp"
#include "support.hpp"
#include "published_table.hpp"

using namespace greenview;

TEST(FormatMetric, ThreeSignificantFiguresUnlessMoreAreNeeded) {
  EXPECT_EQ(format_metric(44.7), "44.7");
  EXPECT_EQ(format_metric(0.83), "0.830");
  EXPECT_EQ(format_metric(12.37), "12.37");
  EXPECT_EQ(format_metric(3665), "3665");
  EXPECT_EQ(format_metric(38.9), "38.9");
  EXPECT_EQ(format_metric(-20.0), "-20.0");
  EXPECT_EQ(format_metric(7.83), "7.83");
  EXPECT_EQ(format_metric(0.0), "0.00");
  EXPECT_EQ(format_metric(100.0), "100");
  EXPECT_EQ(format_metric(1.0 / 3.0), "0.3333");
  EXPECT_EQ(format_metric(std::nan("")), "NA");
}

TEST(RenderTable, PublishedRowsMatchGolden) {
  const auto rows = greenview::testing::published_table_rows();
  const auto golden = greenview::testing::read_text(greenview::testing::golden_dir() / "comparison_table.txt");
  EXPECT_EQ(render_table(rows), golden);
}

TEST(RenderTable, MissingValuesShowNa) {
  EvaluationReport r;
  r.mae = 1.5;
  r.err_lo = -1;
  r.err_hi = 2;
  const std::vector<TableRow> rows{{"m", r}};
  const auto text = render_table(rows);
  EXPECT_NE(text.find("NA"), std::string::npos);
  EXPECT_NE(text.find("-1.00, 2.00"), std::string::npos);
}

TEST(ReportJson, RoundTrip) {
  EvaluationReport r;
  r.n = 42;
  r.split = "test";
  r.mean_iou = 61.3;
  r.mae = 7.83;
  r.pearson_r = std::nullopt;
  r.err_lo = -20.0;
  r.err_hi = 12.37;
  r.running_time_s_per_10k = 2064;
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("pearson_r").is_null());
  const auto back = report_from_json(j);
  EXPECT_EQ(back.n, 42u);
  EXPECT_EQ(back.split, "test");
  EXPECT_EQ(back.mean_iou, r.mean_iou);
  EXPECT_EQ(back.pearson_r, r.pearson_r);
  EXPECT_EQ(back.err_hi, r.err_hi);
  EXPECT_EQ(back.running_time_s_per_10k, r.running_time_s_per_10k);
  EXPECT_THROW(report_from_json(nlohmann::json::object()), Error);
}
