//
// Copyright 2026 The evadetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "evadetect/error.hpp"
#include "evadetect/report.hpp"

namespace evadetect {
namespace {

std::string golden(const std::string& name) {
  std::ifstream in(std::string(EVADETECT_GOLDEN) + "/" + name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

DetectionTable table_one() {
  DetectionTable t;
  t.columns = {"FastDetectGPT", "Binoculars", "StyleDetect"};
  t.rows = {
      {"Mistral-7B", {0.72, 0.70, 0.96}},
      {"Mistral-7B-DPO-FastDetectGPT", {0.18, 0.17, 0.95}},
      {"Mistral-7B-DPO-StyleDetect", {0.82, 0.78, 0.95}},
      {"Qwen-7B-Instruct", {0.47, 0.50, 0.98}},
      {"Qwen-7B-Instruct-DPO-FastDetectGPT", {0.49, 0.53, 0.97}},
      {"Qwen-7B-Instruct-DPO-StyleDetect", {0.47, 0.54, 0.97}},
      {"Mistral-Nemo-Instruct", {0.75, 0.79, 0.97}},
      {"Mistral-Nemo-Instruct-DPO-FastDetectGPT", {0.37, 0.33, 0.96}},
      {"Mistral-Nemo-Instruct-DPO-StyleDetect", {0.67, 0.67, 0.95}},
  };
  return t;
}

const std::vector<std::string> kMethods{"Prompting", "Paraphrasing", "DIPPER",
                                        "TinyStyler", "Ours"};

TEST(Report, DetectionTableGolden) {
  EXPECT_EQ(render_detection_markdown(table_one()), golden("detection_table.md"));
}

TEST(Report, DetectionTableSingleCellAndNa) {
  DetectionTable t;
  t.columns = {"Rank"};
  t.rows = {{"ours", {std::nullopt}}};
  EXPECT_EQ(render_detection_markdown(t),
            "| Model | Rank |\n|:---|:---:|\n| ours | n/a |\n");
  t.rows[0].cells.push_back(0.5);
  EXPECT_THROW(render_detection_markdown(t), InvalidArgument);
}

TEST(Report, BelowChanceValuesAreNotClamped) {
  DetectionTable t;
  t.columns = {"FastDetectGPT"};
  t.rows = {{"x", {0.004}}, {"y", {0.0}}};
  EXPECT_EQ(render_detection_markdown(t),
            "| Model | FastDetectGPT |\n|:---|:---:|\n| x | 0.00 |\n| y | 0.00 |\n");
}

TEST(Report, TextMetricsGolden) {
  TextMetricsTable t;
  t.methods = kMethods;
  t.sections = {{"",
                 {134.0, 156.6, 227.40, 212.6, 199.1},
                 {0.90, 0.93, 0.84, 0.78, 0.86}}};
  EXPECT_EQ(render_text_metrics_markdown(t), golden("text_metrics.md"));
}

// The pooled row is the mean of the per-dataset rows.
TEST(Report, TextMetricsMacroAverageGolden) {
  TextMetricsTable t;
  t.methods = kMethods;
  const std::vector<TextMetricsTable::Section> by_dataset{
      {"Reddit",
       {107.33, 122.74, 168.02, 158.78, 169.57},
       {0.87, 0.90, 0.76, 0.77, 0.82}},
      {"Amazon",
       {128.06, 143.12, 223.55, 209.61, 178.01},
       {0.94, 0.96, 0.96, 0.84, 0.90}},
      {"Blogs",
       {166.75, 203.85, 290.62, 269.35, 249.68},
       {0.90, 0.92, 0.81, 0.73, 0.85}},
  };
  t.sections.push_back(macro_average(by_dataset, kMethods.size()));
  t.sections.insert(t.sections.end(), by_dataset.begin(), by_dataset.end());
  EXPECT_EQ(render_text_metrics_markdown(t), golden("text_metrics_by_dataset.md"));
}

TEST(Report, MacroAverageSkipsMissing) {
  const std::vector<TextMetricsTable::Section> s{
      {"a", {3.0, std::nullopt}, {1.0, std::nullopt}},
      {"b", {5.0, std::nullopt}, {std::nullopt, std::nullopt}}};
  const auto m = macro_average(s, 2);
  EXPECT_EQ(m.edit_distance[0], 4.0);
  EXPECT_EQ(m.semantic_sim[0], 1.0);
  EXPECT_FALSE(m.edit_distance[1]);
  EXPECT_THROW(macro_average(s, 3), InvalidArgument);
}

TEST(Report, CurvesCsv) {
  AggregateCurve c;
  c.detector = "Binoculars";
  c.method_id = "ours";
  c.dataset_id = "reddit";
  c.points = {{1, 0.1, 0.05, 0.2}, {5, 1.0 / 3.0, 0.25, 0.5}};
  EXPECT_EQ(render_curves_csv(std::vector<AggregateCurve>{c}),
            "detector,method_id,dataset_id,n,value,ci_lo,ci_hi,protocol\n"
            "Binoculars,ours,reddit,1,0.1,0.05,0.2,disjoint_within_resample\n"
            "Binoculars,ours,reddit,5,0.3333333333333333,0.25,0.5,"
            "disjoint_within_resample\n");
}

TEST(Report, BestDetectorOutputs) {
  std::map<BestDetectorKey, BestDetector> best;
  best[{"ours", "reddit", 1}] = {"StyleDetect", 0.55, false};
  best[{"ours", "reddit", 5}] = {"Rank", 0.7, true};
  best[{"dipper", "reddit", 1}] = {"Rank", 0.9, false};
  EXPECT_EQ(render_best_detector_csv(best),
            "method_id,dataset_id,n,detector,value,tie\n"
            "dipper,reddit,1,Rank,0.9,false\n"
            "ours,reddit,1,StyleDetect,0.55,false\n"
            "ours,reddit,5,Rank,0.7,true\n");
  EXPECT_EQ(render_best_detector_markdown(best),
            "**reddit**\n\n"
            "| Method | n=1 | n=5 |\n"
            "|:---|:---:|:---:|\n"
            "| dipper | 0.90 | n/a |\n"
            "| ours | 0.55 | 0.70 |\n");
}

TEST(Report, Formatting) {
  EXPECT_EQ(format_full(0.1), "0.1");
  EXPECT_EQ(format_full(1.0), "1");
  EXPECT_EQ(format_full(-2.5e-10), "-2.5e-10");
  EXPECT_EQ(std::stod(format_full(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_fixed(0.705, 2), "0.70");  // binary value is below .705
  EXPECT_EQ(format_fixed(134.0466, 1), "134.0");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Report, IssueLogLines) {
  IssueLog log("eval");
  log.warn("cell n/a", {{"detector", "Rank"}});
  log.error("boom");
  EXPECT_EQ(log.size(), 2u);
  std::istringstream in(log.render());
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["severity"], "warning");
  EXPECT_EQ(j["command"], "eval");
  EXPECT_EQ(j["detector"], "Rank");
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line)["severity"], "error");
}

}  // namespace
}  // namespace evadetect
