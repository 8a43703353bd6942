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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>
#include <unistd.h>

#include "evadetect/commands.hpp"
#include "evadetect/error.hpp"
#include "evadetect/report.hpp"

namespace evadetect {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kFixtures = EVADETECT_FIXTURES;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("evadetect_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
            "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  json fixture_config(const std::string& name) {
    json j = json::parse(slurp(kFixtures / name));
    j["output_dir"] = (dir_ / "out").string();
    return j;
  }
  RunConfig config(const json& j, const std::string& fixture_dir) {
    return run_config_from_json(j, kFixtures / fixture_dir);
  }

  fs::path dir_;
  std::ostringstream err_;
};

TEST_F(Commands, ValidateCleanFixture) {
  RunConfig c = config(fixture_config("clean/eval.json"), "clean");
  std::ostringstream out;
  EXPECT_EQ(cmd_validate(c, out, err_), kExitOk);
  EXPECT_NE(out.str().find("dataset_id"), std::string::npos);
  EXPECT_NE(out.str().find("news        prompting  machine  4"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("OK: 30 documents"), std::string::npos);
}

TEST_F(Commands, ValidateBadLine) {
  RunConfig c;
  c.documents = kFixtures / "bad_line/documents.jsonl";
  std::ostringstream out;
  EXPECT_EQ(cmd_validate(c, out, err_), kExitValidationError);
  EXPECT_NE(err_.str().find("documents.jsonl:3: field 'label'"), std::string::npos)
      << err_.str();
}

TEST_F(Commands, ValidateEmptyFiles) {
  RunConfig c;
  c.documents = kFixtures / "empty/documents.jsonl";
  c.stats = {kFixtures / "empty/stats.jsonl"};
  c.embeddings = {kFixtures / "empty/embeddings.jsonl"};
  std::ostringstream out;
  EXPECT_EQ(cmd_validate(c, out, err_), kExitValidationError);
  EXPECT_NE(err_.str().find("empty corpus"), std::string::npos);
}

TEST_F(Commands, ConfigErrors) {
  json j = fixture_config("clean/eval.json");
  j["colour"] = "blue";
  EXPECT_THROW(config(j, "clean"), ConfigError);
  j = fixture_config("clean/eval.json");
  j["centroid"]["k"] = 0;
  EXPECT_THROW(config(j, "clean"), ConfigError);
  j = fixture_config("clean/eval.json");
  j["detectors"][0]["kind"] = "Radar";
  EXPECT_THROW(config(j, "clean"), ConfigError);
  j = fixture_config("clean/eval.json");
  j["metric"] = {{"kind", "pauroc"}, {"max_fpr", 0}};
  EXPECT_THROW(config(j, "clean"), ConfigError);

  j = fixture_config("clean/eval.json");
  j["affinity_propagation"] = {{"damping", 0.3}};
  EXPECT_THROW(config(j, "clean"), ConfigError);

  j = fixture_config("clean/eval.json");
  j["detectors"] = json::array({{{"kind", "Rank"}, {"stats_id", "llama"}}});
  EXPECT_EQ(cmd_eval(config(j, "clean"), j, err_), kExitConfigError);
  EXPECT_NE(err_.str().find("llama"), std::string::npos);
}

TEST_F(Commands, ThreadsFromEnvironment) {
  ::setenv(kThreadsEnv, "3", 1);
  EXPECT_EQ(default_threads(), 3u);
  EXPECT_EQ(config(fixture_config("clean/eval.json"), "clean").threads, 3u);
  ::setenv(kThreadsEnv, "zero", 1);
  EXPECT_EQ(default_threads(), 1u);
  ::unsetenv(kThreadsEnv);
}

TEST_F(Commands, EvalWritesBothTables) {
  const json j = fixture_config("clean/eval.json");
  ASSERT_EQ(cmd_eval(config(j, "clean"), j, err_), kExitOk) << err_.str();
  const fs::path out = dir_ / "out";
  const std::string md = slurp(out / "detection_table.md");
  EXPECT_NE(md.find("## AUROC\n\n| Model | FastDetectGPT | Binoculars | StyleDetect |"),
            std::string::npos);
  EXPECT_NE(md.find("## AUROC(10)"), std::string::npos);
  EXPECT_NE(md.find("| Mistral-7B |"), std::string::npos);
  EXPECT_NE(md.find("| Prompting |"), std::string::npos);
  const auto csv = lines(slurp(out / "detection_table.csv"));
  ASSERT_EQ(csv.size(), 7u);
  // Exemplar documents never appear as evaluated rows; 4 + 4 machine docs
  // per method against 8 human docs.
  EXPECT_NE(csv[1].find(",8,8,"), std::string::npos) << csv[1];
  EXPECT_EQ(json::parse(slurp(out / "config.json"))["seed"], 3);
  EXPECT_TRUE(fs::exists(out / "issues.jsonl"));

  // Same seed, same bytes.
  const std::string first = slurp(out / "detection_table.csv");
  ASSERT_EQ(cmd_eval(config(j, "clean"), j, err_), kExitOk);
  EXPECT_EQ(slurp(out / "detection_table.csv"), first);
}

TEST_F(Commands, EvalSingleCell) {
  json j = fixture_config("clean/eval.json");
  j["detectors"] = json::array({{{"kind", "Rank"}, {"stats_id", "gpt2"}}});
  j["rows"] = json::array({"mistral"});
  ASSERT_EQ(cmd_eval(config(j, "clean"), j, err_), kExitOk) << err_.str();
  const std::string md = slurp(dir_ / "out/detection_table.md");
  const auto table = md.substr(0, md.find("\n## AUROC(10)"));
  EXPECT_EQ(lines(table).size(), 5u) << table;  // heading, blank, header, rule, row
  EXPECT_NE(table.find("| Model | Rank |"), std::string::npos);
}

TEST_F(Commands, EvalMissingRecordsBecomeNa) {
  json j = fixture_config("clean/eval.json");
  // The exemplar pool has no stats and too few docs per dataset for k=5.
  j["centroid"]["k"] = 5;
  j["rows"] = json::array({"mistral", "exemplar"});
  ASSERT_EQ(cmd_eval(config(j, "clean"), j, err_), kExitOk) << err_.str();
  const std::string md = slurp(dir_ / "out/detection_table.md");
  EXPECT_NE(md.find("| exemplar | n/a | n/a | n/a |"), std::string::npos) << md;
  EXPECT_NE(md.find("StyleDetect |\n|:---|:---:|:---:|:---:|\n| mistral |"), std::string::npos);
  const auto issues = lines(slurp(dir_ / "out/issues.jsonl"));
  EXPECT_GE(issues.size(), 3u);
  for (const auto& l : issues) EXPECT_EQ(json::parse(l)["command"], "eval");
}

TEST_F(Commands, EvalExternalScoreColumns) {
  const fs::path ext = dir_ / "ext.jsonl";
  std::ofstream(ext) << R"({"doc_id":"essays-m0","detector_name":"RADAR","value":0.9,"orientation":"higher_machine"})"
                     << "\n";
  json j = fixture_config("clean/eval.json");
  j["external_scores"] = json::array({ext.string()});
  ASSERT_EQ(cmd_eval(config(j, "clean"), j, err_), kExitOk) << err_.str();
  const std::string md = slurp(dir_ / "out/detection_table.md");
  EXPECT_NE(md.find("| StyleDetect | RADAR |"), std::string::npos);
  EXPECT_NE(md.find("| n/a |\n"), std::string::npos);
}

TEST_F(Commands, AggregateGaussianFixture) {
  const json j = fixture_config("gaussian/aggregate.json");
  ASSERT_EQ(cmd_aggregate(config(j, "gaussian"), j, err_), kExitOk) << err_.str();
  const fs::path out = dir_ / "out";
  const auto curves = lines(slurp(out / "curves.csv"));
  ASSERT_EQ(curves.size(), 1u + 2 * 5);
  EXPECT_EQ(curves[0], "detector,method_id,dataset_id,n,value,ci_lo,ci_hi,protocol");
  const auto best = lines(slurp(out / "best_detector.csv"));
  ASSERT_EQ(best.size(), 6u);
  for (std::size_t i = 1; i < best.size(); ++i) {
    EXPECT_NE(best[i].find(",Binoculars,"), std::string::npos) << best[i];
  }
  EXPECT_TRUE(fs::exists(out / "best_detector.md"));
}

TEST_F(Commands, AggregateIsByteIdenticalAcrossRunsAndThreads) {
  std::map<std::string, std::string> reference;
  for (int threads : {1, 1, 8}) {
    json j = fixture_config("gaussian/aggregate.json");
    j["threads"] = threads;
    ASSERT_EQ(cmd_aggregate(config(j, "gaussian"), j, err_), kExitOk);
    for (const char* f : {"curves.csv", "best_detector.csv", "best_detector.md"}) {
      const std::string bytes = slurp(dir_ / "out" / f);
      if (!reference.count(f)) reference[f] = bytes;
      EXPECT_EQ(bytes, reference[f]) << f << " at " << threads << " threads";
    }
  }
}

TEST_F(Commands, AggregateGridTooLargeIsComputationError) {
  json j = fixture_config("gaussian/aggregate.json");
  j["aggregation"]["sample_sizes"] = {1, 200};
  EXPECT_EQ(cmd_aggregate(config(j, "gaussian"), j, err_), kExitComputationError);
  EXPECT_NE(err_.str().find("Binoculars"), std::string::npos) << err_.str();
}

void write_lines(const fs::path& p, const std::vector<json>& records) {
  std::ofstream out(p);
  for (const auto& r : records) out << r.dump() << "\n";
}

TEST_F(Commands, TextMetricsMeans) {
  const auto doc = [](std::string id, std::string method, std::string text) {
    const auto n = text.size();
    return json{{"doc_id", id},       {"label", "machine"},  {"author_id", "a"},
                {"dataset_id", "ds"}, {"method_id", method}, {"text", text},
                {"char_count", n}};
  };
  const auto emb = [](std::string id, std::vector<double> v) {
    return json{{"doc_id", id}, {"encoder_id", "sbert"}, {"dim", v.size()}, {"vector", v}};
  };
  write_lines(dir_ / "docs.jsonl",
              {doc("o1", "src", "abcdef"), doc("o2", "src", "abcdef"),
               doc("o3", "src", "same"), doc("x1", "ours", "xyzdef"),
               doc("x2", "ours", "vwxyzf"), doc("x3", "copy", "same")});
  write_lines(dir_ / "embs.jsonl",
              {emb("o1", {1, 0}), emb("o2", {1, 0}), emb("o3", {2, 1}),
               emb("x1", {1, 1}), emb("x2", {1, 2}), emb("x3", {2, 1})});
  write_lines(dir_ / "pairs.jsonl",
              {json{{"original_doc_id", "o1"}, {"modified_doc_id", "x1"}},
               json{{"original_doc_id", "o2"}, {"modified_doc_id", "x2"}},
               json{{"original_doc_id", "o3"}, {"modified_doc_id", "x3"}}});
  const json j{{"documents", "docs.jsonl"},
               {"embeddings", "embs.jsonl"},
               {"pairs", "pairs.jsonl"},
               {"output_dir", "out"}};
  ASSERT_EQ(cmd_textmetrics(run_config_from_json(j, dir_), j, err_), kExitOk) << err_.str();
  const auto csv = lines(slurp(dir_ / "out/edit_sem_table.csv"));
  ASSERT_EQ(csv.size(), 5u);
  EXPECT_EQ(csv[1], "copy,all,1,0,1,1");
  EXPECT_EQ(csv[2], "copy,ds,1,0,1,1");
  // edit distances 3 and 5; cosines 1/sqrt(2) and 1/sqrt(5)
  EXPECT_EQ(csv[3].substr(0, 14), "ours,all,2,4,2");
  const std::string md = slurp(dir_ / "out/edit_sem_table.md");
  EXPECT_NE(md.find("| Edit Distance | 0.0 | 4.0 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| Semantic Sim. | 1.00 | 0.58 |"), std::string::npos) << md;
}

TEST_F(Commands, TextMetricsMissingTextIsNa) {
  write_lines(dir_ / "docs.jsonl",
              {json{{"doc_id", "o"}, {"label", "machine"}, {"author_id", "a"},
                    {"dataset_id", "d"}, {"method_id", "m"}, {"char_count", 3}},
               json{{"doc_id", "x"}, {"label", "machine"}, {"author_id", "a"},
                    {"dataset_id", "d"}, {"method_id", "ours"}, {"char_count", 3}}});
  write_lines(dir_ / "pairs.jsonl",
              {json{{"original_doc_id", "o"}, {"modified_doc_id", "x"}}});
  const json j{{"documents", "docs.jsonl"}, {"pairs", "pairs.jsonl"}, {"output_dir", "out"}};
  ASSERT_EQ(cmd_textmetrics(run_config_from_json(j, dir_), j, err_), kExitOk);
  EXPECT_NE(slurp(dir_ / "out/edit_sem_table.md").find("| Edit Distance | n/a |"),
            std::string::npos);
  EXPECT_GE(lines(slurp(dir_ / "out/issues.jsonl")).size(), 2u);

  write_lines(dir_ / "pairs.jsonl",
              {json{{"original_doc_id", "o"}, {"modified_doc_id", "ghost"}}});
  EXPECT_EQ(cmd_textmetrics(run_config_from_json(j, dir_), j, err_), kExitValidationError);
}

TEST_F(Commands, PrefPairsScoresMissingCandidates) {
  const json j = fixture_config("clean/eval.json");
  ASSERT_EQ(cmd_prefpairs(config(j, "clean"), j, err_), kExitOk) << err_.str();
  const auto out = lines(slurp(dir_ / "out/preference_pairs.jsonl"));
  ASSERT_EQ(out.size(), 8u);
  for (const auto& l : out) {
    const auto p = json::parse(l);
    EXPECT_NE(p["chosen_doc_id"], p["rejected_doc_id"]);
    EXPECT_EQ(p["seed"], 3);
  }
  json no_detector = j;
  no_detector.erase("preference_detector");
  EXPECT_EQ(cmd_prefpairs(config(no_detector, "clean"), no_detector, err_),
            kExitConfigError);
}

TEST_F(Commands, SampleClustersAuthors) {
  json j = fixture_config("clean/eval.json");
  j["filter"] = {{"label", "human"}};
  ASSERT_EQ(cmd_sample(config(j, "clean"), j, err_), kExitOk) << err_.str();
  EXPECT_EQ(lines(slurp(dir_ / "out/clusters.csv")).size(), 7u);
  EXPECT_EQ(lines(slurp(dir_ / "out/sampled_authors.csv")).size(), 4u);
  j["quota"] = 7;
  EXPECT_EQ(cmd_sample(config(j, "clean"), j, err_), kExitComputationError);
}

TEST_F(Commands, ExportEmbeddingsShape) {
  std::vector<json> docs, embs;
  for (int i = 0; i < 100; ++i) {
    const std::string id = "d" + std::to_string(i);
    docs.push_back({{"doc_id", id}, {"label", i % 2 ? "human" : "machine"},
                    {"author_id", "a"}, {"dataset_id", "x"},
                    {"method_id", i < 10 ? "ours" : "dipper"}, {"char_count", 1}});
    embs.push_back({{"doc_id", id}, {"encoder_id", "luar"}, {"dim", 3},
                    {"vector", {i + 1, 0.5, -1}}});
  }
  write_lines(dir_ / "docs.jsonl", docs);
  write_lines(dir_ / "embs.jsonl", embs);
  json j{{"documents", "docs.jsonl"}, {"embeddings", "embs.jsonl"},
         {"encoder_id", "luar"}, {"output_dir", "out"}};
  ASSERT_EQ(cmd_export_embeddings(run_config_from_json(j, dir_), j, err_), kExitOk);
  auto csv = lines(slurp(dir_ / "out/matrix.csv"));
  ASSERT_EQ(csv.size(), 101u);
  EXPECT_EQ(csv[0], "doc_id,label,method_id,e0,e1,e2");
  for (const auto& l : csv) EXPECT_EQ(std::count(l.begin(), l.end(), ','), 5);

  j["filter"] = {{"method_id", "ours"}};
  ASSERT_EQ(cmd_export_embeddings(run_config_from_json(j, dir_), j, err_), kExitOk);
  csv = lines(slurp(dir_ / "out/matrix.csv"));
  ASSERT_EQ(csv.size(), 11u);
  for (std::size_t i = 1; i < csv.size(); ++i) {
    EXPECT_NE(csv[i].find(",ours,"), std::string::npos);
  }

  j["filter"] = {{"method_id", "nobody"}};
  ASSERT_EQ(cmd_export_embeddings(run_config_from_json(j, dir_), j, err_), kExitOk);
  EXPECT_EQ(lines(slurp(dir_ / "out/matrix.csv")).size(), 1u);
  EXPECT_NE(err_.str().find("warning"), std::string::npos);

  j["encoder_id"] = "cisr";
  EXPECT_EQ(cmd_export_embeddings(run_config_from_json(j, dir_), j, err_), kExitConfigError);
}

}  // namespace
}  // namespace evadetect
