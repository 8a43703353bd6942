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

// evadetect: command-line front end.
//
//   evadetect <command> [--config run.json] [flags]
//
// Flags override the matching config keys. Exit codes: 0 ok, 2 config error,
// 3 validation error, 4 computation error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evadetect/commands.hpp"
#include "evadetect/error.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evadetect;

struct Flags {
  std::string config;
  std::string documents;
  std::vector<std::string> stats;
  std::vector<std::string> embeddings;
  std::vector<std::string> external_scores;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string dataset_id;
  std::string method_id;
  std::string label;
  std::string author_id;
  std::string encoder;
  std::optional<long> quota;
  std::string pairs;
  std::string candidates;
  std::vector<int> sample_sizes;
  std::optional<int> resamples;
  std::string metric;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run config (JSON)");
  cmd->add_option("--documents", f.documents, "documents.jsonl");
  cmd->add_option("--stats", f.stats, "Token-statistics JSONL files");
  cmd->add_option("--embeddings", f.embeddings, "Embedding JSONL files");
  cmd->add_option("--external-scores", f.external_scores,
                  "Precomputed detector scores (JSONL)");
}

void add_output(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--threads", f.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dataset", f.dataset_id, "Only this dataset_id");
  cmd->add_option("--method", f.method_id, "Only this method_id");
  cmd->add_option("--label", f.label, "Only this label")
      ->check(CLI::IsMember({"human", "machine"}));
  cmd->add_option("--author", f.author_id, "Only this author_id");
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// Paths given on the command line are relative to the working directory,
// while paths inside the config are relative to the config file.
json merged_config(const Flags& f, fs::path& base_dir) {
  json config = json::object();
  base_dir = fs::current_path();
  if (!f.config.empty()) {
    config = read_config(f.config);
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    base_dir = fs::absolute(f.config).parent_path();
  }
  const auto abs = [](const std::string& p) {
    return fs::absolute(p).lexically_normal().string();
  };
  const auto abs_list = [&](const std::vector<std::string>& ps) {
    json out = json::array();
    for (const auto& p : ps) out.push_back(abs(p));
    return out;
  };
  if (!f.documents.empty()) config["documents"] = abs(f.documents);
  if (!f.stats.empty()) config["stats"] = abs_list(f.stats);
  if (!f.embeddings.empty()) config["embeddings"] = abs_list(f.embeddings);
  if (!f.external_scores.empty()) {
    config["external_scores"] = abs_list(f.external_scores);
  }
  if (!f.out.empty()) config["output_dir"] = abs(f.out);
  if (f.seed) config["seed"] = *f.seed;
  if (f.threads) config["threads"] = *f.threads;
  const auto filter = [&](const char* key, const std::string& value) {
    if (value.empty()) return;
    if (!config.contains("filter") || config["filter"].is_null()) {
      config["filter"] = json::object();
    }
    config["filter"][key] = value;
  };
  filter("dataset_id", f.dataset_id);
  filter("method_id", f.method_id);
  filter("label", f.label);
  filter("author_id", f.author_id);
  if (!f.encoder.empty()) config["encoder_id"] = f.encoder;
  if (f.quota) config["quota"] = *f.quota;
  if (!f.pairs.empty()) config["pairs"] = abs(f.pairs);
  if (!f.candidates.empty()) config["candidates"] = abs(f.candidates);
  if (!f.sample_sizes.empty()) config["aggregation"]["sample_sizes"] = f.sample_sizes;
  if (f.resamples) config["aggregation"]["resamples"] = *f.resamples;
  if (!f.metric.empty()) {
    if (f.metric == "auroc") {
      config["metric"] = {{"kind", "auroc"}};
    } else {
      config["metric"] = {{"kind", "pauroc"}, {"max_fpr", std::stod(f.metric)}};
    }
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation toolkit for machine-text detectors"};
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "Check corpus files and print counts");
  add_common(validate, f);

  auto* eval = app.add_subcommand("eval", "Detection tables (AUROC, AUROC(10))");
  add_common(eval, f);
  add_output(eval, f);

  auto* aggregate = app.add_subcommand("aggregate", "AUROC against sample size");
  add_common(aggregate, f);
  add_output(aggregate, f);
  aggregate->add_option("--sample-sizes", f.sample_sizes, "Sample-size grid");
  aggregate->add_option("--resamples", f.resamples, "Resamples per n")
      ->check(CLI::PositiveNumber);
  aggregate->add_option("--metric", f.metric, "auroc, or a max FPR for pAUROC");

  auto* textmetrics = app.add_subcommand("textmetrics", "Edit distance and semantic similarity");
  add_common(textmetrics, f);
  add_output(textmetrics, f);
  textmetrics->add_option("--pairs", f.pairs, "Pairs JSONL");
  textmetrics->add_option("--encoder", f.encoder, "Semantic encoder_id");

  auto* prefpairs = app.add_subcommand("prefpairs", "Preference pairs from candidate groups");
  add_common(prefpairs, f);
  add_output(prefpairs, f);
  prefpairs->add_option("--candidates", f.candidates, "Candidates JSONL");

  auto* sample = app.add_subcommand("sample", "Cluster authors and draw a stratified sample");
  add_common(sample, f);
  add_output(sample, f);
  sample->add_option("--encoder", f.encoder, "Style encoder_id");
  sample->add_option("--quota", f.quota, "Authors to sample")
      ->check(CLI::PositiveNumber);

  auto* export_embeddings =
      app.add_subcommand("export-embeddings", "Write one encoder's embeddings as CSV");
  add_common(export_embeddings, f);
  add_output(export_embeddings, f);
  export_embeddings->add_option("--encoder", f.encoder, "encoder_id");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  json effective;
  RunConfig config;
  try {
    fs::path base_dir;
    effective = merged_config(f, base_dir);
    // textmetrics names its encoder "semantic_encoder" in the config.
    if (textmetrics->parsed() && effective.contains("encoder_id")) {
      effective["semantic_encoder"] = effective["encoder_id"];
      effective.erase("encoder_id");
    }
    config = run_config_from_json(effective, base_dir);
    effective["threads"] = config.threads;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  if (validate->parsed()) return cmd_validate(config, std::cout, std::cerr);
  if (eval->parsed()) return cmd_eval(config, effective, std::cerr);
  if (aggregate->parsed()) return cmd_aggregate(config, effective, std::cerr);
  if (textmetrics->parsed()) return cmd_textmetrics(config, effective, std::cerr);
  if (prefpairs->parsed()) return cmd_prefpairs(config, effective, std::cerr);
  if (sample->parsed()) return cmd_sample(config, effective, std::cerr);
  return cmd_export_embeddings(config, effective, std::cerr);
}
