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

// Command implementations behind the `evadetect` CLI. Each command reads a
// RunConfig, writes its files into config.output_dir together with
// issues.jsonl and the effective config.json, and returns an exit code.

#ifndef EVADETECT_COMMANDS_HPP
#define EVADETECT_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evadetect/aggregate.hpp"
#include "evadetect/clustering.hpp"
#include "evadetect/corpus.hpp"
#include "evadetect/detectors.hpp"
#include "evadetect/metrics.hpp"

namespace evadetect {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitValidationError = 3,
  kExitComputationError = 4,
};

inline constexpr const char* kThreadsEnv = "EVADETECT_THREADS";

struct DetectorBinding {
  std::string name;  // column label
  Detector kind = Detector::Rank;
  std::string stats_id;
  std::string encoder_id;
};

struct CentroidConfig {
  DocumentFilter exemplars;  // pool the K exemplars are drawn from
  int k = 100;
  bool per_dataset = true;
  CentroidMode mode = CentroidMode::Raw;
};

struct RowSpec {
  std::string method_id;
  std::string name;  // display label
};

struct RunConfig {
  std::filesystem::path documents;
  std::vector<std::filesystem::path> stats;
  std::vector<std::filesystem::path> embeddings;
  std::vector<std::filesystem::path> external_scores;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  DocumentFilter scope;
  std::vector<DetectorBinding> detectors;
  CentroidConfig centroid;
  std::vector<RowSpec> rows;  // empty = every machine method, sorted
  std::string row_header = "Model";

  AggregationConfig aggregation;
  MetricSpec metric = MetricSpec::partial(0.1, true);
  int bootstrap_resamples = 0;  // 0 disables CIs in eval
  double bootstrap_level = 0.95;

  std::string semantic_encoder = "sbert";
  std::filesystem::path pairs;
  std::filesystem::path candidates;
  std::string preference_detector;

  std::string encoder_id;
  std::size_t quota = 0;
  AffinityPropagationOptions ap;
};

/// Reads the JSON config; relative paths resolve against `base_dir`.
/// Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& config,
                               const std::filesystem::path& base_dir);

/// Default thread count: $EVADETECT_THREADS if set and positive, else 1.
unsigned default_threads();

int cmd_validate(const RunConfig& config, std::ostream& out,
                 std::ostream& err);
int cmd_eval(const RunConfig& config, const nlohmann::json& effective,
             std::ostream& err);
int cmd_aggregate(const RunConfig& config, const nlohmann::json& effective,
                  std::ostream& err);
int cmd_textmetrics(const RunConfig& config, const nlohmann::json& effective,
                    std::ostream& err);
int cmd_prefpairs(const RunConfig& config, const nlohmann::json& effective,
                  std::ostream& err);
int cmd_sample(const RunConfig& config, const nlohmann::json& effective,
               std::ostream& err);
int cmd_export_embeddings(const RunConfig& config,
                          const nlohmann::json& effective, std::ostream& err);

}  // namespace evadetect

#endif  // EVADETECT_COMMANDS_HPP
