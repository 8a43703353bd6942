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

// Table and CSV rendering. Renderers are pure functions of their inputs.
// Tables show AUROC and similarity with two decimals and edit distance with
// one; CSV files keep full round-trip precision.

#ifndef EVADETECT_REPORT_HPP
#define EVADETECT_REPORT_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evadetect/aggregate.hpp"

namespace evadetect {

/// Shortest decimal that round-trips to the same double.
std::string format_full(double value);
std::string format_fixed(double value, int decimals);
/// Quotes a CSV field when it contains a comma, quote, or line break.
std::string csv_field(std::string_view text);

inline constexpr std::string_view kNotAvailable = "n/a";

struct DetectionTable {
  std::string row_header = "Model";
  std::vector<std::string> columns;  // detector names
  struct Row {
    std::string name;
    std::vector<std::optional<double>> cells;  // nullopt renders "n/a"
  };
  std::vector<Row> rows;
};

/// Markdown table: header row, alignment row, one line per model row.
std::string render_detection_markdown(const DetectionTable& table);

/// Edit distance and semantic similarity of text-transforming methods,
/// one section per dataset (section name empty for the pooled table).
struct TextMetricsTable {
  std::vector<std::string> methods;
  struct Section {
    std::string name;
    std::vector<std::optional<double>> edit_distance;  // per method
    std::vector<std::optional<double>> semantic_sim;   // per method
  };
  std::vector<Section> sections;
};

std::string render_text_metrics_markdown(const TextMetricsTable& table);

/// Per-method mean over the sections that have a value for that method.
TextMetricsTable::Section macro_average(
    std::span<const TextMetricsTable::Section> sections, std::size_t methods);

/// curves.csv: detector,method_id,dataset_id,n,value,ci_lo,ci_hi,protocol
std::string render_curves_csv(std::span<const AggregateCurve> curves);

/// best_detector.csv: method_id,dataset_id,n,detector,value,tie
std::string render_best_detector_csv(
    const std::map<BestDetectorKey, BestDetector>& best);

/// Method x n grid of the best value per cell, one table per dataset.
std::string render_best_detector_markdown(
    const std::map<BestDetectorKey, BestDetector>& best);

/// Accumulates warnings and errors for issues.jsonl. Every line is a JSON
/// object with "severity", "command", "message" and optional context keys.
class IssueLog {
 public:
  explicit IssueLog(std::string command) : command_(std::move(command)) {}

  void warn(std::string message,
            std::map<std::string, std::string> context = {});
  void error(std::string message,
             std::map<std::string, std::string> context = {});

  std::size_t size() const { return lines_.size(); }
  std::string render() const;

 private:
  void add(std::string_view severity, std::string message,
           std::map<std::string, std::string> context);

  std::string command_;
  std::vector<std::string> lines_;
};

void write_text_file(const std::filesystem::path& path,
                     std::string_view contents);

}  // namespace evadetect

#endif  // EVADETECT_REPORT_HPP
