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

#include "evadetect/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evadetect/error.hpp"

namespace evadetect {

std::string format_full(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(text);
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string cell(const std::optional<double>& value, int decimals) {
  return value ? format_fixed(*value, decimals) : std::string(kNotAvailable);
}

std::string markdown_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const std::string& c : cells) out += " " + c + " |";
  return out + "\n";
}

std::string alignment_row(std::size_t value_columns) {
  std::string out = "|:---|";
  for (std::size_t i = 0; i < value_columns; ++i) out += ":---:|";
  return out + "\n";
}

}  // namespace

std::string render_detection_markdown(const DetectionTable& table) {
  std::vector<std::string> header{table.row_header};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  std::string out = markdown_row(header) + alignment_row(table.columns.size());
  for (const DetectionTable::Row& row : table.rows) {
    if (row.cells.size() != table.columns.size()) {
      throw InvalidArgument("detection table: row \"" + row.name + "\" has " +
                            std::to_string(row.cells.size()) +
                            " cells for " +
                            std::to_string(table.columns.size()) + " columns");
    }
    std::vector<std::string> cells{row.name};
    for (const auto& v : row.cells) cells.push_back(cell(v, 2));
    out += markdown_row(cells);
  }
  return out;
}

std::string render_text_metrics_markdown(const TextMetricsTable& table) {
  std::vector<std::string> header{"Methods"};
  header.insert(header.end(), table.methods.begin(), table.methods.end());
  std::string out = markdown_row(header) + alignment_row(table.methods.size());
  for (const TextMetricsTable::Section& section : table.sections) {
    if (section.edit_distance.size() != table.methods.size() ||
        section.semantic_sim.size() != table.methods.size()) {
      throw InvalidArgument("text metrics table: section \"" + section.name +
                            "\" does not match the method list");
    }
    if (!section.name.empty()) {
      std::vector<std::string> title{"**" + section.name + "**"};
      title.resize(table.methods.size() + 1);
      out += markdown_row(title);
    }
    std::vector<std::string> edit{"Edit Distance"};
    std::vector<std::string> sim{"Semantic Sim."};
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      edit.push_back(cell(section.edit_distance[m], 1));
      sim.push_back(cell(section.semantic_sim[m], 2));
    }
    out += markdown_row(edit) + markdown_row(sim);
  }
  return out;
}

TextMetricsTable::Section macro_average(
    std::span<const TextMetricsTable::Section> sections, std::size_t methods) {
  TextMetricsTable::Section out{"", {}, {}};
  const auto mean = [&](auto member, std::size_t m) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : sections) {
      const auto& column = s.*member;
      if (column.size() != methods) {
        throw InvalidArgument("macro_average: section \"" + s.name +
                              "\" does not match the method list");
      }
      if (column[m]) {
        sum += *column[m];
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  for (std::size_t m = 0; m < methods; ++m) {
    out.edit_distance.push_back(mean(&TextMetricsTable::Section::edit_distance, m));
    out.semantic_sim.push_back(mean(&TextMetricsTable::Section::semantic_sim, m));
  }
  return out;
}

std::string render_curves_csv(std::span<const AggregateCurve> curves) {
  std::string out = "detector,method_id,dataset_id,n,value,ci_lo,ci_hi,protocol\n";
  for (const AggregateCurve& c : curves) {
    for (const CurvePoint& p : c.points) {
      out += csv_field(c.detector) + "," + csv_field(c.method_id) + "," +
             csv_field(c.dataset_id) + "," + std::to_string(p.n) + "," +
             format_full(p.value) + "," + format_full(p.ci_lo) + "," +
             format_full(p.ci_hi) + "," + csv_field(c.protocol) + "\n";
    }
  }
  return out;
}

std::string render_best_detector_csv(
    const std::map<BestDetectorKey, BestDetector>& best) {
  std::string out = "method_id,dataset_id,n,detector,value,tie\n";
  for (const auto& [key, b] : best) {
    const auto& [method, dataset, n] = key;
    out += csv_field(method) + "," + csv_field(dataset) + "," +
           std::to_string(n) + "," + csv_field(b.detector) + "," +
           format_full(b.value) + "," + (b.tie ? "true" : "false") + "\n";
  }
  return out;
}

std::string render_best_detector_markdown(
    const std::map<BestDetectorKey, BestDetector>& best) {
  std::map<std::string, std::set<std::string>> methods;  // dataset -> methods
  std::set<int> grid;
  for (const auto& [key, b] : best) {
    methods[std::get<1>(key)].insert(std::get<0>(key));
    grid.insert(std::get<2>(key));
  }
  std::string out;
  for (const auto& [dataset, names] : methods) {
    if (!out.empty()) out += "\n";
    out += "**" + dataset + "**\n\n";
    std::vector<std::string> header{"Method"};
    for (int n : grid) header.push_back("n=" + std::to_string(n));
    out += markdown_row(header) + alignment_row(grid.size());
    for (const std::string& method : names) {
      std::vector<std::string> cells{method};
      for (int n : grid) {
        auto it = best.find({method, dataset, n});
        cells.push_back(it == best.end()
                            ? std::string(kNotAvailable)
                            : format_fixed(it->second.value, 2));
      }
      out += markdown_row(cells);
    }
  }
  return out;
}

void IssueLog::warn(std::string message,
                    std::map<std::string, std::string> context) {
  add("warning", std::move(message), std::move(context));
}

void IssueLog::error(std::string message,
                     std::map<std::string, std::string> context) {
  add("error", std::move(message), std::move(context));
}

void IssueLog::add(std::string_view severity, std::string message,
                   std::map<std::string, std::string> context) {
  nlohmann::ordered_json line;
  line["severity"] = severity;
  line["command"] = command_;
  line["message"] = std::move(message);
  for (auto& [k, v] : context) line[k] = std::move(v);
  lines_.push_back(line.dump());
}

std::string IssueLog::render() const {
  std::string out;
  for (const std::string& line : lines_) out += line + "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path,
                     std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace evadetect
