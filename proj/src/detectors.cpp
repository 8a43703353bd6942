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

#include "evadetect/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>

#include <json.hpp>

#include "evadetect/error.hpp"
#include "evadetect/metrics.hpp"
#include "evadetect/parallel.hpp"

namespace evadetect {

std::string_view to_string(Detector detector) {
  switch (detector) {
    case Detector::Rank:
      return "Rank";
    case Detector::LogRank:
      return "LogRank";
    case Detector::FastDetectGPT:
      return "FastDetectGPT";
    case Detector::Binoculars:
      return "Binoculars";
    case Detector::StyleDetect:
      return "StyleDetect";
  }
  return "?";
}

std::optional<Detector> parse_detector(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "rank") return Detector::Rank;
  if (lower == "logrank") return Detector::LogRank;
  if (lower == "fastdetectgpt") return Detector::FastDetectGPT;
  if (lower == "binoculars") return Detector::Binoculars;
  if (lower == "styledetect") return Detector::StyleDetect;
  return std::nullopt;
}

namespace {

// Sum of a multiset: sorting first makes the result independent of token
// order bit-for-bit; Neumaier compensation keeps it accurate.
double symmetric_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

template <typename Field>
double sum_field(const TokenStatsRecord& stats, Field field) {
  std::vector<double> values;
  values.reserve(stats.tokens.size());
  for (const TokenStat& t : stats.tokens) values.push_back(field(t));
  return symmetric_sum(std::move(values));
}

void require_tokens(const TokenStatsRecord& stats, const char* detector) {
  if (stats.tokens.empty()) {
    throw InvalidArgument(std::string(detector) + ": empty token list for \"" +
                          stats.doc_id + "\"");
  }
}

}  // namespace

MachineScore score_rank(const TokenStatsRecord& stats) {
  require_tokens(stats, "Rank");
  const double total = sum_field(
      stats, [](const TokenStat& t) { return static_cast<double>(t.rank); });
  return {stats.doc_id, Detector::Rank,
          -total / static_cast<double>(stats.tokens.size())};
}

MachineScore score_logrank(const TokenStatsRecord& stats) {
  require_tokens(stats, "LogRank");
  const double total = sum_field(stats, [](const TokenStat& t) {
    return std::log(static_cast<double>(t.rank));
  });
  return {stats.doc_id, Detector::LogRank,
          -total / static_cast<double>(stats.tokens.size())};
}

MachineScore score_fastdetectgpt(const TokenStatsRecord& stats) {
  require_tokens(stats, "FastDetectGPT");
  const double var = sum_field(stats, [](const TokenStat& t) { return t.var; });
  if (!(var > 0.0)) {
    throw DegenerateStatistics("FastDetectGPT: zero total variance for \"" +
                               stats.doc_id + "\"");
  }
  const double ll = sum_field(stats, [](const TokenStat& t) { return t.ll; });
  const double mu = sum_field(stats, [](const TokenStat& t) { return t.mu; });
  return {stats.doc_id, Detector::FastDetectGPT, (ll - mu) / std::sqrt(var)};
}

MachineScore score_binoculars(const TokenStatsRecord& stats) {
  require_tokens(stats, "Binoculars");
  const double length = static_cast<double>(stats.tokens.size());
  const double xent =
      sum_field(stats, [](const TokenStat& t) { return t.xent; }) / length;
  if (!(xent > 0.0)) {
    throw DegenerateStatistics("Binoculars: zero mean cross-entropy for \"" +
                               stats.doc_id + "\"");
  }
  const double ll =
      sum_field(stats, [](const TokenStat& t) { return t.ll; }) / length;
  // log B = (-mean ll) - mean xent; the score is -log B.
  const double log_ratio = -ll - xent;
  return {stats.doc_id, Detector::Binoculars, -log_ratio};
}

StyleCentroid build_style_centroid(std::span<const EmbeddingRecord> exemplars,
                                   CentroidMode mode) {
  if (exemplars.empty()) {
    throw InvalidArgument("build_style_centroid: no exemplars");
  }
  const EmbeddingRecord& first = exemplars.front();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(first.dim());
  double max_norm = 0.0;
  for (const EmbeddingRecord& e : exemplars) {
    if (e.encoder_id != first.encoder_id || e.dim() != first.dim()) {
      throw InvalidArgument("build_style_centroid: mixed encoders (\"" +
                            first.encoder_id + "\" and \"" + e.encoder_id +
                            "\")");
    }
    const double norm = e.vector.norm();
    if (mode == CentroidMode::NormalizeFirst) {
      if (norm == 0.0) {
        throw DegenerateStatistics("build_style_centroid: zero exemplar \"" +
                                   e.doc_id + "\"");
      }
      sum += e.vector / norm;
      max_norm = std::max(max_norm, 1.0);
    } else {
      sum += e.vector;
      max_norm = std::max(max_norm, norm);
    }
  }
  StyleCentroid centroid;
  centroid.encoder_id = first.encoder_id;
  centroid.k = static_cast<int>(exemplars.size());
  centroid.vector = sum / static_cast<double>(exemplars.size());
  // Cancellation down to rounding noise counts as a zero resultant.
  if (centroid.vector.norm() <= 1e-12 * max_norm) {
    throw DegenerateStatistics("build_style_centroid: zero resultant vector");
  }
  return centroid;
}

MachineScore score_styledetect(const EmbeddingRecord& embedding,
                               const StyleCentroid& centroid) {
  if (embedding.encoder_id != centroid.encoder_id) {
    throw InvalidArgument("StyleDetect: encoder mismatch (\"" +
                          embedding.encoder_id + "\" vs centroid \"" +
                          centroid.encoder_id + "\")");
  }
  return {embedding.doc_id, Detector::StyleDetect,
          cosine_similarity(embedding.vector, centroid.vector)};
}

ScoreReport score_documents(const Corpus& corpus, const DetectorSpec& spec,
                            std::span<const DocumentRecord> documents,
                            unsigned threads) {
  if (spec.kind == Detector::StyleDetect && !spec.centroid) {
    throw InvalidArgument("StyleDetect requires a centroid");
  }
  std::vector<const DocumentRecord*> ordered;
  ordered.reserve(documents.size());
  for (const DocumentRecord& d : documents) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });

  std::vector<std::optional<MachineScore>> slots(ordered.size());
  std::vector<std::string> failures(ordered.size());
  parallel_for(ordered.size(), threads, [&](std::size_t i) {
    const std::string& id = ordered[i]->doc_id;
    try {
      if (spec.kind == Detector::StyleDetect) {
        const EmbeddingRecord* e = corpus.find_embedding(id, spec.encoder_id);
        if (!e) {
          failures[i] = "missing embedding for encoder \"" + spec.encoder_id +
                        "\"";
          return;
        }
        slots[i] = score_styledetect(*e, *spec.centroid);
        return;
      }
      const TokenStatsRecord* s = corpus.find_stats(id, spec.stats_id);
      if (!s) {
        failures[i] = "missing token statistics \"" + spec.stats_id + "\"";
        return;
      }
      switch (spec.kind) {
        case Detector::Rank:
          slots[i] = score_rank(*s);
          break;
        case Detector::LogRank:
          slots[i] = score_logrank(*s);
          break;
        case Detector::FastDetectGPT:
          slots[i] = score_fastdetectgpt(*s);
          break;
        case Detector::Binoculars:
          slots[i] = score_binoculars(*s);
          break;
        case Detector::StyleDetect:
          break;
      }
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  ScoreReport report;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (slots[i]) {
      report.scores.push_back(std::move(*slots[i]));
    } else {
      report.issues.push_back({ordered[i]->doc_id, failures[i]});
    }
  }
  return report;
}

ScoreReport score_corpus(const Corpus& corpus, const DetectorSpec& spec,
                         const DocumentFilter& filter, unsigned threads) {
  const auto docs = select(corpus, filter);
  return score_documents(corpus, spec, docs, threads);
}

std::vector<ExternalScore> read_external_scores(std::istream& in,
                                                const std::string& origin,
                                                const Corpus& corpus) {
  using nlohmann::json;
  std::vector<ExternalScore> out;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json r;
    try {
      r = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(origin, number, "",
                            "malformed JSON: " + std::string(e.what()));
    }
    const auto str = [&](const char* field) {
      auto it = r.find(field);
      if (it == r.end() || !it->is_string()) {
        throw ValidationError(origin, number, field, "expected string");
      }
      return it->get<std::string>();
    };
    if (!r.is_object()) {
      throw ValidationError(origin, number, "", "expected a JSON object");
    }
    ExternalScore score;
    score.doc_id = str("doc_id");
    score.detector_name = str("detector_name");
    auto v = r.find("value");
    if (v == r.end() || !v->is_number() || !std::isfinite(v->get<double>())) {
      throw ValidationError(origin, number, "value", "expected finite number");
    }
    score.value = v->get<double>();
    if (str("orientation") != "higher_machine") {
      throw ValidationError(origin, number, "orientation",
                            "must be \"higher_machine\"");
    }
    if (!corpus.find_document(score.doc_id)) {
      throw ValidationError(origin, number, "doc_id",
                            "dangling reference to unknown doc_id \"" +
                                score.doc_id + "\"");
    }
    auto [it, inserted] =
        seen.emplace(std::make_pair(score.doc_id, score.detector_name), number);
    if (!inserted) {
      throw ValidationError(origin, number, "detector_name",
                            "duplicate (doc_id, detector_name) (first at line " +
                                std::to_string(it->second) + ")");
    }
    out.push_back(std::move(score));
  }
  return out;
}

std::vector<ExternalScore> load_external_scores(
    const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), 0, "", "cannot open file");
  return read_external_scores(in, path.string(), corpus);
}

}  // namespace evadetect
