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

// Zero-shot and few-shot detector scores.
//
// Every detector returns a machine-likeness score: larger means more
// machine-like. Per detector, over the L tokens of a document:
//
//   Rank           -(1/L) sum rank_i
//   LogRank        -(1/L) sum ln rank_i
//   FastDetectGPT  (sum ll_i - sum mu_i) / sqrt(sum var_i)
//   Binoculars     mean(ll) + mean(xent), i.e. the negated log of the
//                  perplexity / cross-perplexity ratio
//   StyleDetect    cos(embedding, centroid of machine exemplars)
//
// Supervised detectors enter as external scores (see ExternalScore).

#ifndef EVADETECT_DETECTORS_HPP
#define EVADETECT_DETECTORS_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "evadetect/corpus.hpp"

namespace evadetect {

// Declaration order is the tie-break order used by best-detector summaries.
enum class Detector { Rank, LogRank, FastDetectGPT, Binoculars, StyleDetect };

std::string_view to_string(Detector detector);
/// Case-insensitive; accepts the display names and lowercase forms.
std::optional<Detector> parse_detector(std::string_view text);

struct MachineScore {
  std::string doc_id;
  Detector detector = Detector::Rank;
  double value = 0.0;
};

struct StyleCentroid {
  std::string encoder_id;
  Eigen::VectorXd vector;
  int k = 0;
};

MachineScore score_rank(const TokenStatsRecord& stats);
MachineScore score_logrank(const TokenStatsRecord& stats);
MachineScore score_fastdetectgpt(const TokenStatsRecord& stats);
MachineScore score_binoculars(const TokenStatsRecord& stats);

enum class CentroidMode { Raw, NormalizeFirst };

/// Arithmetic mean of the exemplar vectors. NormalizeFirst scales each
/// exemplar to unit norm before averaging.
StyleCentroid build_style_centroid(std::span<const EmbeddingRecord> exemplars,
                                   CentroidMode mode = CentroidMode::Raw);

MachineScore score_styledetect(const EmbeddingRecord& embedding,
                               const StyleCentroid& centroid);

/// Binds a detector to the record stream it reads.
struct DetectorSpec {
  Detector kind = Detector::Rank;
  std::string stats_id;                   // token-statistics detectors
  std::string encoder_id;                 // StyleDetect
  std::optional<StyleCentroid> centroid;  // StyleDetect
};

struct ScoreIssue {
  std::string doc_id;
  std::string message;
};

/// Result of scoring a document set. Documents that could not be scored
/// (missing record, degenerate statistics) are listed in `issues`, never
/// dropped silently.
struct ScoreReport {
  std::vector<MachineScore> scores;  // ascending doc_id
  std::vector<ScoreIssue> issues;

  bool complete() const { return issues.empty(); }
};

ScoreReport score_documents(const Corpus& corpus, const DetectorSpec& spec,
                            std::span<const DocumentRecord> documents,
                            unsigned threads = 1);

ScoreReport score_corpus(const Corpus& corpus, const DetectorSpec& spec,
                         const DocumentFilter& filter, unsigned threads = 1);

/// A pre-scored document from a supervised detector, passed through as-is.
/// Orientation is always "higher_machine".
struct ExternalScore {
  std::string doc_id;
  std::string detector_name;
  double value = 0.0;
};

/// Reads external_scores.jsonl lines
/// {"doc_id","detector_name","value","orientation":"higher_machine"}.
/// Doc ids must exist in `corpus`; (doc_id, detector_name) must be unique.
std::vector<ExternalScore> read_external_scores(std::istream& in,
                                                const std::string& origin,
                                                const Corpus& corpus);
std::vector<ExternalScore> load_external_scores(
    const std::filesystem::path& path, const Corpus& corpus);

}  // namespace evadetect

#endif  // EVADETECT_DETECTORS_HPP
