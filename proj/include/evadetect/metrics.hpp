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

// Classification and text-similarity metrics.
//
// Machine is the positive class throughout. AUROC uses the Mann-Whitney
// form with half credit for ties. The partial AUROC restricts the ROC curve
// to FPR <= max_fpr with linear interpolation at the cut and, when
// normalized, divides by max_fpr (perfect = 1, chance = max_fpr / 2).

#ifndef EVADETECT_METRICS_HPP
#define EVADETECT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "evadetect/corpus.hpp"
#include "evadetect/error.hpp"

namespace evadetect {

struct LabeledScore {
  double value = 0.0;
  Label label = Label::Human;
  std::string doc_id;
};

using LabeledScores = std::vector<LabeledScore>;

/// Builds LabeledScores from two value lists; doc ids are "m<i>" / "h<i>".
LabeledScores make_labeled_scores(std::span<const double> machine,
                                  std::span<const double> human);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  int resamples = 0;
  std::uint64_t seed = 0;
};

struct AurocResult {
  double value = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<ConfidenceInterval> ci;
};

AurocResult auroc(std::span<const LabeledScore> scores);

RocCurve roc_curve(std::span<const LabeledScore> scores);

/// Trapezoidal area under `curve` for fpr in [0, max_fpr].
double partial_area(const RocCurve& curve, double max_fpr, bool normalized);

AurocResult pauroc(std::span<const LabeledScore> scores, double max_fpr = 0.1,
                   bool normalized = true);

/// Which metric a resampling procedure evaluates.
struct MetricSpec {
  enum class Kind { Auroc, PartialAuroc } kind = Kind::PartialAuroc;
  double max_fpr = 0.1;
  bool normalized = true;

  static MetricSpec full() { return {Kind::Auroc, 1.0, true}; }
  static MetricSpec partial(double max_fpr = 0.1, bool normalized = true) {
    return {Kind::PartialAuroc, max_fpr, normalized};
  }
  std::string name() const;
};

double evaluate_metric(std::span<const LabeledScore> scores,
                       const MetricSpec& metric);

/// Linear-interpolated quantile of `values` (sorted copy), q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Stratified percentile bootstrap: each resample draws n_pos machine and
/// n_neg human entries with replacement, seeded by (seed, resample index),
/// so the interval is independent of `threads`.
ConfidenceInterval bootstrap_ci(std::span<const LabeledScore> scores,
                                const MetricSpec& metric, int resamples,
                                double level, std::uint64_t seed,
                                unsigned threads = 1);

/// Cosine similarity clamped to [-1, 1]. Throws InvalidArgument on a
/// dimension mismatch and DegenerateStatistics on a zero vector.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(
    const Eigen::MatrixBase<DerivedA>& a,
    const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw InvalidArgument("cosine_similarity: dimension mismatch (" +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  const Scalar aa = a.dot(a);
  const Scalar bb = b.dot(b);
  if (aa == Scalar(0) || bb == Scalar(0)) {
    throw DegenerateStatistics("cosine_similarity: zero vector");
  }
  // sqrt(aa * bb) is exact for a == b, so self-similarity is exactly 1.
  Scalar denom = std::sqrt(aa * bb);
  if (!std::isfinite(denom) || denom == Scalar(0)) denom = a.norm() * b.norm();
  const Scalar c = a.dot(b) / denom;
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Levenshtein distance over Unicode scalar values with unit costs.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);
/// UTF-8 convenience overload.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace evadetect

#endif  // EVADETECT_METRICS_HPP
