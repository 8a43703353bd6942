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

// Sample-size aggregation.
//
// A detector that sees n documents from one source scores them by the mean
// of its per-document outputs. auroc_vs_n estimates the metric of those
// group means as a function of n: each of R resamples shuffles both classes,
// cuts them into disjoint groups of exactly n (remainders dropped), and
// evaluates the metric on the group means. Raw detector scores are averaged;
// after averaging the metric is no longer invariant to monotone transforms
// of the per-document scores.

#ifndef EVADETECT_AGGREGATE_HPP
#define EVADETECT_AGGREGATE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "evadetect/metrics.hpp"

namespace evadetect {

inline constexpr const char* kDisjointWithinResample =
    "disjoint_within_resample";

struct AggregationConfig {
  std::vector<int> sample_sizes{1, 2, 5, 10, 20, 50};
  int resamples = 500;
  std::uint64_t seed = 0;
  double level = 0.95;
  unsigned threads = 1;
};

struct CurvePoint {
  int n = 0;
  double value = 0.0;  // mean over resamples
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct AggregateCurve {
  std::string detector;
  std::string method_id;
  std::string dataset_id;
  std::string protocol = kDisjointWithinResample;
  std::vector<CurvePoint> points;
};

/// One resample of group means. Shuffles each class with randomness keyed by
/// (seed, resample_index, n). Synthetic doc ids read
/// "<machine|human>/r<resample>/g<group>".
LabeledScores aggregate_scores(std::span<const LabeledScore> scores, int n,
                               int resample_index, std::uint64_t seed);

/// Metric of group means for every n in config.sample_sizes. Requires each
/// class to hold at least 2n entries for the largest n.
AggregateCurve auroc_vs_n(std::span<const LabeledScore> scores,
                          const AggregationConfig& config,
                          const MetricSpec& metric);

struct BestDetector {
  std::string detector;
  double value = 0.0;
  bool tie = false;  // another detector reached the same value
};

using BestDetectorKey = std::tuple<std::string, std::string, int>;

/// Per (method_id, dataset_id, n): the detector with the largest value.
/// Ties go to the curve appearing first in `curves`; callers list curves in
/// detector order. All curves must share one n grid.
std::map<BestDetectorKey, BestDetector> best_detector_summary(
    std::span<const AggregateCurve> curves);

/// Human ~ N(0, 1), machine ~ N(mu, 1); tv is the total variation distance
/// 2 Phi(mu / 2) - 1.
struct GaussianPairSpec {
  double mu = 0.0;
  double tv = 0.0;

  static GaussianPairSpec from_mu(double mu);
};

/// AUROC of the n-sample means of the pair: Phi(mu sqrt(n) / sqrt(2)).
double gaussian_reference(const GaussianPairSpec& spec, int n);

}  // namespace evadetect

#endif  // EVADETECT_AGGREGATE_HPP
