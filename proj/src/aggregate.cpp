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

#include "evadetect/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evadetect/error.hpp"
#include "evadetect/parallel.hpp"

namespace evadetect {

namespace {

void split_classes(std::span<const LabeledScore> scores,
                   std::vector<double>& machine, std::vector<double>& human) {
  for (const LabeledScore& s : scores) {
    if (!std::isfinite(s.value)) {
      throw InvalidArgument("aggregate: non-finite score for \"" + s.doc_id +
                            "\"");
    }
    (s.label == Label::Machine ? machine : human).push_back(s.value);
  }
}

void emit_groups(std::vector<double>& values, int n, Label label,
                 int resample_index, std::mt19937_64& rng, LabeledScores& out) {
  std::shuffle(values.begin(), values.end(), rng);
  const std::size_t groups = values.size() / static_cast<std::size_t>(n);
  const std::string prefix = std::string(to_string(label)) + "/r" +
                             std::to_string(resample_index) + "/g";
  for (std::size_t g = 0; g < groups; ++g) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += values[g * n + k];
    out.push_back({sum / n, label, prefix + std::to_string(g)});
  }
}

}  // namespace

LabeledScores aggregate_scores(std::span<const LabeledScore> scores, int n,
                               int resample_index, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("aggregate_scores: n must be positive");
  std::vector<double> machine;
  std::vector<double> human;
  split_classes(scores, machine, human);
  if (machine.size() < static_cast<std::size_t>(n) ||
      human.size() < static_cast<std::size_t>(n)) {
    throw InvalidArgument("aggregate_scores: a class has fewer than n = " +
                          std::to_string(n) + " entries (machine " +
                          std::to_string(machine.size()) + ", human " +
                          std::to_string(human.size()) + ")");
  }
  // Input order must not leak into the groups beyond the shuffle.
  std::sort(machine.begin(), machine.end());
  std::sort(human.begin(), human.end());

  auto rng = keyed_rng(seed, static_cast<std::uint64_t>(resample_index),
                       static_cast<std::uint64_t>(n));
  LabeledScores out;
  out.reserve(machine.size() / n + human.size() / n);
  emit_groups(machine, n, Label::Machine, resample_index, rng, out);
  emit_groups(human, n, Label::Human, resample_index, rng, out);
  return out;
}

AggregateCurve auroc_vs_n(std::span<const LabeledScore> scores,
                          const AggregationConfig& config,
                          const MetricSpec& metric) {
  if (config.sample_sizes.empty()) {
    throw InvalidArgument("auroc_vs_n: no sample sizes");
  }
  for (std::size_t i = 0; i < config.sample_sizes.size(); ++i) {
    if (config.sample_sizes[i] < 1 ||
        (i > 0 && config.sample_sizes[i] <= config.sample_sizes[i - 1])) {
      throw InvalidArgument(
          "auroc_vs_n: sample sizes must be positive and strictly ascending");
    }
  }
  if (config.resamples < 1) {
    throw InvalidArgument("auroc_vs_n: resamples must be positive");
  }
  std::size_t n_machine = 0;
  std::size_t n_human = 0;
  for (const LabeledScore& s : scores) {
    (s.label == Label::Machine ? n_machine : n_human) += 1;
  }
  const std::size_t smallest = std::min(n_machine, n_human);
  const int largest = config.sample_sizes.back();
  if (static_cast<std::size_t>(2 * largest) > smallest) {
    throw InvalidArgument("auroc_vs_n: n = " + std::to_string(largest) +
                          " needs at least " + std::to_string(2 * largest) +
                          " entries per class, smallest class has " +
                          std::to_string(smallest));
  }

  AggregateCurve curve;
  const double tail = (1.0 - config.level) / 2.0;
  for (int n : config.sample_sizes) {
    std::vector<double> values(config.resamples);
    parallel_for(values.size(), config.threads, [&](std::size_t r) {
      const auto grouped =
          aggregate_scores(scores, n, static_cast<int>(r), config.seed);
      values[r] = evaluate_metric(grouped, metric);
    });
    double sum = 0.0;
    for (double v : values) sum += v;
    CurvePoint point;
    point.n = n;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    point.value = std::clamp(sum / static_cast<double>(values.size()), *lo, *hi);
    point.ci_lo = quantile(values, tail);
    point.ci_hi = quantile(values, 1.0 - tail);
    curve.points.push_back(point);
  }
  return curve;
}

std::map<BestDetectorKey, BestDetector> best_detector_summary(
    std::span<const AggregateCurve> curves) {
  std::map<BestDetectorKey, BestDetector> table;
  if (curves.empty()) return table;
  std::vector<int> grid;
  for (const CurvePoint& p : curves.front().points) grid.push_back(p.n);
  for (const AggregateCurve& c : curves) {
    std::vector<int> other;
    for (const CurvePoint& p : c.points) other.push_back(p.n);
    if (other != grid) {
      throw InvalidArgument("best_detector_summary: inconsistent n grids (" +
                            c.detector + ", " + c.method_id + ", " +
                            c.dataset_id + ")");
    }
  }
  for (const AggregateCurve& c : curves) {
    for (const CurvePoint& p : c.points) {
      BestDetectorKey key{c.method_id, c.dataset_id, p.n};
      auto it = table.find(key);
      if (it == table.end()) {
        table.emplace(key, BestDetector{c.detector, p.value, false});
      } else if (p.value > it->second.value) {
        it->second = BestDetector{c.detector, p.value, false};
      } else if (p.value == it->second.value) {
        it->second.tie = true;
      }
    }
  }
  return table;
}

GaussianPairSpec GaussianPairSpec::from_mu(double mu) {
  return {mu, 2.0 * normal_cdf(std::fabs(mu) / 2.0) - 1.0};
}

double gaussian_reference(const GaussianPairSpec& spec, int n) {
  if (n < 1) throw InvalidArgument("gaussian_reference: n must be positive");
  return normal_cdf(spec.mu * std::sqrt(static_cast<double>(n)) /
                    std::sqrt(2.0));
}

}  // namespace evadetect
