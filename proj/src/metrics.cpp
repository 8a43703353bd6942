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

#include "evadetect/metrics.hpp"

#include <numeric>
#include <random>

#include "evadetect/parallel.hpp"

namespace evadetect {

LabeledScores make_labeled_scores(std::span<const double> machine,
                                  std::span<const double> human) {
  LabeledScores out;
  out.reserve(machine.size() + human.size());
  for (std::size_t i = 0; i < machine.size(); ++i) {
    out.push_back({machine[i], Label::Machine, "m" + std::to_string(i)});
  }
  for (std::size_t i = 0; i < human.size(); ++i) {
    out.push_back({human[i], Label::Human, "h" + std::to_string(i)});
  }
  return out;
}

namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts check_scores(std::span<const LabeledScore> scores,
                         const char* what) {
  ClassCounts counts;
  for (const LabeledScore& s : scores) {
    if (!std::isfinite(s.value)) {
      throw InvalidArgument(std::string(what) + ": non-finite score for \"" +
                            s.doc_id + "\"");
    }
    (s.label == Label::Machine ? counts.pos : counts.neg) += 1;
  }
  if (counts.pos == 0 || counts.neg == 0) {
    throw InvalidArgument(std::string(what) +
                          ": need at least one machine and one human score");
  }
  return counts;
}

// Indices of `scores` ordered by value.
std::vector<std::size_t> order_by_value(std::span<const LabeledScore> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].value < scores[b].value;
  });
  return idx;
}

}  // namespace

AurocResult auroc(std::span<const LabeledScore> scores) {
  const ClassCounts counts = check_scores(scores, "auroc");
  const auto idx = order_by_value(scores);

  // Twice the rank sum of the positives, using midranks for ties, so all
  // arithmetic stays in integers: a tie group occupying 1-based ranks
  // first..last has doubled midrank first + last.
  std::uint64_t doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    std::uint64_t pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]].value == scores[idx[i]].value) {
      if (scores[idx[j]].label == Label::Machine) ++pos_in_group;
      ++j;
    }
    doubled_rank_sum += pos_in_group * static_cast<std::uint64_t>(i + 1 + j);
    i = j;
  }
  const std::uint64_t np = counts.pos;
  const std::uint64_t nn = counts.neg;
  // 2U = 2R - np(np + 1); value = 2U / (2 np nn).
  const std::uint64_t doubled_u = doubled_rank_sum - np * (np + 1);
  AurocResult result;
  result.value =
      static_cast<double>(doubled_u) / static_cast<double>(2 * np * nn);
  result.n_pos = counts.pos;
  result.n_neg = counts.neg;
  return result;
}

RocCurve roc_curve(std::span<const LabeledScore> scores) {
  const ClassCounts counts = check_scores(scores, "roc_curve");
  auto idx = order_by_value(scores);
  std::reverse(idx.begin(), idx.end());

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double threshold = scores[idx[i]].value;
    while (i < idx.size() && scores[idx[i]].value == threshold) {
      (scores[idx[i]].label == Label::Machine ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / counts.neg,
                            static_cast<double>(tp) / counts.pos});
  }
  return curve;
}

double partial_area(const RocCurve& curve, double max_fpr, bool normalized) {
  if (!(max_fpr > 0.0) || max_fpr > 1.0) {
    throw InvalidArgument("partial AUROC: max_fpr must lie in (0, 1]");
  }
  // Widths are divided by max_fpr per segment when normalizing so that
  // exact inputs (diagonal, perfect) give exact outputs.
  const double scale = normalized ? max_fpr : 1.0;
  double area = 0.0;
  const auto& p = curve.points;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const RocPoint& a = p[k - 1];
    const RocPoint& b = p[k];
    if (a.fpr >= max_fpr) break;
    if (b.fpr <= max_fpr) {
      area += ((b.fpr - a.fpr) / scale) * (a.tpr + b.tpr) / 2.0;
      continue;
    }
    const double t = (max_fpr - a.fpr) / (b.fpr - a.fpr);
    const double tpr_cut = a.tpr + (b.tpr - a.tpr) * t;
    area += ((max_fpr - a.fpr) / scale) * (a.tpr + tpr_cut) / 2.0;
    break;
  }
  return area;
}

AurocResult pauroc(std::span<const LabeledScore> scores, double max_fpr,
                   bool normalized) {
  if (!(max_fpr > 0.0) || max_fpr > 1.0) {
    throw InvalidArgument("pauroc: max_fpr must lie in (0, 1]");
  }
  const RocCurve curve = roc_curve(scores);
  AurocResult result;
  result.value = partial_area(curve, max_fpr, normalized);
  for (const LabeledScore& s : scores) {
    (s.label == Label::Machine ? result.n_pos : result.n_neg) += 1;
  }
  return result;
}

std::string MetricSpec::name() const {
  if (kind == Kind::Auroc) return "auroc";
  const int percent = static_cast<int>(std::lround(max_fpr * 100.0));
  return "auroc(" + std::to_string(percent) + ")" +
         (normalized ? "" : "_raw");
}

double evaluate_metric(std::span<const LabeledScore> scores,
                       const MetricSpec& metric) {
  if (metric.kind == MetricSpec::Kind::Auroc) return auroc(scores).value;
  return pauroc(scores, metric.max_fpr, metric.normalized).value;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + (values[hi] - values[lo]) * frac;
}

ConfidenceInterval bootstrap_ci(std::span<const LabeledScore> scores,
                                const MetricSpec& metric, int resamples,
                                double level, std::uint64_t seed,
                                unsigned threads) {
  check_scores(scores, "bootstrap_ci");
  if (resamples <= 0) {
    throw InvalidArgument("bootstrap_ci: resamples must be positive");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("bootstrap_ci: level must lie in (0, 1)");
  }
  std::vector<const LabeledScore*> pos;
  std::vector<const LabeledScore*> neg;
  for (const LabeledScore& s : scores) {
    (s.label == Label::Machine ? pos : neg).push_back(&s);
  }
  std::vector<double> values(resamples);
  parallel_for(values.size(), threads, [&](std::size_t r) {
    auto rng = keyed_rng(seed, r);
    LabeledScores sample;
    sample.reserve(scores.size());
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      sample.push_back(*pos[pick_pos(rng)]);
    }
    for (std::size_t k = 0; k < neg.size(); ++k) {
      sample.push_back(*neg[pick_neg(rng)]);
    }
    values[r] = evaluate_metric(sample, metric);
  });
  const double tail = (1.0 - level) / 2.0;
  ConfidenceInterval ci;
  ci.lo = quantile(values, tail);
  ci.hi = quantile(values, 1.0 - tail);
  ci.level = level;
  ci.resamples = resamples;
  ci.seed = seed;
  return ci;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  // Common prefix and suffix never contribute.
  while (!a.empty() && !b.empty() && a.front() == b.front()) {
    a.remove_prefix(1);
    b.remove_prefix(1);
  }
  while (!a.empty() && !b.empty() && a.back() == b.back()) {
    a.remove_suffix(1);
    b.remove_suffix(1);
  }
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();

  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t substitute = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, substitute});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(utf8_decode(a), utf8_decode(b));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace evadetect
