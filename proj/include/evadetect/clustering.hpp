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

// Affinity Propagation and stratified sampling across its clusters.
//
// Message passing over a similarity matrix S whose diagonal holds the
// preferences (larger = more likely to become an exemplar):
//
//   r(i,k) <- s(i,k) - max_{k' != k} [a(i,k') + s(i,k')]
//   a(i,k) <- min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))  i != k
//   a(k,k) <- sum_{i' != k} max(0, r(i',k))
//
// Both updates are damped: m <- d m + (1 - d) m_new. Point k is an exemplar
// when a(k,k) + r(k,k) > 0; the run has converged once that set stays fixed
// for convergence_iter consecutive iterations.

#ifndef EVADETECT_CLUSTERING_HPP
#define EVADETECT_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evadetect/corpus.hpp"
#include "evadetect/error.hpp"
#include "evadetect/parallel.hpp"

namespace evadetect {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct AffinityPropagationOptions {
  double damping = 0.5;
  int max_iter = 200;
  int convergence_iter = 15;
  // Adds noise at the scale of machine epsilon to break exact ties, which
  // otherwise make the messages oscillate between equivalent exemplars.
  bool break_ties = true;
  std::uint64_t seed = 0;
  // Converged also requires the largest message change of the last update
  // to fall below this.
  double message_tolerance = 1e-10;
  // Moves each exemplar to the member with the largest within-cluster
  // similarity sum, then reassigns, until nothing changes.
  bool refine_exemplars = true;
};

template <typename Scalar>
struct ClusterResult {
  std::vector<Eigen::Index> exemplar_indices;  // ascending
  std::vector<Eigen::Index> assignment;        // point -> exemplar index
  int iterations_run = 0;
  bool converged = false;
  // Final messages and the (tie-broken) similarity they were computed on.
  DenseMatrix<Scalar> responsibility;
  DenseMatrix<Scalar> availability;
  DenseMatrix<Scalar> similarity;
};

/// Negative squared Euclidean distances between the rows of `points`, with
/// the median off-diagonal similarity as every point's preference.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> similarity_from_points(
    const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  DenseMatrix<Scalar> s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      s(i, j) = -(points.row(i) - points.row(j)).squaredNorm();
    }
  }
  std::vector<Scalar> off;
  off.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) off.push_back(s(i, j));
    }
  }
  Scalar preference = Scalar(0);
  if (!off.empty()) {
    std::sort(off.begin(), off.end());
    const std::size_t m = off.size();
    preference = m % 2 ? off[m / 2] : (off[m / 2 - 1] + off[m / 2]) / Scalar(2);
  }
  s.diagonal().setConstant(preference);
  return s;
}

/// One damped responsibility + availability update in place. Returns the
/// largest absolute change of any message.
template <typename Scalar>
Scalar affinity_propagation_update(const DenseMatrix<Scalar>& s,
                                   DenseMatrix<Scalar>& r,
                                   DenseMatrix<Scalar>& a, Scalar damping) {
  const Eigen::Index n = s.rows();
  const Scalar keep = damping;
  const Scalar take = Scalar(1) - damping;
  Scalar change = Scalar(0);

  DenseMatrix<Scalar> as = a + s;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    Scalar first = -std::numeric_limits<Scalar>::infinity();
    Scalar second = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Scalar v = as(i, k);
      if (v > first) {
        second = first;
        first = v;
        best = k;
      } else if (v > second) {
        second = v;
      }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const Scalar fresh = s(i, k) - (k == best ? second : first);
      const Scalar updated = keep * r(i, k) + take * fresh;
      change = std::max(change, std::abs(updated - r(i, k)));
      r(i, k) = updated;
    }
  }

  DenseMatrix<Scalar> rp = r.cwiseMax(Scalar(0));
  rp.diagonal() = r.diagonal();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> column_sums =
      rp.colwise().sum();
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar fresh = column_sums(k) - rp(i, k);
      if (i != k) fresh = std::min(fresh, Scalar(0));
      const Scalar updated = keep * a(i, k) + take * fresh;
      change = std::max(change, std::abs(updated - a(i, k)));
      a(i, k) = updated;
    }
  }
  return change;
}

namespace detail {

template <typename Scalar>
void assign_to_exemplars(const DenseMatrix<Scalar>& s,
                         ClusterResult<Scalar>& result) {
  const Eigen::Index n = s.rows();
  result.assignment.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = result.exemplar_indices.front();
    for (Eigen::Index e : result.exemplar_indices) {
      if (s(i, e) > s(i, best)) best = e;
    }
    result.assignment[i] = best;
  }
  for (Eigen::Index e : result.exemplar_indices) result.assignment[e] = e;
}

template <typename Scalar>
void refine_exemplars(const DenseMatrix<Scalar>& s,
                      ClusterResult<Scalar>& result) {
  const Eigen::Index n = s.rows();
  for (Eigen::Index round = 0; round < n; ++round) {
    std::map<Eigen::Index, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < n; ++i) members[result.assignment[i]].push_back(i);
    std::vector<Eigen::Index> next;
    for (const auto& [exemplar, ids] : members) {
      Eigen::Index best = exemplar;
      Scalar best_sum = -std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index k : ids) {
        Scalar sum = Scalar(0);
        for (Eigen::Index i : ids) sum += s(i, k);
        if (sum > best_sum) {
          best_sum = sum;
          best = k;
        }
      }
      next.push_back(best);
    }
    std::sort(next.begin(), next.end());
    if (next == result.exemplar_indices) return;
    result.exemplar_indices = std::move(next);
    assign_to_exemplars<Scalar>(s, result);
  }
}

}  // namespace detail

/// Clusters the points behind `similarity` (square, finite, preferences on
/// the diagonal). If no exemplar emerges, the point with the largest
/// a(k,k) + r(k,k) becomes the single exemplar. Runs that hit max_iter
/// return their current exemplars with converged = false.
template <typename Derived>
ClusterResult<typename Derived::Scalar> affinity_propagation(
    const Eigen::MatrixBase<Derived>& similarity,
    const AffinityPropagationOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = similarity.rows();
  if (n == 0 || similarity.cols() != n) {
    throw InvalidArgument("affinity_propagation: similarity must be square");
  }
  if (!similarity.allFinite()) {
    throw InvalidArgument("affinity_propagation: non-finite similarity");
  }
  if (!(options.damping >= 0.5 && options.damping < 1.0)) {
    throw InvalidArgument("affinity_propagation: damping must lie in [0.5, 1)");
  }
  if (options.max_iter < 1 || options.convergence_iter < 1) {
    throw InvalidArgument(
        "affinity_propagation: max_iter and convergence_iter must be "
        "positive");
  }

  ClusterResult<Scalar> result;
  result.similarity = similarity;
  result.responsibility = DenseMatrix<Scalar>::Zero(n, n);
  result.availability = DenseMatrix<Scalar>::Zero(n, n);

  if (n == 1) {
    result.exemplar_indices = {0};
    result.assignment = {0};
    result.converged = true;
    return result;
  }

  // All off-diagonal similarities equal and all preferences equal: every
  // clustering ties, so answer directly instead of oscillating.
  {
    const Scalar off = similarity(0, 1);
    const Scalar pref = similarity(0, 0);
    bool uniform = true;
    for (Eigen::Index i = 0; i < n && uniform; ++i) {
      for (Eigen::Index j = 0; j < n && uniform; ++j) {
        uniform = similarity(i, j) == (i == j ? pref : off);
      }
    }
    if (uniform) {
      if (pref > off) {
        for (Eigen::Index i = 0; i < n; ++i) {
          result.exemplar_indices.push_back(i);
        }
      } else {
        result.exemplar_indices = {0};
      }
      detail::assign_to_exemplars<Scalar>(result.similarity, result);
      result.converged = true;
      return result;
    }
  }

  if (options.break_ties) {
    auto rng = keyed_rng(options.seed, static_cast<std::uint64_t>(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar tiny = std::numeric_limits<Scalar>::min();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar scale = eps * std::abs(result.similarity(i, j)) +
                             tiny * Scalar(100);
        result.similarity(i, j) += scale * static_cast<Scalar>(gauss(rng));
      }
    }
  }

  const DenseMatrix<Scalar>& s = result.similarity;
  DenseMatrix<Scalar>& r = result.responsibility;
  DenseMatrix<Scalar>& a = result.availability;
  const Scalar damping = static_cast<Scalar>(options.damping);

  std::vector<std::vector<bool>> history;  // ring buffer of exemplar flags
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  int stable = 0;
  for (int it = 0; it < options.max_iter; ++it) {
    const Scalar change = affinity_propagation_update<Scalar>(s, r, a, damping);
    std::vector<bool> next(static_cast<std::size_t>(n));
    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      next[k] = a(k, k) + r(k, k) > Scalar(0);
      any = any || next[k];
    }
    stable = (it > 0 && next == flags) ? stable + 1 : 1;
    flags = std::move(next);
    result.iterations_run = it + 1;
    if (stable >= options.convergence_iter && any &&
        static_cast<double>(change) < options.message_tolerance) {
      result.converged = true;
      break;
    }
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    if (flags[k]) result.exemplar_indices.push_back(k);
  }
  if (result.exemplar_indices.empty()) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evidence =
        a.diagonal() + r.diagonal();
    Eigen::Index best = 0;
    evidence.maxCoeff(&best);
    result.exemplar_indices = {best};
  }
  detail::assign_to_exemplars<Scalar>(s, result);
  if (options.refine_exemplars) detail::refine_exemplars<Scalar>(s, result);
  return result;
}

/// Sum of preferences of the chosen exemplars plus each other point's
/// similarity to its closest exemplar.
template <typename Derived>
typename Derived::Scalar net_similarity(
    const Eigen::MatrixBase<Derived>& similarity,
    const std::vector<Eigen::Index>& exemplars) {
  using Scalar = typename Derived::Scalar;
  if (exemplars.empty()) {
    throw InvalidArgument("net_similarity: no exemplars");
  }
  std::vector<bool> is_exemplar(static_cast<std::size_t>(similarity.rows()));
  for (Eigen::Index e : exemplars) is_exemplar[e] = true;
  Scalar total = Scalar(0);
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    if (is_exemplar[i]) {
      total += similarity(i, i);
      continue;
    }
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index e : exemplars) best = std::max(best, similarity(i, e));
    total += best;
  }
  return total;
}

/// Round-robin over clusters in ascending exemplar order, taking one random
/// unsampled member per visit and skipping exhausted clusters. Each
/// cluster's draw order is keyed by (seed, exemplar index).
std::vector<Eigen::Index> stratified_sample(
    const std::vector<Eigen::Index>& assignment, std::size_t quota,
    std::uint64_t seed);

template <typename Scalar>
std::vector<Eigen::Index> stratified_sample(const ClusterResult<Scalar>& result,
                                            std::size_t quota,
                                            std::uint64_t seed) {
  return stratified_sample(result.assignment, quota, seed);
}

/// Per-author mean of document embeddings (rows ordered by author_id).
struct AuthorEmbeddings {
  std::vector<std::string> author_ids;
  Eigen::MatrixXd means;
  std::vector<std::string> missing_doc_ids;  // selected but not embedded
};

AuthorEmbeddings mean_author_embeddings(const Corpus& corpus,
                                        const std::string& encoder_id,
                                        const DocumentFilter& filter);

}  // namespace evadetect

#endif  // EVADETECT_CLUSTERING_HPP
