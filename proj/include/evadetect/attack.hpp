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

// Selection logic of the evasion pipelines: preference pairs for DPO and
// semantic top-P filtering between paraphrasing iterations.

#ifndef EVADETECT_ATTACK_HPP
#define EVADETECT_ATTACK_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace evadetect {

struct Candidate {
  std::string doc_id;
  std::optional<double> machine_score;  // higher = more machine-like
  std::optional<double> semantic_sim;
  std::optional<Eigen::VectorXd> embedding;
};

struct CandidateGroup {
  std::string group_id;
  std::vector<Candidate> candidates;
};

struct PreferencePair {
  std::string group_id;
  std::string chosen_doc_id;
  std::string rejected_doc_id;

  bool operator==(const PreferencePair&) const = default;
};

/// chosen = lowest machine score (ties: smallest doc_id); rejected = uniform
/// draw among the other candidates, keyed by (seed, group_id).
std::vector<PreferencePair> build_preference_pairs(
    std::span<const CandidateGroup> groups, std::uint64_t seed);

/// preference_pairs.jsonl: {"group_id","chosen_doc_id","rejected_doc_id","seed"}
void write_preference_pairs(std::ostream& out,
                            std::span<const PreferencePair> pairs,
                            std::uint64_t seed);

/// Doc ids of the p candidates most cosine-similar to `original`, best
/// first; ties go to the smaller doc_id.
std::vector<std::string> select_candidates(const Eigen::VectorXd& original,
                                           const CandidateGroup& group, int p);

struct SelectionConfig {
  int p = 1;
  int candidates_per_iter = 10;
  int iterations = 1;
  // Target-exemplar count of the paraphraser context. Metadata only.
  std::optional<int> exemplars;

  void validate() const;
};

/// Produces the candidates of one iteration from the texts carried over
/// from the previous one (the original on the first iteration).
using CandidateGenerator = std::function<CandidateGroup(
    int iteration, const std::vector<std::string>& parents)>;

struct SelectionTrace {
  std::vector<std::vector<std::string>> kept;  // per iteration
  std::string final_doc_id;
};

/// Iterative inference: every iteration keeps the top p candidates by
/// semantic similarity to the original; the last keeps only the best one.
SelectionTrace run_iterative_selection(const Eigen::VectorXd& original,
                                       const std::string& original_doc_id,
                                       const SelectionConfig& config,
                                       const CandidateGenerator& generate);

}  // namespace evadetect

#endif  // EVADETECT_ATTACK_HPP
