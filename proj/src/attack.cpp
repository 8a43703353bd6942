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

#include "evadetect/attack.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "evadetect/error.hpp"
#include "evadetect/metrics.hpp"
#include "evadetect/parallel.hpp"

namespace evadetect {

namespace {

void check_unique_ids(const CandidateGroup& group) {
  std::set<std::string> seen;
  for (const Candidate& c : group.candidates) {
    if (!seen.insert(c.doc_id).second) {
      throw InvalidArgument("group \"" + group.group_id +
                            "\": duplicate candidate \"" + c.doc_id + "\"");
    }
  }
}

}  // namespace

std::vector<PreferencePair> build_preference_pairs(
    std::span<const CandidateGroup> groups, std::uint64_t seed) {
  std::vector<PreferencePair> pairs;
  pairs.reserve(groups.size());
  for (const CandidateGroup& group : groups) {
    if (group.candidates.size() < 2) {
      throw InvalidArgument("group \"" + group.group_id +
                            "\": need at least 2 candidates");
    }
    check_unique_ids(group);
    std::vector<const Candidate*> ordered;
    for (const Candidate& c : group.candidates) {
      if (!c.machine_score || !std::isfinite(*c.machine_score)) {
        throw InvalidArgument("group \"" + group.group_id + "\": candidate \"" +
                              c.doc_id + "\" lacks a finite machine score");
      }
      ordered.push_back(&c);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Candidate* a, const Candidate* b) {
                return a->doc_id < b->doc_id;
              });
    const auto chosen = std::min_element(
        ordered.begin(), ordered.end(),
        [](const Candidate* a, const Candidate* b) {
          return *a->machine_score < *b->machine_score;
        });
    std::vector<const Candidate*> rest;
    for (auto it = ordered.begin(); it != ordered.end(); ++it) {
      if (it != chosen) rest.push_back(*it);
    }
    auto rng = keyed_rng(seed, stable_hash(group.group_id));
    std::uniform_int_distribution<std::size_t> pick(0, rest.size() - 1);
    pairs.push_back(
        {group.group_id, (*chosen)->doc_id, rest[pick(rng)]->doc_id});
  }
  return pairs;
}

void write_preference_pairs(std::ostream& out,
                            std::span<const PreferencePair> pairs,
                            std::uint64_t seed) {
  for (const PreferencePair& p : pairs) {
    nlohmann::json r;
    r["group_id"] = p.group_id;
    r["chosen_doc_id"] = p.chosen_doc_id;
    r["rejected_doc_id"] = p.rejected_doc_id;
    r["seed"] = seed;
    out << r.dump() << '\n';
  }
}

std::vector<std::string> select_candidates(const Eigen::VectorXd& original,
                                           const CandidateGroup& group, int p) {
  if (p < 1) throw InvalidArgument("select_candidates: p must be positive");
  if (static_cast<std::size_t>(p) > group.candidates.size()) {
    throw InvalidArgument("select_candidates: p = " + std::to_string(p) +
                          " exceeds group size " +
                          std::to_string(group.candidates.size()));
  }
  check_unique_ids(group);
  struct Scored {
    double similarity;
    const std::string* doc_id;
  };
  std::vector<Scored> scored;
  scored.reserve(group.candidates.size());
  for (const Candidate& c : group.candidates) {
    if (!c.embedding) {
      throw InvalidArgument("select_candidates: candidate \"" + c.doc_id +
                            "\" has no embedding");
    }
    scored.push_back({cosine_similarity(original, *c.embedding), &c.doc_id});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return *a.doc_id < *b.doc_id;
  });
  std::vector<std::string> out;
  for (int i = 0; i < p; ++i) out.push_back(*scored[i].doc_id);
  return out;
}

void SelectionConfig::validate() const {
  if (p < 1 || candidates_per_iter < 1 || iterations < 1) {
    throw InvalidArgument(
        "selection config: p, candidates_per_iter, iterations must be "
        "positive");
  }
  if (p > candidates_per_iter) {
    throw InvalidArgument("selection config: p exceeds candidates_per_iter");
  }
  if (exemplars && *exemplars < 1) {
    throw InvalidArgument("selection config: exemplars must be positive");
  }
}

SelectionTrace run_iterative_selection(const Eigen::VectorXd& original,
                                       const std::string& original_doc_id,
                                       const SelectionConfig& config,
                                       const CandidateGenerator& generate) {
  config.validate();
  SelectionTrace trace;
  std::vector<std::string> parents{original_doc_id};
  for (int it = 0; it < config.iterations; ++it) {
    const CandidateGroup group = generate(it, parents);
    if (static_cast<int>(group.candidates.size()) !=
        config.candidates_per_iter) {
      throw InvalidArgument("iterative selection: generator returned " +
                            std::to_string(group.candidates.size()) +
                            " candidates, expected " +
                            std::to_string(config.candidates_per_iter));
    }
    const bool last = it + 1 == config.iterations;
    parents = select_candidates(original, group, last ? 1 : config.p);
    trace.kept.push_back(parents);
  }
  trace.final_doc_id = parents.front();
  return trace;
}

}  // namespace evadetect
