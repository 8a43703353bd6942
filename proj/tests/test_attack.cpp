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

#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "evadetect/attack.hpp"
#include "evadetect/clustering.hpp"
#include "evadetect/error.hpp"
#include "oracles.hpp"

namespace evadetect {
namespace {

CandidateGroup scored(std::string id, std::vector<std::pair<std::string, double>> c) {
  CandidateGroup g{std::move(id), {}};
  for (auto& [doc, s] : c) g.candidates.push_back({doc, s, std::nullopt, std::nullopt});
  return g;
}

CandidateGroup embedded(std::vector<std::pair<std::string, Eigen::VectorXd>> c) {
  CandidateGroup g{"g", {}};
  for (auto& [doc, v] : c) g.candidates.push_back({doc, std::nullopt, std::nullopt, v});
  return g;
}

TEST(PreferencePairs, Examples) {
  const std::vector<CandidateGroup> groups{
      scored("g1", {{"a", 0.9}, {"b", 0.1}, {"c", 0.5}}),
      scored("g2", {{"b", 0.3}, {"a", 0.3}})};
  const auto pairs = build_preference_pairs(groups, 1);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].chosen_doc_id, "b");
  EXPECT_TRUE(pairs[0].rejected_doc_id == "a" || pairs[0].rejected_doc_id == "c");
  EXPECT_EQ(pairs[1].chosen_doc_id, "a");
  EXPECT_EQ(pairs[1].rejected_doc_id, "b");
}

TEST(PreferencePairs, Errors) {
  const std::vector<CandidateGroup> small{scored("g", {{"a", 0.1}})};
  EXPECT_THROW(build_preference_pairs(small, 1), InvalidArgument);
  std::vector<CandidateGroup> unscored{scored("g", {{"a", 0.1}, {"b", 0.2}})};
  unscored[0].candidates[1].machine_score.reset();
  EXPECT_THROW(build_preference_pairs(unscored, 1), InvalidArgument);
  const std::vector<CandidateGroup> dup{scored("g", {{"a", 0.1}, {"a", 0.2}})};
  EXPECT_THROW(build_preference_pairs(dup, 1), InvalidArgument);
}

TEST(PreferencePairs, RejectedIsRoughlyUniform) {
  std::map<std::string, int> counts;
  for (int g = 0; g < 3000; ++g) {
    const std::vector<CandidateGroup> one{
        scored("g" + std::to_string(g), {{"a", 0.0}, {"b", 1}, {"c", 2}, {"d", 3}})};
    counts[build_preference_pairs(one, 7)[0].rejected_doc_id]++;
  }
  EXPECT_EQ(counts.count("a"), 0u);
  for (const char* k : {"b", "c", "d"}) EXPECT_NEAR(counts[k], 1000, 120) << k;
}

TEST(PreferencePairs, InvariantAndDeterminism) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(2, 20);
  std::uniform_int_distribution<int> grid(0, 5);
  std::vector<CandidateGroup> groups;
  for (int g = 0; g < 1000; ++g) {
    CandidateGroup group{"g" + std::to_string(g), {}};
    const int n = size(rng);
    for (int k = 0; k < n; ++k) {
      group.candidates.push_back({"c" + std::to_string(k), grid(rng) * 0.5, std::nullopt,
                                  std::nullopt});
    }
    groups.push_back(group);
  }
  const auto pairs = build_preference_pairs(groups, 99);
  ASSERT_EQ(pairs.size(), groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::map<std::string, double> score;
    for (const auto& c : groups[g].candidates) score[c.doc_id] = *c.machine_score;
    EXPECT_NE(pairs[g].chosen_doc_id, pairs[g].rejected_doc_id);
    EXPECT_LE(score.at(pairs[g].chosen_doc_id), score.at(pairs[g].rejected_doc_id));
  }
  EXPECT_EQ(build_preference_pairs(groups, 99), pairs);
  std::reverse(groups.begin(), groups.end());
  auto reversed = build_preference_pairs(groups, 99);
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(reversed, pairs);
}

TEST(PreferencePairs, JsonlOutput) {
  const std::vector<PreferencePair> pairs{{"g1", "b", "a"}};
  std::ostringstream out;
  write_preference_pairs(out, pairs, 5);
  EXPECT_EQ(out.str(),
            R"({"chosen_doc_id":"b","group_id":"g1","rejected_doc_id":"a","seed":5})"
            "\n");
}

TEST(SelectCandidates, Examples) {
  const Eigen::VectorXd original = Eigen::Vector2d(1, 0);
  // cosines 0.9, 0.8, 0.7 against (1, 0)
  const auto at = [](double c) { return Eigen::VectorXd(Eigen::Vector2d(c, std::sqrt(1 - c * c))); };
  const CandidateGroup g = embedded({{"c", at(0.7)}, {"a", at(0.9)}, {"b", at(0.8)}});
  EXPECT_EQ(select_candidates(original, g, 2), (std::vector<std::string>{"a", "b"}));

  const CandidateGroup same = embedded({{"z", original}, {"m", original}, {"q", original}});
  EXPECT_EQ(select_candidates(original, same, 1), std::vector<std::string>{"m"});

  const CandidateGroup ortho = embedded({{"a", Eigen::Vector2d(0, 1)}, {"b", Eigen::Vector2d(3, 0)}});
  EXPECT_EQ(select_candidates(original, ortho, 1), std::vector<std::string>{"b"});

  EXPECT_THROW(select_candidates(original, g, 4), InvalidArgument);
  EXPECT_THROW(select_candidates(original, g, 0), InvalidArgument);
  EXPECT_THROW(select_candidates(Eigen::Vector3d(1, 0, 0), g, 1), InvalidArgument);
}

TEST(SelectCandidates, PrefixProperty) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(-2, 2);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::VectorXd original = Eigen::Vector3d(1, 0.5, -0.2);
    std::vector<std::pair<std::string, Eigen::VectorXd>> cands;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd v(3);
      v << coarse(rng), coarse(rng), 1;
      cands.push_back({"d" + std::to_string(k), v});
    }
    const CandidateGroup g = embedded(cands);
    std::vector<std::string> previous;
    for (int p = 1; p <= n; ++p) {
      const auto sel = select_candidates(original, g, p);
      ASSERT_EQ(sel.size(), static_cast<std::size_t>(p));
      EXPECT_TRUE(std::equal(previous.begin(), previous.end(), sel.begin()));
      previous = sel;
    }
  }
}

TEST(IterativeSelection, KeepsTopPAndFinishesWithBest) {
  const Eigen::VectorXd original = Eigen::Vector2d(1, 0);
  SelectionConfig cfg;
  cfg.p = 2;
  cfg.candidates_per_iter = 3;
  cfg.iterations = 3;
  std::vector<std::vector<std::string>> seen_parents;
  const auto trace = run_iterative_selection(
      original, "orig", cfg, [&](int it, const std::vector<std::string>& parents) {
        seen_parents.push_back(parents);
        CandidateGroup g{"it" + std::to_string(it), {}};
        for (int k = 0; k < 3; ++k) {
          const double angle = 0.1 * (k + 1) + 0.01 * it;
          g.candidates.push_back({"i" + std::to_string(it) + "c" + std::to_string(k),
                                  std::nullopt, std::nullopt,
                                  Eigen::Vector2d(std::cos(angle), std::sin(angle))});
        }
        return g;
      });
  ASSERT_EQ(trace.kept.size(), 3u);
  EXPECT_EQ(seen_parents[0], std::vector<std::string>{"orig"});
  EXPECT_EQ(trace.kept[0], (std::vector<std::string>{"i0c0", "i0c1"}));
  EXPECT_EQ(seen_parents[1], trace.kept[0]);
  EXPECT_EQ(trace.kept[2].size(), 1u);
  EXPECT_EQ(trace.final_doc_id, "i2c0");

  SelectionConfig bad = cfg;
  bad.p = 4;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(StratifiedSample, Examples) {
  const std::vector<Eigen::Index> two_fives{0, 0, 0, 0, 0, 5, 5, 5, 5, 5};
  const auto s = stratified_sample(two_fives, 4, 1);
  ASSERT_EQ(s.size(), 4u);
  int first = 0;
  for (auto i : s) first += two_fives[i] == 0;
  EXPECT_EQ(first, 2);

  std::vector<Eigen::Index> lopsided(11, 1);
  lopsided[0] = 0;
  const auto t = stratified_sample(lopsided, 4, 1);
  int singleton = 0;
  for (auto i : t) singleton += lopsided[i] == 0;
  EXPECT_EQ(singleton, 1);
  EXPECT_EQ(stratified_sample(lopsided, 4, 1), t);
  EXPECT_THROW(stratified_sample(lopsided, 12, 1), InvalidArgument);
}

TEST(StratifiedSample, EvenUntilExhaustion) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int clusters = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<Eigen::Index> assignment;
    std::map<Eigen::Index, std::size_t> sizes;
    for (int c = 0; c < clusters; ++c) {
      const int size = std::uniform_int_distribution<int>(1, 9)(rng);
      for (int k = 0; k < size; ++k) assignment.push_back(c * 100);
      sizes[c * 100] = static_cast<std::size_t>(size);
    }
    std::shuffle(assignment.begin(), assignment.end(), rng);
    const std::size_t quota =
        std::uniform_int_distribution<std::size_t>(0, assignment.size())(rng);
    const auto sample = stratified_sample(assignment, quota, 5);
    ASSERT_EQ(sample.size(), quota);
    EXPECT_EQ(std::set<Eigen::Index>(sample.begin(), sample.end()).size(), quota);
    std::map<Eigen::Index, std::size_t> counts;
    for (const auto& [c, _] : sizes) counts[c] = 0;
    for (auto i : sample) {
      counts[assignment[i]]++;
      bool exhausted = false;
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& [c, n] : counts) {
        exhausted = exhausted || n == sizes[c];
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      if (!exhausted) {
        EXPECT_LE(hi - lo, 1u);
      }
    }
    EXPECT_EQ(stratified_sample(assignment, quota, 5), sample);
  }
}

}  // namespace
}  // namespace evadetect
