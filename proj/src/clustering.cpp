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

#include "evadetect/clustering.hpp"

namespace evadetect {

std::vector<Eigen::Index> stratified_sample(
    const std::vector<Eigen::Index>& assignment, std::size_t quota,
    std::uint64_t seed) {
  if (quota > assignment.size()) {
    throw InvalidArgument("stratified_sample: quota " + std::to_string(quota) +
                          " exceeds population " +
                          std::to_string(assignment.size()));
  }
  std::map<Eigen::Index, std::vector<Eigen::Index>> clusters;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    clusters[assignment[i]].push_back(static_cast<Eigen::Index>(i));
  }
  // A uniform shuffle consumed front to back is the same as drawing a
  // uniformly random untaken member on every visit.
  std::vector<std::vector<Eigen::Index>> queues;
  for (auto& [exemplar, members] : clusters) {
    auto rng = keyed_rng(seed, static_cast<std::uint64_t>(exemplar));
    std::shuffle(members.begin(), members.end(), rng);
    queues.push_back(std::move(members));
  }
  std::vector<Eigen::Index> sample;
  sample.reserve(quota);
  std::size_t depth = 0;
  while (sample.size() < quota) {
    for (const auto& queue : queues) {
      if (sample.size() == quota) break;
      if (depth < queue.size()) sample.push_back(queue[depth]);
    }
    ++depth;
  }
  return sample;
}

AuthorEmbeddings mean_author_embeddings(const Corpus& corpus,
                                        const std::string& encoder_id,
                                        const DocumentFilter& filter) {
  const auto dim = corpus.encoder_dim(encoder_id);
  if (!dim) {
    throw InvalidArgument("unknown encoder_id \"" + encoder_id + "\"");
  }
  AuthorEmbeddings out;
  std::map<std::string, std::pair<Eigen::VectorXd, int>> sums;
  for (const DocumentRecord& doc : select(corpus, filter)) {
    const EmbeddingRecord* e = corpus.find_embedding(doc.doc_id, encoder_id);
    if (!e) {
      out.missing_doc_ids.push_back(doc.doc_id);
      continue;
    }
    auto [it, inserted] = sums.try_emplace(
        doc.author_id, Eigen::VectorXd::Zero(*dim), 0);
    it->second.first += e->vector;
    it->second.second += 1;
  }
  out.means.resize(static_cast<Eigen::Index>(sums.size()), *dim);
  Eigen::Index row = 0;
  for (const auto& [author, acc] : sums) {
    out.author_ids.push_back(author);
    out.means.row(row++) = (acc.first / acc.second).transpose();
  }
  return out;
}

}  // namespace evadetect
