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

// Corpus records and their JSONL ingestion.
//
// Three record streams feed every downstream module:
//   documents.jsonl   {"doc_id","label","author_id","dataset_id","method_id",
//                      "text"?,"char_count"}
//   stats.jsonl       {"doc_id","stats_id","tokens":[{"ll","mu","var","xent",
//                      "rank"},...]}
//   embeddings.jsonl  {"doc_id","encoder_id","dim","vector":[...]}
//
// Log quantities are in nats and ranks are 1-based. A Corpus is immutable
// once built and safe to share read-only across threads.

#ifndef EVADETECT_CORPUS_HPP
#define EVADETECT_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace evadetect {

enum class Label { Human, Machine };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

struct DocumentRecord {
  std::string doc_id;
  Label label = Label::Human;
  std::string author_id;
  std::string dataset_id;
  std::string method_id;
  std::optional<std::string> text;
  std::uint64_t char_count = 0;

  bool operator==(const DocumentRecord&) const = default;
};

struct TokenStat {
  double ll = 0.0;    // log p(realized token), observer
  double mu = 0.0;    // E[log p] under the observer distribution
  double var = 0.0;   // Var[log p] under the observer distribution
  double xent = 0.0;  // cross-entropy observer -> performer
  std::int64_t rank = 1;

  bool operator==(const TokenStat&) const = default;
};

struct TokenStatsRecord {
  std::string doc_id;
  std::string stats_id;
  std::vector<TokenStat> tokens;

  bool operator==(const TokenStatsRecord&) const = default;
};

struct EmbeddingRecord {
  std::string doc_id;
  std::string encoder_id;
  Eigen::VectorXd vector;

  Eigen::Index dim() const { return vector.size(); }
  bool operator==(const EmbeddingRecord& other) const {
    return doc_id == other.doc_id && encoder_id == other.encoder_id &&
           vector.size() == other.vector.size() && vector == other.vector;
  }
};

/// Number of Unicode scalar values in a UTF-8 string, or nullopt if the
/// bytes are not well-formed UTF-8.
std::optional<std::uint64_t> utf8_length(std::string_view text);

/// Decodes well-formed UTF-8 to scalar values; ill-formed bytes become
/// U+FFFD, one per offending byte.
std::u32string utf8_decode(std::string_view text);

/// Conjunctive filter over the document metadata. Unset fields match all.
struct DocumentFilter {
  std::optional<std::string> dataset_id;
  std::optional<std::string> method_id;
  std::optional<Label> label;
  std::optional<std::string> author_id;

  bool matches(const DocumentRecord& doc) const;
};

class CorpusBuilder;

class Corpus {
 public:
  using StatsKey = std::pair<std::string, std::string>;      // doc, stats_id
  using EmbeddingKey = std::pair<std::string, std::string>;  // doc, encoder

  const std::map<std::string, DocumentRecord>& documents() const {
    return documents_;
  }
  const std::map<StatsKey, TokenStatsRecord>& token_stats() const {
    return token_stats_;
  }
  const std::map<EmbeddingKey, EmbeddingRecord>& embeddings() const {
    return embeddings_;
  }

  const DocumentRecord* find_document(std::string_view doc_id) const;
  const TokenStatsRecord* find_stats(const std::string& doc_id,
                                     const std::string& stats_id) const;
  const EmbeddingRecord* find_embedding(const std::string& doc_id,
                                        const std::string& encoder_id) const;

  /// Dimension shared by all records of an encoder, if any exist.
  std::optional<Eigen::Index> encoder_dim(const std::string& encoder_id) const;
  bool has_stats_id(const std::string& stats_id) const;

  bool operator==(const Corpus&) const = default;

 private:
  friend class CorpusBuilder;

  std::map<std::string, DocumentRecord> documents_;
  std::map<StatsKey, TokenStatsRecord> token_stats_;
  std::map<EmbeddingKey, EmbeddingRecord> embeddings_;
  std::map<std::string, Eigen::Index> encoder_dims_;
};

/// Accumulates records, enforcing every per-record and cross-record
/// invariant as it goes; build() checks referential integrity last so
/// record order across files does not matter.
class CorpusBuilder {
 public:
  /// `origin` and `line` locate the record in error messages.
  void add_document(DocumentRecord doc, const std::string& origin = "<memory>",
                    std::size_t line = 0);
  void add_stats(TokenStatsRecord stats, const std::string& origin = "<memory>",
                 std::size_t line = 0);
  void add_embedding(EmbeddingRecord embedding,
                     const std::string& origin = "<memory>",
                     std::size_t line = 0);

  Corpus build() &&;

 private:
  struct Origin {
    std::string file;
    std::size_t line;
  };
  Corpus corpus_;
  std::map<Corpus::StatsKey, Origin> stats_origin_;
  std::map<Corpus::EmbeddingKey, Origin> embedding_origin_;
  std::map<std::string, Origin> document_origin_;
};

/// Single-pass streaming load of the three record streams. Throws
/// ValidationError (file, line, field) on the first violation, including
/// an empty document stream.
Corpus load_corpus(const std::filesystem::path& document_path,
                   const std::vector<std::filesystem::path>& stats_paths,
                   const std::vector<std::filesystem::path>& embedding_paths);

/// Stream-level variants used by load_corpus; `origin` names the stream.
void read_documents(std::istream& in, const std::string& origin,
                    CorpusBuilder& builder);
void read_stats(std::istream& in, const std::string& origin,
                CorpusBuilder& builder);
void read_embeddings(std::istream& in, const std::string& origin,
                     CorpusBuilder& builder);

void write_documents(std::ostream& out, const Corpus& corpus);
void write_stats(std::ostream& out, const Corpus& corpus);
void write_embeddings(std::ostream& out, const Corpus& corpus);

/// Documents passing `filter`, ascending by doc_id.
std::vector<DocumentRecord> select(const Corpus& corpus,
                                   const DocumentFilter& filter);
std::vector<DocumentRecord> select(
    const Corpus& corpus,
    const std::function<bool(const DocumentRecord&)>& predicate);

}  // namespace evadetect

#endif  // EVADETECT_CORPUS_HPP
