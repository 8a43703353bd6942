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

#include "evadetect/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "evadetect/error.hpp"

namespace evadetect {

using nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::Human ? "human" : "machine";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "human") return Label::Human;
  if (text == "machine") return Label::Machine;
  return std::nullopt;
}

namespace {

// Returns the scalar value and advances `pos`, or -1 on an ill-formed
// sequence (pos then advances by one byte).
long decode_one(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(s[i]);
  };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  int extra;
  long value;
  long min_value;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    value = lead & 0x1F;
    min_value = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    value = lead & 0x0F;
    min_value = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    value = lead & 0x07;
    min_value = 0x10000;
  } else {
    ++pos;
    return -1;
  }
  if (pos + extra >= s.size()) {
    ++pos;
    return -1;
  }
  for (int k = 1; k <= extra; ++k) {
    const unsigned char c = byte(pos + k);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return -1;
    }
    value = (value << 6) | (c & 0x3F);
  }
  if (value < min_value || value > 0x10FFFF ||
      (value >= 0xD800 && value <= 0xDFFF)) {
    ++pos;
    return -1;
  }
  pos += extra + 1;
  return value;
}

}  // namespace

std::optional<std::uint64_t> utf8_length(std::string_view text) {
  std::uint64_t count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (decode_one(text, pos) < 0) return std::nullopt;
    ++count;
  }
  return count;
}

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const long cp = decode_one(text, pos);
    out.push_back(cp < 0 ? U'\uFFFD' : static_cast<char32_t>(cp));
  }
  return out;
}

bool DocumentFilter::matches(const DocumentRecord& doc) const {
  if (dataset_id && doc.dataset_id != *dataset_id) return false;
  if (method_id && doc.method_id != *method_id) return false;
  if (label && doc.label != *label) return false;
  if (author_id && doc.author_id != *author_id) return false;
  return true;
}

const DocumentRecord* Corpus::find_document(std::string_view doc_id) const {
  auto it = documents_.find(std::string(doc_id));
  return it == documents_.end() ? nullptr : &it->second;
}

const TokenStatsRecord* Corpus::find_stats(const std::string& doc_id,
                                           const std::string& stats_id) const {
  auto it = token_stats_.find({doc_id, stats_id});
  return it == token_stats_.end() ? nullptr : &it->second;
}

const EmbeddingRecord* Corpus::find_embedding(
    const std::string& doc_id, const std::string& encoder_id) const {
  auto it = embeddings_.find({doc_id, encoder_id});
  return it == embeddings_.end() ? nullptr : &it->second;
}

std::optional<Eigen::Index> Corpus::encoder_dim(
    const std::string& encoder_id) const {
  auto it = encoder_dims_.find(encoder_id);
  if (it == encoder_dims_.end()) return std::nullopt;
  return it->second;
}

bool Corpus::has_stats_id(const std::string& stats_id) const {
  for (const auto& [key, _] : token_stats_) {
    if (key.second == stats_id) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Builder

void CorpusBuilder::add_document(DocumentRecord doc, const std::string& origin,
                                 std::size_t line) {
  if (doc.doc_id.empty()) {
    throw ValidationError(origin, line, "doc_id", "must be a nonempty string");
  }
  if (doc.text) {
    const auto length = utf8_length(*doc.text);
    if (!length) {
      throw ValidationError(origin, line, "text", "not well-formed UTF-8");
    }
    if (*length != doc.char_count) {
      throw ValidationError(origin, line, "char_count",
                            "is " + std::to_string(doc.char_count) +
                                " but text has " + std::to_string(*length) +
                                " characters");
    }
  }
  if (auto it = document_origin_.find(doc.doc_id);
      it != document_origin_.end()) {
    throw ValidationError(origin, line, "doc_id",
                          "duplicate doc_id \"" + doc.doc_id +
                              "\" (first defined at " + it->second.file + ":" +
                              std::to_string(it->second.line) + ")");
  }
  document_origin_.emplace(doc.doc_id, Origin{origin, line});
  std::string key = doc.doc_id;
  corpus_.documents_.emplace(std::move(key), std::move(doc));
}

void CorpusBuilder::add_stats(TokenStatsRecord stats, const std::string& origin,
                              std::size_t line) {
  if (stats.doc_id.empty()) {
    throw ValidationError(origin, line, "doc_id", "must be a nonempty string");
  }
  if (stats.stats_id.empty()) {
    throw ValidationError(origin, line, "stats_id", "must be a nonempty string");
  }
  if (stats.tokens.empty()) {
    throw ValidationError(origin, line, "tokens", "must be nonempty");
  }
  for (std::size_t i = 0; i < stats.tokens.size(); ++i) {
    const TokenStat& t = stats.tokens[i];
    const std::string where = "tokens[" + std::to_string(i) + "].";
    const auto check = [&](const char* name, double v, bool ok) {
      if (!std::isfinite(v)) {
        throw ValidationError(origin, line, where + name, "non-finite value");
      }
      if (!ok) {
        throw ValidationError(origin, line, where + name,
                              "sign constraint violated");
      }
    };
    check("ll", t.ll, t.ll <= 0.0);
    check("mu", t.mu, t.mu <= 0.0);
    check("var", t.var, t.var >= 0.0);
    check("xent", t.xent, t.xent >= 0.0);
    if (t.rank < 1) {
      throw ValidationError(origin, line, where + "rank", "must be >= 1");
    }
  }
  Corpus::StatsKey key{stats.doc_id, stats.stats_id};
  if (auto it = stats_origin_.find(key); it != stats_origin_.end()) {
    throw ValidationError(origin, line, "stats_id",
                          "duplicate (doc_id, stats_id) = (\"" + key.first +
                              "\", \"" + key.second + "\") (first defined at " +
                              it->second.file + ":" +
                              std::to_string(it->second.line) + ")");
  }
  stats_origin_.emplace(key, Origin{origin, line});
  corpus_.token_stats_.emplace(std::move(key), std::move(stats));
}

void CorpusBuilder::add_embedding(EmbeddingRecord embedding,
                                  const std::string& origin, std::size_t line) {
  if (embedding.doc_id.empty()) {
    throw ValidationError(origin, line, "doc_id", "must be a nonempty string");
  }
  if (embedding.encoder_id.empty()) {
    throw ValidationError(origin, line, "encoder_id",
                          "must be a nonempty string");
  }
  if (embedding.dim() == 0) {
    throw ValidationError(origin, line, "dim", "must be positive");
  }
  if (!embedding.vector.allFinite()) {
    throw ValidationError(origin, line, "vector", "non-finite value");
  }
  if ((embedding.vector.array() == 0.0).all()) {
    throw ValidationError(origin, line, "vector",
                          "zero vector (cosine undefined)");
  }
  auto [dim_it, inserted] = corpus_.encoder_dims_.emplace(embedding.encoder_id,
                                                          embedding.dim());
  if (!inserted && dim_it->second != embedding.dim()) {
    throw ValidationError(origin, line, "dim",
                          "encoder \"" + embedding.encoder_id + "\" has dim " +
                              std::to_string(dim_it->second) + ", got " +
                              std::to_string(embedding.dim()));
  }
  Corpus::EmbeddingKey key{embedding.doc_id, embedding.encoder_id};
  if (auto it = embedding_origin_.find(key); it != embedding_origin_.end()) {
    throw ValidationError(origin, line, "encoder_id",
                          "duplicate (doc_id, encoder_id) = (\"" + key.first +
                              "\", \"" + key.second + "\") (first defined at " +
                              it->second.file + ":" +
                              std::to_string(it->second.line) + ")");
  }
  embedding_origin_.emplace(key, Origin{origin, line});
  corpus_.embeddings_.emplace(std::move(key), std::move(embedding));
}

Corpus CorpusBuilder::build() && {
  for (const auto& [key, origin] : stats_origin_) {
    if (!corpus_.documents_.count(key.first)) {
      throw ValidationError(origin.file, origin.line, "doc_id",
                            "dangling reference to unknown doc_id \"" +
                                key.first + "\"");
    }
  }
  for (const auto& [key, origin] : embedding_origin_) {
    if (!corpus_.documents_.count(key.first)) {
      throw ValidationError(origin.file, origin.line, "doc_id",
                            "dangling reference to unknown doc_id \"" +
                                key.first + "\"");
    }
  }
  return std::move(corpus_);
}

// ---------------------------------------------------------------------------
// JSONL reading

namespace {

class LineContext {
 public:
  LineContext(const std::string& origin, std::size_t line)
      : origin_(origin), line_(line) {}

  [[noreturn]] void fail(const std::string& field,
                         const std::string& message) const {
    throw ValidationError(origin_, line_, field, message);
  }

  const json& require(const json& obj, const char* field) const {
    auto it = obj.find(field);
    if (it == obj.end()) fail(field, "missing");
    return *it;
  }

  std::string string_field(const json& obj, const char* field) const {
    const json& v = require(obj, field);
    if (!v.is_string()) fail(field, "expected string");
    return v.get<std::string>();
  }

  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "non-finite value");
    return x;
  }

  std::int64_t integer(const json& v, const std::string& field) const {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::isfinite(x) && std::floor(x) == x && std::fabs(x) < 9e15) {
        return static_cast<std::int64_t>(x);
      }
    }
    fail(field, "expected integer");
  }

  const std::string& origin() const { return origin_; }
  std::size_t line() const { return line_; }

 private:
  const std::string& origin_;
  std::size_t line_;
};

// Invokes handle(json, context) per nonblank line.
template <typename Handler>
void for_each_record(std::istream& in, const std::string& origin,
                     Handler&& handle) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
      throw ValidationError(origin, number, "", "byte order mark not allowed");
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(origin, number, "", "malformed JSON: " +
                                                    std::string(e.what()));
    }
    if (!record.is_object()) {
      throw ValidationError(origin, number, "", "expected a JSON object");
    }
    handle(record, LineContext(origin, number));
  }
  if (in.bad()) throw ValidationError(origin, number, "", "read failure");
}

}  // namespace

void read_documents(std::istream& in, const std::string& origin,
                    CorpusBuilder& builder) {
  for_each_record(in, origin, [&](const json& r, const LineContext& ctx) {
    DocumentRecord doc;
    doc.doc_id = ctx.string_field(r, "doc_id");
    const std::string label = ctx.string_field(r, "label");
    const auto parsed = parse_label(label);
    if (!parsed) ctx.fail("label", "expected \"human\" or \"machine\"");
    doc.label = *parsed;
    doc.author_id = ctx.string_field(r, "author_id");
    doc.dataset_id = ctx.string_field(r, "dataset_id");
    doc.method_id = ctx.string_field(r, "method_id");
    if (auto it = r.find("text"); it != r.end() && !it->is_null()) {
      if (!it->is_string()) ctx.fail("text", "expected string");
      doc.text = it->get<std::string>();
    }
    const std::int64_t count =
        ctx.integer(ctx.require(r, "char_count"), "char_count");
    if (count < 0) ctx.fail("char_count", "must be nonnegative");
    doc.char_count = static_cast<std::uint64_t>(count);
    builder.add_document(std::move(doc), ctx.origin(), ctx.line());
  });
}

void read_stats(std::istream& in, const std::string& origin,
                CorpusBuilder& builder) {
  for_each_record(in, origin, [&](const json& r, const LineContext& ctx) {
    TokenStatsRecord rec;
    rec.doc_id = ctx.string_field(r, "doc_id");
    rec.stats_id = ctx.string_field(r, "stats_id");
    const json& tokens = ctx.require(r, "tokens");
    if (!tokens.is_array()) ctx.fail("tokens", "expected array");
    rec.tokens.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const json& t = tokens[i];
      const std::string where = "tokens[" + std::to_string(i) + "]";
      if (!t.is_object()) ctx.fail(where, "expected object");
      const auto field = [&](const char* name) -> const json& {
        auto it = t.find(name);
        if (it == t.end()) ctx.fail(where + "." + name, "missing");
        return *it;
      };
      TokenStat stat;
      stat.ll = ctx.number(field("ll"), where + ".ll");
      stat.mu = ctx.number(field("mu"), where + ".mu");
      stat.var = ctx.number(field("var"), where + ".var");
      stat.xent = ctx.number(field("xent"), where + ".xent");
      stat.rank = ctx.integer(field("rank"), where + ".rank");
      rec.tokens.push_back(stat);
    }
    builder.add_stats(std::move(rec), ctx.origin(), ctx.line());
  });
}

void read_embeddings(std::istream& in, const std::string& origin,
                     CorpusBuilder& builder) {
  for_each_record(in, origin, [&](const json& r, const LineContext& ctx) {
    EmbeddingRecord rec;
    rec.doc_id = ctx.string_field(r, "doc_id");
    rec.encoder_id = ctx.string_field(r, "encoder_id");
    const std::int64_t dim = ctx.integer(ctx.require(r, "dim"), "dim");
    if (dim <= 0) ctx.fail("dim", "must be positive");
    const json& vec = ctx.require(r, "vector");
    if (!vec.is_array()) ctx.fail("vector", "expected array");
    if (static_cast<std::int64_t>(vec.size()) != dim) {
      ctx.fail("vector", "has " + std::to_string(vec.size()) +
                             " entries but dim is " + std::to_string(dim));
    }
    rec.vector.resize(dim);
    for (std::int64_t i = 0; i < dim; ++i) {
      rec.vector[i] =
          ctx.number(vec[i], "vector[" + std::to_string(i) + "]");
    }
    builder.add_embedding(std::move(rec), ctx.origin(), ctx.line());
  });
}

namespace {

template <typename Reader>
void read_file(const std::filesystem::path& path, Reader reader,
               CorpusBuilder& builder) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), 0, "", "cannot open file");
  reader(in, path.string(), builder);
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& document_path,
                   const std::vector<std::filesystem::path>& stats_paths,
                   const std::vector<std::filesystem::path>& embedding_paths) {
  CorpusBuilder builder;
  read_file(document_path, read_documents, builder);
  for (const auto& p : stats_paths) read_file(p, read_stats, builder);
  for (const auto& p : embedding_paths) read_file(p, read_embeddings, builder);
  Corpus corpus = std::move(builder).build();
  if (corpus.documents().empty()) {
    throw ValidationError(document_path.string(), 0, "",
                          "empty corpus: no document records");
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// JSONL writing

void write_documents(std::ostream& out, const Corpus& corpus) {
  for (const auto& [id, doc] : corpus.documents()) {
    json r;
    r["doc_id"] = doc.doc_id;
    r["label"] = std::string(to_string(doc.label));
    r["author_id"] = doc.author_id;
    r["dataset_id"] = doc.dataset_id;
    r["method_id"] = doc.method_id;
    if (doc.text) r["text"] = *doc.text;
    r["char_count"] = doc.char_count;
    out << r.dump() << '\n';
  }
}

void write_stats(std::ostream& out, const Corpus& corpus) {
  for (const auto& [key, rec] : corpus.token_stats()) {
    json tokens = json::array();
    for (const TokenStat& t : rec.tokens) {
      tokens.push_back({{"ll", t.ll},
                        {"mu", t.mu},
                        {"var", t.var},
                        {"xent", t.xent},
                        {"rank", t.rank}});
    }
    json r;
    r["doc_id"] = rec.doc_id;
    r["stats_id"] = rec.stats_id;
    r["tokens"] = std::move(tokens);
    out << r.dump() << '\n';
  }
}

void write_embeddings(std::ostream& out, const Corpus& corpus) {
  for (const auto& [key, rec] : corpus.embeddings()) {
    json r;
    r["doc_id"] = rec.doc_id;
    r["encoder_id"] = rec.encoder_id;
    r["dim"] = rec.dim();
    r["vector"] = std::vector<double>(rec.vector.data(),
                                      rec.vector.data() + rec.vector.size());
    out << r.dump() << '\n';
  }
}

std::vector<DocumentRecord> select(const Corpus& corpus,
                                   const DocumentFilter& filter) {
  return select(corpus, [&](const DocumentRecord& d) {
    return filter.matches(d);
  });
}

std::vector<DocumentRecord> select(
    const Corpus& corpus,
    const std::function<bool(const DocumentRecord&)>& predicate) {
  std::vector<DocumentRecord> out;
  for (const auto& [id, doc] : corpus.documents()) {
    if (predicate(doc)) out.push_back(doc);
  }
  return out;
}

}  // namespace evadetect
