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

#include "evadetect/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include "evadetect/attack.hpp"
#include "evadetect/error.hpp"
#include "evadetect/parallel.hpp"
#include "evadetect/report.hpp"

namespace evadetect {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) {
      return static_cast<unsigned>(v);
    }
  }
  return 1;
}

namespace {

[[noreturn]] void config_fail(const std::string& key, const std::string& msg) {
  throw ConfigError("config key '" + key + "': " + msg);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      config_fail(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    config_fail(where.empty() ? key : where + "." + key, "wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<fs::path> path_list(const json& obj, const char* key,
                                const fs::path& base) {
  std::vector<fs::path> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(resolve(base, it->get<std::string>()));
    return out;
  }
  if (!it->is_array()) config_fail(key, "expected a path or list of paths");
  for (const json& v : *it) {
    if (!v.is_string()) config_fail(key, "expected strings");
    out.push_back(resolve(base, v.get<std::string>()));
  }
  return out;
}

DocumentFilter filter_from_json(const json& obj, const std::string& where) {
  check_keys(obj, where, {"dataset_id", "method_id", "label", "author_id"});
  DocumentFilter f;
  const auto opt = [&](const char* key) -> std::optional<std::string> {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) config_fail(where + "." + key, "expected string");
    return it->get<std::string>();
  };
  f.dataset_id = opt("dataset_id");
  f.method_id = opt("method_id");
  f.author_id = opt("author_id");
  if (auto label = opt("label")) {
    f.label = parse_label(*label);
    if (!f.label) config_fail(where + ".label", "expected human or machine");
  }
  return f;
}

}  // namespace

RunConfig run_config_from_json(const json& config, const fs::path& base_dir) {
  check_keys(config, "",
             {"documents", "stats", "embeddings", "external_scores",
              "output_dir", "seed", "threads", "filter", "detectors",
              "centroid", "rows", "row_header", "aggregation", "metric",
              "bootstrap", "semantic_encoder", "pairs", "candidates",
              "preference_detector", "encoder_id", "quota",
              "affinity_propagation"});
  RunConfig rc;
  rc.documents = resolve(base_dir, get_as<std::string>(config, "documents", "", ""));
  rc.stats = path_list(config, "stats", base_dir);
  rc.embeddings = path_list(config, "embeddings", base_dir);
  rc.external_scores = path_list(config, "external_scores", base_dir);
  rc.output_dir =
      resolve(base_dir, get_as<std::string>(config, "output_dir", "", "out"));
  rc.seed = get_as<std::uint64_t>(config, "seed", "", 0);
  const long threads =
      get_as<long>(config, "threads", "", static_cast<long>(default_threads()));
  if (threads < 1) config_fail("threads", "must be positive");
  rc.threads = static_cast<unsigned>(threads);

  if (auto it = config.find("filter"); it != config.end() && !it->is_null()) {
    rc.scope = filter_from_json(*it, "filter");
  }

  if (auto it = config.find("detectors"); it != config.end()) {
    if (!it->is_array()) config_fail("detectors", "expected a list");
    std::set<std::string> names;
    for (const json& d : *it) {
      check_keys(d, "detectors[]", {"name", "kind", "stats_id", "encoder_id"});
      DetectorBinding b;
      const std::string kind = get_as<std::string>(d, "kind", "detectors[]", "");
      const auto parsed = parse_detector(kind);
      if (!parsed) config_fail("detectors[].kind", "unknown detector \"" + kind + "\"");
      b.kind = *parsed;
      b.name = get_as<std::string>(d, "name", "detectors[]",
                                   std::string(to_string(b.kind)));
      b.stats_id = get_as<std::string>(d, "stats_id", "detectors[]", "");
      b.encoder_id = get_as<std::string>(d, "encoder_id", "detectors[]", "");
      if (b.kind == Detector::StyleDetect && b.encoder_id.empty()) {
        config_fail("detectors[].encoder_id", b.name + " needs an encoder_id");
      }
      if (b.kind != Detector::StyleDetect && b.stats_id.empty()) {
        config_fail("detectors[].stats_id", b.name + " needs a stats_id");
      }
      if (!names.insert(b.name).second) {
        config_fail("detectors[].name", "duplicate name \"" + b.name + "\"");
      }
      rc.detectors.push_back(std::move(b));
    }
  }

  rc.centroid.exemplars.label = Label::Machine;
  rc.centroid.exemplars.method_id = "exemplar";
  if (auto it = config.find("centroid"); it != config.end() && !it->is_null()) {
    check_keys(*it, "centroid", {"filter", "k", "per_dataset", "normalize"});
    if (auto f = it->find("filter"); f != it->end()) {
      rc.centroid.exemplars = filter_from_json(*f, "centroid.filter");
    }
    rc.centroid.k = get_as<int>(*it, "k", "centroid", 100);
    if (rc.centroid.k < 1) config_fail("centroid.k", "must be >= 1");
    rc.centroid.per_dataset = get_as<bool>(*it, "per_dataset", "centroid", true);
    rc.centroid.mode = get_as<bool>(*it, "normalize", "centroid", false)
                           ? CentroidMode::NormalizeFirst
                           : CentroidMode::Raw;
  }

  if (auto it = config.find("rows"); it != config.end() && !it->is_null()) {
    if (!it->is_array()) config_fail("rows", "expected a list");
    for (const json& r : *it) {
      if (r.is_string()) {
        rc.rows.push_back({r.get<std::string>(), r.get<std::string>()});
        continue;
      }
      check_keys(r, "rows[]", {"method_id", "name"});
      RowSpec row;
      row.method_id = get_as<std::string>(r, "method_id", "rows[]", "");
      if (row.method_id.empty()) config_fail("rows[].method_id", "required");
      row.name = get_as<std::string>(r, "name", "rows[]", row.method_id);
      rc.rows.push_back(std::move(row));
    }
  }
  rc.row_header = get_as<std::string>(config, "row_header", "", "Model");

  if (auto it = config.find("aggregation"); it != config.end() && !it->is_null()) {
    check_keys(*it, "aggregation", {"sample_sizes", "resamples", "level"});
    rc.aggregation.sample_sizes = get_as<std::vector<int>>(
        *it, "sample_sizes", "aggregation", rc.aggregation.sample_sizes);
    rc.aggregation.resamples =
        get_as<int>(*it, "resamples", "aggregation", rc.aggregation.resamples);
    rc.aggregation.level = get_as<double>(*it, "level", "aggregation", 0.95);
  }
  rc.aggregation.seed = rc.seed;
  rc.aggregation.threads = rc.threads;
  if (!(rc.aggregation.level > 0.0 && rc.aggregation.level < 1.0)) {
    config_fail("aggregation.level", "must lie in (0, 1)");
  }

  if (auto it = config.find("metric"); it != config.end() && !it->is_null()) {
    check_keys(*it, "metric", {"kind", "max_fpr", "normalized"});
    const std::string kind = get_as<std::string>(*it, "kind", "metric", "pauroc");
    if (kind == "auroc") {
      rc.metric = MetricSpec::full();
    } else if (kind == "pauroc") {
      rc.metric = MetricSpec::partial(get_as<double>(*it, "max_fpr", "metric", 0.1),
                                      get_as<bool>(*it, "normalized", "metric", true));
      if (!(rc.metric.max_fpr > 0.0 && rc.metric.max_fpr <= 1.0)) {
        config_fail("metric.max_fpr", "must lie in (0, 1]");
      }
    } else {
      config_fail("metric.kind", "expected auroc or pauroc");
    }
  }

  if (auto it = config.find("bootstrap"); it != config.end() && !it->is_null()) {
    check_keys(*it, "bootstrap", {"resamples", "level"});
    rc.bootstrap_resamples = get_as<int>(*it, "resamples", "bootstrap", 0);
    rc.bootstrap_level = get_as<double>(*it, "level", "bootstrap", 0.95);
    if (rc.bootstrap_resamples < 0) config_fail("bootstrap.resamples", "must be >= 0");
    if (!(rc.bootstrap_level > 0.0 && rc.bootstrap_level < 1.0)) {
      config_fail("bootstrap.level", "must lie in (0, 1)");
    }
  }

  rc.semantic_encoder = get_as<std::string>(config, "semantic_encoder", "", "sbert");
  rc.pairs = resolve(base_dir, get_as<std::string>(config, "pairs", "", ""));
  rc.candidates = resolve(base_dir, get_as<std::string>(config, "candidates", "", ""));
  rc.preference_detector = get_as<std::string>(config, "preference_detector", "", "");
  rc.encoder_id = get_as<std::string>(config, "encoder_id", "", "");
  const long quota = get_as<long>(config, "quota", "", 0);
  if (quota < 0) config_fail("quota", "must be nonnegative");
  rc.quota = static_cast<std::size_t>(quota);

  if (auto it = config.find("affinity_propagation");
      it != config.end() && !it->is_null()) {
    check_keys(*it, "affinity_propagation",
               {"damping", "max_iter", "convergence_iter", "message_tolerance",
                "refine_exemplars"});
    rc.ap.damping = get_as<double>(*it, "damping", "affinity_propagation", 0.5);
    rc.ap.max_iter = get_as<int>(*it, "max_iter", "affinity_propagation", 200);
    rc.ap.convergence_iter =
        get_as<int>(*it, "convergence_iter", "affinity_propagation", 15);
    rc.ap.message_tolerance =
        get_as<double>(*it, "message_tolerance", "affinity_propagation", 1e-10);
    rc.ap.refine_exemplars =
        get_as<bool>(*it, "refine_exemplars", "affinity_propagation", true);
    if (!(rc.ap.damping >= 0.5 && rc.ap.damping < 1.0)) {
      config_fail("affinity_propagation.damping", "must lie in [0.5, 1)");
    }
    if (rc.ap.max_iter < 1 || rc.ap.convergence_iter < 1) {
      config_fail("affinity_propagation", "max_iter and convergence_iter must be >= 1");
    }
    if (!(rc.ap.message_tolerance > 0.0)) {
      config_fail("affinity_propagation.message_tolerance", "must be > 0");
    }
  }
  rc.ap.seed = rc.seed;
  return rc;
}

// ---------------------------------------------------------------------------
// Shared plumbing

namespace {

int run_guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputationError;
  }
}

Corpus load(const RunConfig& config) {
  if (config.documents.empty()) {
    throw ConfigError("config key 'documents': required");
  }
  return load_corpus(config.documents, config.stats, config.embeddings);
}

void prepare_output(const RunConfig& config, const json& effective) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory " +
                      config.output_dir.string() + ": " + ec.message());
  }
  write_text_file(config.output_dir / "config.json", effective.dump(2) + "\n");
}

void finish_output(const RunConfig& config, const IssueLog& issues,
                   std::ostream& err) {
  write_text_file(config.output_dir / "issues.jsonl", issues.render());
  if (issues.size() > 0) {
    err << issues.size() << " issue(s) recorded in "
        << (config.output_dir / "issues.jsonl").string() << "\n";
  }
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ",";
    out += ids[i];
  }
  if (ids.size() > shown) {
    out += ",... (" + std::to_string(ids.size()) + " total)";
  }
  return out;
}

// One score column: a configured detector or an external pass-through.
struct ScoreColumn {
  std::string name;
  std::map<std::string, double> values;        // doc_id -> score
  std::map<std::string, std::string> missing;  // doc_id -> reason
};

struct Evaluation {
  Corpus corpus;
  std::vector<DocumentRecord> docs;  // evaluated documents
  std::vector<ScoreColumn> columns;
};

// Draws the StyleDetect exemplars: K documents per dataset (or globally)
// from the exemplar pool, keyed by (seed, dataset).
std::map<std::string, std::vector<std::string>> draw_exemplars(
    const Corpus& corpus, const RunConfig& config,
    const std::set<std::string>& datasets, IssueLog& issues) {
  std::map<std::string, std::vector<std::string>> draws;
  const auto pool = select(corpus, config.centroid.exemplars);
  const auto draw = [&](const std::string& key,
                        std::vector<std::string> ids) {
    if (ids.size() < static_cast<std::size_t>(config.centroid.k)) {
      issues.warn("exemplar pool smaller than k; StyleDetect unavailable",
                  {{"dataset_id", key},
                   {"pool", std::to_string(ids.size())},
                   {"k", std::to_string(config.centroid.k)}});
      return;
    }
    auto rng = keyed_rng(config.seed, stable_hash("centroid"), stable_hash(key));
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<std::size_t>(config.centroid.k));
    std::sort(ids.begin(), ids.end());
    draws[key] = std::move(ids);
  };
  if (config.centroid.per_dataset) {
    for (const std::string& d : datasets) {
      std::vector<std::string> ids;
      for (const auto& doc : pool) {
        if (doc.dataset_id == d) ids.push_back(doc.doc_id);
      }
      draw(d, std::move(ids));
    }
  } else {
    std::vector<std::string> ids;
    for (const auto& doc : pool) ids.push_back(doc.doc_id);
    draw("*", std::move(ids));
  }
  return draws;
}

Evaluation evaluate_detectors(const RunConfig& config, IssueLog& issues) {
  if (config.detectors.empty() && config.external_scores.empty()) {
    throw ConfigError("config key 'detectors': at least one detector required");
  }
  Evaluation ev{load(config), {}, {}};
  const Corpus& corpus = ev.corpus;
  for (const DetectorBinding& b : config.detectors) {
    if (b.kind == Detector::StyleDetect) {
      if (!corpus.encoder_dim(b.encoder_id)) {
        throw ConfigError("detector " + b.name + ": encoder_id \"" +
                          b.encoder_id + "\" not present in the corpus");
      }
    } else if (!corpus.has_stats_id(b.stats_id)) {
      throw ConfigError("detector " + b.name + ": stats_id \"" + b.stats_id +
                        "\" not present in the corpus");
    }
  }

  auto scoped = select(corpus, config.scope);
  std::set<std::string> datasets;
  for (const auto& d : scoped) datasets.insert(d.dataset_id);

  const bool needs_centroid =
      std::any_of(config.detectors.begin(), config.detectors.end(),
                  [](const auto& b) { return b.kind == Detector::StyleDetect; });
  std::map<std::string, std::vector<std::string>> exemplars;
  std::set<std::string> exemplar_ids;
  if (needs_centroid) {
    exemplars = draw_exemplars(corpus, config, datasets, issues);
    for (const auto& [_, ids] : exemplars) {
      exemplar_ids.insert(ids.begin(), ids.end());
    }
  }
  for (auto& d : scoped) {
    if (!exemplar_ids.count(d.doc_id)) ev.docs.push_back(std::move(d));
  }

  for (const DetectorBinding& b : config.detectors) {
    ScoreColumn column{b.name, {}, {}};
    const auto absorb = [&](const ScoreReport& report) {
      for (const auto& s : report.scores) column.values[s.doc_id] = s.value;
      for (const auto& i : report.issues) column.missing[i.doc_id] = i.message;
    };
    if (b.kind != Detector::StyleDetect) {
      DetectorSpec spec{b.kind, b.stats_id, "", std::nullopt};
      absorb(score_documents(corpus, spec, ev.docs, config.threads));
      ev.columns.push_back(std::move(column));
      continue;
    }
    // Documents are scored against the centroid of their own dataset.
    std::map<std::string, std::vector<DocumentRecord>> by_centroid;
    for (const auto& d : ev.docs) {
      by_centroid[config.centroid.per_dataset ? d.dataset_id : "*"].push_back(d);
    }
    for (const auto& [key, docs] : by_centroid) {
      std::optional<StyleCentroid> centroid;
      std::string why = "no exemplars drawn for \"" + key + "\"";
      if (auto it = exemplars.find(key); it != exemplars.end()) {
        std::vector<EmbeddingRecord> records;
        std::vector<std::string> lacking;
        for (const std::string& id : it->second) {
          if (const auto* e = corpus.find_embedding(id, b.encoder_id)) {
            records.push_back(*e);
          } else {
            lacking.push_back(id);
          }
        }
        if (!lacking.empty()) {
          why = "exemplars lack \"" + b.encoder_id +
                "\" embeddings: " + join_ids(lacking);
        } else {
          try {
            centroid = build_style_centroid(records, config.centroid.mode);
          } catch (const Error& e) {
            why = e.what();
          }
        }
      }
      if (!centroid) {
        issues.warn("StyleDetect centroid unavailable: " + why,
                    {{"detector", b.name}, {"dataset_id", key}});
        for (const auto& d : docs) column.missing[d.doc_id] = why;
        continue;
      }
      DetectorSpec spec{b.kind, "", b.encoder_id, centroid};
      absorb(score_documents(corpus, spec, docs, config.threads));
    }
    ev.columns.push_back(std::move(column));
  }

  std::map<std::string, ScoreColumn> external;
  for (const fs::path& path : config.external_scores) {
    for (ExternalScore& s : load_external_scores(path, corpus)) {
      auto& column = external[s.detector_name];
      column.name = s.detector_name;
      if (column.values.count(s.doc_id)) {
        throw ValidationError(path.string(), 0, "detector_name",
                              "duplicate external score for (\"" + s.doc_id +
                                  "\", \"" + s.detector_name +
                                  "\") across files");
      }
      column.values[s.doc_id] = s.value;
    }
  }
  for (auto& [name, column] : external) {
    for (const auto& d : ev.docs) {
      if (!column.values.count(d.doc_id)) {
        column.missing[d.doc_id] = "no external score";
      }
    }
    ev.columns.push_back(std::move(column));
  }
  return ev;
}

// Labeled scores of the given documents, or the ids lacking a score.
std::optional<LabeledScores> gather(const ScoreColumn& column,
                                    const std::vector<const DocumentRecord*>& docs,
                                    std::vector<std::string>& missing) {
  LabeledScores out;
  for (const DocumentRecord* d : docs) {
    auto it = column.values.find(d->doc_id);
    if (it == column.values.end()) {
      missing.push_back(d->doc_id);
      continue;
    }
    out.push_back({it->second, d->label, d->doc_id});
  }
  if (!missing.empty()) return std::nullopt;
  return out;
}

// Machine documents of one method plus the human documents sharing their
// datasets.
std::vector<const DocumentRecord*> comparison_set(
    const std::vector<DocumentRecord>& docs, const std::string& method_id,
    const std::optional<std::string>& dataset_id) {
  std::set<std::string> datasets;
  std::vector<const DocumentRecord*> out;
  for (const auto& d : docs) {
    if (d.label == Label::Machine && d.method_id == method_id &&
        (!dataset_id || d.dataset_id == *dataset_id)) {
      out.push_back(&d);
      datasets.insert(d.dataset_id);
    }
  }
  for (const auto& d : docs) {
    if (d.label == Label::Human && datasets.count(d.dataset_id)) {
      out.push_back(&d);
    }
  }
  return out;
}

std::vector<RowSpec> resolve_rows(const RunConfig& config,
                                  const std::vector<DocumentRecord>& docs) {
  if (!config.rows.empty()) return config.rows;
  std::set<std::string> methods;
  for (const auto& d : docs) {
    if (d.label == Label::Machine) methods.insert(d.method_id);
  }
  std::vector<RowSpec> rows;
  for (const auto& m : methods) rows.push_back({m, m});
  return rows;
}

MetricSpec table_partial_metric(const RunConfig& config) {
  if (config.metric.kind == MetricSpec::Kind::PartialAuroc) return config.metric;
  return MetricSpec::partial(0.1, true);
}

}  // namespace

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  return run_guarded(err, [&] {
    const Corpus corpus = load(config);
    std::size_t external = 0;
    for (const fs::path& p : config.external_scores) {
      external += load_external_scores(p, corpus).size();
    }
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t>
        counts;
    for (const auto& [id, doc] : corpus.documents()) {
      ++counts[{doc.dataset_id, doc.method_id, std::string(to_string(doc.label))}];
    }
    std::size_t w_dataset = 10;
    std::size_t w_method = 9;
    for (const auto& [key, n] : counts) {
      w_dataset = std::max(w_dataset, std::get<0>(key).size());
      w_method = std::max(w_method, std::get<1>(key).size());
    }
    const auto pad = [](const std::string& s, std::size_t w) {
      return s + std::string(w - std::min(w, s.size()) + 2, ' ');
    };
    out << pad("dataset_id", w_dataset) << pad("method_id", w_method)
        << pad("label", 7) << "count\n";
    for (const auto& [key, n] : counts) {
      out << pad(std::get<0>(key), w_dataset) << pad(std::get<1>(key), w_method)
          << pad(std::get<2>(key), 7) << n << "\n";
    }
    out << "OK: " << corpus.documents().size() << " documents, "
        << corpus.token_stats().size() << " token-stats records, "
        << corpus.embeddings().size() << " embeddings";
    if (!config.external_scores.empty()) {
      out << ", " << external << " external scores";
    }
    out << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const RunConfig& config, const json& effective, std::ostream& err) {
  return run_guarded(err, [&] {
    IssueLog issues("eval");
    const Evaluation ev = evaluate_detectors(config, issues);
    prepare_output(config, effective);
    const MetricSpec partial = table_partial_metric(config);
    const auto rows = resolve_rows(config, ev.docs);

    DetectionTable full_table;
    full_table.row_header = config.row_header;
    for (const auto& c : ev.columns) full_table.columns.push_back(c.name);
    DetectionTable partial_table = full_table;

    std::string csv =
        "model,method_id,detector,auroc,pauroc,max_fpr,n_machine,n_human,"
        "auroc_ci_lo,auroc_ci_hi\n";
    for (const RowSpec& row : rows) {
      const auto set = comparison_set(ev.docs, row.method_id, std::nullopt);
      std::size_t n_machine = 0;
      for (const auto* d : set) n_machine += d->label == Label::Machine;
      const std::size_t n_human = set.size() - n_machine;

      DetectionTable::Row full_row{row.name, {}};
      DetectionTable::Row partial_row{row.name, {}};
      for (const ScoreColumn& column : ev.columns) {
        std::optional<AurocResult> full;
        std::optional<AurocResult> part;
        std::vector<std::string> missing;
        if (n_machine == 0 || n_human == 0) {
          issues.warn("cell n/a: need machine and human documents",
                      {{"method_id", row.method_id},
                       {"detector", column.name},
                       {"n_machine", std::to_string(n_machine)},
                       {"n_human", std::to_string(n_human)}});
        } else if (auto scores = gather(column, set, missing)) {
          full = auroc(*scores);
          part = pauroc(*scores, partial.max_fpr, partial.normalized);
          if (config.bootstrap_resamples > 0) {
            full->ci = bootstrap_ci(*scores, MetricSpec::full(),
                                    config.bootstrap_resamples,
                                    config.bootstrap_level, config.seed,
                                    config.threads);
          }
        } else {
          std::string reason = column.missing.count(missing.front())
                                   ? column.missing.at(missing.front())
                                   : "missing score";
          issues.warn("cell n/a: documents without a score",
                      {{"method_id", row.method_id},
                       {"detector", column.name},
                       {"doc_ids", join_ids(missing)},
                       {"reason", reason}});
        }
        full_row.cells.push_back(full ? std::optional(full->value) : std::nullopt);
        partial_row.cells.push_back(part ? std::optional(part->value)
                                         : std::nullopt);
        const std::string na(kNotAvailable);
        csv += csv_field(row.name) + "," + csv_field(row.method_id) + "," +
               csv_field(column.name) + "," +
               (full ? format_full(full->value) : na) + "," +
               (part ? format_full(part->value) : na) + "," +
               format_full(partial.max_fpr) + "," + std::to_string(n_machine) +
               "," + std::to_string(n_human) + "," +
               (full && full->ci ? format_full(full->ci->lo) : "") + "," +
               (full && full->ci ? format_full(full->ci->hi) : "") + "\n";
      }
      full_table.rows.push_back(std::move(full_row));
      partial_table.rows.push_back(std::move(partial_row));
    }

    const int percent = static_cast<int>(std::lround(partial.max_fpr * 100.0));
    std::string md = "## AUROC\n\n" + render_detection_markdown(full_table) +
                     "\n## AUROC(" + std::to_string(percent) + ")" +
                     (partial.normalized ? "" : " (unnormalized)") + "\n\n" +
                     render_detection_markdown(partial_table);
    write_text_file(config.output_dir / "detection_table.csv", csv);
    write_text_file(config.output_dir / "detection_table.md", md);
    finish_output(config, issues, err);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// aggregate

int cmd_aggregate(const RunConfig& config, const json& effective,
                  std::ostream& err) {
  return run_guarded(err, [&] {
    IssueLog issues("aggregate");
    const Evaluation ev = evaluate_detectors(config, issues);
    prepare_output(config, effective);

    std::set<std::pair<std::string, std::string>> groups;  // method, dataset
    std::set<std::string> wanted;
    for (const RowSpec& r : config.rows) wanted.insert(r.method_id);
    for (const auto& d : ev.docs) {
      if (d.label == Label::Machine &&
          (wanted.empty() || wanted.count(d.method_id))) {
        groups.insert({d.method_id, d.dataset_id});
      }
    }

    std::vector<AggregateCurve> curves;
    for (const auto& [method, dataset] : groups) {
      const auto set = comparison_set(ev.docs, method, dataset);
      for (const ScoreColumn& column : ev.columns) {
        std::vector<std::string> missing;
        const auto scores = gather(column, set, missing);
        if (!scores) {
          issues.warn("curve skipped: documents without a score",
                      {{"method_id", method},
                       {"dataset_id", dataset},
                       {"detector", column.name},
                       {"doc_ids", join_ids(missing)}});
          continue;
        }
        AggregateCurve curve;
        try {
          curve = auroc_vs_n(*scores, config.aggregation, config.metric);
        } catch (const InvalidArgument& e) {
          throw InvalidArgument("(" + method + ", " + dataset + ", " +
                                column.name + "): " + e.what());
        }
        curve.detector = column.name;
        curve.method_id = method;
        curve.dataset_id = dataset;
        curves.push_back(std::move(curve));
      }
    }
    const auto best = best_detector_summary(curves);
    write_text_file(config.output_dir / "curves.csv", render_curves_csv(curves));
    write_text_file(config.output_dir / "best_detector.csv",
                    render_best_detector_csv(best));
    write_text_file(config.output_dir / "best_detector.md",
                    render_best_detector_markdown(best));
    finish_output(config, issues, err);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// textmetrics

int cmd_textmetrics(const RunConfig& config, const json& effective,
                    std::ostream& err) {
  return run_guarded(err, [&] {
    if (config.pairs.empty()) throw ConfigError("config key 'pairs': required");
    IssueLog issues("textmetrics");
    const Corpus corpus = load(config);
    prepare_output(config, effective);

    struct Sums {
      double edit = 0.0;
      std::size_t n_edit = 0;
      double sim = 0.0;
      std::size_t n_sim = 0;
    };
    std::map<std::pair<std::string, std::string>, Sums> cells;  // method, dataset

    std::ifstream in(config.pairs, std::ios::binary);
    if (!in) throw ValidationError(config.pairs.string(), 0, "", "cannot open file");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      json r;
      try {
        r = json::parse(line);
      } catch (const json::exception& e) {
        throw ValidationError(config.pairs.string(), number, "",
                              "malformed JSON: " + std::string(e.what()));
      }
      const auto id = [&](const char* field) {
        auto it = r.is_object() ? r.find(field) : r.end();
        if (it == r.end() || !it->is_string()) {
          throw ValidationError(config.pairs.string(), number, field,
                                "expected string");
        }
        const std::string v = it->get<std::string>();
        const DocumentRecord* doc = corpus.find_document(v);
        if (!doc) {
          throw ValidationError(config.pairs.string(), number, field,
                                "unknown doc_id \"" + v + "\"");
        }
        return doc;
      };
      const DocumentRecord* original = id("original_doc_id");
      const DocumentRecord* modified = id("modified_doc_id");
      if (!config.scope.matches(*modified)) continue;
      Sums& s = cells[{modified->method_id, modified->dataset_id}];
      const std::map<std::string, std::string> where{
          {"original_doc_id", original->doc_id},
          {"modified_doc_id", modified->doc_id}};
      if (original->text && modified->text) {
        s.edit += static_cast<double>(
            edit_distance(*original->text, *modified->text));
        ++s.n_edit;
      } else {
        issues.warn("pair without text; excluded from edit distance", where);
      }
      const auto* ea = corpus.find_embedding(original->doc_id, config.semantic_encoder);
      const auto* eb = corpus.find_embedding(modified->doc_id, config.semantic_encoder);
      if (ea && eb) {
        s.sim += cosine_similarity(ea->vector, eb->vector);
        ++s.n_sim;
      } else {
        issues.warn("pair without \"" + config.semantic_encoder +
                        "\" embeddings; excluded from semantic similarity",
                    where);
      }
    }

    std::vector<RowSpec> methods = config.rows;
    if (methods.empty()) {
      std::set<std::string> seen;
      for (const auto& [key, _] : cells) seen.insert(key.first);
      for (const auto& m : seen) methods.push_back({m, m});
    }
    std::set<std::string> datasets;
    for (const auto& [key, _] : cells) datasets.insert(key.second);

    std::vector<TextMetricsTable::Section> per_dataset;
    for (const auto& d : datasets) per_dataset.push_back({d, {}, {}});
    const std::string na(kNotAvailable);
    std::vector<std::string> dataset_rows(methods.size());
    std::vector<std::pair<std::size_t, std::size_t>> pair_counts(methods.size());
    TextMetricsTable table;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      table.methods.push_back(methods[m].name);
      std::size_t k = 0;
      for (const auto& d : datasets) {
        auto& section = per_dataset[k++];
        auto it = cells.find({methods[m].method_id, d});
        if (it == cells.end()) {
          section.edit_distance.push_back(std::nullopt);
          section.semantic_sim.push_back(std::nullopt);
          continue;
        }
        const Sums& sums = it->second;
        std::optional<double> edit;
        std::optional<double> sim;
        if (sums.n_edit) edit = sums.edit / static_cast<double>(sums.n_edit);
        if (sums.n_sim) sim = sums.sim / static_cast<double>(sums.n_sim);
        section.edit_distance.push_back(edit);
        section.semantic_sim.push_back(sim);
        pair_counts[m].first += sums.n_edit;
        pair_counts[m].second += sums.n_sim;
        dataset_rows[m] += csv_field(methods[m].method_id) + "," + csv_field(d) +
                           "," + std::to_string(sums.n_edit) + "," +
                           (edit ? format_full(*edit) : na) + "," +
                           std::to_string(sums.n_sim) + "," +
                           (sim ? format_full(*sim) : na) + "\n";
      }
    }

    // Overall figures are the mean of the per-dataset means.
    TextMetricsTable::Section overall = macro_average(per_dataset, methods.size());
    std::string csv =
        "method_id,dataset_id,n_edit,edit_distance,n_sim,semantic_sim\n";
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& edit = overall.edit_distance[m];
      const auto& sim = overall.semantic_sim[m];
      if (!edit || !sim) {
        issues.warn("method row has n/a cells",
                    {{"method_id", methods[m].method_id}});
      }
      csv += csv_field(methods[m].method_id) + ",all," +
             std::to_string(pair_counts[m].first) + "," +
             (edit ? format_full(*edit) : na) + "," +
             std::to_string(pair_counts[m].second) + "," +
             (sim ? format_full(*sim) : na) + "\n" + dataset_rows[m];
    }
    table.sections.push_back(std::move(overall));
    if (datasets.size() > 1) {
      for (auto& s : per_dataset) table.sections.push_back(std::move(s));
    }
    write_text_file(config.output_dir / "edit_sem_table.csv", csv);
    write_text_file(config.output_dir / "edit_sem_table.md",
                    render_text_metrics_markdown(table));
    finish_output(config, issues, err);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// prefpairs

int cmd_prefpairs(const RunConfig& config, const json& effective,
                  std::ostream& err) {
  return run_guarded(err, [&] {
    if (config.candidates.empty()) {
      throw ConfigError("config key 'candidates': required");
    }
    IssueLog issues("prefpairs");
    std::map<std::string, CandidateGroup> groups;
    std::vector<std::pair<std::string, std::size_t>> unscored;  // group, index

    std::ifstream in(config.candidates, std::ios::binary);
    const std::string origin = config.candidates.string();
    if (!in) throw ValidationError(origin, 0, "", "cannot open file");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      json r;
      try {
        r = json::parse(line);
      } catch (const json::exception& e) {
        throw ValidationError(origin, number, "",
                              "malformed JSON: " + std::string(e.what()));
      }
      if (!r.is_object()) throw ValidationError(origin, number, "", "expected object");
      const auto str = [&](const char* field) {
        auto it = r.find(field);
        if (it == r.end() || !it->is_string()) {
          throw ValidationError(origin, number, field, "expected string");
        }
        return it->get<std::string>();
      };
      Candidate c;
      const std::string group_id = str("group_id");
      c.doc_id = str("doc_id");
      if (auto it = r.find("machine_score"); it != r.end() && !it->is_null()) {
        if (!it->is_number() || !std::isfinite(it->get<double>())) {
          throw ValidationError(origin, number, "machine_score",
                                "expected finite number");
        }
        c.machine_score = it->get<double>();
      }
      auto& group = groups[group_id];
      group.group_id = group_id;
      for (const Candidate& other : group.candidates) {
        if (other.doc_id == c.doc_id) {
          throw ValidationError(origin, number, "doc_id",
                                "duplicate candidate \"" + c.doc_id +
                                    "\" in group \"" + group_id + "\"");
        }
      }
      if (!c.machine_score) unscored.push_back({group_id, group.candidates.size()});
      group.candidates.push_back(std::move(c));
    }

    if (!unscored.empty()) {
      const auto binding = std::find_if(
          config.detectors.begin(), config.detectors.end(),
          [&](const auto& b) { return b.name == config.preference_detector; });
      if (config.preference_detector.empty() || binding == config.detectors.end()) {
        throw ConfigError(
            "config key 'preference_detector': candidates lack machine_score, "
            "name a configured detector to score them");
      }
      if (binding->kind == Detector::StyleDetect) {
        throw ConfigError("config key 'preference_detector': must be a "
                          "token-statistics detector");
      }
      const Corpus corpus = load(config);
      std::vector<DocumentRecord> docs;
      for (const auto& [g, i] : unscored) {
        const auto& id = groups[g].candidates[i].doc_id;
        const DocumentRecord* d = corpus.find_document(id);
        if (!d) {
          throw ValidationError(origin, 0, "doc_id", "unknown doc_id \"" + id + "\"");
        }
        docs.push_back(*d);
      }
      DetectorSpec spec{binding->kind, binding->stats_id, "", std::nullopt};
      const ScoreReport report = score_documents(corpus, spec, docs, config.threads);
      if (!report.complete()) {
        throw InvalidArgument("cannot score candidate \"" +
                              report.issues.front().doc_id +
                              "\": " + report.issues.front().message);
      }
      std::map<std::string, double> by_id;
      for (const auto& s : report.scores) by_id[s.doc_id] = s.value;
      for (const auto& [g, i] : unscored) {
        auto& c = groups[g].candidates[i];
        c.machine_score = by_id.at(c.doc_id);
      }
    }

    std::vector<CandidateGroup> ordered;
    for (auto& [id, g] : groups) ordered.push_back(std::move(g));
    const auto pairs = build_preference_pairs(ordered, config.seed);
    prepare_output(config, effective);
    std::ostringstream out;
    write_preference_pairs(out, pairs, config.seed);
    write_text_file(config.output_dir / "preference_pairs.jsonl", out.str());
    finish_output(config, issues, err);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const RunConfig& config, const json& effective,
               std::ostream& err) {
  return run_guarded(err, [&] {
    if (config.encoder_id.empty()) {
      throw ConfigError("config key 'encoder_id': required");
    }
    if (config.quota == 0) throw ConfigError("config key 'quota': required");
    IssueLog issues("sample");
    const Corpus corpus = load(config);
    if (!corpus.encoder_dim(config.encoder_id)) {
      throw ConfigError("unknown encoder_id \"" + config.encoder_id + "\"");
    }
    const AuthorEmbeddings authors =
        mean_author_embeddings(corpus, config.encoder_id, config.scope);
    if (!authors.missing_doc_ids.empty()) {
      issues.warn("documents without embeddings excluded from author means",
                  {{"encoder_id", config.encoder_id},
                   {"doc_ids", join_ids(authors.missing_doc_ids)}});
    }
    if (authors.author_ids.empty()) {
      throw InvalidArgument("no embedded authors in scope");
    }
    const Eigen::MatrixXd similarity = similarity_from_points(authors.means);
    const auto clusters = affinity_propagation(similarity, config.ap);
    if (!clusters.converged) {
      issues.warn("affinity propagation did not converge",
                  {{"iterations", std::to_string(clusters.iterations_run)}});
    }
    const auto sample = stratified_sample(clusters, config.quota, config.seed);
    prepare_output(config, effective);

    std::string cluster_csv = "author_id,exemplar_author_id\n";
    for (std::size_t i = 0; i < authors.author_ids.size(); ++i) {
      cluster_csv += csv_field(authors.author_ids[i]) + "," +
                     csv_field(authors.author_ids[clusters.assignment[i]]) + "\n";
    }
    std::string sample_csv = "author_id,exemplar_author_id\n";
    for (Eigen::Index i : sample) {
      sample_csv += csv_field(authors.author_ids[i]) + "," +
                    csv_field(authors.author_ids[clusters.assignment[i]]) + "\n";
    }
    write_text_file(config.output_dir / "clusters.csv", cluster_csv);
    write_text_file(config.output_dir / "sampled_authors.csv", sample_csv);
    err << authors.author_ids.size() << " authors, "
        << clusters.exemplar_indices.size() << " clusters ("
        << (clusters.converged ? "converged" : "not converged") << " after "
        << clusters.iterations_run << " iterations), sampled " << sample.size()
        << "\n";
    finish_output(config, issues, err);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// export-embeddings

int cmd_export_embeddings(const RunConfig& config, const json& effective,
                          std::ostream& err) {
  return run_guarded(err, [&] {
    if (config.encoder_id.empty()) {
      throw ConfigError("config key 'encoder_id': required");
    }
    IssueLog issues("export-embeddings");
    const Corpus corpus = load(config);
    const auto dim = corpus.encoder_dim(config.encoder_id);
    if (!dim) throw ConfigError("unknown encoder_id \"" + config.encoder_id + "\"");
    prepare_output(config, effective);

    std::string csv = "doc_id,label,method_id";
    for (Eigen::Index j = 0; j < *dim; ++j) csv += ",e" + std::to_string(j);
    csv += "\n";
    std::size_t rows = 0;
    std::vector<std::string> lacking;
    for (const DocumentRecord& doc : select(corpus, config.scope)) {
      const EmbeddingRecord* e = corpus.find_embedding(doc.doc_id, config.encoder_id);
      if (!e) {
        lacking.push_back(doc.doc_id);
        continue;
      }
      csv += csv_field(doc.doc_id) + "," + std::string(to_string(doc.label)) +
             "," + csv_field(doc.method_id);
      for (Eigen::Index j = 0; j < *dim; ++j) csv += "," + format_full(e->vector[j]);
      csv += "\n";
      ++rows;
    }
    if (!lacking.empty()) {
      issues.warn("documents without embeddings skipped",
                  {{"encoder_id", config.encoder_id}, {"doc_ids", join_ids(lacking)}});
    }
    if (rows == 0) {
      issues.warn("no documents matched; wrote header only");
      err << "warning: no documents matched the filter\n";
    }
    write_text_file(config.output_dir / "matrix.csv", csv);
    finish_output(config, issues, err);
    return kExitOk;
  });
}

}  // namespace evadetect
