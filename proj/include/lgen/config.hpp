#pragma once

// Run configuration: a JSON document resolved as preset defaults, then the
// config file, then command-line overrides. Unknown keys and mistyped values
// are rejected. The resolved document is itself a valid config file, so
// echoing it is enough to replay a run.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgen/corpus.hpp"
#include "lgen/error.hpp"
#include "lgen/synth.hpp"
#include "lgen/tasks.hpp"
#include "lgen/vacai.hpp"

namespace lgen {

using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw UsageError("config: " + key + " must be a non-empty array of rows");
  const std::size_t cols = j.front().size();
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw UsageError("config: " + key + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw UsageError("config: " + key + " entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

inline Json synth_to_json(const SynthConfig& s) {
  Json j;
  j["varieties"] = s.variety_ids;
  j["vocab_size"] = s.vocab_size;
  j["overlap_rate"] = matrix_to_json(s.overlap_rate);
  j["distance"] = matrix_to_json(s.distance);
  j["centroid_spread"] = s.centroid_spread;
  j["token_noise"] = s.token_noise;
  j["cls_noise"] = s.cls_noise;
  j["family"] = s.family;
  j["family_drift"] = s.family_drift;
  j["style_scale"] = s.style_scale;
  j["position_scale"] = s.position_scale;
  j["tag_scale"] = s.tag_scale;
  j["word_scale"] = s.word_scale;
  j["content_dim"] = s.content_dim;
  j["content_scale"] = s.content_scale;
  j["family_content"] = s.family_content;
  j["train_sentences"] = s.sentences_per_variety;
  j["dev_sentences"] = s.dev_sentences;
  j["test_sentences"] = s.test_sentences;
  j["min_length"] = s.min_length;
  j["max_length"] = s.max_length;
  j["tagset_size"] = s.tagset_size;
  j["dim"] = s.dim;
  return j;
}

/// The full default document for a preset. Its key set is the schema.
inline Json default_config(const std::string& preset = "mbert-like") {
  const TrainConfig t = preset_config(preset);
  Json j;
  j["preset"] = preset;
  j["seed"] = 0;
  j["task"] = "dep";
  Json train;
  train["mode"] = to_string(t.mode);
  train["lambda"] = t.lambda;
  train["lr"] = t.lr;
  train["batch_size"] = t.batch_size;
  train["max_epochs"] = t.max_epochs;
  train["max_steps"] = t.max_steps;
  train["eval_every"] = t.eval_every;
  train["use_inv_loss"] = t.ablation.use_inv_loss;
  train["use_spc_loss"] = t.ablation.use_spc_loss;
  train["lambda_grid"] = t.lambda_grid;
  train["hidden"] = t.hidden;
  train["arc_dim"] = t.arc_dim;
  train["nonlinearity"] = t.nonlinearity;
  j["train"] = train;
  Json data;
  data["sources"] = Json::array();
  data["dev"] = Json::array();
  data["eval"] = Json::array();
  data["target"] = "";
  data["candidates"] = Json::array();
  data["embedding_dim"] = 0;
  data["force_distinct"] = false;
  j["data"] = data;
  j["synth"] = synth_to_json(triple_config(0));
  Json cka;
  cka["sample_size"] = 0;
  cka["seed"] = 7;
  j["cka"] = cka;
  Json gradcheck;
  gradcheck["fixtures"] = 20;
  gradcheck["seed"] = 20260101;
  j["gradcheck"] = gradcheck;
  Json output;
  output["dir"] = "";
  output["checkpoint"] = "";
  j["output"] = output;
  return j;
}

namespace detail {

inline bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_unsigned() || a.is_number_integer()) || b.is_number_integer();
  return a.type() == b.type();
}

// Overwrites entries of `base` with `patch`. Every patch key must already
// exist in `base` with the same JSON kind.
inline void merge_checked(Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw UsageError("config: " + (path.empty() ? "document" : path) + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw UsageError("config: unknown key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else if (!same_kind(slot, it.value())) {
      throw UsageError("config: '" + key + "' expects " + std::string(slot.type_name()) + ", got " +
                       std::string(it.value().type_name()));
    } else {
      slot = it.value();
    }
  }
}

}  // namespace detail

inline Json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw UsageError("config " + origin + ": " + e.what());
  }
}

inline Json read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

/// preset default < file < overrides. The preset itself follows the same
/// precedence.
inline Json resolve_config(const Json& file, const Json& overrides) {
  std::string preset = "mbert-like";
  if (file.is_object() && file.contains("preset")) preset = file["preset"].get<std::string>();
  if (overrides.is_object() && overrides.contains("preset")) preset = overrides["preset"].get<std::string>();
  Json doc = default_config(preset);
  if (!file.is_null()) detail::merge_checked(doc, file, "");
  if (!overrides.is_null()) detail::merge_checked(doc, overrides, "");
  doc["preset"] = preset;
  return doc;
}

template <typename T>
T get_as(const Json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const Json::exception& e) {
    throw UsageError(std::string("config: ") + section + "." + key + ": " + e.what());
  }
}

inline TaskKind config_task(const Json& doc) { return parse_task_kind(doc.at("task").get<std::string>()); }

inline TrainConfig train_config(const Json& doc) {
  TrainConfig c = preset_config(doc.at("preset").get<std::string>());
  c.seed = doc.at("seed").get<std::uint64_t>();
  c.mode = parse_mode(get_as<std::string>(doc, "train", "mode"));
  c.lambda = get_as<double>(doc, "train", "lambda");
  c.lr = get_as<double>(doc, "train", "lr");
  c.batch_size = get_as<int>(doc, "train", "batch_size");
  c.max_epochs = get_as<int>(doc, "train", "max_epochs");
  c.max_steps = get_as<int>(doc, "train", "max_steps");
  c.eval_every = get_as<int>(doc, "train", "eval_every");
  c.ablation.use_inv_loss = get_as<bool>(doc, "train", "use_inv_loss");
  c.ablation.use_spc_loss = get_as<bool>(doc, "train", "use_spc_loss");
  c.lambda_grid = get_as<std::vector<double>>(doc, "train", "lambda_grid");
  c.hidden = get_as<std::size_t>(doc, "train", "hidden");
  c.arc_dim = get_as<std::size_t>(doc, "train", "arc_dim");
  c.nonlinearity = get_as<std::string>(doc, "train", "nonlinearity");
  if (c.nonlinearity != "relu") throw UsageError("config: only the relu nonlinearity is implemented");
  if (c.lr <= 0.0) throw UsageError("config: train.lr must be positive");
  if (c.batch_size <= 0) throw UsageError("config: train.batch_size must be positive");
  return c;
}

inline SynthConfig synth_config(const Json& doc) {
  const Json& j = doc.at("synth");
  SynthConfig s;
  try {
    s.variety_ids = j.at("varieties").get<std::vector<std::string>>();
    s.vocab_size = j.at("vocab_size").get<std::size_t>();
    s.overlap_rate = matrix_from_json(j.at("overlap_rate"), "synth.overlap_rate");
    s.distance = matrix_from_json(j.at("distance"), "synth.distance");
    s.centroid_spread = j.at("centroid_spread").get<double>();
    s.token_noise = j.at("token_noise").get<double>();
    s.cls_noise = j.at("cls_noise").get<double>();
    s.family = j.at("family").get<std::vector<int>>();
    s.family_drift = j.at("family_drift").get<double>();
    s.style_scale = j.at("style_scale").get<double>();
    s.position_scale = j.at("position_scale").get<double>();
    s.tag_scale = j.at("tag_scale").get<double>();
    s.word_scale = j.at("word_scale").get<double>();
    s.content_dim = j.at("content_dim").get<std::size_t>();
    s.content_scale = j.at("content_scale").get<double>();
    s.family_content = j.at("family_content").get<double>();
    s.sentences_per_variety = j.at("train_sentences").get<std::size_t>();
    s.dev_sentences = j.at("dev_sentences").get<std::size_t>();
    s.test_sentences = j.at("test_sentences").get<std::size_t>();
    s.min_length = j.at("min_length").get<std::size_t>();
    s.max_length = j.at("max_length").get<std::size_t>();
    s.tagset_size = j.at("tagset_size").get<std::size_t>();
    s.dim = j.at("dim").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw UsageError(std::string("config: synth: ") + e.what());
  }
  s.seed = doc.at("seed").get<std::uint64_t>();
  return s;
}

// ---------------------------------------------------------------------------
// Corpus specs: "id:conllu[:vemb[:tokens]]"

struct CorpusSpec {
  std::string id;
  std::string conllu;
  std::string vemb;
  std::string tokens;
};

inline CorpusSpec parse_corpus_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 4 || parts[0].empty() || parts[1].empty()) {
    throw UsageError("corpus spec '" + text + "' must look like id:conllu[:vemb[:tokens]]");
  }
  CorpusSpec s{parts[0], parts[1], "", ""};
  if (parts.size() > 2) s.vemb = parts[2];
  if (parts.size() > 3) s.tokens = parts[3];
  return s;
}

inline VarietyCorpus load_spec(const std::string& text, std::size_t expected_dim = 0) {
  const CorpusSpec s = parse_corpus_spec(text);
  return load_corpus(s.id, s.conllu, s.vemb, s.tokens, Split::train, expected_dim);
}

inline std::vector<std::string> spec_list(const Json& doc, const char* key) {
  return get_as<std::vector<std::string>>(doc, "data", key);
}

}  // namespace lgen
