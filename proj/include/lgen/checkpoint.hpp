#pragma once

// Binary model checkpoints: "VCKP", u32 version, u32 metadata length, UTF-8
// JSON metadata, u32 tensor count, then per tensor u32 name length, name,
// u32 rows, u32 cols and rows x cols little-endian f64 values.

#include <cstring>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lgen/corpus.hpp"
#include "lgen/error.hpp"
#include "lgen/vacai.hpp"

namespace lgen {

inline constexpr char kCheckpointMagic[4] = {'V', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string serialize_checkpoint(DualEncoderModel& model) {
  nlohmann::ordered_json meta;
  meta["dim"] = model.dim;
  meta["hidden"] = model.hidden;
  meta["arc_dim"] = model.task == TaskKind::dep ? model.dep.root.value.cols() : 0;
  meta["task"] = to_string(model.task);
  meta["mode"] = to_string(model.mode);
  meta["lambda"] = model.grl.lambda;
  meta["use_inv_loss"] = model.ablation.use_inv_loss;
  meta["use_spc_loss"] = model.ablation.use_spc_loss;
  meta["nonlinearity"] = "relu";
  meta["varieties"] = model.labels.varieties;
  meta["tags"] = model.labels.tags.labels;
  meta["rels"] = model.labels.rels.labels;
  const std::string meta_text = meta.dump();

  std::string out(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  const auto params = model.params();
  detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const ParamRef& p : params) {
    detail::put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    const Matrix& v = p.tensor->value;
    detail::put_u32(out, static_cast<std::uint32_t>(v.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(v.cols()));
    for (double x : v.data()) detail::put_f64(out, x);
  }
  return out;
}

inline DualEncoderModel deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  try {
    detail::ByteReader rd(bytes.substr(4));
    if (rd.u32() != kCheckpointVersion) throw DataError("checkpoint: unsupported version");
    const std::uint32_t meta_len = rd.u32();
    const auto meta = nlohmann::json::parse(rd.bytes(meta_len));

    LabelSpace labels;
    labels.varieties = meta.at("varieties").get<std::vector<std::string>>();
    labels.tags.labels = meta.at("tags").get<std::vector<std::string>>();
    labels.rels.labels = meta.at("rels").get<std::vector<std::string>>();
    TrainConfig cfg;
    cfg.hidden = meta.at("hidden").get<std::size_t>();
    cfg.mode = parse_mode(meta.at("mode").get<std::string>());
    cfg.lambda = meta.at("lambda").get<double>();
    cfg.ablation.use_inv_loss = meta.at("use_inv_loss").get<bool>();
    cfg.ablation.use_spc_loss = meta.at("use_spc_loss").get<bool>();
    const TaskKind task = parse_task_kind(meta.at("task").get<std::string>());
    DualEncoderModel model =
        make_model(meta.at("dim").get<std::size_t>(), labels, task, cfg, meta.at("arc_dim").get<std::size_t>());

    auto params = model.params();
    const std::uint32_t count = rd.u32();
    if (count != params.size()) throw DataError("checkpoint: tensor count mismatch");
    for (ParamRef& p : params) {
      const std::uint32_t name_len = rd.u32();
      const std::string name(rd.bytes(name_len));
      if (name != p.name) throw DataError("checkpoint: expected tensor " + p.name + ", found " + name);
      const std::uint32_t rows = rd.u32();
      const std::uint32_t cols = rd.u32();
      Matrix& v = p.tensor->value;
      if (rows != v.rows() || cols != v.cols()) throw DataError("checkpoint: shape mismatch for " + name);
      for (double& x : v.data()) x = rd.f64();
    }
    if (rd.remaining() != 0) throw DataError("checkpoint: trailing bytes");
    return model;
  } catch (const EmbeddingError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, DualEncoderModel& model) {
  write_binary_file(path, serialize_checkpoint(model));
}

inline DualEncoderModel load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(detail::read_file(path));
}

}  // namespace lgen
