#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cspace/digest.hpp"
#include "cspace/net/adadelta.hpp"
#include "cspace/net/model.hpp"

namespace cspace::net {

inline constexpr std::uint32_t kCheckpointSchemaVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'C', 'S', 'P', 'C', 'K', 'P', 'T', '\0'};

struct EpochRecord {
  int epoch = 0;
  std::string loss_name;  // "L2" or "L1"
  double train_loss = 0.0;
  double val_l2 = 0.0;
  double val_l1 = 0.0;
  double lr = 0.0;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},       {"loss", r.loss_name}, {"train_loss", r.train_loss},
          {"val_l2", r.val_l2},     {"val_l1", r.val_l1},  {"lr", r.lr}};
}

inline EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.loss_name = j.at("loss").get<std::string>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_l2 = j.at("val_l2").get<double>();
  r.val_l1 = j.at("val_l1").get<double>();
  r.lr = j.at("lr").get<double>();
  return r;
}

// Self-describing training snapshot: config, weights, running statistics,
// optimizer accumulators and the full epoch history. No timestamps, so
// save -> load -> save is byte-identical.
template <typename S>
struct Checkpoint {
  NetConfig config;
  EncoderDecoder<S> model;
  AdaDelta<S> optimizer;
  int epochs_completed = 0;  // also the loss-alternation phase for resumes
  int best_epoch = -1;
  std::vector<EpochRecord> history;
  std::string source_digest;  // provenance when fine-tuned from another checkpoint

  // Digest over the trainable weights only (not optimizer state), used for
  // the no-update contract in zero-shot evaluation.
  std::string weight_digest() {
    Fnv1a64 h;
    for (const auto& p : model.parameters()) {
      h.update(p.tensor->data.data(), p.tensor->data.size() * sizeof(S));
    }
    return h.hex();
  }
};

namespace detail {

template <typename S>
constexpr const char* dtype_name() {
  if constexpr (sizeof(S) == 4) return "f32";
  else return "f64";
}

template <typename S>
void write_blob(std::ofstream& out, const Tensor<S>& t) {
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(S)));
}

template <typename S>
void read_blob(std::ifstream& in, Tensor<S>& t) {
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(S)));
}

}  // namespace detail

template <typename S>
void save_checkpoint(Checkpoint<S>& ckpt, const std::string& path) {
  nlohmann::json header;
  header["schema_version"] = kCheckpointSchemaVersion;
  header["dtype"] = detail::dtype_name<S>();
  header["config"] = to_json(ckpt.config);
  header["epochs_completed"] = ckpt.epochs_completed;
  header["best_epoch"] = ckpt.best_epoch;
  header["source_digest"] = ckpt.source_digest;
  header["optimizer"] = {{"rho", ckpt.optimizer.rho()}, {"eps", ckpt.optimizer.eps()}};
  auto hist = nlohmann::json::array();
  for (const auto& r : ckpt.history) hist.push_back(to_json(r));
  header["history"] = hist;
  auto params = nlohmann::json::array();
  for (const auto& p : ckpt.model.parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.tensor->shape}});
  }
  header["params"] = params;
  auto buffers = nlohmann::json::array();
  for (const auto& p : ckpt.model.buffers()) {
    buffers.push_back({{"name", p.name}, {"shape", p.tensor->shape}});
  }
  header["buffers"] = buffers;

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = head.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& p : ckpt.model.parameters()) detail::write_blob(out, *p.tensor);
  for (const auto& p : ckpt.model.buffers()) detail::write_blob(out, *p.tensor);
  for (const auto& t : ckpt.optimizer.acc_grad()) detail::write_blob(out, t);
  for (const auto& t : ckpt.optimizer.acc_update()) detail::write_blob(out, t);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

template <typename S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head(len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(len));
  const auto header = nlohmann::json::parse(head);
  if (header.at("schema_version").get<std::uint32_t>() != kCheckpointSchemaVersion) {
    throw std::runtime_error("unsupported checkpoint schema version");
  }
  if (header.at("dtype").get<std::string>() != detail::dtype_name<S>()) {
    throw std::runtime_error("checkpoint dtype is " + header.at("dtype").get<std::string>() +
                             ", expected " + detail::dtype_name<S>());
  }

  Checkpoint<S> ckpt;
  ckpt.config = net_config_from_json(header.at("config"));
  ckpt.model = EncoderDecoder<S>(ckpt.config, 0);
  ckpt.optimizer = AdaDelta<S>(ckpt.model, header.at("optimizer").at("rho").get<double>(),
                               header.at("optimizer").at("eps").get<double>());
  ckpt.epochs_completed = header.at("epochs_completed").get<int>();
  ckpt.best_epoch = header.at("best_epoch").get<int>();
  ckpt.source_digest = header.at("source_digest").get<std::string>();
  for (const auto& r : header.at("history")) ckpt.history.push_back(epoch_record_from_json(r));

  const auto check_layout = [&](const nlohmann::json& described,
                                const std::vector<ParamRef<S>>& live, const char* what) {
    if (described.size() != live.size()) {
      throw std::runtime_error(std::string("checkpoint ") + what + " layout mismatch");
    }
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (described.at(i).at("name").get<std::string>() != live[i].name) {
        throw std::runtime_error(std::string("checkpoint ") + what + " name mismatch at " +
                                 live[i].name);
      }
    }
  };
  auto params = ckpt.model.parameters();
  auto buffers = ckpt.model.buffers();
  check_layout(header.at("params"), params, "parameter");
  check_layout(header.at("buffers"), buffers, "buffer");

  for (auto& p : params) detail::read_blob(in, *p.tensor);
  for (auto& p : buffers) detail::read_blob(in, *p.tensor);
  for (auto& t : ckpt.optimizer.acc_grad()) detail::read_blob(in, t);
  for (auto& t : ckpt.optimizer.acc_update()) detail::read_blob(in, t);
  if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  return ckpt;
}

}  // namespace cspace::net
