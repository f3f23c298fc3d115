#pragma once

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cspace/dataset.hpp"
#include "cspace/net/train.hpp"

namespace cspace {

inline constexpr int kConfigSchemaVersion = 1;

// Raised for malformed or inconsistent configs; carries the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error(message + " (key: " + key + ")"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct DatasetParams {
  std::string root = "data";
  int count = 200;
  double ratios[3] = {0.7, 0.15, 0.15};
  std::uint64_t master_seed = 1;
  int resolution = 64;
};

struct EvalParams {
  std::string report_dir = "reports";
  double eta = 0.0;  // 0: select on the validation split
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  RobotParams robot;
  FamilySpec family;
  DatasetParams dataset;
  net::NetConfig net;
  net::TrainHyper train;
  EvalParams eval;
};

namespace detail {

template <typename T>
T get_key(const nlohmann::json& j, const std::string& section, const std::string& key,
          const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(section + "." + key, "value has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"schema_version", c.schema_version},
          {"robot", to_json(c.robot)},
          {"family", to_json(c.family)},
          {"dataset",
           {{"root", c.dataset.root},
            {"count", c.dataset.count},
            {"ratios", {c.dataset.ratios[0], c.dataset.ratios[1], c.dataset.ratios[2]}},
            {"master_seed", c.dataset.master_seed},
            {"resolution", c.dataset.resolution}}},
          {"net", to_json(c.net)},
          {"train", to_json(c.train)},
          {"eval", {{"report_dir", c.eval.report_dir}, {"eta", c.eval.eta}}}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  using detail::get_key;
  c.schema_version = get_key(j, "", "schema_version", kConfigSchemaVersion);
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version", "unsupported config schema version");
  }
  if (j.contains("robot")) {
    const auto& r = j.at("robot");
    if (r.contains("anchor1")) c.robot.anchor1 = point_from_json(r.at("anchor1"));
    if (r.contains("anchor2")) c.robot.anchor2 = point_from_json(r.at("anchor2"));
    c.robot.link_length = get_key(r, "robot", "link_length", c.robot.link_length);
    c.robot.link_half_width = get_key(r, "robot", "link_half_width", c.robot.link_half_width);
    c.robot.base_side = get_key(r, "robot", "base_side", c.robot.base_side);
  }
  if (j.contains("family")) {
    const auto& f = j.at("family");
    c.family.family = parse_family(get_key<std::string>(f, "family", "family",
                                                        family_name(c.family.family)));
    c.family.circle_radius = get_key(f, "family", "circle_radius", c.family.circle_radius);
    c.family.square_side = get_key(f, "family", "square_side", c.family.square_side);
    c.family.triangle_side = get_key(f, "family", "triangle_side", c.family.triangle_side);
    c.family.center_min = get_key(f, "family", "center_min", c.family.center_min);
    c.family.center_max = get_key(f, "family", "center_max", c.family.center_max);
    c.family.max_attempts = get_key(f, "family", "max_attempts", c.family.max_attempts);
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    c.dataset.root = get_key<std::string>(d, "dataset", "root", c.dataset.root);
    c.dataset.count = get_key(d, "dataset", "count", c.dataset.count);
    if (d.contains("ratios")) {
      const auto& r = d.at("ratios");
      if (!r.is_array() || r.size() != 3) {
        throw ConfigError("dataset.ratios", "must be an array of three fractions");
      }
      for (int i = 0; i < 3; ++i) c.dataset.ratios[i] = r.at(static_cast<std::size_t>(i)).get<double>();
    }
    c.dataset.master_seed = get_key(d, "dataset", "master_seed", c.dataset.master_seed);
    c.dataset.resolution = get_key(d, "dataset", "resolution", c.dataset.resolution);
  }
  if (j.contains("net")) {
    const auto& n = j.at("net");
    c.net.resolution = get_key(n, "net", "resolution", c.dataset.resolution);
    c.net.convs_per_block = get_key(n, "net", "convs_per_block", c.net.convs_per_block);
    c.net.channels = get_key(n, "net", "channels", c.net.channels);
    c.net.in_channels = get_key(n, "net", "in_channels", c.net.in_channels);
    c.net.out_channels = get_key(n, "net", "out_channels", c.net.out_channels);
  } else {
    c.net.resolution = c.dataset.resolution;
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.lr = get_key(t, "train", "lr", c.train.lr);
    c.train.lr_decay = get_key(t, "train", "lr_decay", c.train.lr_decay);
    c.train.lr_decay_every = get_key(t, "train", "lr_decay_every", c.train.lr_decay_every);
    c.train.batch_size = get_key(t, "train", "batch_size", c.train.batch_size);
    c.train.max_epochs = get_key(t, "train", "max_epochs", c.train.max_epochs);
    c.train.plateau_patience = get_key(t, "train", "plateau_patience", c.train.plateau_patience);
    c.train.plateau_min_rel_improve =
        get_key(t, "train", "plateau_min_rel_improve", c.train.plateau_min_rel_improve);
    c.train.adadelta_rho = get_key(t, "train", "adadelta_rho", c.train.adadelta_rho);
    c.train.adadelta_eps = get_key(t, "train", "adadelta_eps", c.train.adadelta_eps);
    c.train.seed = get_key(t, "train", "seed", c.train.seed);
    c.train.threads = get_key(t, "train", "threads", c.train.threads);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    c.eval.report_dir = get_key<std::string>(e, "eval", "report_dir", c.eval.report_dir);
    c.eval.eta = get_key(e, "eval", "eta", c.eval.eta);
  }
  return c;
}

inline void validate(const ExperimentConfig& c) {
  if (c.dataset.count < 1) throw ConfigError("dataset.count", "must be >= 1");
  if (c.dataset.resolution < 2) throw ConfigError("dataset.resolution", "must be >= 2");
  const double sum = c.dataset.ratios[0] + c.dataset.ratios[1] + c.dataset.ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("dataset.ratios", "must sum to 1");
  for (int i = 0; i < 3; ++i) {
    if (c.dataset.ratios[i] < 0.0) throw ConfigError("dataset.ratios", "must be nonnegative");
  }
  if (!(c.family.circle_radius > 0.0)) throw ConfigError("family.circle_radius", "must be > 0");
  if (!(c.family.square_side > 0.0)) throw ConfigError("family.square_side", "must be > 0");
  if (!(c.family.triangle_side > 0.0)) throw ConfigError("family.triangle_side", "must be > 0");
  if (!(c.family.center_min < c.family.center_max)) {
    throw ConfigError("family.center_min", "must be below family.center_max");
  }
  if (c.family.max_attempts < 1) throw ConfigError("family.max_attempts", "must be >= 1");
  try {
    c.robot.build();
  } catch (const std::exception& e) {
    throw ConfigError("robot", e.what());
  }
  try {
    c.net.validate();
  } catch (const std::exception& e) {
    throw ConfigError("net", e.what());
  }
  if (c.net.resolution != c.dataset.resolution) {
    throw ConfigError("net.resolution", "must match dataset.resolution");
  }
  if (c.train.batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (c.train.max_epochs < 1) throw ConfigError("train.max_epochs", "must be >= 1");
  if (c.train.plateau_patience < 1) throw ConfigError("train.plateau_patience", "must be >= 1");
  if (!(c.train.lr > 0.0)) throw ConfigError("train.lr", "must be > 0");
  if (c.eval.eta != 0.0 && !(c.eval.eta > 0.0 && c.eval.eta < 1.0)) {
    throw ConfigError("eval.eta", "must lie inside (0,1), or 0 to select on validation");
  }
}

// Applies one `section.key=value` override onto the raw JSON document.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(assignment, "override must look like section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;  // unquoted strings
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError(path, "override key has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline ExperimentConfig load_experiment_config(const std::string& path,
                                               const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", std::string("config is not valid JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  auto cfg = experiment_config_from_json(j);
  // CSPACE_DATA_ROOT rebases a relative dataset root
  if (const char* env = std::getenv("CSPACE_DATA_ROOT");
      env && *env && !std::filesystem::path(cfg.dataset.root).is_absolute()) {
    cfg.dataset.root = (std::filesystem::path(env) / cfg.dataset.root).string();
  }
  validate(cfg);
  return cfg;
}

}  // namespace cspace
