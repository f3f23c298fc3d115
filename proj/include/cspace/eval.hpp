#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cspace/dataset.hpp"
#include "cspace/grid.hpp"
#include "cspace/net/checkpoint.hpp"
#include "cspace/net/train.hpp"
#include "cspace/parallel.hpp"

namespace cspace {

// Pixel tallies by (truth, prediction) pair.
struct ConfusionMatrix {
  std::uint64_t collision_collision = 0;
  std::uint64_t collision_free = 0;  // undetected collisions
  std::uint64_t free_collision = 0;  // undetected free space
  std::uint64_t free_free = 0;

  std::uint64_t total() const {
    return collision_collision + collision_free + free_collision + free_free;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    collision_collision += o.collision_collision;
    collision_free += o.collision_free;
    free_collision += o.free_collision;
    free_free += o.free_free;
    return *this;
  }
};

inline ConfusionMatrix confusion(const CSpaceGrid& pred, const CSpaceGrid& truth) {
  if (pred.n != truth.n) throw std::invalid_argument("confusion: resolution mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    const bool t_clsn = truth.cells[i] == Cell::Collision;
    const bool p_clsn = pred.cells[i] == Cell::Collision;
    if (t_clsn && p_clsn) ++cm.collision_collision;
    else if (t_clsn) ++cm.collision_free;
    else if (p_clsn) ++cm.free_collision;
    else ++cm.free_free;
  }
  return cm;
}

enum class PositiveClass { Free, Collision };

// Degenerate denominators (no predicted / no actual positives) yield a 0
// metric with the corresponding flag set; never a crash.
struct MetricsFragment {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_predicted_positives = false;
  bool no_actual_positives = false;
};

inline MetricsFragment metrics(const ConfusionMatrix& cm, PositiveClass positive) {
  if (cm.total() == 0) throw std::invalid_argument("metrics: empty confusion matrix");
  const bool free_pos = positive == PositiveClass::Free;
  const double tp = static_cast<double>(free_pos ? cm.free_free : cm.collision_collision);
  const double fp = static_cast<double>(free_pos ? cm.collision_free : cm.free_collision);
  const double fn = static_cast<double>(free_pos ? cm.free_collision : cm.collision_free);

  MetricsFragment m;
  m.accuracy = static_cast<double>(cm.collision_collision + cm.free_free) /
               static_cast<double>(cm.total());
  m.no_predicted_positives = tp + fp == 0.0;
  m.no_actual_positives = tp + fn == 0.0;
  m.precision = m.no_predicted_positives ? 0.0 : tp / (tp + fp);
  m.recall = m.no_actual_positives ? 0.0 : tp / (tp + fn);
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0
                                         : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline double undetected_collision_rate(const ConfusionMatrix& cm) {
  const auto actual = cm.collision_collision + cm.collision_free;
  return actual == 0 ? 0.0 : static_cast<double>(cm.collision_free) / static_cast<double>(actual);
}

inline double undetected_free_rate(const ConfusionMatrix& cm) {
  const auto actual = cm.free_collision + cm.free_free;
  return actual == 0 ? 0.0 : static_cast<double>(cm.free_collision) / static_cast<double>(actual);
}

// Micro-averaged metrics over a split, both positive-class conventions,
// plus the per-image (macro) numbers for the log.
struct MetricsReport {
  ConfusionMatrix confusion;
  MetricsFragment free_positive;
  MetricsFragment collision_positive;
  double undetected_collision = 0.0;
  double undetected_free = 0.0;
  double eta = 0.5;
  double macro_f1_free_positive = 0.0;
  std::vector<double> per_image_f1;
  std::string dataset_id;
  std::string checkpoint_digest;
};

inline nlohmann::json to_json(const MetricsFragment& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"no_predicted_positives", m.no_predicted_positives},
          {"no_actual_positives", m.no_actual_positives}};
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"collision_collision", cm.collision_collision},
          {"collision_free", cm.collision_free},
          {"free_collision", cm.free_collision},
          {"free_free", cm.free_free}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"confusion", to_json(r.confusion)},
          {"free_positive", to_json(r.free_positive)},
          {"collision_positive", to_json(r.collision_positive)},
          {"undetected_collision_rate", r.undetected_collision},
          {"undetected_free_rate", r.undetected_free},
          {"eta", r.eta},
          {"macro_f1_free_positive", r.macro_f1_free_positive},
          {"per_image_f1", r.per_image_f1},
          {"dataset_id", r.dataset_id},
          {"checkpoint_digest", r.checkpoint_digest}};
}

// Confusion matrix in the row-normalized percentage layout.
inline std::string format_confusion_table(const ConfusionMatrix& cm) {
  const double clsn = static_cast<double>(cm.collision_collision + cm.collision_free);
  const double free_t = static_cast<double>(cm.free_collision + cm.free_free);
  const auto pct = [](double num, double den) { return den == 0.0 ? 0.0 : 100.0 * num / den; };
  char buf[256];
  std::string out = "                 Predicted Collision   Predicted Free\n";
  std::snprintf(buf, sizeof(buf), "Actual Collision %18.2f%% %15.2f%%\n",
                pct(static_cast<double>(cm.collision_collision), clsn),
                pct(static_cast<double>(cm.collision_free), clsn));
  out += buf;
  std::snprintf(buf, sizeof(buf), "Actual Free      %18.2f%% %15.2f%%\n",
                pct(static_cast<double>(cm.free_collision), free_t),
                pct(static_cast<double>(cm.free_free), free_t));
  out += buf;
  return out;
}

// Prediction backend: a real-valued C-space image for one dataset sample.
// Either a trained network or the exact rasterizer stands behind this.
using PredictBackend = std::function<GrayImage(const SampleRecord&)>;

template <typename S>
PredictBackend make_net_backend(net::Checkpoint<S>& ckpt, const DatasetManifest& manifest) {
  return [&ckpt, &manifest](const SampleRecord& rec) {
    const GrayImage ws = read_png_gray8(manifest.resolve(rec.workspace_image));
    return net::predict(ckpt.model, ws, 1);
  };
}

inline PredictBackend make_oracle_backend(const DatasetManifest& manifest) {
  const RobotModel robot = manifest.robot.build();
  const int n = manifest.resolution;
  return [robot, n](const SampleRecord& rec) {
    return grid_to_image(rasterize(robot, to_workspace(rec.obstacles), n, 1));
  };
}

struct SplitPredictions {
  std::vector<GrayImage> pred;
  std::vector<CSpaceGrid> truth;
};

// Runs the backend over every sample of the split. Samples are independent;
// outputs land in per-sample slots so thread count cannot reorder anything.
inline SplitPredictions collect_predictions(const PredictBackend& backend,
                                            const DatasetManifest& manifest, Split split,
                                            int threads = 0) {
  const auto samples = manifest.split_samples(split);
  if (samples.empty()) {
    throw std::invalid_argument("split '" + split_name(split) + "' is empty");
  }
  SplitPredictions out;
  out.pred.resize(samples.size());
  out.truth.resize(samples.size());
  std::vector<std::string> errors(samples.size());
  parallel_for(static_cast<std::int64_t>(samples.size()), threads, [&](std::int64_t i, int) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out.pred[k] = backend(*samples[k]);
      out.truth[k] = image_to_grid(read_png_gray8(manifest.resolve(samples[k]->cspace_image)), 0.5);
    } catch (const std::exception& e) {
      errors[k] = samples[k]->id + ": " + e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("prediction failed: " + e);
  }
  return out;
}

struct ThresholdChoice {
  double eta = 0.5;
  double val_f1 = 0.0;
  double grid_start = 0.01;
  double grid_stop = 0.99;
  double grid_step = 0.01;
};

// Sweeps the threshold grid and keeps the best validation F1 (free
// positive); ties break toward the largest eta, which favors predicting
// collision.
inline ThresholdChoice select_threshold(const SplitPredictions& val) {
  ThresholdChoice choice;
  choice.val_f1 = -1.0;
  for (int step = 1; step <= 99; ++step) {
    const double eta = step / 100.0;
    ConfusionMatrix cm;
    for (std::size_t s = 0; s < val.pred.size(); ++s) {
      cm += confusion(image_to_grid(val.pred[s], eta), val.truth[s]);
    }
    const double f1 = metrics(cm, PositiveClass::Free).f1;
    if (f1 >= choice.val_f1) {
      choice.val_f1 = f1;
      choice.eta = eta;
    }
  }
  return choice;
}

inline MetricsReport evaluate(const SplitPredictions& split, double eta) {
  if (split.pred.empty()) throw std::invalid_argument("evaluate: empty split");
  MetricsReport report;
  report.eta = eta;
  double macro_sum = 0.0;
  for (std::size_t s = 0; s < split.pred.size(); ++s) {
    const ConfusionMatrix cm = confusion(image_to_grid(split.pred[s], eta), split.truth[s]);
    report.confusion += cm;
    const double f1 = metrics(cm, PositiveClass::Free).f1;
    report.per_image_f1.push_back(f1);
    macro_sum += f1;
  }
  report.free_positive = metrics(report.confusion, PositiveClass::Free);
  report.collision_positive = metrics(report.confusion, PositiveClass::Collision);
  report.undetected_collision = undetected_collision_rate(report.confusion);
  report.undetected_free = undetected_free_rate(report.confusion);
  report.macro_f1_free_positive = macro_sum / static_cast<double>(split.pred.size());
  return report;
}

// Threshold selection on the validation split followed by test-split
// metrics: the standard protocol behind `eval`, zero-shot transfer and the
// data-size study.
struct ProtocolResult {
  ThresholdChoice threshold;
  MetricsReport test;
};

inline ProtocolResult run_protocol(const PredictBackend& backend, const DatasetManifest& manifest,
                                   int threads = 0) {
  const auto val = collect_predictions(backend, manifest, Split::Val, threads);
  const ThresholdChoice choice = select_threshold(val);
  const auto test = collect_predictions(backend, manifest, Split::Test, threads);
  ProtocolResult out;
  out.threshold = choice;
  out.test = evaluate(test, choice.eta);
  out.test.dataset_id = family_name(manifest.family) + ":" + manifest.directory;
  return out;
}

// Table-IV-shaped transfer report.
struct ZeroShotReport {
  double f1 = 0.0;
  double missed_collision_pct = 0.0;
  double missed_free_pct = 0.0;
  double eta = 0.5;
  std::string digest_before, digest_after;
  MetricsReport full;
};

inline nlohmann::json to_json(const ZeroShotReport& r) {
  return {{"f1", r.f1},
          {"missed_collision_pct", r.missed_collision_pct},
          {"missed_free_pct", r.missed_free_pct},
          {"eta", r.eta},
          {"digest_before", r.digest_before},
          {"digest_after", r.digest_after},
          {"full", to_json(r.full)}};
}

// Evaluates a trained checkpoint on another family without weight updates:
// eta is re-selected on the target validation split, metrics come from the
// target test split, and the weight digest is recorded before and after.
template <typename S>
ZeroShotReport zero_shot_eval(net::Checkpoint<S>& ckpt, const DatasetManifest& target,
                              int threads = 0) {
  ZeroShotReport report;
  report.digest_before = ckpt.weight_digest();
  const auto result = run_protocol(make_net_backend(ckpt, target), target, threads);
  report.digest_after = ckpt.weight_digest();
  report.eta = result.threshold.eta;
  report.f1 = result.test.free_positive.f1;
  report.missed_collision_pct = 100.0 * result.test.undetected_collision;
  report.missed_free_pct = 100.0 * result.test.undetected_free;
  report.full = result.test;
  report.full.checkpoint_digest = report.digest_before;
  return report;
}

struct DataSizeRow {
  int samples = 0;
  double f1 = 0.0;
  double missed_collision_pct = 0.0;
  double missed_free_pct = 0.0;
  int epochs_ran = 0;
};

// Trains one model per requested train-set size on the first k samples of a
// fixed seeded shuffle of the train split, with plateau early stopping, and
// evaluates each on the shared val/test splits.
template <typename S>
std::vector<DataSizeRow> data_size_study(
    const net::NetConfig& cfg, const DatasetManifest& manifest, const std::vector<int>& sizes,
    const net::TrainHyper& hp,
    const std::function<void(const net::EpochRecord&)>& on_epoch = {}) {
  const auto train_samples = manifest.split_samples(Split::Train);
  std::vector<int> order(train_samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(derive_seed(hp.seed, 0xDA7A517Eull));
  for (std::size_t i = order.size(); i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i + 1));
    std::swap(order[i], order[j]);
  }

  std::vector<DataSizeRow> rows;
  for (const int k : sizes) {
    if (k < 1 || k > static_cast<int>(train_samples.size())) {
      throw std::invalid_argument("data_size_study: size " + std::to_string(k) +
                                  " exceeds the train split (" +
                                  std::to_string(train_samples.size()) + ")");
    }
    DatasetManifest sub = manifest;
    std::vector<bool> keep(train_samples.size(), false);
    for (int i = 0; i < k; ++i) keep[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    sub.samples.clear();
    std::size_t train_seen = 0;
    for (const auto& rec : manifest.samples) {
      if (rec.split == Split::Train) {
        if (keep[train_seen]) sub.samples.push_back(rec);
        ++train_seen;
      } else {
        sub.samples.push_back(rec);
      }
    }
    auto ckpt = net::train<S>(cfg, sub, hp, on_epoch);
    const auto result = run_protocol(make_net_backend(ckpt, manifest), manifest, hp.threads);
    DataSizeRow row;
    row.samples = k;
    row.f1 = result.test.free_positive.f1;
    row.missed_collision_pct = 100.0 * result.test.undetected_collision;
    row.missed_free_pct = 100.0 * result.test.undetected_free;
    row.epochs_ran = ckpt.epochs_completed;
    rows.push_back(row);
  }
  return rows;
}

struct TimingReport {
  int resolution = 0;
  int n_warmup = 0;
  int n_runs = 0;
  double median_ms = 0.0;
  double us_per_configuration = 0.0;
  std::string cpu_model;
  int hardware_threads = 0;
  std::string compiler;
};

inline nlohmann::json to_json(const TimingReport& r) {
  return {{"resolution", r.resolution},
          {"n_warmup", r.n_warmup},
          {"n_runs", r.n_runs},
          {"median_ms", r.median_ms},
          {"us_per_configuration", r.us_per_configuration},
          {"cpu_model", r.cpu_model},
          {"hardware_threads", r.hardware_threads},
          {"compiler", r.compiler}};
}

inline std::string read_cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) {
        std::string name = line.substr(pos + 1);
        const auto first = name.find_first_not_of(' ');
        return first == std::string::npos ? name : name.substr(first);
      }
    }
  }
  return "unknown";
}

// Median wall-clock of a full single-image forward pass divided by the N^2
// configurations it labels. Runs single-stream.
template <typename S>
TimingReport timing_benchmark(net::EncoderDecoder<S>& model, int n_warmup, int n_runs) {
  if (n_runs < 1) throw std::invalid_argument("timing: n_runs must be >= 1");
  const int n = model.config().resolution;
  net::Tensor<S> x(1, 1, n, n);
  Rng rng(1234);
  for (auto& v : x.data) v = static_cast<S>(rng.uniform());

  for (int i = 0; i < n_warmup; ++i) model.forward_eval(x, 1);
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(n_runs));
  for (int i = 0; i < n_runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    model.forward_eval(x, 1);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const double median =
      n_runs % 2 == 1 ? ms[static_cast<std::size_t>(n_runs / 2)]
                      : 0.5 * (ms[static_cast<std::size_t>(n_runs / 2 - 1)] +
                               ms[static_cast<std::size_t>(n_runs / 2)]);

  TimingReport report;
  report.resolution = n;
  report.n_warmup = n_warmup;
  report.n_runs = n_runs;
  report.median_ms = median;
  report.us_per_configuration = median * 1000.0 / (static_cast<double>(n) * n);
  report.cpu_model = read_cpu_model();
  report.hardware_threads = static_cast<int>(std::thread::hardware_concurrency());
  report.compiler = std::string("gcc ") + __VERSION__;
  return report;
}

}  // namespace cspace
