#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cspace/dataset.hpp"
#include "cspace/image.hpp"
#include "cspace/net/adadelta.hpp"
#include "cspace/net/checkpoint.hpp"
#include "cspace/net/model.hpp"
#include "cspace/rng.hpp"

namespace cspace::net {

enum class LossKind { L2, L1 };

inline const char* loss_name(LossKind k) { return k == LossKind::L2 ? "L2" : "L1"; }

// Epoch parity drives the alternation; epoch 0 minimizes L2 first.
inline LossKind active_loss(int epoch) { return epoch % 2 == 0 ? LossKind::L2 : LossKind::L1; }

// Unnormalized sum over batch images and pixels.
template <typename S>
double loss_value(const Tensor<S>& pred, const Tensor<S>& target, LossKind kind) {
  if (!pred.same_shape(target)) throw std::invalid_argument("loss: prediction/target shape mismatch");
  double total = 0.0;
  if (kind == LossKind::L2) {
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
      const double d = static_cast<double>(pred.data[k]) - target.data[k];
      total += d * d;
    }
  } else {
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
      total += std::abs(static_cast<double>(pred.data[k]) - target.data[k]);
    }
  }
  return total;
}

template <typename S>
Tensor<S> loss_grad(const Tensor<S>& pred, const Tensor<S>& target, LossKind kind) {
  if (!pred.same_shape(target)) throw std::invalid_argument("loss: prediction/target shape mismatch");
  Tensor<S> g = zeros_like(pred);
  if (kind == LossKind::L2) {
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
      g.data[k] = S(2) * (pred.data[k] - target.data[k]);
    }
  } else {
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
      const double d = static_cast<double>(pred.data[k]) - target.data[k];
      g.data[k] = d > 0.0 ? S(1) : (d < 0.0 ? S(-1) : S(0));
    }
  }
  return g;
}

struct TrainHyper {
  double lr = 0.01;
  double lr_decay = 0.75;
  int lr_decay_every = 25;
  int batch_size = 5;
  int max_epochs = 60;
  int plateau_patience = 4;
  double plateau_min_rel_improve = 1e-4;
  double adadelta_rho = 0.9;
  double adadelta_eps = 1e-6;
  std::uint64_t seed = 0;
  int threads = 0;
};

inline nlohmann::json to_json(const TrainHyper& h) {
  return {{"lr", h.lr},
          {"lr_decay", h.lr_decay},
          {"lr_decay_every", h.lr_decay_every},
          {"batch_size", h.batch_size},
          {"max_epochs", h.max_epochs},
          {"plateau_patience", h.plateau_patience},
          {"plateau_min_rel_improve", h.plateau_min_rel_improve},
          {"adadelta_rho", h.adadelta_rho},
          {"adadelta_eps", h.adadelta_eps},
          {"seed", h.seed},
          {"threads", h.threads}};
}

inline TrainHyper train_hyper_from_json(const nlohmann::json& j) {
  TrainHyper h;
  h.lr = j.at("lr").get<double>();
  h.lr_decay = j.at("lr_decay").get<double>();
  h.lr_decay_every = j.at("lr_decay_every").get<int>();
  h.batch_size = j.at("batch_size").get<int>();
  h.max_epochs = j.at("max_epochs").get<int>();
  h.plateau_patience = j.at("plateau_patience").get<int>();
  h.plateau_min_rel_improve = j.at("plateau_min_rel_improve").get<double>();
  h.adadelta_rho = j.at("adadelta_rho").get<double>();
  h.adadelta_eps = j.at("adadelta_eps").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.threads = j.at("threads").get<int>();
  return h;
}

inline double scheduled_lr(const TrainHyper& h, int epoch) {
  const int steps = h.lr_decay_every > 0 ? epoch / h.lr_decay_every : 0;
  return h.lr * std::pow(h.lr_decay, steps);
}

// Workspace/C-space image pairs kept as 8-bit planes; batches are expanded
// to the scalar type on demand.
class PairCache {
 public:
  PairCache(const DatasetManifest& manifest, const std::vector<const SampleRecord*>& samples)
      : resolution_(manifest.resolution) {
    inputs_.reserve(samples.size());
    targets_.reserve(samples.size());
    for (const auto* rec : samples) {
      inputs_.push_back(load_plane(manifest.resolve(rec->workspace_image)));
      targets_.push_back(load_plane(manifest.resolve(rec->cspace_image)));
    }
  }

  int resolution() const { return resolution_; }
  std::size_t size() const { return inputs_.size(); }

  template <typename S>
  void fill_batch(const std::vector<int>& ids, Tensor<S>& x, Tensor<S>& y) const {
    const int b = static_cast<int>(ids.size());
    x = Tensor<S>(b, 1, resolution_, resolution_);
    y = Tensor<S>(b, 1, resolution_, resolution_);
    const std::int64_t plane = x.plane();
    for (int i = 0; i < b; ++i) {
      const auto& in = inputs_[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
      const auto& tg = targets_[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
      S* xp = x.ptr(i);
      S* yp = y.ptr(i);
      for (std::int64_t k = 0; k < plane; ++k) {
        xp[k] = static_cast<S>(in[static_cast<std::size_t>(k)]) / S(255);
        yp[k] = static_cast<S>(tg[static_cast<std::size_t>(k)]) / S(255);
      }
    }
  }

 private:
  std::vector<std::uint8_t> load_plane(const std::string& path) {
    const GrayImage img = read_png_gray8(path);
    if (img.width != resolution_ || img.height != resolution_) {
      throw std::runtime_error("image resolution mismatch: " + path + " is " +
                               std::to_string(img.width) + "x" + std::to_string(img.height) +
                               ", expected " + std::to_string(resolution_));
    }
    std::vector<std::uint8_t> plane(img.px.size());
    for (std::size_t k = 0; k < img.px.size(); ++k) plane[k] = quantize8(img.px[k]);
    return plane;
  }

  int resolution_;
  std::vector<std::vector<std::uint8_t>> inputs_, targets_;
};

namespace detail {

template <typename S>
struct EpochEval {
  double l2 = 0.0;
  double l1 = 0.0;
};

template <typename S>
EpochEval<S> validation_losses(EncoderDecoder<S>& model, const PairCache& cache,
                               int batch_size, int threads) {
  EpochEval<S> out;
  const int n = static_cast<int>(cache.size());
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> ids;
    for (int i = start; i < std::min(n, start + batch_size); ++i) ids.push_back(i);
    Tensor<S> x, y;
    cache.fill_batch(ids, x, y);
    const Tensor<S> pred = model.forward_eval(x, threads);
    out.l2 += loss_value(pred, y, LossKind::L2);
    out.l1 += loss_value(pred, y, LossKind::L1);
  }
  out.l2 /= std::max(1, n);
  out.l1 /= std::max(1, n);
  return out;
}

template <typename S>
struct BestSnapshot {
  double val_l2 = std::numeric_limits<double>::infinity();
  int epoch = -1;
  std::vector<Tensor<S>> params, buffers, acc_grad, acc_update;
};

template <typename S>
void snapshot_state(Checkpoint<S>& ckpt, BestSnapshot<S>& best, double val_l2, int epoch) {
  best.val_l2 = val_l2;
  best.epoch = epoch;
  best.params.clear();
  best.buffers.clear();
  for (const auto& p : ckpt.model.parameters()) best.params.push_back(*p.tensor);
  for (const auto& p : ckpt.model.buffers()) best.buffers.push_back(*p.tensor);
  best.acc_grad = ckpt.optimizer.acc_grad();
  best.acc_update = ckpt.optimizer.acc_update();
}

template <typename S>
void restore_state(Checkpoint<S>& ckpt, const BestSnapshot<S>& best) {
  if (best.epoch < 0) return;
  auto params = ckpt.model.parameters();
  auto buffers = ckpt.model.buffers();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].tensor = best.params[i];
  for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].tensor = best.buffers[i];
  ckpt.optimizer.acc_grad() = best.acc_grad;
  ckpt.optimizer.acc_update() = best.acc_update;
}

// Shared epoch loop for train and fine_tune. Runs epochs
// [ckpt.epochs_completed, ckpt.epochs_completed + epochs) with the
// alternating loss; fixed_lr overrides the schedule when >= 0. Plateau
// detection tracks the L2 validation loss (the alternation makes raw
// consecutive epochs incomparable); with plateau disabled the loop always
// runs all epochs and keeps the final weights.
template <typename S>
void run_epochs(Checkpoint<S>& ckpt, const PairCache& train_cache, const PairCache& val_cache,
                const TrainHyper& hp, int epochs, double fixed_lr, bool plateau_stop,
                const std::function<void(const EpochRecord&)>& on_epoch) {
  auto params = ckpt.model.parameters();
  auto grads = ckpt.model.make_grad_store();
  const int n_train = static_cast<int>(train_cache.size());

  BestSnapshot<S> best;
  double plateau_ref = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int k = 0; k < epochs; ++k) {
    const int epoch = ckpt.epochs_completed;
    const LossKind kind = active_loss(epoch);
    const double lr = fixed_lr >= 0.0 ? fixed_lr : scheduled_lr(hp, epoch);

    std::vector<int> order(static_cast<std::size_t>(n_train));
    for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng shuffle_rng(derive_seed(hp.seed, 0xE0000000ull + static_cast<std::uint64_t>(epoch)));
    for (int i = n_train - 1; i > 0; --i) {
      const auto j = static_cast<int>(shuffle_rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    double train_loss_sum = 0.0;
    for (int start = 0; start < n_train; start += hp.batch_size) {
      std::vector<int> ids(order.begin() + start,
                           order.begin() + std::min(n_train, start + hp.batch_size));
      Tensor<S> x, y;
      train_cache.fill_batch(ids, x, y);
      Tape<S> tape;
      const Tensor<S> pred = ckpt.model.forward_train(x, tape, hp.threads);
      const double batch_loss = loss_value(pred, y, kind);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));
      }
      train_loss_sum += batch_loss;
      for (auto& g : grads) g.zero();
      ckpt.model.backward(loss_grad(pred, y, kind), tape, grads, hp.threads);
      ckpt.optimizer.step(params, grads, lr);
    }

    const auto val = detail::validation_losses(ckpt.model, val_cache, hp.batch_size, hp.threads);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_name = loss_name(kind);
    rec.train_loss = train_loss_sum / std::max(1, n_train);
    rec.val_l2 = val.l2;
    rec.val_l1 = val.l1;
    rec.lr = lr;
    ckpt.history.push_back(rec);
    ckpt.epochs_completed = epoch + 1;
    if (on_epoch) on_epoch(rec);

    if (plateau_stop) {
      if (val.l2 < best.val_l2) snapshot_state(ckpt, best, val.l2, epoch);
      const double rel = (plateau_ref - val.l2) / std::max(plateau_ref, 1e-12);
      if (std::isfinite(plateau_ref) && rel < hp.plateau_min_rel_improve) {
        ++stall;
      } else {
        stall = 0;
        plateau_ref = val.l2;
      }
      if (stall >= hp.plateau_patience) break;
    }
  }

  if (plateau_stop) {
    restore_state(ckpt, best);
    ckpt.best_epoch = best.epoch;
  } else {
    ckpt.best_epoch = ckpt.epochs_completed - 1;
  }
}

}  // namespace detail

// Trains a fresh model on the manifest's train split with the alternating
// L2/L1 loss, the stepped learning-rate schedule and plateau early stopping;
// returns the best-validation checkpoint.
template <typename S>
Checkpoint<S> train(const NetConfig& cfg, const DatasetManifest& manifest, const TrainHyper& hp,
                    const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (cfg.resolution != manifest.resolution) {
    throw std::invalid_argument("net resolution does not match the dataset resolution");
  }
  const auto train_samples = manifest.split_samples(Split::Train);
  const auto val_samples = manifest.split_samples(Split::Val);
  if (train_samples.empty()) throw std::invalid_argument("train split is empty");
  if (val_samples.empty()) throw std::invalid_argument("val split is empty");
  const PairCache train_cache(manifest, train_samples);
  const PairCache val_cache(manifest, val_samples);

  Checkpoint<S> ckpt;
  ckpt.config = cfg;
  ckpt.model = EncoderDecoder<S>(cfg, hp.seed);
  ckpt.optimizer = AdaDelta<S>(ckpt.model, hp.adadelta_rho, hp.adadelta_eps);
  detail::run_epochs(ckpt, train_cache, val_cache, hp, hp.max_epochs, -1.0, true, on_epoch);
  return ckpt;
}

// Continues training an existing checkpoint at a fixed learning rate for
// exactly `epochs` additional epochs (no early stop). The loss alternation
// phase carries over from the checkpoint's epoch counter.
template <typename S>
Checkpoint<S> fine_tune(const Checkpoint<S>& source, const DatasetManifest& manifest,
                        int epochs = 20, double lr = 0.001, TrainHyper hp = {},
                        const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (epochs < 0) throw std::invalid_argument("fine_tune epochs must be >= 0");
  if (source.config.resolution != manifest.resolution) {
    throw std::invalid_argument("checkpoint resolution does not match the dataset resolution");
  }
  Checkpoint<S> ckpt = source;
  ckpt.source_digest = ckpt.weight_digest();
  if (epochs == 0) return ckpt;

  const auto train_samples = manifest.split_samples(Split::Train);
  const auto val_samples = manifest.split_samples(Split::Val);
  if (train_samples.empty()) throw std::invalid_argument("train split is empty");
  if (val_samples.empty()) throw std::invalid_argument("val split is empty");
  const PairCache train_cache(manifest, train_samples);
  const PairCache val_cache(manifest, val_samples);
  detail::run_epochs(ckpt, train_cache, val_cache, hp, epochs, lr, false, on_epoch);
  return ckpt;
}

// Deterministic inference: running batch-norm statistics, output clamped to
// [0, 1].
template <typename S>
GrayImage predict(EncoderDecoder<S>& model, const GrayImage& workspace_image, int threads = 0) {
  const int n = model.config().resolution;
  if (workspace_image.width != n || workspace_image.height != n) {
    throw std::invalid_argument("predict: image resolution does not match the model");
  }
  Tensor<S> x(1, 1, n, n);
  for (std::size_t k = 0; k < workspace_image.px.size(); ++k) {
    x.data[k] = static_cast<S>(workspace_image.px[k]);
  }
  const Tensor<S> out = model.forward_eval(x, threads);
  GrayImage img(n, n);
  for (std::size_t k = 0; k < img.px.size(); ++k) {
    img.px[k] = std::clamp(static_cast<float>(out.data[k]), 0.0f, 1.0f);
  }
  return img;
}

}  // namespace cspace::net
