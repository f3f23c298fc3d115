#pragma once

#include <json.hpp>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cspace/net/layers.hpp"
#include "cspace/net/tensor.hpp"
#include "cspace/rng.hpp"

namespace cspace::net {

// Mirrored encoder-decoder over 3x3 convolutions. Every encoder block is
// (conv+bn+relu)*k followed by an index-recording 2x2 max pool; every
// decoder block starts with the mirrored unpool. The very last conv maps to
// out_channels with a linear output (no bn/relu); it is counted in
// conv_layer_count like any other conv.
struct NetConfig {
  int resolution = 512;
  std::vector<int> convs_per_block{2, 2, 3, 3, 3, 3, 3};
  std::vector<int> channels{64, 128, 256, 512, 512, 512, 512};
  int in_channels = 1;
  int out_channels = 1;

  int num_blocks() const { return static_cast<int>(convs_per_block.size()); }

  int conv_layer_count() const {
    return 2 * std::accumulate(convs_per_block.begin(), convs_per_block.end(), 0);
  }

  void validate() const {
    if (convs_per_block.empty()) throw std::invalid_argument("net: convs_per_block is empty");
    if (channels.size() != convs_per_block.size()) {
      throw std::invalid_argument("net: channels and convs_per_block lengths differ");
    }
    for (int k : convs_per_block) {
      if (k < 1) throw std::invalid_argument("net: each block needs at least one conv");
    }
    for (int c : channels) {
      if (c < 1) throw std::invalid_argument("net: channel widths must be positive");
    }
    if (in_channels < 1 || out_channels < 1) {
      throw std::invalid_argument("net: channel counts must be positive");
    }
    if (resolution < 2) throw std::invalid_argument("net: resolution must be >= 2");
    int r = resolution;
    for (int i = 0; i < num_blocks(); ++i) {
      if (r % 2 != 0) {
        throw std::invalid_argument("net: resolution must be divisible by 2^num_blocks");
      }
      r /= 2;
    }
    if (r < 1) throw std::invalid_argument("net: too many blocks for this resolution");
  }
};

inline nlohmann::json to_json(const NetConfig& c) {
  return {{"resolution", c.resolution},
          {"convs_per_block", c.convs_per_block},
          {"channels", c.channels},
          {"in_channels", c.in_channels},
          {"out_channels", c.out_channels}};
}

inline NetConfig net_config_from_json(const nlohmann::json& j) {
  NetConfig c;
  c.resolution = j.at("resolution").get<int>();
  c.convs_per_block = j.at("convs_per_block").get<std::vector<int>>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.in_channels = j.at("in_channels").get<int>();
  c.out_channels = j.at("out_channels").get<int>();
  return c;
}

template <typename S>
struct ParamRef {
  std::string name;
  Tensor<S>* tensor;
};

// Saved intermediates for one training forward pass.
template <typename S>
struct Tape {
  struct ConvTape {
    Tensor<S> y;      // post-activation output (input of the next unit)
    Tensor<S> xhat;   // batchnorm normalized input
    std::vector<S> mean, var;
  };
  struct StageTape {
    Tensor<S> input;  // activation entering the stage's first conv
    std::vector<ConvTape> units;
    Tensor<std::int32_t> pool_idx;  // encoder stages only
  };
  std::vector<StageTape> enc, dec;
};

template <typename S>
class EncoderDecoder {
 public:
  EncoderDecoder() = default;

  EncoderDecoder(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(seed, 0x4E455457ull));
    const int nb = cfg_.num_blocks();
    enc_.resize(static_cast<std::size_t>(nb));
    dec_.resize(static_cast<std::size_t>(nb));
    for (int s = 0; s < nb; ++s) {
      int in_ch = s == 0 ? cfg_.in_channels : cfg_.channels[static_cast<std::size_t>(s - 1)];
      const int out_ch = cfg_.channels[static_cast<std::size_t>(s)];
      for (int u = 0; u < cfg_.convs_per_block[static_cast<std::size_t>(s)]; ++u) {
        enc_[static_cast<std::size_t>(s)].push_back(Unit{
            Conv2d<S>(u == 0 ? in_ch : out_ch, out_ch, false, rng), BatchNorm2d<S>(out_ch), true});
      }
    }
    for (int j = 0; j < nb; ++j) {
      const int i = nb - 1 - j;  // mirrored encoder stage
      const int width = cfg_.channels[static_cast<std::size_t>(i)];
      const int last_out = i == 0 ? cfg_.out_channels : cfg_.channels[static_cast<std::size_t>(i - 1)];
      const int k = cfg_.convs_per_block[static_cast<std::size_t>(i)];
      for (int u = 0; u < k; ++u) {
        const bool last_unit = u == k - 1;
        const int out_ch = last_unit ? last_out : width;
        const bool final_conv = last_unit && i == 0;  // linear network output
        dec_[static_cast<std::size_t>(j)].push_back(
            Unit{Conv2d<S>(width, out_ch, final_conv, rng),
                 final_conv ? BatchNorm2d<S>() : BatchNorm2d<S>(out_ch), !final_conv});
      }
    }
  }

  const NetConfig& config() const { return cfg_; }

  int conv_layer_count() const { return cfg_.conv_layer_count(); }

  std::int64_t parameter_count() const {
    std::int64_t total = 0;
    for (const auto& p : const_cast<EncoderDecoder*>(this)->parameters()) total += p.tensor->size();
    return total;
  }

  // Trainable parameters, in a fixed order shared with gradient stores and
  // optimizer state.
  std::vector<ParamRef<S>> parameters() {
    std::vector<ParamRef<S>> out;
    const auto add_stage = [&out](const std::string& prefix, std::vector<Unit>& stage) {
      for (std::size_t u = 0; u < stage.size(); ++u) {
        const std::string base = prefix + ".c" + std::to_string(u);
        out.push_back({base + ".w", &stage[u].conv.w});
        if (stage[u].conv.has_bias) out.push_back({base + ".b", &stage[u].conv.b});
        if (stage[u].has_bn) {
          out.push_back({base + ".bn.gamma", &stage[u].bn.gamma});
          out.push_back({base + ".bn.beta", &stage[u].bn.beta});
        }
      }
    };
    for (std::size_t s = 0; s < enc_.size(); ++s) add_stage("enc" + std::to_string(s), enc_[s]);
    for (std::size_t s = 0; s < dec_.size(); ++s) add_stage("dec" + std::to_string(s), dec_[s]);
    return out;
  }

  // Non-trainable state (batchnorm running statistics), checkpointed along
  // with the parameters.
  std::vector<ParamRef<S>> buffers() {
    std::vector<ParamRef<S>> out;
    const auto add_stage = [&out](const std::string& prefix, std::vector<Unit>& stage) {
      for (std::size_t u = 0; u < stage.size(); ++u) {
        if (!stage[u].has_bn) continue;
        const std::string base = prefix + ".c" + std::to_string(u);
        out.push_back({base + ".bn.running_mean", &stage[u].bn.running_mean});
        out.push_back({base + ".bn.running_var", &stage[u].bn.running_var});
      }
    };
    for (std::size_t s = 0; s < enc_.size(); ++s) add_stage("enc" + std::to_string(s), enc_[s]);
    for (std::size_t s = 0; s < dec_.size(); ++s) add_stage("dec" + std::to_string(s), dec_[s]);
    return out;
  }

  std::vector<Tensor<S>> make_grad_store() {
    std::vector<Tensor<S>> g;
    for (const auto& p : parameters()) {
      g.push_back(Tensor<S>(p.tensor->shape[0], p.tensor->shape[1], p.tensor->shape[2],
                            p.tensor->shape[3]));
    }
    return g;
  }

  // Training-mode forward: batch statistics, intermediates recorded on the
  // tape for backward().
  Tensor<S> forward_train(const Tensor<S>& x, Tape<S>& tape, int threads) {
    check_input(x);
    const int nb = cfg_.num_blocks();
    tape.enc.assign(static_cast<std::size_t>(nb), {});
    tape.dec.assign(static_cast<std::size_t>(nb), {});
    Tensor<S> cur = x;
    for (int s = 0; s < nb; ++s) {
      auto& st = tape.enc[static_cast<std::size_t>(s)];
      st.input = cur;
      st.units.resize(enc_[static_cast<std::size_t>(s)].size());
      for (std::size_t u = 0; u < enc_[static_cast<std::size_t>(s)].size(); ++u) {
        cur = run_unit_train(enc_[static_cast<std::size_t>(s)][u], cur, st.units[u], threads);
      }
      auto [pooled, idx] = maxpool2x2(cur, threads);
      st.pool_idx = std::move(idx);
      cur = std::move(pooled);
    }
    for (int j = 0; j < nb; ++j) {
      const int i = nb - 1 - j;
      auto& st = tape.dec[static_cast<std::size_t>(j)];
      cur = maxunpool2x2(cur, tape.enc[static_cast<std::size_t>(i)].pool_idx, threads);
      st.input = cur;
      st.units.resize(dec_[static_cast<std::size_t>(j)].size());
      for (std::size_t u = 0; u < dec_[static_cast<std::size_t>(j)].size(); ++u) {
        cur = run_unit_train(dec_[static_cast<std::size_t>(j)][u], cur, st.units[u], threads);
      }
    }
    return cur;
  }

  // Inference-mode forward: running statistics, nothing recorded.
  Tensor<S> forward_eval(const Tensor<S>& x, int threads) const {
    check_input(x);
    const int nb = cfg_.num_blocks();
    std::vector<Tensor<std::int32_t>> pool_idx(static_cast<std::size_t>(nb));
    Tensor<S> cur = x;
    for (int s = 0; s < nb; ++s) {
      for (const auto& unit : enc_[static_cast<std::size_t>(s)]) {
        cur = run_unit_eval(unit, cur, threads);
      }
      auto [pooled, idx] = maxpool2x2(cur, threads);
      pool_idx[static_cast<std::size_t>(s)] = std::move(idx);
      cur = std::move(pooled);
    }
    for (int j = 0; j < nb; ++j) {
      const int i = nb - 1 - j;
      cur = maxunpool2x2(cur, pool_idx[static_cast<std::size_t>(i)], threads);
      for (const auto& unit : dec_[static_cast<std::size_t>(j)]) {
        cur = run_unit_eval(unit, cur, threads);
      }
    }
    return cur;
  }

  // Backpropagates gy (gradient at the network output) through the tape;
  // parameter gradients are accumulated into grads in parameters() order.
  void backward(const Tensor<S>& gy, const Tape<S>& tape, std::vector<Tensor<S>>& grads,
                int threads) {
    const int nb = cfg_.num_blocks();
    std::size_t slot = grads.size();
    Tensor<S> g = gy;
    for (int j = nb - 1; j >= 0; --j) {
      const auto& st = tape.dec[static_cast<std::size_t>(j)];
      auto& stage = dec_[static_cast<std::size_t>(j)];
      slot -= stage_slots(stage);
      g = stage_backward(stage, st, g, grads, slot, threads);
      const int i = nb - 1 - j;
      g = maxunpool2x2_backward(g, tape.enc[static_cast<std::size_t>(i)].pool_idx, threads);
    }
    for (int s = nb - 1; s >= 0; --s) {
      const auto& st = tape.enc[static_cast<std::size_t>(s)];
      auto& stage = enc_[static_cast<std::size_t>(s)];
      const auto& last_y = st.units.back().y;
      g = maxpool2x2_backward(g, st.pool_idx, last_y.h(), last_y.w(), threads);
      slot -= stage_slots(stage);
      g = stage_backward(stage, st, g, grads, slot, threads);
    }
  }

 private:
  struct Unit {
    Conv2d<S> conv;
    BatchNorm2d<S> bn;
    bool has_bn = true;
  };

  void check_input(const Tensor<S>& x) const {
    if (x.c() != cfg_.in_channels || x.h() != cfg_.resolution || x.w() != cfg_.resolution) {
      throw std::invalid_argument("net input shape does not match the configured resolution");
    }
  }

  Tensor<S> run_unit_train(Unit& unit, const Tensor<S>& x, typename Tape<S>::ConvTape& t,
                           int threads) {
    Tensor<S> y = unit.conv.forward(x, threads);
    if (unit.has_bn) {
      y = unit.bn.forward_train(y, t.xhat, t.mean, t.var);
      relu_inplace(y);
    }
    t.y = y;
    return y;
  }

  Tensor<S> run_unit_eval(const Unit& unit, const Tensor<S>& x, int threads) const {
    Tensor<S> y = unit.conv.forward(x, threads);
    if (unit.has_bn) {
      y = unit.bn.forward_eval(y);
      relu_inplace(y);
    }
    return y;
  }

  static std::size_t unit_slots(const Unit& u) {
    return 1 + (u.conv.has_bias ? 1 : 0) + (u.has_bn ? 2 : 0);
  }

  static std::size_t stage_slots(const std::vector<Unit>& stage) {
    std::size_t n = 0;
    for (const auto& u : stage) n += unit_slots(u);
    return n;
  }

  // Backward through one stage's conv units, last to first. `slot` points at
  // the stage's first parameter slot in the grad store.
  Tensor<S> stage_backward(std::vector<Unit>& stage, const typename Tape<S>::StageTape& st,
                           const Tensor<S>& gout, std::vector<Tensor<S>>& grads,
                           std::size_t slot, int threads) {
    Tensor<S> g = gout;
    std::size_t unit_slot = slot + stage_slots(stage);
    for (std::size_t u = stage.size(); u-- > 0;) {
      auto& unit = stage[u];
      const auto& t = st.units[u];
      unit_slot -= unit_slots(unit);
      const Tensor<S>& x_in = u == 0 ? st.input : st.units[u - 1].y;
      const std::size_t bias_slot = unit_slot + 1;
      const std::size_t bn_slot = unit_slot + 1 + (unit.conv.has_bias ? 1 : 0);
      if (unit.has_bn) {
        relu_backward_inplace(t.y, g);
        Tensor<S> g_pre_bn;
        unit.bn.backward(t.xhat, t.var, g, g_pre_bn, grads[bn_slot], grads[bn_slot + 1]);
        g = std::move(g_pre_bn);
      }
      Tensor<S> gx;
      unit.conv.backward(x_in, g, gx, grads[unit_slot],
                         unit.conv.has_bias ? &grads[bias_slot] : nullptr, threads);
      g = std::move(gx);
    }
    return g;
  }

  NetConfig cfg_;
  std::vector<std::vector<Unit>> enc_, dec_;
};

}  // namespace cspace::net
