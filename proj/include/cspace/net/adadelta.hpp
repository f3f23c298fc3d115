#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cspace/net/model.hpp"
#include "cspace/net/tensor.hpp"

namespace cspace::net {

// AdaDelta with a learning-rate multiplier: the accumulator ratio adapts the
// per-parameter step, lr scales it. lr itself follows the external schedule
// (it is not part of the optimizer state).
template <typename S>
class AdaDelta {
 public:
  AdaDelta() = default;

  AdaDelta(EncoderDecoder<S>& model, double rho, double eps) : rho_(rho), eps_(eps) {
    acc_grad_ = model.make_grad_store();
    acc_update_ = model.make_grad_store();
  }

  double rho() const { return rho_; }
  double eps() const { return eps_; }
  std::vector<Tensor<S>>& acc_grad() { return acc_grad_; }
  std::vector<Tensor<S>>& acc_update() { return acc_update_; }

  void step(std::vector<ParamRef<S>>& params, const std::vector<Tensor<S>>& grads, double lr) {
    if (params.size() != grads.size() || params.size() != acc_grad_.size()) {
      throw std::invalid_argument("optimizer state does not match the parameter list");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      S* w = params[p].tensor->data.data();
      const S* g = grads[p].data.data();
      S* ag = acc_grad_[p].data.data();
      S* au = acc_update_[p].data.data();
      const std::size_t n = params[p].tensor->data.size();
      for (std::size_t k = 0; k < n; ++k) {
        const double gk = g[k];
        const double acc_g = rho_ * ag[k] + (1.0 - rho_) * gk * gk;
        ag[k] = static_cast<S>(acc_g);
        const double upd = gk * std::sqrt((au[k] + eps_) / (acc_g + eps_));
        au[k] = static_cast<S>(rho_ * au[k] + (1.0 - rho_) * upd * upd);
        w[k] = static_cast<S>(w[k] - lr * upd);
      }
    }
  }

 private:
  double rho_ = 0.9;
  double eps_ = 1e-6;
  std::vector<Tensor<S>> acc_grad_, acc_update_;
};

}  // namespace cspace::net
