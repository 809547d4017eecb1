#include "avt/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "avt/errors.hpp"

namespace avt {

double lr_at(double epoch, const LrSchedule& s) {
  if (s.total_epochs <= 0 || s.warmup_epochs < 0 || s.warmup_epochs > s.total_epochs) {
    throw ConfigError("invalid schedule: total=" + std::to_string(s.total_epochs) +
                      " warmup=" + std::to_string(s.warmup_epochs));
  }
  if (epoch < 0.0 || epoch > static_cast<double>(s.total_epochs)) {
    throw ConfigError("epoch " + std::to_string(epoch) + " outside schedule [0, " +
                      std::to_string(s.total_epochs) + "]");
  }
  const double warmup = s.warmup_epochs;
  if (epoch < warmup) return s.base_lr * epoch / warmup;
  const double span = static_cast<double>(s.total_epochs) - warmup;
  if (span == 0.0) return s.base_lr;
  return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * ((epoch - warmup) / span)));
}

double lr_at_epoch(int epoch, const LrSchedule& schedule) {
  return lr_at(static_cast<double>(epoch), schedule);
}

template <typename T>
SgdMomentum<T>::SgdMomentum(ParameterList<T> params, OptimizerOptions options)
    : params_(std::move(params)), options_(options) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.tensor.shape());
}

template <typename T>
void SgdMomentum<T>::step(double lr) {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) throw std::logic_error("parameter '" + p.name + "' has no gradient");
  }
  const T mu = static_cast<T>(options_.momentum);
  const T wd = static_cast<T>(options_.weight_decay);
  const T rate = static_cast<T>(lr);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor<T> theta = params_[i].tensor;
    auto g = theta.grad();
    auto v = velocity_[i].data();
    auto w = theta.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = mu * v[j] + (g[j] + wd * w[j]);
      w[j] -= rate * v[j];
    }
    theta.zero_grad();
  }
}

template class SgdMomentum<float>;
template class SgdMomentum<double>;

}  // namespace avt
