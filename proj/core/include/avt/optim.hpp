#pragma once

#include <vector>

#include "avt/nn.hpp"

namespace avt {

// Linear warmup from 0 followed by cosine decay to 0 at `total_epochs`.
struct LrSchedule {
  int total_epochs = 50;
  int warmup_epochs = 20;
  double base_lr = 1e-4;
};

// Learning rate at a (possibly fractional) epoch position in [0, total].
double lr_at(double epoch, const LrSchedule& schedule = {});
double lr_at_epoch(int epoch, const LrSchedule& schedule = {});

struct OptimizerOptions {
  double base_lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 1e-6;
};

// SGD with classical momentum. Weight decay is folded into the gradient:
//   v <- momentum * v + (g + wd * theta);  theta <- theta - lr * v
template <typename T>
class SgdMomentum {
 public:
  SgdMomentum(ParameterList<T> params, OptimizerOptions options);

  // Applies one update and releases every parameter gradient. Throws if a
  // registered parameter received no gradient.
  void step(double lr);

  const OptimizerOptions& options() const { return options_; }
  const ParameterList<T>& parameters() const { return params_; }
  // One buffer per parameter, same shape, same order as parameters().
  std::vector<Tensor<T>>& momentum_buffers() { return velocity_; }
  const std::vector<Tensor<T>>& momentum_buffers() const { return velocity_; }

 private:
  ParameterList<T> params_;
  OptimizerOptions options_;
  std::vector<Tensor<T>> velocity_;
};

extern template class SgdMomentum<float>;
extern template class SgdMomentum<double>;

}  // namespace avt
