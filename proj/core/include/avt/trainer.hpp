#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "avt/dataset.hpp"
#include "avt/metrics.hpp"
#include "avt/model.hpp"
#include "avt/objectives.hpp"
#include "avt/optim.hpp"

namespace avt {

struct TrainOptions {
  TrainingMode mode = TrainingMode::Anticipative;
  ObjectiveOptions objective;
  OptimizerOptions optimizer;
  int epochs = 30;
  int warmup_epochs = 12;
  std::size_t batch_size = 16;
  bool freeze_backbone = false;
  std::uint64_t seed = 0;

  LrSchedule schedule() const { return {epochs, warmup_epochs, optimizer.base_lr}; }
  void validate() const;
};

struct StepLog {
  int epoch = 0;  // 0-based epoch the step belongs to
  long step = 0;  // global step count after this update
  LossReport loss;
  double lr = 0.0;
};

struct EpochLog {
  int epoch = 0;  // number of completed epochs
  long step = 0;
  LossReport mean_loss;
  double lr_end = 0.0;
};

// Stacks sample inputs into [B, T, dim] and collects their label tracks.
template <typename T>
Tensor<T> stack_inputs(std::span<const AnticipationSample> samples, std::span<const std::size_t> order);
std::vector<LabelTrack> stack_labels(std::span<const AnticipationSample> samples, std::span<const std::size_t> order);

// Sample visiting order for an epoch; a function of (seed, epoch) only.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

// Mini-batch SGD over a fixed sample set. Step i of epoch e (0-based) uses
// lr_at(e + i / steps_per_epoch).
template <typename T>
class Trainer {
 public:
  Trainer(AnticipativeModel<T>& model, TrainOptions options);

  const TrainOptions& options() const { return options_; }
  SgdMomentum<T>& optimizer() { return optimizer_; }
  const SgdMomentum<T>& optimizer() const { return optimizer_; }
  int epochs_done() const { return epoch_; }
  long steps_done() const { return step_; }
  // Resume bookkeeping after restoring weights and momentum.
  void set_progress(int epochs_done, long steps_done);

  // Forward, backward and update on one batch. Throws NumericalError on a
  // non-finite loss before any parameter changes.
  LossReport train_step(std::span<const AnticipationSample> samples, std::span<const std::size_t> batch, double lr);
  EpochLog train_epoch(std::span<const AnticipationSample> samples);

  std::function<void(const StepLog&)> on_step;

 private:
  AnticipativeModel<T>& model_;
  TrainOptions options_;
  SgdMomentum<T> optimizer_;
  int epoch_ = 0;
  long step_ = 0;
};

// Last-position class distributions for every sample, in sample order.
template <typename T>
std::vector<PredictionRecord> predict(const AnticipativeModel<T>& model, std::span<const AnticipationSample> samples,
                                      std::size_t batch_size = 64);

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace avt
