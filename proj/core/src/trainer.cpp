#include "avt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "avt/errors.hpp"

namespace avt {

void TrainOptions::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs > epochs) throw ConfigError("warmup_epochs must be in [0, epochs]");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(optimizer.base_lr > 0.0)) throw ConfigError("lr must be positive");
  if (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (optimizer.weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
}

template <typename T>
Tensor<T> stack_inputs(std::span<const AnticipationSample> samples, std::span<const std::size_t> order) {
  if (order.empty()) throw DimensionError("empty batch");
  const auto& first = samples[order.front()];
  const std::size_t len = first.length(), dim = first.dim;
  std::vector<T> values;
  values.reserve(order.size() * len * dim);
  for (std::size_t i : order) {
    const auto& s = samples[i];
    if (s.length() != len || s.dim != dim || s.inputs.size() != len * dim)
      throw DimensionError("sample " + std::to_string(s.id) + " does not match the batch shape");
    values.insert(values.end(), s.inputs.begin(), s.inputs.end());
  }
  return Tensor<T>(Shape{order.size(), len, dim}, std::move(values));
}

std::vector<LabelTrack> stack_labels(std::span<const AnticipationSample> samples, std::span<const std::size_t> order) {
  std::vector<LabelTrack> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(samples[i].labels);
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

template <typename T>
Trainer<T>::Trainer(AnticipativeModel<T>& model, TrainOptions options)
    : model_(model),
      options_((options.validate(), options)),
      optimizer_(model.trainable_parameters(options.freeze_backbone), options.optimizer) {}

template <typename T>
void Trainer<T>::set_progress(int epochs_done, long steps_done) {
  epoch_ = epochs_done;
  step_ = steps_done;
}

template <typename T>
LossReport Trainer<T>::train_step(std::span<const AnticipationSample> samples, std::span<const std::size_t> batch,
                                  double lr) {
  const auto inputs = stack_inputs<T>(samples, batch);
  const auto labels = stack_labels(samples, batch);
  const auto outputs = model_.forward(inputs);
  const auto terms = total_loss(outputs, labels, options_.mode, options_.objective);
  const auto report = terms.report();
  if (!std::isfinite(report.total)) {
    for (auto& p : optimizer_.parameters()) {
      auto t = p.tensor;
      t.zero_grad();
    }
    throw NumericalError("non-finite loss at step " + std::to_string(step_ + 1) + " (l_next=" +
                         std::to_string(report.l_next) + ", l_cls=" + std::to_string(report.l_cls) +
                         ", l_feat=" + std::to_string(report.l_feat) + ")");
  }
  terms.total.backward();
  if (options_.freeze_backbone && model_.has_backbone()) {
    ParameterList<T> frozen;
    model_.backbone().collect("backbone", frozen);
    for (auto& p : frozen) p.tensor.zero_grad();
  }
  optimizer_.step(lr);
  ++step_;
  return report;
}

template <typename T>
EpochLog Trainer<T>::train_epoch(std::span<const AnticipationSample> samples) {
  if (samples.empty()) throw DimensionError("no training samples");
  if (epoch_ >= options_.epochs) throw ConfigError("training already finished all epochs");
  const auto schedule = options_.schedule();
  const auto order = epoch_order(samples.size(), options_.seed, epoch_);
  const std::size_t bs = options_.batch_size;
  const std::size_t steps = (order.size() + bs - 1) / bs;

  EpochLog log;
  double weight = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t begin = i * bs, end = std::min(order.size(), begin + bs);
    std::span<const std::size_t> batch(order.data() + begin, end - begin);
    const double lr = lr_at(static_cast<double>(epoch_) + static_cast<double>(i) / static_cast<double>(steps), schedule);
    const auto report = train_step(samples, batch, lr);
    const double w = static_cast<double>(batch.size());
    log.mean_loss.l_next += w * report.l_next;
    log.mean_loss.l_cls += w * report.l_cls;
    log.mean_loss.l_feat += w * report.l_feat;
    log.mean_loss.total += w * report.total;
    weight += w;
    if (on_step) on_step({epoch_, step_, report, lr});
  }
  log.mean_loss.l_next /= weight;
  log.mean_loss.l_cls /= weight;
  log.mean_loss.l_feat /= weight;
  log.mean_loss.total /= weight;
  log.mean_loss.mode = options_.mode;
  ++epoch_;
  log.epoch = epoch_;
  log.step = step_;
  log.lr_end = lr_at_epoch(epoch_, schedule);
  return log;
}

template <typename T>
std::vector<PredictionRecord> predict(const AnticipativeModel<T>& model, std::span<const AnticipationSample> samples,
                                      std::size_t batch_size) {
  NoGradGuard no_grad;
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<PredictionRecord> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const auto outputs = model.forward(stack_inputs<T>(samples, idx));
    const std::size_t len = outputs.length(), k = outputs.classes();
    const auto logits = outputs.logits.data();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const T* row = logits.data() + (b * len + len - 1) * k;
      const double mx = static_cast<double>(*std::max_element(row, row + k));
      PredictionRecord r;
      r.sample_id = samples[idx[b]].id;
      r.true_action = samples[idx[b]].labels.next_action;
      r.probs.resize(k);
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) total += r.probs[c] = std::exp(static_cast<double>(row[c]) - mx);
      for (double& p : r.probs) p /= total;
      out.push_back(std::move(r));
    }
  }
  return out;
}

template Tensor<float> stack_inputs<float>(std::span<const AnticipationSample>, std::span<const std::size_t>);
template Tensor<double> stack_inputs<double>(std::span<const AnticipationSample>, std::span<const std::size_t>);
template class Trainer<float>;
template class Trainer<double>;
template std::vector<PredictionRecord> predict<float>(const AnticipativeModel<float>&,
                                                      std::span<const AnticipationSample>, std::size_t);
template std::vector<PredictionRecord> predict<double>(const AnticipativeModel<double>&,
                                                       std::span<const AnticipationSample>, std::size_t);

}  // namespace avt
