#include "avt/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "avt/errors.hpp"
#include "avt/metrics.hpp"
#include "avt/ops.hpp"
#include "avt/text_io.hpp"

namespace avt {

namespace {

template <typename T>
Tensor<T> projected_clip(const AnticipativeModel<T>& model, const Tensor<T>& clip, std::size_t n_steps) {
  if (n_steps == 0) throw ConfigError("rollout needs at least one step");
  const std::size_t in = model.config().input_dim();
  Tensor<T> x = clip;
  if (clip.rank() == 2) x = reshape(clip, Shape{1, clip.dim(0), clip.dim(1)});
  if (x.rank() != 3 || x.dim(0) != 1 || x.dim(2) != in)
    throw DimensionError("rollout clip must be [T, " + std::to_string(in) + "], got " + shape_str(clip.shape()));
  const std::size_t len = x.dim(1);
  const std::size_t max_len = model.config().head.max_len;
  if (n_steps + len > max_len) {
    throw ConfigError("rollout of " + std::to_string(n_steps) + " steps after " + std::to_string(len) +
                      " observed frames exceeds max length " + std::to_string(max_len));
  }
  return model.project(model.encode(x));
}

template <typename T>
RolloutStep make_step(const AnticipativeModel<T>& model, std::size_t step, std::span<const T> z_hat_row) {
  const auto logits = model.class_logits(z_hat_row);
  RolloutStep s;
  s.step = step;
  s.logits.assign(logits.begin(), logits.end());
  const double mx = *std::max_element(s.logits.begin(), s.logits.end());
  double total = 0.0;
  for (double l : s.logits) total += std::exp(l - mx);
  s.action = argmax(s.logits);
  s.probability = 1.0 / total;
  return s;
}

}  // namespace

std::vector<RolloutRun> RolloutTrace::runs() const {
  std::vector<RolloutRun> out;
  for (const auto& s : steps) {
    if (!out.empty() && out.back().action == s.action)
      ++out.back().count;
    else
      out.push_back({s.action, 1});
  }
  return out;
}

std::string RolloutTrace::to_csv() const {
  std::string out = "step,action,probability\n";
  for (const auto& s : steps) out += std::to_string(s.step) + ',' + std::to_string(s.action) + ',' + format_double(s.probability) + '\n';
  return out;
}

std::string RolloutTrace::to_text(const Vocabulary* vocab) const {
  std::string out;
  for (const auto& r : runs()) {
    const std::string name = vocab ? vocab->entry(r.action).name : std::to_string(r.action);
    out += name + " x" + std::to_string(r.count) + '\n';
  }
  return out;
}

template <typename T>
RolloutTrace rollout(const AnticipativeModel<T>& model, const Tensor<T>& clip, std::size_t n_steps) {
  NoGradGuard no_grad;
  const auto z = projected_clip(model, clip, n_steps);
  const std::size_t len = z.dim(1), d = z.dim(2);
  DecoderCache<T> cache;
  std::vector<T> out;
  for (std::size_t t = 0; t < len; ++t) out = model.head().decode_step(z.data().subspan(t * d, d), cache);
  RolloutTrace trace;
  trace.steps.push_back(make_step(model, 1, std::span<const T>(out)));
  for (std::size_t s = 2; s <= n_steps; ++s) {
    out = model.head().decode_step(std::span<const T>(out), cache);
    trace.steps.push_back(make_step(model, s, std::span<const T>(out)));
  }
  return trace;
}

template <typename T>
RolloutTrace rollout_recompute(const AnticipativeModel<T>& model, const Tensor<T>& clip, std::size_t n_steps) {
  NoGradGuard no_grad;
  auto seq = projected_clip(model, clip, n_steps);
  const std::size_t d = seq.dim(2);
  RolloutTrace trace;
  for (std::size_t s = 1; s <= n_steps; ++s) {
    const auto z_hat = model.head().decode(seq);
    const std::size_t len = seq.dim(1);
    std::span<const T> last = z_hat.data().subspan((len - 1) * d, d);
    trace.steps.push_back(make_step(model, s, last));
    if (s < n_steps) {
      Tensor<T> row(Shape{1, 1, d}, std::vector<T>(last.begin(), last.end()));
      seq = concat(seq, row, 1);
    }
  }
  return trace;
}

template RolloutTrace rollout<float>(const AnticipativeModel<float>&, const Tensor<float>&, std::size_t);
template RolloutTrace rollout<double>(const AnticipativeModel<double>&, const Tensor<double>&, std::size_t);
template RolloutTrace rollout_recompute<float>(const AnticipativeModel<float>&, const Tensor<float>&, std::size_t);
template RolloutTrace rollout_recompute<double>(const AnticipativeModel<double>&, const Tensor<double>&, std::size_t);

}  // namespace avt
