#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace avt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One vertex of the dynamic autograd graph. Parents are kept alive by the
// child, so a graph lives exactly as long as its output tensors.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T{0});
    return grad.data();
  }
};

}  // namespace detail

// Graph recording is per thread; each training thread owns its tape.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Dense row-major tensor with reverse-mode gradient support. Copies share
// storage (handle semantics); use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor();
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T item() const;
  T& operator[](std::size_t i) { return node_->data[i]; }
  const T& operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return {node_->grad_buffer(), node_->data.size()}; }
  // Releases the gradient buffer; has_grad() is false until the next backward.
  void zero_grad() { node_->grad.clear(); }

  // Backpropagates from a scalar (numel() == 1) tensor with seed 1.
  void backward() const;
  // Backpropagates an explicit output gradient of the same size as data().
  void backward(std::span<const T> seed) const;

  Tensor detach() const;
  Tensor clone() const;
  bool shares_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node<T>> node);

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> values(t.data().begin(), t.data().end());
  return Tensor<To>(t.shape(), std::move(values));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace avt
