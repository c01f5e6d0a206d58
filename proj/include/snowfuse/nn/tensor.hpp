#ifndef SNOWFUSE_NN_TENSOR_HPP
#define SNOWFUSE_NN_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace snowfuse::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily, only for nodes that need gradients
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/**
 * Handle to a node of the autodiff graph. Copies share the node. Values
 * are float64, row-major. Operations never modify their inputs; backward
 * passes only accumulate into grad buffers.
 */
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t ndim() const { return node_->shape.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Direct write access, for parameters and optimizer updates.
  std::span<double> mutable_values() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient buffer; all zeros if nothing has been accumulated.
  std::span<const double> grad() const { return node_->grad_buffer(); }
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  /**
   * Reverse-mode sweep from this scalar. The seed defaults to 1; passing
   * 1/B accumulates the gradient of a batch mean.
   */
  void backward(double seed = 1.0) const;

  /// Detached deep copy of the values.
  Tensor clone(bool requires_grad = false) const { return from(shape(), node_->value, requires_grad); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// True while graph recording is enabled on this thread (default).
bool grad_enabled();

/// Disables graph recording for the lifetime of the guard.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

/**
 * Creates the output node of an op. When any parent requires a gradient
 * and recording is enabled, `backward` is attached and parents retained.
 */
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

}  // namespace detail

}  // namespace snowfuse::nn

#endif  // SNOWFUSE_NN_TENSOR_HPP
