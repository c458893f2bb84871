#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hr/nd_array.hpp"

namespace hr::diff {

/// A linear operator with a known adjoint, usable as a differentiable graph
/// primitive: backward of y = A x is grad_x += A^H grad_y. Complex operators
/// act on the real 2-channel encoding, where the real-transpose of a
/// C-linear map equals the encoding of its Hermitian adjoint.
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Shape in_shape() const = 0;
  virtual Shape out_shape() const = 0;
  virtual Tensor apply(const Tensor& x) const = 0;
  virtual Tensor apply_adjoint(const Tensor& y) const = 0;
  virtual std::string name() const { return "linear_map"; }
};

/// Reverse-mode tape over dense real tensors. Nodes are appended in
/// evaluation order, so ids are already topologically sorted; backward walks
/// them once in reverse. Single-threaded by design for bitwise determinism.
class Graph {
 public:
  using Id = int32_t;

  Id input(Tensor value, bool requires_grad = false);
  Id constant(Tensor value) { return input(std::move(value), false); }

  // elementwise, equal shapes
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id div(Id a, Id b);

  Id scale(Id a, double s);
  Id add_scalar(Id a, double s);
  Id neg(Id a) { return scale(a, -1.0); }

  Id square(Id a);
  Id sqrt(Id a);
  Id abs(Id a);
  Id exp(Id a);
  Id silu(Id a);
  Id softplus(Id a);

  Id sum(Id a);
  Id mean(Id a);
  Id reshape(Id a, Shape s);

  /// Slice one index from axis 0: [N, ...] -> [...].
  Id select(Id a, int64_t index);

  /// Multiply tensor x by a learnable scalar (shape [1]).
  Id scale_by(Id scalar, Id x);

  /// x: [B, n], w: [m, n], b: [m] -> [B, m]
  Id affine(Id x, Id w, Id b);

  /// x: [C, H, W], w: [O, C, kh, kw], b: [O]. Odd kernel sizes only.
  /// same_padding=false gives a valid convolution (output shrinks).
  Id conv2d(Id x, Id w, Id b, bool same_padding = true);

  /// [2C, H, W] (re/im channel pairs) -> [C, H, W] magnitudes.
  Id complex_abs(Id x);

  Id apply_linear(std::shared_ptr<const LinearMap> op, Id x);

  /// params: [B, 3] = (A, B, T1*') with T1*' in units of t1_scale (ms).
  /// Returns [B, T] with S[b,t] = A - B * exp(-times[t] / (t1_scale * T1*')).
  Id ir_signal(Id params, std::vector<double> times_ms, double t1_scale_ms);

  const Tensor& value(Id id) const { return nodes_[id].value; }
  const Shape& shape(Id id) const { return nodes_[id].value.shape(); }
  bool requires_grad(Id id) const { return nodes_[id].requires_grad; }
  size_t node_count() const { return nodes_.size(); }

  /// Reverse pass from a scalar loss. Gradients of all requires_grad nodes
  /// become available through grad(); untouched ones read as zeros.
  void backward(Id loss);
  const Tensor& grad(Id id) const;

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<Id> inputs;
    // Receives (graph, upstream grad of this node); accumulates into inputs.
    std::function<void(Graph&, const Tensor&)> back;
  };

  Id push(Tensor value, std::vector<Id> inputs, std::function<void(Graph&, const Tensor&)> back);
  void accum(Id id, const Tensor& g);
  Tensor& grad_slot(Id id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  mutable Tensor zero_cache_;
};

/// Central finite-difference gradient of f at x (step h), used as the
/// independent oracle for gradient tests.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h = 1e-4);

}  // namespace hr::diff
