#pragma once

// Minimal tape-based reverse-mode differentiation over dense float64 tensors.
//
// Broadcasting rule: binary elementwise ops accept either identical shapes or a
// right operand whose shape equals the left operand's shape with the leading
// (batch) dimension dropped. Nothing else broadcasts.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairauction::diff {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor({}, std::vector<double>{value}); }
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Row-major multi-index access for rank 2 and 3.
  double& at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }

  double item() const;
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

enum class OpKind {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Min,
  AbsDiff,
  Relu,
  Tanh,
  Sigmoid,
  Square,
  Scale,
  Softmax,
  Sum,
  SumAxis,
  Mean,
  MeanAxis,
  Narrow,
  Select,
  PairwiseDiff,
  Reshape,
};

std::string_view op_name(OpKind kind);

struct OpAttrs {
  std::size_t axis = 0;
  std::size_t begin = 0;
  std::size_t length = 0;
  double scalar = 0.0;
  std::vector<std::size_t> indices;
  Shape shape;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

struct Node {
  OpKind kind = OpKind::Leaf;
  std::vector<std::size_t> operands;
  OpAttrs attrs;
  Tensor value;
  bool requires_grad = false;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Records op_kind applied to operands and returns the handle of the result.
  Var apply(OpKind kind, std::span<const Var> operands, OpAttrs attrs = {});

  // Recomputes every non-leaf node from its operands, in tape order.
  void replay();

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  Node& mutable_node(std::size_t id) { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

Tensor forward(OpKind kind, std::span<const Tensor* const> operands, const OpAttrs& attrs);

class Gradients {
 public:
  explicit Gradients(std::size_t nodes) : grads_(nodes) {}

  bool has(Var v) const { return v.id < grads_.size() && grads_[v.id].has_value(); }
  // Zero tensor of the right shape when the node received no gradient.
  Tensor of(Var v) const;
  std::optional<Tensor>& slot(std::size_t id) { return grads_[id]; }

 private:
  std::vector<std::optional<Tensor>> grads_;
};

// d(output)/d(node) for every node that requires grad. output must be a scalar.
Gradients backward(const Tape& tape, Var output);

// Operations. Each records one node on the operands' tape.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);
Var abs_diff(Var a, Var b);
Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var square(Var x);
Var scale(Var x, double factor);
Var softmax(Var x, std::size_t axis);
Var sum(Var x);
Var sum(Var x, std::size_t axis);
Var mean(Var x);
Var mean(Var x, std::size_t axis);
Var narrow(Var x, std::size_t axis, std::size_t begin, std::size_t length);
Var select(Var x, std::size_t axis, std::vector<std::size_t> indices);
// out[..., j, k, ...] = x[..., j, ...] - x[..., k, ...] along axis.
Var pairwise_diff(Var x, std::size_t axis);
Var reshape(Var x, Shape shape);

using ScalarFunction = std::function<Var(Tape&, Var)>;

// Central finite differences against backward(); returns
// max_i |g_ad - g_fd| / max(1, |g_fd|).
double grad_check(const ScalarFunction& f, const Tensor& point, double step);

}  // namespace fairauction::diff
