#include "fairauction/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

namespace fairauction::diff {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  return out;
}

// True when b broadcasts over the leading dimension of a.
bool check_binary(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() == b.shape()) return false;
  if (a.rank() >= 1 && b.rank() + 1 == a.rank() &&
      std::equal(b.shape().begin(), b.shape().end(), a.shape().begin() + 1)) {
    return true;
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()));
}

template <typename F>
Tensor binary_forward(const Tensor& a, const Tensor& b, std::string_view op, F f) {
  check_binary(a, b, op);
  Tensor out(a.shape());
  const std::size_t period = b.size();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) po[i] = f(pa[i], pb[i % period]);
  return out;
}

template <typename F>
Tensor unary_forward(const Tensor& x, F f) {
  Tensor out(x.shape());
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t i = 0, n = x.size(); i < n; ++i) po[i] = f(px[i]);
  return out;
}

// tanh through a vectorised exp: (1 - e) / (1 + e) with e = exp(-2|x|), and an
// odd Taylor polynomial below |x| = 0.02 where 1 - e cancels.
Tensor tanh_forward(const Tensor& x) {
  Tensor out(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::ArrayXd> in(x.data(), n);
  const Eigen::ArrayXd a = in.abs();
  const Eigen::ArrayXd e = (-2.0 * a).exp();
  const Eigen::ArrayXd a2 = a * a;
  const Eigen::ArrayXd series =
      a * (1.0 + a2 * (-1.0 / 3.0 + a2 * (2.0 / 15.0 + a2 * (-17.0 / 315.0 + a2 * (62.0 / 2835.0)))));
  const Eigen::ArrayXd mag = (a < 0.02).select(series, (1.0 - e) / (1.0 + e));
  Eigen::Map<Eigen::ArrayXd>(out.data(), n) = (in < 0.0).select(-mag, mag);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Sums a full-shape gradient down to b's shape when b was broadcast.
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out(target);
  const std::size_t period = out.size();
  for (std::size_t i = 0; i < g.size(); ++i) out[i % period] += g[i];
  return out;
}

void accumulate(std::optional<Tensor>& slot, Tensor&& g) {
  if (!slot) {
    slot = std::move(g);
    return;
  }
  auto dst = slot->values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != element_count(shape_)) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape_));
  }
  return values_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Min: return "min";
    case OpKind::AbsDiff: return "abs_diff";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Square: return "square";
    case OpKind::Scale: return "scale";
    case OpKind::Softmax: return "softmax";
    case OpKind::Sum: return "sum";
    case OpKind::SumAxis: return "sum_axis";
    case OpKind::Mean: return "mean";
    case OpKind::MeanAxis: return "mean_axis";
    case OpKind::Narrow: return "narrow";
    case OpKind::Select: return "select";
    case OpKind::PairwiseDiff: return "pairwise_diff";
    case OpKind::Reshape: return "reshape";
  }
  return "?";
}

const Tensor& Var::value() const { return tape->node(id).value; }

Tensor forward(OpKind kind, std::span<const Tensor* const> operands, const OpAttrs& attrs) {
  const auto arity = [&](std::size_t n) {
    if (operands.size() != n) {
      throw std::invalid_argument(std::string(op_name(kind)) + " expects " + std::to_string(n) +
                                  " operands");
    }
  };
  switch (kind) {
    case OpKind::Leaf:
      throw std::invalid_argument("leaf nodes have no forward rule");

    case OpKind::MatMul: {
      arity(2);
      const Tensor& a = *operands[0];
      const Tensor& b = *operands[1];
      if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
      }
      Tensor out({a.dim(0), b.dim(1)});
      MutMap(out.data(), a.dim(0), b.dim(1)).noalias() =
          ConstMap(a.data(), a.dim(0), a.dim(1)) * ConstMap(b.data(), b.dim(0), b.dim(1));
      return out;
    }

    case OpKind::Add:
      arity(2);
      return binary_forward(*operands[0], *operands[1], "add", [](double x, double y) { return x + y; });
    case OpKind::Sub:
      arity(2);
      return binary_forward(*operands[0], *operands[1], "sub", [](double x, double y) { return x - y; });
    case OpKind::Mul:
      arity(2);
      return binary_forward(*operands[0], *operands[1], "mul", [](double x, double y) { return x * y; });
    case OpKind::Min:
      arity(2);
      return binary_forward(*operands[0], *operands[1], "min",
                            [](double x, double y) { return x <= y ? x : y; });
    case OpKind::AbsDiff:
      arity(2);
      return binary_forward(*operands[0], *operands[1], "abs_diff",
                            [](double x, double y) { return std::abs(x - y); });

    case OpKind::Relu:
      arity(1);
      return unary_forward(*operands[0], [](double x) { return x > 0.0 ? x : 0.0; });
    case OpKind::Tanh:
      arity(1);
      return tanh_forward(*operands[0]);
    case OpKind::Sigmoid:
      arity(1);
      return unary_forward(*operands[0], stable_sigmoid);
    case OpKind::Square:
      arity(1);
      return unary_forward(*operands[0], [](double x) { return x * x; });
    case OpKind::Scale: {
      arity(1);
      const double f = attrs.scalar;
      return unary_forward(*operands[0], [f](double x) { return f * x; });
    }

    case OpKind::Softmax: {
      arity(1);
      const Tensor& x = *operands[0];
      const AxisSplit s = split_at(x.shape(), attrs.axis);
      Tensor out(x.shape());
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.len * s.inner + in;
          double hi = -INFINITY;
          for (std::size_t k = 0; k < s.len; ++k) hi = std::max(hi, x[base + k * s.inner]);
          double total = 0.0;
          for (std::size_t k = 0; k < s.len; ++k) {
            const double e = std::exp(x[base + k * s.inner] - hi);
            out[base + k * s.inner] = e;
            total += e;
          }
          for (std::size_t k = 0; k < s.len; ++k) out[base + k * s.inner] /= total;
        }
      }
      return out;
    }

    case OpKind::Sum:
    case OpKind::Mean: {
      arity(1);
      const Tensor& x = *operands[0];
      double total = 0.0;
      for (double v : x.values()) total += v;
      if (kind == OpKind::Mean) total /= static_cast<double>(x.size());
      return Tensor::scalar(total);
    }

    case OpKind::SumAxis:
    case OpKind::MeanAxis: {
      arity(1);
      const Tensor& x = *operands[0];
      const AxisSplit s = split_at(x.shape(), attrs.axis);
      Tensor out(drop_axis(x.shape(), attrs.axis));
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t k = 0; k < s.len; ++k) {
          const double* src = x.data() + (o * s.len + k) * s.inner;
          double* dst = out.data() + o * s.inner;
          for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
        }
      }
      if (kind == OpKind::MeanAxis) {
        const double inv = 1.0 / static_cast<double>(s.len);
        for (double& v : out.values()) v *= inv;
      }
      return out;
    }

    case OpKind::Narrow: {
      arity(1);
      const Tensor& x = *operands[0];
      const AxisSplit s = split_at(x.shape(), attrs.axis);
      if (attrs.begin + attrs.length > s.len) {
        throw ShapeError("narrow: range [" + std::to_string(attrs.begin) + ", " +
                         std::to_string(attrs.begin + attrs.length) + ") exceeds shape " +
                         to_string(x.shape()));
      }
      Shape shape = x.shape();
      shape[attrs.axis] = attrs.length;
      Tensor out(shape);
      for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src = x.data() + (o * s.len + attrs.begin) * s.inner;
        std::copy(src, src + attrs.length * s.inner, out.data() + o * attrs.length * s.inner);
      }
      return out;
    }

    case OpKind::Select: {
      arity(1);
      const Tensor& x = *operands[0];
      const AxisSplit s = split_at(x.shape(), attrs.axis);
      Shape shape = x.shape();
      shape[attrs.axis] = attrs.indices.size();
      Tensor out(shape);
      const std::size_t n = attrs.indices.size();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t idx = attrs.indices[k];
          if (idx >= s.len) {
            throw ShapeError("select: index " + std::to_string(idx) + " out of range for shape " +
                             to_string(x.shape()));
          }
          const double* src = x.data() + (o * s.len + idx) * s.inner;
          std::copy(src, src + s.inner, out.data() + (o * n + k) * s.inner);
        }
      }
      return out;
    }

    case OpKind::PairwiseDiff: {
      arity(1);
      const Tensor& x = *operands[0];
      const AxisSplit s = split_at(x.shape(), attrs.axis);
      Shape shape(x.shape().begin(), x.shape().begin() + static_cast<std::ptrdiff_t>(attrs.axis));
      shape.push_back(s.len);
      shape.push_back(s.len);
      shape.insert(shape.end(), x.shape().begin() + static_cast<std::ptrdiff_t>(attrs.axis) + 1,
                   x.shape().end());
      Tensor out(shape);
      for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src = x.data() + o * s.len * s.inner;
        double* dst = out.data() + o * s.len * s.len * s.inner;
        for (std::size_t j = 0; j < s.len; ++j) {
          for (std::size_t k = 0; k < s.len; ++k) {
            for (std::size_t in = 0; in < s.inner; ++in) {
              dst[(j * s.len + k) * s.inner + in] = src[j * s.inner + in] - src[k * s.inner + in];
            }
          }
        }
      }
      return out;
    }

    case OpKind::Reshape:
      arity(1);
      return operands[0]->reshaped(attrs.shape);
  }
  throw std::invalid_argument("unknown op kind");
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.kind = OpKind::Leaf;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::apply(OpKind kind, std::span<const Var> operands, OpAttrs attrs) {
  std::vector<const Tensor*> inputs;
  Node node;
  node.kind = kind;
  for (const Var& v : operands) {
    if (v.tape != this) throw std::invalid_argument("operand belongs to a different tape");
    inputs.push_back(&nodes_.at(v.id).value);
    node.operands.push_back(v.id);
    node.requires_grad = node.requires_grad || nodes_[v.id].requires_grad;
  }
  node.value = forward(kind, inputs, attrs);
  node.attrs = std::move(attrs);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::replay() {
  for (Node& node : nodes_) {
    if (node.kind == OpKind::Leaf) continue;
    std::vector<const Tensor*> inputs;
    for (std::size_t id : node.operands) inputs.push_back(&nodes_[id].value);
    node.value = forward(node.kind, inputs, node.attrs);
  }
}

Tensor Gradients::of(Var v) const {
  if (has(v)) return *grads_[v.id];
  return Tensor(v.shape());
}

Gradients backward(const Tape& tape, Var output) {
  const Tensor& out_value = tape.node(output.id).value;
  if (out_value.size() != 1 || out_value.rank() > 1) {
    throw ShapeError("backward: output must be a scalar, got shape " + to_string(out_value.shape()));
  }
  Gradients grads(tape.size());
  if (!tape.node(output.id).requires_grad) return grads;
  grads.slot(output.id) = Tensor(out_value.shape(), 1.0);

  for (std::size_t id = output.id + 1; id-- > 0;) {
    const Node& node = tape.node(id);
    if (node.kind == OpKind::Leaf || !node.requires_grad || !grads.slot(id)) continue;
    const Tensor& g = *grads.slot(id);
    const Tensor& y = node.value;
    const auto& ops = node.operands;
    const auto operand = [&](std::size_t k) -> const Tensor& { return tape.node(ops[k]).value; };
    const auto wants = [&](std::size_t k) { return tape.node(ops[k]).requires_grad; };
    const auto push = [&](std::size_t k, Tensor&& t) { accumulate(grads.slot(ops[k]), std::move(t)); };

    switch (node.kind) {
      case OpKind::Leaf:
        break;

      case OpKind::MatMul: {
        const Tensor& a = operand(0);
        const Tensor& b = operand(1);
        const ConstMap gm(g.data(), g.dim(0), g.dim(1));
        if (wants(0)) {
          Tensor ga(a.shape());
          MutMap(ga.data(), a.dim(0), a.dim(1)).noalias() =
              gm * ConstMap(b.data(), b.dim(0), b.dim(1)).transpose();
          push(0, std::move(ga));
        }
        if (wants(1)) {
          Tensor gb(b.shape());
          MutMap(gb.data(), b.dim(0), b.dim(1)).noalias() =
              ConstMap(a.data(), a.dim(0), a.dim(1)).transpose() * gm;
          push(1, std::move(gb));
        }
        break;
      }

      case OpKind::Add:
      case OpKind::Sub: {
        if (wants(0)) push(0, Tensor(g));
        if (wants(1)) {
          Tensor gb = reduce_to(g, operand(1).shape());
          if (node.kind == OpKind::Sub) {
            for (double& v : gb.values()) v = -v;
          }
          push(1, std::move(gb));
        }
        break;
      }

      case OpKind::Mul:
      case OpKind::Min:
      case OpKind::AbsDiff: {
        const Tensor& a = operand(0);
        const Tensor& b = operand(1);
        const std::size_t period = b.size();
        Tensor ga(a.shape());
        Tensor gfull(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double x = a[i];
          const double z = b[i % period];
          switch (node.kind) {
            case OpKind::Mul:
              ga[i] = g[i] * z;
              gfull[i] = g[i] * x;
              break;
            case OpKind::Min:
              // Ties route the gradient to the left operand.
              if (x <= z) ga[i] = g[i]; else gfull[i] = g[i];
              break;
            default: {
              const double s = x > z ? 1.0 : (x < z ? -1.0 : 0.0);
              ga[i] = g[i] * s;
              gfull[i] = -g[i] * s;
            }
          }
        }
        if (wants(0)) push(0, std::move(ga));
        if (wants(1)) push(1, reduce_to(gfull, b.shape()));
        break;
      }

      case OpKind::Relu:
      case OpKind::Tanh:
      case OpKind::Sigmoid:
      case OpKind::Square:
      case OpKind::Scale: {
        const Tensor& x = operand(0);
        Tensor gx(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
          double d = 0.0;
          switch (node.kind) {
            case OpKind::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
            case OpKind::Tanh: d = 1.0 - y[i] * y[i]; break;
            case OpKind::Sigmoid: d = y[i] * (1.0 - y[i]); break;
            case OpKind::Square: d = 2.0 * x[i]; break;
            default: d = node.attrs.scalar;
          }
          gx[i] = g[i] * d;
        }
        push(0, std::move(gx));
        break;
      }

      case OpKind::Softmax: {
        const AxisSplit s = split_at(y.shape(), node.attrs.axis);
        Tensor gx(y.shape());
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.len * s.inner + in;
            double dot = 0.0;
            for (std::size_t k = 0; k < s.len; ++k) dot += g[base + k * s.inner] * y[base + k * s.inner];
            for (std::size_t k = 0; k < s.len; ++k) {
              const std::size_t i = base + k * s.inner;
              gx[i] = y[i] * (g[i] - dot);
            }
          }
        }
        push(0, std::move(gx));
        break;
      }

      case OpKind::Sum:
      case OpKind::Mean: {
        const Tensor& x = operand(0);
        double v = g.item();
        if (node.kind == OpKind::Mean) v /= static_cast<double>(x.size());
        push(0, Tensor(x.shape(), v));
        break;
      }

      case OpKind::SumAxis:
      case OpKind::MeanAxis: {
        const Tensor& x = operand(0);
        const AxisSplit s = split_at(x.shape(), node.attrs.axis);
        const double f = node.kind == OpKind::MeanAxis ? 1.0 / static_cast<double>(s.len) : 1.0;
        Tensor gx(x.shape());
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t k = 0; k < s.len; ++k) {
            for (std::size_t in = 0; in < s.inner; ++in) {
              gx[(o * s.len + k) * s.inner + in] = f * g[o * s.inner + in];
            }
          }
        }
        push(0, std::move(gx));
        break;
      }

      case OpKind::Narrow: {
        const Tensor& x = operand(0);
        const AxisSplit s = split_at(x.shape(), node.attrs.axis);
        const std::size_t len = node.attrs.length;
        Tensor gx(x.shape());
        for (std::size_t o = 0; o < s.outer; ++o) {
          const double* src = g.data() + o * len * s.inner;
          std::copy(src, src + len * s.inner, gx.data() + (o * s.len + node.attrs.begin) * s.inner);
        }
        push(0, std::move(gx));
        break;
      }

      case OpKind::Select: {
        const Tensor& x = operand(0);
        const AxisSplit s = split_at(x.shape(), node.attrs.axis);
        const auto& idx = node.attrs.indices;
        Tensor gx(x.shape());
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t k = 0; k < idx.size(); ++k) {
            const double* src = g.data() + (o * idx.size() + k) * s.inner;
            double* dst = gx.data() + (o * s.len + idx[k]) * s.inner;
            for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
          }
        }
        push(0, std::move(gx));
        break;
      }

      case OpKind::PairwiseDiff: {
        const Tensor& x = operand(0);
        const AxisSplit s = split_at(x.shape(), node.attrs.axis);
        Tensor gx(x.shape());
        for (std::size_t o = 0; o < s.outer; ++o) {
          const double* src = g.data() + o * s.len * s.len * s.inner;
          double* dst = gx.data() + o * s.len * s.inner;
          for (std::size_t j = 0; j < s.len; ++j) {
            for (std::size_t k = 0; k < s.len; ++k) {
              for (std::size_t in = 0; in < s.inner; ++in) {
                const double v = src[(j * s.len + k) * s.inner + in];
                dst[j * s.inner + in] += v;
                dst[k * s.inner + in] -= v;
              }
            }
          }
        }
        push(0, std::move(gx));
        break;
      }

      case OpKind::Reshape:
        push(0, g.reshaped(operand(0).shape()));
        break;
    }
  }
  return grads;
}

namespace {

Var unary(OpKind kind, Var x, OpAttrs attrs = {}) {
  const Var ops[] = {x};
  return x.tape->apply(kind, ops, std::move(attrs));
}

Var binary(OpKind kind, Var a, Var b) {
  const Var ops[] = {a, b};
  return a.tape->apply(kind, ops);
}

}  // namespace

Var matmul(Var a, Var b) { return binary(OpKind::MatMul, a, b); }
Var add(Var a, Var b) { return binary(OpKind::Add, a, b); }
Var sub(Var a, Var b) { return binary(OpKind::Sub, a, b); }
Var mul(Var a, Var b) { return binary(OpKind::Mul, a, b); }
Var minimum(Var a, Var b) { return binary(OpKind::Min, a, b); }
Var abs_diff(Var a, Var b) { return binary(OpKind::AbsDiff, a, b); }
Var relu(Var x) { return unary(OpKind::Relu, x); }
Var tanh(Var x) { return unary(OpKind::Tanh, x); }
Var sigmoid(Var x) { return unary(OpKind::Sigmoid, x); }
Var square(Var x) { return unary(OpKind::Square, x); }

Var scale(Var x, double factor) {
  OpAttrs a;
  a.scalar = factor;
  return unary(OpKind::Scale, x, std::move(a));
}

Var softmax(Var x, std::size_t axis) {
  OpAttrs a;
  a.axis = axis;
  return unary(OpKind::Softmax, x, std::move(a));
}

Var sum(Var x) { return unary(OpKind::Sum, x); }

Var sum(Var x, std::size_t axis) {
  OpAttrs a;
  a.axis = axis;
  return unary(OpKind::SumAxis, x, std::move(a));
}

Var mean(Var x) { return unary(OpKind::Mean, x); }

Var mean(Var x, std::size_t axis) {
  OpAttrs a;
  a.axis = axis;
  return unary(OpKind::MeanAxis, x, std::move(a));
}

Var narrow(Var x, std::size_t axis, std::size_t begin, std::size_t length) {
  OpAttrs a;
  a.axis = axis;
  a.begin = begin;
  a.length = length;
  return unary(OpKind::Narrow, x, std::move(a));
}

Var select(Var x, std::size_t axis, std::vector<std::size_t> indices) {
  OpAttrs a;
  a.axis = axis;
  a.indices = std::move(indices);
  return unary(OpKind::Select, x, std::move(a));
}

Var pairwise_diff(Var x, std::size_t axis) {
  OpAttrs a;
  a.axis = axis;
  return unary(OpKind::PairwiseDiff, x, std::move(a));
}

Var reshape(Var x, Shape shape) {
  OpAttrs a;
  a.shape = std::move(shape);
  return unary(OpKind::Reshape, x, std::move(a));
}

double grad_check(const ScalarFunction& f, const Tensor& point, double step) {
  Tape tape;
  const Var x = tape.leaf(point, true);
  const Var y = f(tape, x);
  const Tensor analytic = backward(tape, y).of(x);

  const auto eval = [&](const Tensor& p) {
    Tape t;
    return f(t, t.leaf(p, false)).value().item();
  };

  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = eval(probe);
    probe[i] = orig - step;
    const double down = eval(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace fairauction::diff
