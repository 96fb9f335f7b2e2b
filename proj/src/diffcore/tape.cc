#include "vigan/diffcore/tape.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "vigan/common/error.h"
#include "vigan/diffcore/kernels.h"

namespace vigan::diff {
namespace {

constexpr std::array kAllKinds = {
    OpKind::kMatmul,  OpKind::kConv2d,     OpKind::kAdd,     OpKind::kSub,
    OpKind::kMul,     OpKind::kScale,      OpKind::kAddScalar, OpKind::kRelu,
    OpKind::kLeakyRelu, OpKind::kTanh,     OpKind::kSigmoid, OpKind::kExp,
    OpKind::kLog,     OpKind::kSum,        OpKind::kMean,    OpKind::kReshape,
    OpKind::kSumRows, OpKind::kLogSoftmax, OpKind::kPick,    OpKind::kClamp,
};

std::span<double> GradOf(Tensor& t) {
  return t.requires_grad() ? t.MutableGrad() : std::span<double>{};
}

bool AnyRequiresGrad(std::span<const Tensor> inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.defined() && t.requires_grad(); });
}

[[noreturn]] void ShapeMismatch(OpKind kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(OpName(kind)) + ": incompatible shapes " + ShapeString(a) +
                   " and " + ShapeString(b));
}

void RequireRank(OpKind kind, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(OpName(kind)) + ": expected rank " + std::to_string(rank) +
                     " input, got " + ShapeString(t.shape()));
  }
}

enum class Broadcast { kSame, kScalar, kRow };

Broadcast ResolveBroadcast(OpKind kind, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1 && b.rank() <= 1) return Broadcast::kScalar;
  if (b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0)) return Broadcast::kRow;
  ShapeMismatch(kind, a.shape(), b.shape());
}

// Index into b for element i of a under the broadcast rule.
inline std::size_t BIndex(Broadcast mode, std::size_t i, std::size_t row) {
  switch (mode) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kScalar:
      return 0;
    case Broadcast::kRow:
      return i % row;
  }
  return i;
}

template <typename F>
Tensor MapUnary(const Tensor& x, F f) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Tensor(x.shape(), std::move(out));
}

}  // namespace

std::string_view OpName(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kRelu: return "relu";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kPick: return "pick";
    case OpKind::kClamp: return "clamp";
  }
  return "unknown";
}

std::span<const OpKind> AllOpKinds() { return kAllKinds; }

Tensor Tape::Record(OpKind kind, std::vector<Tensor> inputs, Tensor output,
                    std::function<void(Node&)> adjoint) {
  output.set_requires_grad(AnyRequiresGrad(inputs));
  nodes_.push_back(Node{kind, std::move(inputs), output, std::move(adjoint)});
  return output;
}

Tensor Tape::Matmul(const Tensor& a, const Tensor& b) {
  RequireRank(OpKind::kMatmul, a, 2);
  RequireRank(OpKind::kMatmul, b, 2);
  if (a.dim(1) != b.dim(0)) ShapeMismatch(OpKind::kMatmul, a.shape(), b.shape());
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out = Tensor::Zeros({n, m});
  kernels::GemmNN(a.data(), b.data(), out.data(), n, k, m);
  return Record(OpKind::kMatmul, {a, b}, out, [n, k, m](Node& node) {
    auto go = node.output.grad();
    Tensor& a = node.inputs[0];
    Tensor& b = node.inputs[1];
    if (auto ga = GradOf(a); !ga.empty()) kernels::GemmNT(go, b.data(), ga, n, m, k);
    if (auto gb = GradOf(b); !gb.empty()) kernels::GemmTN(a.data(), go, gb, k, n, m);
  });
}

Tensor Tape::Conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                    std::size_t stride, std::size_t padding) {
  RequireRank(OpKind::kConv2d, input, 4);
  RequireRank(OpKind::kConv2d, kernel, 4);
  if (input.dim(1) != kernel.dim(1)) ShapeMismatch(OpKind::kConv2d, input.shape(), kernel.shape());
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  kernels::ConvGeometry g;
  g.in_channels = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.out_channels = kernel.dim(0);
  g.kernel_h = kernel.dim(2);
  g.kernel_w = kernel.dim(3);
  g.stride = stride;
  g.padding = padding;
  if (g.height + 2 * padding < g.kernel_h || g.width + 2 * padding < g.kernel_w) {
    ShapeMismatch(OpKind::kConv2d, input.shape(), kernel.shape());
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels)) {
    ShapeMismatch(OpKind::kConv2d, kernel.shape(), bias.shape());
  }
  const std::size_t batch = input.dim(0);
  const std::size_t q = g.out_h() * g.out_w();
  const std::size_t p = g.patch();
  const std::size_t in_stride = g.in_channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * q;

  Tensor out = Tensor::Zeros({batch, g.out_channels, g.out_h(), g.out_w()});
  // Columns are kept for the adjoint of the kernel.
  auto cols = std::make_shared<std::vector<double>>(batch * p * q);
  for (std::size_t n = 0; n < batch; ++n) {
    std::span<double> col(cols->data() + n * p * q, p * q);
    kernels::Im2Col(input.data().subspan(n * in_stride, in_stride), g, col);
    auto o = out.data().subspan(n * out_stride, out_stride);
    kernels::GemmNN(kernel.data(), col, o, g.out_channels, p, q);
    if (bias.defined()) {
      for (std::size_t c = 0; c < g.out_channels; ++c) {
        const double bc = bias.data()[c];
        for (std::size_t j = 0; j < q; ++j) o[c * q + j] += bc;
      }
    }
  }
  std::vector<Tensor> inputs = {input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return Record(OpKind::kConv2d, std::move(inputs), out,
                [g, batch, p, q, in_stride, out_stride, cols](Node& node) {
                  auto go = node.output.grad();
                  auto gi = GradOf(node.inputs[0]);
                  auto gk = GradOf(node.inputs[1]);
                  std::span<double> gbias;
                  if (node.inputs.size() > 2) gbias = GradOf(node.inputs[2]);
                  std::vector<double> dcol(gi.empty() ? 0 : p * q);
                  for (std::size_t n = 0; n < batch; ++n) {
                    auto gon = go.subspan(n * out_stride, out_stride);
                    std::span<const double> col(cols->data() + n * p * q, p * q);
                    if (!gk.empty()) kernels::GemmNT(gon, col, gk, g.out_channels, q, p);
                    if (!gbias.empty()) {
                      for (std::size_t c = 0; c < g.out_channels; ++c) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < q; ++j) acc += gon[c * q + j];
                        gbias[c] += acc;
                      }
                    }
                    if (!gi.empty()) {
                      std::fill(dcol.begin(), dcol.end(), 0.0);
                      kernels::GemmTN(node.inputs[1].data(), gon, dcol, p, g.out_channels, q);
                      kernels::Col2Im(dcol, g, gi.subspan(n * in_stride, in_stride));
                    }
                  }
                });
}

Tensor Tape::Elementwise(OpKind kind, const Tensor& a, const Tensor& b) {
  const Broadcast mode = ResolveBroadcast(kind, a, b);
  const std::size_t row = b.size();
  std::vector<double> out(a.size());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double y = bv[BIndex(mode, i, row)];
    switch (kind) {
      case OpKind::kAdd: out[i] = av[i] + y; break;
      case OpKind::kSub: out[i] = av[i] - y; break;
      default: out[i] = av[i] * y; break;
    }
  }
  return Record(kind, {a, b}, Tensor(a.shape(), std::move(out)), [kind, mode, row](Node& node) {
    auto go = node.output.grad();
    Tensor& a = node.inputs[0];
    Tensor& b = node.inputs[1];
    auto ga = GradOf(a);
    auto gb = GradOf(b);
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < go.size(); ++i) {
      const std::size_t j = BIndex(mode, i, row);
      switch (kind) {
        case OpKind::kAdd:
          if (!ga.empty()) ga[i] += go[i];
          if (!gb.empty()) gb[j] += go[i];
          break;
        case OpKind::kSub:
          if (!ga.empty()) ga[i] += go[i];
          if (!gb.empty()) gb[j] -= go[i];
          break;
        default:
          if (!ga.empty()) ga[i] += go[i] * bv[j];
          if (!gb.empty()) gb[j] += go[i] * av[i];
          break;
      }
    }
  });
}

Tensor Tape::Add(const Tensor& a, const Tensor& b) { return Elementwise(OpKind::kAdd, a, b); }
Tensor Tape::Sub(const Tensor& a, const Tensor& b) { return Elementwise(OpKind::kSub, a, b); }
Tensor Tape::Mul(const Tensor& a, const Tensor& b) { return Elementwise(OpKind::kMul, a, b); }

Tensor Tape::Scale(const Tensor& x, double factor) {
  return Record(OpKind::kScale, {x}, MapUnary(x, [factor](double v) { return factor * v; }),
                [factor](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * go[i];
                });
}

Tensor Tape::AddScalar(const Tensor& x, double value) {
  return Record(OpKind::kAddScalar, {x}, MapUnary(x, [value](double v) { return v + value; }),
                [](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
                });
}

Tensor Tape::Relu(const Tensor& x) {
  return Record(OpKind::kRelu, {x}, MapUnary(x, [](double v) { return v > 0.0 ? v : 0.0; }),
                [](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  auto xv = node.inputs[0].data();
                  for (std::size_t i = 0; i < gx.size(); ++i) {
                    if (xv[i] > 0.0) gx[i] += go[i];
                  }
                });
}

Tensor Tape::LeakyRelu(const Tensor& x, double slope) {
  return Record(OpKind::kLeakyRelu, {x},
                MapUnary(x, [slope](double v) { return v > 0.0 ? v : slope * v; }),
                [slope](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  auto xv = node.inputs[0].data();
                  for (std::size_t i = 0; i < gx.size(); ++i) {
                    gx[i] += xv[i] > 0.0 ? go[i] : slope * go[i];
                  }
                });
}

Tensor Tape::Tanh(const Tensor& x) {
  return Record(OpKind::kTanh, {x}, MapUnary(x, [](double v) { return std::tanh(v); }),
                [](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  auto y = node.output.data();
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * (1.0 - y[i] * y[i]);
                });
}

Tensor Tape::Sigmoid(const Tensor& x) {
  auto sigmoid = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return Record(OpKind::kSigmoid, {x}, MapUnary(x, sigmoid), [](Node& node) {
    auto go = node.output.grad();
    auto gx = GradOf(node.inputs[0]);
    auto y = node.output.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor Tape::Exp(const Tensor& x) {
  return Record(OpKind::kExp, {x}, MapUnary(x, [](double v) { return std::exp(v); }),
                [](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  auto y = node.output.data();
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * y[i];
                });
}

Tensor Tape::Log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) {
      throw ValueError("log: non-positive input " + std::to_string(v) +
                       " (clamp before taking logs)");
    }
  }
  return Record(OpKind::kLog, {x}, MapUnary(x, [](double v) { return std::log(v); }),
                [](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  auto xv = node.inputs[0].data();
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] / xv[i];
                });
}

Tensor Tape::Sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return Record(OpKind::kSum, {x}, Tensor::Scalar(acc), [](Node& node) {
    const double go = node.output.grad()[0];
    auto gx = GradOf(node.inputs[0]);
    for (double& g : gx) g += go;
  });
}

Tensor Tape::Mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty input");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const double n = static_cast<double>(x.size());
  return Record(OpKind::kMean, {x}, Tensor::Scalar(acc / n), [n](Node& node) {
    const double go = node.output.grad()[0] / n;
    auto gx = GradOf(node.inputs[0]);
    for (double& g : gx) g += go;
  });
}

Tensor Tape::Reshape(const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.size()) ShapeMismatch(OpKind::kReshape, x.shape(), shape);
  std::vector<double> data(x.data().begin(), x.data().end());
  return Record(OpKind::kReshape, {x}, Tensor(std::move(shape), std::move(data)),
                [](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
                });
}

Tensor Tape::SumRows(const Tensor& x) {
  RequireRank(OpKind::kSumRows, x, 2);
  const std::size_t n = x.dim(0), m = x.dim(1);
  std::vector<double> out(n, 0.0);
  auto xv = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i] += xv[i * m + j];
  }
  return Record(OpKind::kSumRows, {x}, Tensor({n}, std::move(out)), [n, m](Node& node) {
    auto go = node.output.grad();
    auto gx = GradOf(node.inputs[0]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += go[i];
    }
  });
}

Tensor Tape::LogSoftmax(const Tensor& x) {
  RequireRank(OpKind::kLogSoftmax, x, 2);
  const std::size_t n = x.dim(0), m = x.dim(1);
  std::vector<double> out(n * m);
  auto xv = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = row[j] - lse;
  }
  return Record(OpKind::kLogSoftmax, {x}, Tensor({n, m}, std::move(out)), [n, m](Node& node) {
    auto go = node.output.grad();
    auto gx = GradOf(node.inputs[0]);
    auto y = node.output.data();
    for (std::size_t i = 0; i < n; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < m; ++j) gsum += go[i * m + j];
      for (std::size_t j = 0; j < m; ++j) {
        gx[i * m + j] += go[i * m + j] - std::exp(y[i * m + j]) * gsum;
      }
    }
  });
}

Tensor Tape::Pick(const Tensor& x, std::span<const std::size_t> indices) {
  RequireRank(OpKind::kPick, x, 2);
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (indices.size() != n) {
    throw ShapeError("pick: " + std::to_string(indices.size()) + " indices for input " +
                     ShapeString(x.shape()));
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (idx[i] >= m) throw ShapeError("pick: index " + std::to_string(idx[i]) + " out of range");
    out[i] = x.data()[i * m + idx[i]];
  }
  return Record(OpKind::kPick, {x}, Tensor({n}, std::move(out)),
                [m, idx = std::move(idx)](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  for (std::size_t i = 0; i < idx.size(); ++i) gx[i * m + idx[i]] += go[i];
                });
}

Tensor Tape::Clamp(const Tensor& x, double lo, double hi) {
  return Record(OpKind::kClamp, {x},
                MapUnary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); }),
                [lo, hi](Node& node) {
                  auto go = node.output.grad();
                  auto gx = GradOf(node.inputs[0]);
                  auto xv = node.inputs[0].data();
                  for (std::size_t i = 0; i < gx.size(); ++i) {
                    if (xv[i] > lo && xv[i] < hi) gx[i] += go[i];
                  }
                });
}

Tensor Tape::ForwardOp(OpKind kind, std::span<const Tensor> inputs, const OpAttrs& attrs) {
  auto need = [&](std::size_t n) {
    if (inputs.size() < n) {
      throw ShapeError(std::string(OpName(kind)) + ": expected " + std::to_string(n) +
                       " inputs, got " + std::to_string(inputs.size()));
    }
  };
  need(1);
  switch (kind) {
    case OpKind::kMatmul: need(2); return Matmul(inputs[0], inputs[1]);
    case OpKind::kConv2d:
      need(2);
      return Conv2d(inputs[0], inputs[1], inputs.size() > 2 ? inputs[2] : Tensor(), attrs.stride,
                    attrs.padding);
    case OpKind::kAdd: need(2); return Add(inputs[0], inputs[1]);
    case OpKind::kSub: need(2); return Sub(inputs[0], inputs[1]);
    case OpKind::kMul: need(2); return Mul(inputs[0], inputs[1]);
    case OpKind::kScale: return Scale(inputs[0], attrs.scalar);
    case OpKind::kAddScalar: return AddScalar(inputs[0], attrs.scalar);
    case OpKind::kRelu: return Relu(inputs[0]);
    case OpKind::kLeakyRelu: return LeakyRelu(inputs[0], attrs.scalar);
    case OpKind::kTanh: return Tanh(inputs[0]);
    case OpKind::kSigmoid: return Sigmoid(inputs[0]);
    case OpKind::kExp: return Exp(inputs[0]);
    case OpKind::kLog: return Log(inputs[0]);
    case OpKind::kSum: return Sum(inputs[0]);
    case OpKind::kMean: return Mean(inputs[0]);
    case OpKind::kReshape: return Reshape(inputs[0], attrs.shape);
    case OpKind::kSumRows: return SumRows(inputs[0]);
    case OpKind::kLogSoftmax: return LogSoftmax(inputs[0]);
    case OpKind::kPick: return Pick(inputs[0], attrs.indices);
    case OpKind::kClamp: return Clamp(inputs[0], attrs.lo, attrs.hi);
  }
  throw ShapeError("unknown op kind");
}

void Tape::Backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + ShapeString(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  // Intermediate grads restart from zero so a second Backward on the same
  // tape only re-accumulates into leaves.
  for (Node& node : nodes_) {
    if (node.output.requires_grad()) {
      node.output.MutableGrad();
      node.output.ZeroGrad();
    }
  }
  Tensor root = loss;
  root.MutableGrad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output.requires_grad()) it->adjoint(*it);
  }
}

std::vector<OpKind> Tape::RecordedKinds() const {
  std::vector<OpKind> kinds;
  kinds.reserve(nodes_.size());
  for (const Node& node : nodes_) kinds.push_back(node.kind);
  return kinds;
}

}  // namespace vigan::diff
