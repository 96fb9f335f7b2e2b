#ifndef VIGAN_DIFFCORE_TAPE_H_
#define VIGAN_DIFFCORE_TAPE_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "vigan/diffcore/tensor.h"

namespace vigan::diff {

enum class OpKind {
  kMatmul,
  kConv2d,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kRelu,
  kLeakyRelu,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kSum,
  kMean,
  kReshape,
  kSumRows,
  kLogSoftmax,
  kPick,
  kClamp,
};

std::string_view OpName(OpKind kind);

// Every op kind, for exhaustive checks.
std::span<const OpKind> AllOpKinds();

// Non-tensor arguments of the generic ForwardOp entry point.
struct OpAttrs {
  std::size_t stride = 1;
  std::size_t padding = 0;
  double scalar = 0.0;  // scale factor, added constant, or leaky slope
  double lo = 0.0;
  double hi = 0.0;
  Shape shape;                       // reshape target
  std::vector<std::size_t> indices;  // pick
};

// Records operations in execution order and replays their adjoints in
// reverse. A tape is single-threaded and meant to live for one forward and
// backward pass.
//
// Broadcasting in add/sub/mul is limited to a scalar right operand or a
// rank-1 right operand matching the last dimension of the left one.
// conv2d uses NCHW input and [out, in, kh, kw] kernels.
class Tape {
 public:
  Tensor Matmul(const Tensor& a, const Tensor& b);
  // `bias` may be undefined.
  Tensor Conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                std::size_t stride, std::size_t padding);
  Tensor Add(const Tensor& a, const Tensor& b);
  Tensor Sub(const Tensor& a, const Tensor& b);
  Tensor Mul(const Tensor& a, const Tensor& b);
  Tensor Scale(const Tensor& x, double factor);
  Tensor AddScalar(const Tensor& x, double value);
  Tensor Relu(const Tensor& x);
  Tensor LeakyRelu(const Tensor& x, double slope);
  Tensor Tanh(const Tensor& x);
  Tensor Sigmoid(const Tensor& x);
  Tensor Exp(const Tensor& x);
  // Errors on any non-positive entry; callers clamp first.
  Tensor Log(const Tensor& x);
  Tensor Sum(const Tensor& x);
  Tensor Mean(const Tensor& x);
  Tensor Reshape(const Tensor& x, Shape shape);
  // [n, m] -> [n]
  Tensor SumRows(const Tensor& x);
  // Row-wise log-softmax of a rank-2 tensor.
  Tensor LogSoftmax(const Tensor& x);
  // out[i] = x[i, indices[i]]
  Tensor Pick(const Tensor& x, std::span<const std::size_t> indices);
  // Gradient flows only where lo < x < hi.
  Tensor Clamp(const Tensor& x, double lo, double hi);

  Tensor ForwardOp(OpKind kind, std::span<const Tensor> inputs, const OpAttrs& attrs = {});

  // Accumulates dLoss/dT into every requires_grad tensor reachable from
  // `loss`, which must hold exactly one element.
  void Backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  std::vector<OpKind> RecordedKinds() const;
  void Clear() { nodes_.clear(); }

 private:
  struct Node {
    OpKind kind;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void(Node&)> adjoint;
  };

  Tensor Record(OpKind kind, std::vector<Tensor> inputs, Tensor output,
                std::function<void(Node&)> adjoint);
  Tensor Elementwise(OpKind kind, const Tensor& a, const Tensor& b);

  std::vector<Node> nodes_;
};

}  // namespace vigan::diff

#endif  // VIGAN_DIFFCORE_TAPE_H_
