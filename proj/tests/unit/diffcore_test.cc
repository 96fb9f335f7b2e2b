#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <vector>

#include "vigan/common/binary_io.h"
#include "vigan/common/error.h"
#include "vigan/common/rng.h"
#include "vigan/diffcore/checkpoint.h"
#include "vigan/diffcore/kernels.h"
#include "vigan/diffcore/optim.h"
#include "vigan/diffcore/tape.h"

namespace vigan::diff {
namespace {

Tensor RandomTensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool grad = true) {
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = rng.Uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data), grad);
}

// Values bounded away from zero so kinked ops stay differentiable under the
// finite-difference probe.
Tensor AwayFromZero(Shape shape, Rng& rng) {
  Tensor t = RandomTensor(std::move(shape), rng);
  for (double& v : t.data()) v = (v < 0 ? -1.0 : 1.0) * (0.05 + std::abs(v));
  return t;
}

using Builder = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Loss = sum(out * weights) for fixed random weights; returns the analytic
// gradient of every input alongside a central-difference estimate.
void CheckGradients(const Builder& build, std::vector<Tensor> inputs, Rng& rng, const std::string& label) {
  Tensor weights;
  auto loss_of = [&](const std::vector<Tensor>& in) {
    Tape tape;
    Tensor out = build(tape, in);
    if (!weights.defined()) weights = RandomTensor(out.shape(), rng, -1.0, 1.0, false);
    return tape.Sum(tape.Mul(out, weights));
  };
  {
    Tape tape;
    Tensor out = build(tape, inputs);
    weights = RandomTensor(out.shape(), rng, -1.0, 1.0, false);
    Tensor loss = tape.Sum(tape.Mul(out, weights));
    tape.Backward(loss);
  }
  constexpr double kStep = 1e-5;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    ASSERT_TRUE(inputs[k].has_grad()) << label;
    const std::vector<double> analytic(inputs[k].grad().begin(), inputs[k].grad().end());
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> probe;
      for (const Tensor& t : inputs) probe.push_back(t.Clone());
      probe[k].data()[i] += kStep;
      const double up = loss_of(probe).item();
      probe[k].data()[i] -= 2 * kStep;
      const double down = loss_of(probe).item();
      const double numeric = (up - down) / (2 * kStep);
      const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      EXPECT_LE(std::abs(analytic[i] - numeric) / scale, 1e-6)
          << label << " input " << k << " element " << i << ": analytic " << analytic[i]
          << " numeric " << numeric;
    }
  }
}

TEST(TapeTest, ReluExample) {
  Tape tape;
  Tensor x({3}, {-1.0, 0.0, 2.0});
  Tensor y = tape.Relu(x);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{0, 0, 2}));
}

TEST(TapeTest, SigmoidOfZeroIsHalf) {
  Tape tape;
  EXPECT_DOUBLE_EQ(tape.Sigmoid(Tensor::Scalar(0.0)).item(), 0.5);
}

TEST(TapeTest, ConvOfOnes) {
  Tape tape;
  Tensor x = Tensor::Filled({1, 1, 4, 4}, 1.0);
  Tensor k = Tensor::Filled({1, 1, 2, 2}, 1.0);
  Tensor y = tape.Conv2d(x, k, Tensor(), 2, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(TapeTest, SumGradientIsOnes) {
  Tape tape;
  Tensor x({3}, {0.3, -2.0, 5.0}, true);
  tape.Backward(tape.Sum(x));
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(TapeTest, SquareGradient) {
  Tape tape;
  Tensor x({2}, {1.0, 2.0}, true);
  tape.Backward(tape.Sum(tape.Mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(TapeTest, NonScalarLossThrows) {
  Tape tape;
  Tensor x({2}, {1.0, 2.0}, true);
  Tensor y = tape.Scale(x, 2.0);
  EXPECT_THROW(tape.Backward(y), ShapeError);
}

TEST(TapeTest, ShapeMismatchNamesOpAndShapes) {
  Tape tape;
  Tensor a = Tensor::Zeros({2, 3});
  Tensor b = Tensor::Zeros({4, 5});
  try {
    tape.Matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4, 5]"), std::string::npos) << msg;
  }
  EXPECT_THROW(tape.Add(a, Tensor::Zeros({2})), ShapeError);
}

TEST(TapeTest, LogRejectsNonPositive) {
  Tape tape;
  EXPECT_THROW(tape.Log(Tensor({2}, {1.0, 0.0})), ValueError);
  EXPECT_THROW(tape.Log(Tensor({1}, {-3.0})), ValueError);
}

TEST(TapeTest, ReusedTensorAccumulatesBothPaths) {
  Rng rng(3);
  Tensor x = RandomTensor({4}, rng);
  Tensor single = x.Clone();
  single.set_requires_grad(true);
  {
    Tape tape;
    tape.Backward(tape.Sum(tape.Tanh(single)));
  }
  const std::vector<double> tanh_grad(single.grad().begin(), single.grad().end());
  {
    Tape tape;
    Tensor y = tape.Add(tape.Tanh(x), tape.Scale(x, 3.0));
    tape.Backward(tape.Sum(y));
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x.grad()[i], tanh_grad[i] + 3.0, 1e-15);
}

TEST(TapeTest, GradientsAccumulateAcrossBackwardCalls) {
  Tensor x({2}, {1.0, -1.0}, true);
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.Backward(tape.Sum(tape.Scale(x, 2.0)));
  }
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
}

TEST(TapeTest, BackwardVisitsEveryNodeOnce) {
  Tape tape;
  Tensor x({3}, {1.0, 2.0, 3.0}, true);
  Tensor y = tape.Exp(tape.Scale(x, 0.5));
  Tensor loss = tape.Mean(y);
  EXPECT_EQ(tape.size(), 3u);
  tape.Backward(loss);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(x.grad()[i], 0.5 * std::exp(0.5 * (i + 1.0)) / 3.0, 1e-15);
}

// Inputs for one randomized trial of `kind` via the generic entry point.
struct Trial {
  std::vector<Tensor> inputs;
  OpAttrs attrs;
};

Trial MakeTrial(OpKind kind, Rng& rng, int variant) {
  Trial t;
  const std::size_t rows = 2 + rng.Index(3);
  const std::size_t cols = 2 + rng.Index(3);
  switch (kind) {
    case OpKind::kMatmul:
      t.inputs = {RandomTensor({rows, cols}, rng), RandomTensor({cols, 3}, rng)};
      break;
    case OpKind::kConv2d: {
      const std::size_t stride = 1 + static_cast<std::size_t>(variant % 2);
      t.attrs.stride = stride;
      t.attrs.padding = static_cast<std::size_t>(variant % 3 == 0 ? 1 : 0);
      t.inputs = {RandomTensor({2, 2, 5, 6}, rng), RandomTensor({3, 2, 3, 3}, rng)};
      if (variant % 2 == 0) t.inputs.push_back(RandomTensor({3}, rng));
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      Tensor a = RandomTensor({rows, cols}, rng);
      Tensor b = variant % 3 == 0   ? RandomTensor({rows, cols}, rng)
                 : variant % 3 == 1 ? RandomTensor({cols}, rng)
                                    : RandomTensor({}, rng);
      t.inputs = {a, b};
      break;
    }
    case OpKind::kScale:
    case OpKind::kAddScalar:
      t.attrs.scalar = rng.Uniform(-2.0, 2.0);
      t.inputs = {RandomTensor({rows, cols}, rng)};
      break;
    case OpKind::kRelu:
      t.inputs = {AwayFromZero({rows, cols}, rng)};
      break;
    case OpKind::kLeakyRelu:
      t.attrs.scalar = 0.2;
      t.inputs = {AwayFromZero({rows, cols}, rng)};
      break;
    case OpKind::kLog:
      t.inputs = {RandomTensor({rows, cols}, rng, 0.2, 3.0)};
      break;
    case OpKind::kReshape:
      t.attrs.shape = {cols, rows};
      t.inputs = {RandomTensor({rows, cols}, rng)};
      break;
    case OpKind::kPick:
      for (std::size_t r = 0; r < rows; ++r) t.attrs.indices.push_back(rng.Index(cols));
      t.inputs = {RandomTensor({rows, cols}, rng)};
      break;
    case OpKind::kClamp: {
      t.attrs.lo = -0.5;
      t.attrs.hi = 0.5;
      Tensor x = RandomTensor({rows, cols}, rng, -1.0, 1.0);
      // Keep clear of the clamp boundaries.
      for (double& v : x.data()) {
        if (std::abs(std::abs(v) - 0.5) < 0.05) v *= 0.5;
      }
      t.inputs = {x};
      break;
    }
    default:
      t.inputs = {RandomTensor({rows, cols}, rng)};
      break;
  }
  return t;
}

TEST(TapeTest, EveryOpMatchesFiniteDifferences) {
  Rng rng(20240611);
  int trials = 0;
  for (OpKind kind : AllOpKinds()) {
    for (int variant = 0; variant < 6; ++variant) {
      Trial trial = MakeTrial(kind, rng, variant);
      const OpAttrs attrs = trial.attrs;
      Builder build = [kind, attrs](Tape& tape, const std::vector<Tensor>& in) {
        return tape.ForwardOp(kind, in, attrs);
      };
      CheckGradients(build, trial.inputs, rng, std::string(OpName(kind)) + "#" + std::to_string(variant));
      ++trials;
    }
  }
  EXPECT_GE(trials, 100);
}

TEST(TapeTest, TwoLayerNetworkMatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Tensor> params = {RandomTensor({4, 6}, rng), RandomTensor({6}, rng),
                                  RandomTensor({6, 2}, rng), RandomTensor({2}, rng)};
    Tensor x = RandomTensor({3, 4}, rng, -1.0, 1.0, false);
    Builder build = [x](Tape& tape, const std::vector<Tensor>& p) {
      Tensor h = tape.Tanh(tape.Add(tape.Matmul(x, p[0]), p[1]));
      return tape.Add(tape.Matmul(h, p[2]), p[3]);
    };
    CheckGradients(build, params, rng, "mlp");
  }
}

TEST(TapeTest, DeterministicOutputsAndGradients) {
  auto run = [] {
    Rng rng(11);
    Tensor x = RandomTensor({2, 3, 8, 8}, rng);
    Tensor k = RandomTensor({4, 3, 4, 4}, rng);
    Tape tape;
    Tensor y = tape.LeakyRelu(tape.Conv2d(x, k, Tensor(), 2, 1), 0.2);
    Tensor loss = tape.Mean(tape.Mul(y, y));
    tape.Backward(loss);
    std::vector<double> out(k.grad().begin(), k.grad().end());
    out.push_back(loss.item());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(KernelsTest, ConvolutionMatchesDirectSum) {
  Rng rng(5);
  const std::size_t n = 2, c = 3, h = 7, w = 6, o = 4, kh = 3, kw = 2, stride = 2, pad = 1;
  Tensor x = RandomTensor({n, c, h, w}, rng, -1, 1, false);
  Tensor k = RandomTensor({o, c, kh, kw}, rng, -1, 1, false);
  Tensor b = RandomTensor({o}, rng, -1, 1, false);
  Tape tape;
  Tensor y = tape.Conv2d(x, k, b, stride, pad);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (w + 2 * pad - kw) / stride + 1;
  ASSERT_EQ(y.shape(), (Shape{n, o, oh, ow}));
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t oc = 0; oc < o; ++oc) {
      for (std::size_t yi = 0; yi < oh; ++yi) {
        for (std::size_t xi = 0; xi < ow; ++xi) {
          double acc = b.data()[oc];
          for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t u = 0; u < kh; ++u) {
              for (std::size_t v = 0; v < kw; ++v) {
                const long iy = static_cast<long>(yi * stride + u) - static_cast<long>(pad);
                const long ix = static_cast<long>(xi * stride + v) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                acc += k.data()[((oc * c + ci) * kh + u) * kw + v] *
                       x.data()[((ni * c + ci) * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
              }
            }
          }
          EXPECT_NEAR(y.data()[((ni * o + oc) * oh + yi) * ow + xi], acc, 1e-12);
        }
      }
    }
  }
}

TEST(OptimTest, SgdExample) {
  Tensor p({1}, {1.0}, true);
  p.MutableGrad()[0] = 2.0;
  SgdStep({p}, 0.1);
  EXPECT_DOUBLE_EQ(p.data()[0], 0.8);
  EXPECT_DOUBLE_EQ(p.grad()[0], 0.0);
}

TEST(OptimTest, SgdZeroLearningRateIsIdentity) {
  Tensor p({2}, {1.5, -0.25}, true);
  p.MutableGrad()[0] = 3.0;
  p.MutableGrad()[1] = -7.0;
  SgdStep({p}, 0.0);
  EXPECT_EQ(p.data()[0], 1.5);
  EXPECT_EQ(p.data()[1], -0.25);
}

TEST(OptimTest, SgdWithoutGradThrows) {
  Tensor p({1}, {1.0}, true);
  EXPECT_THROW(SgdStep({p}, 0.1), ValueError);
}

TEST(OptimTest, AdamFirstStepHasMagnitudeLearningRate) {
  Tensor p({3}, {0.0, 1.0, -2.0}, true);
  const std::vector<double> g = {0.3, -4.0, 1e-3};
  for (std::size_t i = 0; i < 3; ++i) p.MutableGrad()[i] = g[i];
  Adam adam({p}, Adam::Options{.learning_rate = 0.01});
  adam.Step();
  const std::vector<double> start = {0.0, 1.0, -2.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const double delta = p.data()[i] - start[i];
    // |m_hat / (sqrt(v_hat) + eps)| = |g| / (|g| + eps)
    EXPECT_NEAR(std::abs(delta), 0.01 * std::abs(g[i]) / (std::abs(g[i]) + 1e-8), 1e-12);
    EXPECT_EQ(std::signbit(delta), !std::signbit(g[i]));
    EXPECT_EQ(p.grad()[i], 0.0);
  }
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  Rng rng(1);
  NamedTensors named = {{"policy.mean.0.weight", RandomTensor({3, 4}, rng)},
                        {"scalar", Tensor::Scalar(-0.0)},
                        {"v", RandomTensor({5}, rng, -1e300, 1e300)}};
  const auto bytes = EncodeCheckpoint(named);
  const NamedTensors back = DecodeCheckpoint(bytes);
  ASSERT_EQ(back.size(), named.size());
  for (std::size_t i = 0; i < named.size(); ++i) {
    EXPECT_EQ(back[i].first, named[i].first);
    EXPECT_EQ(back[i].second.shape(), named[i].second.shape());
    EXPECT_EQ(0, std::memcmp(back[i].second.data().data(), named[i].second.data().data(),
                             named[i].second.size() * sizeof(double)));
  }
  EXPECT_EQ(EncodeCheckpoint(back), bytes);
}

TEST(CheckpointTest, CorruptionKinds) {
  NamedTensors named = {{"w", Tensor({2}, {1.0, 2.0})}};
  auto bytes = EncodeCheckpoint(named);
  auto kind_of = [](const std::vector<std::uint8_t>& b) {
    try {
      DecodeCheckpoint(b);
    } catch (const FormatError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "expected FormatError";
    return FormatError::Kind::kIo;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), FormatError::Kind::kBadMagic);
  auto bad_version = bytes;
  bad_version[4] = 99;
  EXPECT_EQ(kind_of(bad_version), FormatError::Kind::kVersionMismatch);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(kind_of(truncated), FormatError::Kind::kTruncated);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(kind_of(trailing), FormatError::Kind::kMalformed);
}

TEST(CheckpointTest, FileRoundTripAndAssign) {
  const auto path = std::filesystem::temp_directory_path() / "vigan_ckpt_test.vgnp";
  Tensor w({2, 2}, {1, 2, 3, 4}, true);
  SaveCheckpoint({{"w", w}}, path.string());
  Tensor target = Tensor::Zeros({2, 2}, true);
  NamedTensors dst = {{"w", target}};
  AssignFrom(LoadCheckpoint(path.string()), dst);
  EXPECT_EQ(target.data()[3], 4.0);
  NamedTensors wrong = {{"w", Tensor::Zeros({4})}};
  EXPECT_THROW(AssignFrom(LoadCheckpoint(path.string()), wrong), Error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace vigan::diff
