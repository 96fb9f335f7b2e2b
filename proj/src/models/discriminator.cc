#include "vigan/models/discriminator.h"

#include <algorithm>
#include <cmath>

#include "vigan/common/error.h"

namespace vigan::models {

using diff::Tape;
using diff::Tensor;

namespace {

constexpr std::size_t kEvalChunk = 256;
constexpr std::size_t kDiscHidden = 64;
constexpr std::size_t kConvWidths[] = {8, 16, 32};
constexpr std::size_t kConvKernel = 4;
constexpr std::size_t kConvStride = 2;
constexpr std::size_t kConvPadding = 1;

Tensor SliceRows(const Tensor& t, std::size_t begin, std::size_t end) {
  diff::Shape shape = t.shape();
  const std::size_t per_row = t.size() / shape[0];
  shape[0] = end - begin;
  auto src = t.data().subspan(begin * per_row, (end - begin) * per_row);
  return Tensor(std::move(shape), std::vector<double>(src.begin(), src.end()));
}

Tensor ClampedSigmoid(Tape& tape, const Tensor& logits) {
  Tensor flat = tape.Reshape(logits, {logits.dim(0)});
  return tape.Clamp(tape.Sigmoid(flat), kDiscriminatorEps, 1.0 - kDiscriminatorEps);
}

}  // namespace

std::vector<double> Discriminator::Evaluate(const Tensor& inputs) const {
  const std::size_t rows = inputs.dim(0);
  std::vector<double> out;
  out.reserve(rows);
  for (std::size_t begin = 0; begin < rows; begin += kEvalChunk) {
    const std::size_t end = std::min(rows, begin + kEvalChunk);
    Tape tape;
    Tensor p = Probability(tape, SliceRows(inputs, begin, end));
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return out;
}

MlpDiscriminator::MlpDiscriminator(std::size_t input_dim, Rng& rng)
    : net_({input_dim, kDiscHidden, kDiscHidden, 1}, rng) {}

Tensor MlpDiscriminator::Probability(Tape& tape, const Tensor& inputs) const {
  return ClampedSigmoid(tape, net_.Forward(tape, inputs));
}

diff::NamedTensors MlpDiscriminator::Named(const std::string& prefix) const {
  diff::NamedTensors out;
  net_.AppendNamed(prefix + ".mlp", out);
  return out;
}

ConvTrunk::ConvTrunk(std::size_t channels, std::size_t height, std::size_t width, Rng& rng)
    : channels_(channels), height_(height), width_(width) {
  if (height % 8 != 0 || width % 8 != 0 || height == 0 || width == 0) {
    throw ShapeError("conv trunk needs frame sides divisible by 8, got " + std::to_string(height) +
                     "x" + std::to_string(width));
  }
  std::size_t in = channels;
  for (std::size_t out : kConvWidths) {
    const double fan = static_cast<double>((in + out) * kConvKernel * kConvKernel);
    const double limit = std::sqrt(6.0 / fan);
    std::vector<double> w(out * in * kConvKernel * kConvKernel);
    for (double& v : w) v = rng.Uniform(-limit, limit);
    kernels_.emplace_back(diff::Shape{out, in, kConvKernel, kConvKernel}, std::move(w), true);
    biases_.push_back(Tensor::Zeros({out}, true));
    in = out;
  }
}

Tensor ConvTrunk::Forward(Tape& tape, const Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != channels_ || images.dim(2) != height_ ||
      images.dim(3) != width_) {
    throw ShapeError("conv trunk: input " + diff::ShapeString(images.shape()) + " but expects [n, " +
                     std::to_string(channels_) + ", " + std::to_string(height_) + ", " +
                     std::to_string(width_) + "]");
  }
  Tensor h = images;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    h = tape.LeakyRelu(tape.Conv2d(h, kernels_[l], biases_[l], kConvStride, kConvPadding),
                       kLeakySlope);
  }
  return tape.Reshape(h, {images.dim(0), out_features()});
}

std::size_t ConvTrunk::out_features() const {
  return kConvWidths[2] * (height_ / 8) * (width_ / 8);
}

std::vector<Tensor> ConvTrunk::Parameters() const {
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    out.push_back(kernels_[l]);
    out.push_back(biases_[l]);
  }
  return out;
}

void ConvTrunk::AppendNamed(const std::string& prefix, diff::NamedTensors& out) const {
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    out.emplace_back(prefix + ".conv." + std::to_string(l) + ".weight", kernels_[l]);
    out.emplace_back(prefix + ".conv." + std::to_string(l) + ".bias", biases_[l]);
  }
}

ConvDiscriminator::ConvDiscriminator(std::size_t channels, std::size_t height, std::size_t width,
                                     Rng& rng)
    : trunk_(channels, height, width, rng), head_({trunk_.out_features(), 1}, rng) {}

Tensor ConvDiscriminator::Probability(Tape& tape, const Tensor& inputs) const {
  return ClampedSigmoid(tape, head_.Forward(tape, trunk_.Forward(tape, inputs)));
}

std::vector<Tensor> ConvDiscriminator::Parameters() const {
  auto out = trunk_.Parameters();
  for (const Tensor& p : head_.Parameters()) out.push_back(p);
  return out;
}

diff::NamedTensors ConvDiscriminator::Named(const std::string& prefix) const {
  diff::NamedTensors out;
  trunk_.AppendNamed(prefix, out);
  head_.AppendNamed(prefix + ".head", out);
  return out;
}

TcnEncoder::TcnEncoder(std::size_t channels, std::size_t height, std::size_t width, Rng& rng)
    : trunk_(channels, height, width, rng), head_({trunk_.out_features(), kEmbeddingDim}, rng) {}

Tensor TcnEncoder::Embed(Tape& tape, const Tensor& images) const {
  return head_.Forward(tape, trunk_.Forward(tape, images));
}

std::vector<double> TcnEncoder::Evaluate(const Tensor& images) const {
  const std::size_t rows = images.dim(0);
  std::vector<double> out;
  out.reserve(rows * kEmbeddingDim);
  for (std::size_t begin = 0; begin < rows; begin += kEvalChunk) {
    const std::size_t end = std::min(rows, begin + kEvalChunk);
    Tape tape;
    Tensor e = Embed(tape, SliceRows(images, begin, end));
    out.insert(out.end(), e.data().begin(), e.data().end());
  }
  return out;
}

std::vector<Tensor> TcnEncoder::Parameters() const {
  auto out = trunk_.Parameters();
  for (const Tensor& p : head_.Parameters()) out.push_back(p);
  return out;
}

diff::NamedTensors TcnEncoder::Named(const std::string& prefix) const {
  diff::NamedTensors out;
  trunk_.AppendNamed(prefix, out);
  head_.AppendNamed(prefix + ".head", out);
  return out;
}

}  // namespace vigan::models
