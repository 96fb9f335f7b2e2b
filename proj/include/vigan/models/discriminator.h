#ifndef VIGAN_MODELS_DISCRIMINATOR_H_
#define VIGAN_MODELS_DISCRIMINATOR_H_

#include <cstddef>
#include <string>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/diffcore/checkpoint.h"
#include "vigan/diffcore/tape.h"
#include "vigan/models/mlp.h"

namespace vigan::models {

// Discriminator outputs are clamped to [eps, 1 - eps] before any log.
inline constexpr double kDiscriminatorEps = 1e-7;
inline constexpr double kLeakySlope = 0.2;
inline constexpr std::size_t kEmbeddingDim = 16;

// Binary classifier D(x) = p(expert | x).
class Discriminator {
 public:
  virtual ~Discriminator() = default;

  // Clamped probabilities, shape [rows]. `inputs` has a leading batch dim.
  virtual diff::Tensor Probability(diff::Tape& tape, const diff::Tensor& inputs) const = 0;
  virtual std::vector<diff::Tensor> Parameters() const = 0;
  virtual diff::NamedTensors Named(const std::string& prefix = "disc") const = 0;
  // Shape of one sample, without the batch dimension.
  virtual diff::Shape sample_shape() const = 0;

  // Inference in chunks; no gradients retained.
  std::vector<double> Evaluate(const diff::Tensor& inputs) const;
};

// D over flat feature vectors: (s, a) or (s, s').
class MlpDiscriminator : public Discriminator {
 public:
  MlpDiscriminator(std::size_t input_dim, Rng& rng);

  diff::Tensor Probability(diff::Tape& tape, const diff::Tensor& inputs) const override;
  std::vector<diff::Tensor> Parameters() const override { return net_.Parameters(); }
  diff::NamedTensors Named(const std::string& prefix = "disc") const override;
  diff::Shape sample_shape() const override { return {net_.in_dim()}; }

 private:
  Mlp net_;
};

// Three 4x4 stride-2 convolutions (8, 16, 32 channels) with leaky ReLU,
// flattened. Input is NCHW with H and W divisible by 8.
class ConvTrunk {
 public:
  ConvTrunk() = default;
  ConvTrunk(std::size_t channels, std::size_t height, std::size_t width, Rng& rng);

  diff::Tensor Forward(diff::Tape& tape, const diff::Tensor& images) const;
  std::size_t out_features() const;
  std::vector<diff::Tensor> Parameters() const;
  void AppendNamed(const std::string& prefix, diff::NamedTensors& out) const;
  diff::Shape input_shape() const { return {channels_, height_, width_}; }

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<diff::Tensor> kernels_;
  std::vector<diff::Tensor> biases_;
};

// D over k stacked frames (channels = k * frame channels).
class ConvDiscriminator : public Discriminator {
 public:
  ConvDiscriminator(std::size_t channels, std::size_t height, std::size_t width, Rng& rng);

  diff::Tensor Probability(diff::Tape& tape, const diff::Tensor& inputs) const override;
  std::vector<diff::Tensor> Parameters() const override;
  diff::NamedTensors Named(const std::string& prefix = "disc") const override;
  diff::Shape sample_shape() const override { return trunk_.input_shape(); }

 private:
  ConvTrunk trunk_;
  Mlp head_;
};

// Single-frame embedding network for the time-contrastive baseline.
class TcnEncoder {
 public:
  TcnEncoder(std::size_t channels, std::size_t height, std::size_t width, Rng& rng);

  // [rows, C, H, W] -> [rows, 16]
  diff::Tensor Embed(diff::Tape& tape, const diff::Tensor& images) const;
  std::vector<double> Evaluate(const diff::Tensor& images) const;
  std::vector<diff::Tensor> Parameters() const;
  diff::NamedTensors Named(const std::string& prefix = "tcn") const;
  diff::Shape sample_shape() const { return trunk_.input_shape(); }

 private:
  ConvTrunk trunk_;
  Mlp head_;
};

}  // namespace vigan::models

#endif  // VIGAN_MODELS_DISCRIMINATOR_H_
