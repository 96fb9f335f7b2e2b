#ifndef VIGAN_MODELS_MLP_H_
#define VIGAN_MODELS_MLP_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/diffcore/checkpoint.h"
#include "vigan/diffcore/tape.h"

namespace vigan::models {

// Fully connected network with ReLU hidden layers and a linear output.
// Besides the taped forward pass it offers exact Jacobian-vector and
// vector-Jacobian products with respect to the parameters, which the trust
// region solver needs without a second-order tape.
class Mlp {
 public:
  Mlp() = default;
  // `sizes` = {in, hidden..., out}. The last layer's initial weights are
  // multiplied by `output_scale`.
  Mlp(std::vector<std::size_t> sizes, Rng& rng, double output_scale = 1.0);

  std::size_t in_dim() const { return sizes_.front(); }
  std::size_t out_dim() const { return sizes_.back(); }

  diff::Tensor Forward(diff::Tape& tape, const diff::Tensor& x) const;

  // Tape-free forward over `rows` inputs; bit-identical to Forward.
  std::vector<double> Evaluate(std::span<const double> x, std::size_t rows) const;

  // Returns (outputs, d outputs / d params . direction).
  std::pair<std::vector<double>, std::vector<double>> Jvp(std::span<const double> x,
                                                          std::size_t rows,
                                                          std::span<const double> direction) const;

  // Returns (d outputs / d params)^T . out_grad as a flat vector.
  std::vector<double> Vjp(std::span<const double> x, std::size_t rows,
                          std::span<const double> out_grad) const;

  // [W0, b0, W1, b1, ...]; shares storage with the network.
  std::vector<diff::Tensor> Parameters() const;
  std::size_t NumParameters() const;
  void AppendNamed(const std::string& prefix, diff::NamedTensors& out) const;

  Mlp Clone() const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<diff::Tensor> weights_;  // [in, out]
  std::vector<diff::Tensor> biases_;   // [out]
};

// Flattened parameter vector helpers.
std::vector<double> Flatten(const std::vector<diff::Tensor>& params);
std::vector<double> FlattenGrad(const std::vector<diff::Tensor>& params);
void Unflatten(std::span<const double> flat, std::vector<diff::Tensor>& params);
std::size_t CountParameters(const std::vector<diff::Tensor>& params);

}  // namespace vigan::models

#endif  // VIGAN_MODELS_MLP_H_
