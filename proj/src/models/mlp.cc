#include "vigan/models/mlp.h"

#include <algorithm>
#include <cmath>

#include "vigan/common/error.h"
#include "vigan/diffcore/kernels.h"

namespace vigan::models {

using diff::Tensor;

Mlp::Mlp(std::vector<std::size_t> sizes, Rng& rng, double output_scale) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ShapeError("mlp needs at least input and output sizes");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    // Glorot-uniform initialisation.
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    const double scale = (l + 2 == sizes_.size()) ? output_scale : 1.0;
    std::vector<double> w(in * out);
    for (double& v : w) v = scale * rng.Uniform(-limit, limit);
    weights_.emplace_back(diff::Shape{in, out}, std::move(w), true);
    biases_.push_back(Tensor::Zeros({out}, true));
  }
}

Tensor Mlp::Forward(diff::Tape& tape, const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_dim()) {
    throw ShapeError("mlp: input shape " + diff::ShapeString(x.shape()) + " but network expects [n, " +
                     std::to_string(in_dim()) + "]");
  }
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = tape.Add(tape.Matmul(h, weights_[l]), biases_[l]);
    if (l + 1 < weights_.size()) h = tape.Relu(h);
  }
  return h;
}

std::vector<double> Mlp::Evaluate(std::span<const double> x, std::size_t rows) const {
  if (x.size() != rows * in_dim()) throw ShapeError("mlp: evaluate input size mismatch");
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    std::vector<double> z(rows * out, 0.0);
    diff::kernels::GemmNN(h, weights_[l].data(), z, rows, in, out);
    auto b = biases_[l].data();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < out; ++j) z[i * out + j] = z[i * out + j] + b[j];
    }
    if (l + 1 < weights_.size()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    h = std::move(z);
  }
  return h;
}

std::pair<std::vector<double>, std::vector<double>> Mlp::Jvp(std::span<const double> x,
                                                             std::size_t rows,
                                                             std::span<const double> direction) const {
  if (direction.size() != NumParameters()) throw ShapeError("mlp: jvp direction size mismatch");
  std::vector<double> h(x.begin(), x.end());
  std::vector<double> dh(h.size(), 0.0);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    auto dw = direction.subspan(offset, in * out);
    auto db = direction.subspan(offset + in * out, out);
    offset += in * out + out;
    std::vector<double> z(rows * out, 0.0);
    std::vector<double> dz(rows * out, 0.0);
    diff::kernels::GemmNN(h, weights_[l].data(), z, rows, in, out);
    diff::kernels::GemmNN(dh, weights_[l].data(), dz, rows, in, out);
    diff::kernels::GemmNN(h, dw, dz, rows, in, out);
    auto b = biases_[l].data();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < out; ++j) {
        z[i * out + j] += b[j];
        dz[i * out + j] += db[j];
      }
    }
    if (l + 1 < weights_.size()) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] <= 0.0) {
          z[i] = 0.0;
          dz[i] = 0.0;
        }
      }
    }
    h = std::move(z);
    dh = std::move(dz);
  }
  return {std::move(h), std::move(dh)};
}

std::vector<double> Mlp::Vjp(std::span<const double> x, std::size_t rows,
                             std::span<const double> out_grad) const {
  const std::size_t layers = weights_.size();
  if (out_grad.size() != rows * out_dim()) throw ShapeError("mlp: vjp output grad size mismatch");
  // Forward, keeping layer inputs.
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    std::vector<double> z(rows * out, 0.0);
    diff::kernels::GemmNN(acts.back(), weights_[l].data(), z, rows, in, out);
    auto b = biases_[l].data();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < out; ++j) z[i * out + j] += b[j];
    }
    if (l + 1 < layers) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    acts.push_back(std::move(z));
  }
  std::vector<double> flat(NumParameters(), 0.0);
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offsets[l] = off;
    off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  std::vector<double> g(out_grad.begin(), out_grad.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    if (l + 1 < layers) {
      // Mask by the ReLU of this layer's output.
      const auto& a = acts[l + 1];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(a[i] > 0.0)) g[i] = 0.0;
      }
    }
    std::span<double> gw(flat.data() + offsets[l], in * out);
    std::span<double> gb(flat.data() + offsets[l] + in * out, out);
    diff::kernels::GemmTN(acts[l], g, gw, in, rows, out);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < out; ++j) gb[j] += g[i * out + j];
    }
    if (l > 0) {
      std::vector<double> gin(rows * in, 0.0);
      diff::kernels::GemmNT(g, weights_[l].data(), gin, rows, out, in);
      g = std::move(gin);
    }
  }
  return flat;
}

std::vector<Tensor> Mlp::Parameters() const {
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(weights_[l]);
    out.push_back(biases_[l]);
  }
  return out;
}

std::size_t Mlp::NumParameters() const { return CountParameters(Parameters()); }

void Mlp::AppendNamed(const std::string& prefix, diff::NamedTensors& out) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.emplace_back(prefix + "." + std::to_string(l) + ".weight", weights_[l]);
    out.emplace_back(prefix + "." + std::to_string(l) + ".bias", biases_[l]);
  }
}

Mlp Mlp::Clone() const {
  Mlp copy;
  copy.sizes_ = sizes_;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Tensor w = weights_[l].Clone();
    Tensor b = biases_[l].Clone();
    w.set_requires_grad(true);
    b.set_requires_grad(true);
    copy.weights_.push_back(w);
    copy.biases_.push_back(b);
  }
  return copy;
}

std::vector<double> Flatten(const std::vector<Tensor>& params) {
  std::vector<double> flat;
  flat.reserve(CountParameters(params));
  for (const Tensor& p : params) flat.insert(flat.end(), p.data().begin(), p.data().end());
  return flat;
}

std::vector<double> FlattenGrad(const std::vector<Tensor>& params) {
  std::vector<double> flat;
  flat.reserve(CountParameters(params));
  for (const Tensor& p : params) {
    if (p.has_grad()) {
      flat.insert(flat.end(), p.grad().begin(), p.grad().end());
    } else {
      flat.insert(flat.end(), p.size(), 0.0);
    }
  }
  return flat;
}

void Unflatten(std::span<const double> flat, std::vector<Tensor>& params) {
  if (flat.size() != CountParameters(params)) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, expected " + std::to_string(CountParameters(params)));
  }
  std::size_t off = 0;
  for (Tensor& p : params) {
    std::copy(flat.begin() + static_cast<long>(off),
              flat.begin() + static_cast<long>(off + p.size()), p.data().begin());
    off += p.size();
  }
}

std::size_t CountParameters(const std::vector<Tensor>& params) {
  std::size_t n = 0;
  for (const Tensor& p : params) n += p.size();
  return n;
}

}  // namespace vigan::models
