#ifndef VIGAN_DIFFCORE_KERNELS_H_
#define VIGAN_DIFFCORE_KERNELS_H_

#include <cstddef>
#include <span>

// Raw dense kernels shared by the tape ops and tape-free inference paths, so
// both produce bit-identical values.
namespace vigan::diff::kernels {

// c[n,m] += a[n,k] * b[k,m]
void GemmNN(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
// c[n,m] += a[n,k] * b[m,k]^T
void GemmNT(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
// c[n,m] += a[k,n]^T * b[k,m]
void GemmTN(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (height + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (width + 2 * padding - kernel_w) / stride + 1; }
  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
};

// One CHW image to columns [patch, out_h*out_w]; zero padding.
void Im2Col(std::span<const double> image, const ConvGeometry& g, std::span<double> cols);
// Adjoint of Im2Col: scatters-adds columns back into a CHW image gradient.
void Col2Im(std::span<const double> cols, const ConvGeometry& g, std::span<double> image);

}  // namespace vigan::diff::kernels

#endif  // VIGAN_DIFFCORE_KERNELS_H_
