#ifndef VIGAN_DIFFCORE_TENSOR_H_
#define VIGAN_DIFFCORE_TENSOR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vigan::diff {

using Shape = std::vector<std::size_t>;

// Product of the dimensions; 1 for the rank-0 shape.
std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major f64 array. Copies are shallow: two Tensor values may name
// the same storage, which is how parameters are shared between a model, the
// tape, and an optimizer. Use Clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Filled(Shape shape, double value, bool requires_grad = false);
  static Tensor Scalar(double value);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

  // A grad buffer exists once backward() has reached this tensor.
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<double> grad() { return impl_->grad; }
  std::span<const double> grad() const { return impl_->grad; }
  // Returns the grad buffer, allocating a zeroed one if absent.
  std::span<double> MutableGrad();
  void ZeroGrad();
  void ClearGrad() { impl_->grad.clear(); }

  // Deep copy without grad; the copy does not require grad.
  Tensor Clone() const;
  bool SharesStorage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  std::shared_ptr<Impl> impl_;
};

}  // namespace vigan::diff

#endif  // VIGAN_DIFFCORE_TENSOR_H_
