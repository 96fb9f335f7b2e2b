#ifndef VIGAN_DIFFCORE_OPTIM_H_
#define VIGAN_DIFFCORE_OPTIM_H_

#include <vector>

#include "vigan/diffcore/tensor.h"

namespace vigan::diff {

// Plain gradient descent. Updates in place, then zeroes the grads.
void SgdStep(std::vector<Tensor> params, double learning_rate);

// Adam with bias correction. Holds moment estimates for a fixed parameter
// list; Step() zeroes the grads after updating.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(std::vector<Tensor> params, Options options);

  void Step();
  void ZeroGrad();

  const Options& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  long steps() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  Options options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long steps_ = 0;
};

}  // namespace vigan::diff

#endif  // VIGAN_DIFFCORE_OPTIM_H_
