#ifndef VIGAN_BASELINES_BC_H_
#define VIGAN_BASELINES_BC_H_

#include <functional>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/models/policy.h"
#include "vigan/rollout/demos.h"

namespace vigan::baselines {

struct BcOptions {
  int epochs = 500;
  double learning_rate = 1e-3;
  // Called after every epoch with the epoch index.
  std::function<void(int)> on_epoch;
};

// Full-batch maximum likelihood: Adam on mean -log pi(a|s) over every demo
// transition. Returns the loss after each epoch.
std::vector<double> BcTrain(models::Policy& policy, const rollout::DemoSet& demos,
                            const BcOptions& options);

}  // namespace vigan::baselines

#endif  // VIGAN_BASELINES_BC_H_
