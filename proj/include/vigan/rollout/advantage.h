#ifndef VIGAN_ROLLOUT_ADVANTAGE_H_
#define VIGAN_ROLLOUT_ADVANTAGE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "vigan/models/policy.h"
#include "vigan/rollout/trajectory.h"

namespace vigan::rollout {

struct GaeResult {
  std::vector<double> advantages;     // T
  std::vector<double> value_targets;  // T: advantages + values[0..T)
};

// Generalized advantage estimation. `values` has T + 1 entries; the caller
// sets values[T] to 0 for terminated episodes and to the bootstrap value
// otherwise.
GaeResult Gae(std::span<const double> rewards, std::span<const double> values, double gamma,
              double lambda);

// In place: zero mean, unit variance. No-op for fewer than two entries.
void NormalizeAdvantages(std::vector<double>& advantages);

// Flattened training batch over all steps of a set of trajectories.
struct AdvantageBatch {
  std::size_t rows = 0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> states;      // rows x state_dim
  std::vector<double> actions;     // rows x action_dim, sampled actions
  std::vector<double> log_probs;   // rows
  std::vector<double> advantages;  // rows
  std::vector<double> value_targets;
};

// Uses est_rewards (which must be filled) and the value function's
// predictions.
AdvantageBatch BuildBatch(const std::vector<Trajectory>& trajectories,
                          const models::ValueMlp& value, double gamma, double lambda,
                          bool normalize = true);

}  // namespace vigan::rollout

#endif  // VIGAN_ROLLOUT_ADVANTAGE_H_
