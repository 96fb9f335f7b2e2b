#include "vigan/rollout/advantage.h"

#include <cmath>
#include <string>

#include "vigan/common/error.h"

namespace vigan::rollout {

GaeResult Gae(std::span<const double> rewards, std::span<const double> values, double gamma,
              double lambda) {
  const std::size_t t_len = rewards.size();
  if (values.size() != t_len + 1) {
    throw ShapeError("gae: expected " + std::to_string(t_len + 1) + " values, got " +
                     std::to_string(values.size()));
  }
  for (double v : rewards) {
    if (!std::isfinite(v)) throw ValueError("gae: non-finite reward");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValueError("gae: non-finite value");
  }
  GaeResult out;
  out.advantages.assign(t_len, 0.0);
  out.value_targets.assign(t_len, 0.0);
  double running = 0.0;
  for (std::size_t i = t_len; i-- > 0;) {
    const double delta = rewards[i] + gamma * values[i + 1] - values[i];
    running = delta + gamma * lambda * running;
    out.advantages[i] = running;
    out.value_targets[i] = running + values[i];
  }
  return out;
}

void NormalizeAdvantages(std::vector<double>& advantages) {
  const std::size_t n = advantages.size();
  if (n < 2) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (double& a : advantages) a = (a - mean) * inv;
}

AdvantageBatch BuildBatch(const std::vector<Trajectory>& trajectories,
                          const models::ValueMlp& value, double gamma, double lambda,
                          bool normalize) {
  AdvantageBatch batch;
  if (trajectories.empty()) throw ValueError("advantage batch: no trajectories");
  batch.state_dim = trajectories.front().state_dim;
  batch.action_dim = trajectories.front().action_dim;
  for (const Trajectory& traj : trajectories) {
    traj.Validate();
    if (traj.est_rewards.size() != traj.length()) {
      throw ValueError("advantage batch: trajectory has no estimated rewards");
    }
    const std::size_t t_len = traj.length();
    std::vector<double> values = value.Predict(traj.states, t_len + 1);
    if (traj.done) values[t_len] = 0.0;
    GaeResult gae = Gae(traj.est_rewards, values, gamma, lambda);
    batch.states.insert(batch.states.end(), traj.states.begin(),
                        traj.states.begin() + static_cast<std::ptrdiff_t>(t_len * traj.state_dim));
    batch.actions.insert(batch.actions.end(), traj.actions.begin(), traj.actions.end());
    batch.log_probs.insert(batch.log_probs.end(), traj.log_probs.begin(), traj.log_probs.end());
    batch.advantages.insert(batch.advantages.end(), gae.advantages.begin(), gae.advantages.end());
    batch.value_targets.insert(batch.value_targets.end(), gae.value_targets.begin(),
                               gae.value_targets.end());
    batch.rows += t_len;
  }
  if (normalize) NormalizeAdvantages(batch.advantages);
  return batch;
}

}  // namespace vigan::rollout
