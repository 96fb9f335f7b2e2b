#ifndef VIGAN_ADVERSARIAL_LEARNER_H_
#define VIGAN_ADVERSARIAL_LEARNER_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/envs/env.h"
#include "vigan/models/policy.h"
#include "vigan/rollout/trajectory.h"
#include "vigan/trpo/trpo.h"

namespace vigan::adversarial {

// Statistics a reward model reports after its per-iteration update.
struct RewardStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Source of the estimated rewards that drive policy optimization.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual bool needs_frames() const = 0;
  // Called once per iteration with fresh rollouts before labeling.
  virtual RewardStats Update(const std::vector<rollout::Trajectory>& rollouts, Rng& rng) = 0;
  // Fills est_rewards of every trajectory.
  virtual void Label(std::vector<rollout::Trajectory>& rollouts, Rng& rng) const = 0;
};

// The environment's own reward; used to train experts.
class TrueReward : public RewardModel {
 public:
  bool needs_frames() const override { return false; }
  RewardStats Update(const std::vector<rollout::Trajectory>&, Rng&) override { return {}; }
  void Label(std::vector<rollout::Trajectory>& rollouts, Rng&) const override;
};

struct RolloutSettings {
  std::size_t steps_per_iter = 2000;
  int workers = 1;
  double gae_lambda = 0.95;
};

struct Learner {
  std::unique_ptr<models::Policy> policy;
  std::unique_ptr<models::ValueMlp> value;

  static Learner Create(const envs::Env& env, Rng& rng);
};

struct IterationReport {
  int iteration = 0;
  std::size_t steps = 0;
  std::size_t episodes = 0;
  double mean_true_return = 0.0;
  double mean_est_reward = 0.0;
  double disc_loss = 0.0;
  double disc_accuracy = 0.0;
  double kl = 0.0;
  double surrogate_improvement = 0.0;
  bool accepted = false;
};

// One cycle: collect, update the reward model, label rewards, GAE, TRPO.
// Rollout seeds derive from (seed, iteration). Errors are rethrown with
// the iteration index.
IterationReport ImitationIteration(Learner& learner, RewardModel& reward, const envs::Env& env,
                                   const envs::RenderMap* render, const RolloutSettings& rollout,
                                   const trpo::TrpoConfig& trpo, std::uint64_t seed,
                                   int iteration, Rng& rng);

// Mean true return of `episodes` deterministic episodes.
double EvaluatePolicy(const models::Policy& policy, const envs::Env& env, std::size_t episodes,
                      std::uint64_t seed, int workers = 1);

}  // namespace vigan::adversarial

#endif  // VIGAN_ADVERSARIAL_LEARNER_H_
