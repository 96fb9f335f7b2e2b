#ifndef VIGAN_ROLLOUT_TRAJECTORY_H_
#define VIGAN_ROLLOUT_TRAJECTORY_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/envs/env.h"
#include "vigan/envs/frame.h"
#include "vigan/models/policy.h"

namespace vigan::rollout {

// One episode. Row-major matrices; T = length().
struct Trajectory {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> states;       // (T + 1) x state_dim
  std::vector<double> actions;      // T x action_dim, sampled (pre-clamp)
  std::vector<double> executed;     // T x action_dim, clamped to the action space
  std::vector<double> log_probs;    // T, of the sampled actions
  std::vector<envs::Frame> frames;  // T + 1 when rendered, else empty
  std::vector<double> est_rewards;  // T, filled by a reward model
  std::vector<double> true_rewards; // T
  bool done = false;                // ended by the termination predicate

  std::size_t length() const { return log_probs.size(); }
  std::span<const double> state(std::size_t t) const {
    return std::span<const double>(states).subspan(t * state_dim, state_dim);
  }
  std::span<const double> action(std::size_t t) const {
    return std::span<const double>(executed).subspan(t * action_dim, action_dim);
  }
  double TrueReturn() const;
  // Throws ValueError when array lengths disagree.
  void Validate() const;
};

struct CollectOptions {
  std::size_t n_steps = 1;
  int workers = 1;
  std::uint64_t seed = 0;
  bool deterministic = false;
  // Frames are rendered (and crop-shaken per the map) when set.
  const envs::RenderMap* render = nullptr;
};

// Runs one episode up to the horizon or termination.
Trajectory RunEpisode(const models::Policy& policy, const envs::Env& env, Rng& rng,
                      bool deterministic, const envs::RenderMap* render);

// Whole episodes until at least n_steps steps. Episode i draws from the
// stream DeriveSeed(seed, i), and the result is the shortest prefix of
// episodes 0, 1, ... reaching n_steps, so the output does not depend on the
// worker count.
std::vector<Trajectory> Collect(const models::Policy& policy, const envs::Env& env,
                                const CollectOptions& options);

// Exactly `episodes` episodes with the same seeding scheme.
std::vector<Trajectory> CollectEpisodes(const models::Policy& policy, const envs::Env& env,
                                        std::size_t episodes, const CollectOptions& options);

std::size_t TotalSteps(const std::vector<Trajectory>& trajectories);
double MeanTrueReturn(const std::vector<Trajectory>& trajectories);

}  // namespace vigan::rollout

#endif  // VIGAN_ROLLOUT_TRAJECTORY_H_
