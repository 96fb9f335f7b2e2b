#ifndef VIGAN_BASELINES_PIXEL_H_
#define VIGAN_BASELINES_PIXEL_H_

#include <cstddef>
#include <span>
#include <vector>

#include "vigan/adversarial/learner.h"
#include "vigan/envs/frame.h"
#include "vigan/rollout/demos.h"

namespace vigan::baselines {

// exp(-2 * |x - y|^2). Throws ShapeError on a size mismatch.
double DistanceReward(std::span<const double> x, std::span<const double> y);

// DistanceReward between two frames scaled to [-1, 1].
// Throws ShapeError on a geometry mismatch.
double PixelReward(const envs::Frame& expert, const envs::Frame& agent);

// Expert frame matched to an agent step: one demo per episode, aligned from
// step 0 and held at the demo's last frame once the agent outlives it.
struct SyncedDemoIndex {
  std::size_t demo = 0;
  std::size_t t = 0;

  // Index of the expert frame paired with agent frame `frame` of an episode
  // following demo `demo`.
  static SyncedDemoIndex At(const rollout::DemoSet& demos, std::size_t demo, std::size_t frame);
};

// Picks the demo an episode follows, uniformly at random.
std::size_t PickDemo(const rollout::DemoSet& demos, Rng& rng);

// Time-synchronized pixel-distance reward. Step t is scored on the frame
// reached after the action, against the aligned expert frame.
class PixelRewardModel : public adversarial::RewardModel {
 public:
  // Requires frames demos.
  explicit PixelRewardModel(const rollout::DemoSet& demos);

  bool needs_frames() const override { return true; }
  adversarial::RewardStats Update(const std::vector<rollout::Trajectory>&, Rng&) override {
    return {};
  }
  void Label(std::vector<rollout::Trajectory>& rollouts, Rng& rng) const override;

  // Scores one episode against a fixed demo.
  std::vector<double> Score(const rollout::Trajectory& rollout, std::size_t demo) const;

 private:
  const rollout::DemoSet& demos_;
};

}  // namespace vigan::baselines

#endif  // VIGAN_BASELINES_PIXEL_H_
