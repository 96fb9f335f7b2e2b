#include "vigan/baselines/pixel.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vigan/common/error.h"

namespace vigan::baselines {

namespace {

std::string Geometry(const envs::Frame& f) {
  return std::to_string(f.width) + "x" + std::to_string(f.height) + "x" + std::to_string(f.channels);
}

}  // namespace

double DistanceReward(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("distance reward: sizes " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-2.0 * sq);
}

double PixelReward(const envs::Frame& expert, const envs::Frame& agent) {
  if (!expert.SameGeometry(agent) || expert.size() != agent.size()) {
    throw ShapeError("pixel reward: expert frame " + Geometry(expert) + " vs agent frame " +
                     Geometry(agent));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < expert.size(); ++i) {
    const double d = envs::NormalizePixel(expert.pixels[i]) - envs::NormalizePixel(agent.pixels[i]);
    sq += d * d;
  }
  return std::exp(-2.0 * sq);
}

SyncedDemoIndex SyncedDemoIndex::At(const rollout::DemoSet& demos, std::size_t demo,
                                    std::size_t frame) {
  const auto& frames = demos.demos.at(demo).frames;
  if (frames.empty()) throw ModalityError("synced index: demo " + std::to_string(demo) + " has no frames");
  return {demo, std::min(frame, frames.size() - 1)};
}

std::size_t PickDemo(const rollout::DemoSet& demos, Rng& rng) {
  if (demos.demos.empty()) throw ValueError("empty demo set");
  return static_cast<std::size_t>(rng.Index(demos.demos.size()));
}

PixelRewardModel::PixelRewardModel(const rollout::DemoSet& demos) : demos_(demos) {
  if (demos.modality != rollout::Modality::kFrames) {
    throw ModalityError("pixel baseline needs frames demonstrations, got " +
                        std::string(rollout::ModalityName(demos.modality)));
  }
  if (demos.demos.empty()) throw ValueError("pixel baseline: empty demo set");
}

std::vector<double> PixelRewardModel::Score(const rollout::Trajectory& rollout,
                                            std::size_t demo) const {
  if (rollout.frames.size() != rollout.length() + 1) {
    throw ModalityError("pixel baseline needs rendered rollouts");
  }
  std::vector<double> rewards(rollout.length());
  for (std::size_t t = 0; t < rollout.length(); ++t) {
    const SyncedDemoIndex idx = SyncedDemoIndex::At(demos_, demo, t + 1);
    rewards[t] = PixelReward(demos_.demos[idx.demo].frames[idx.t], rollout.frames[t + 1]);
  }
  return rewards;
}

void PixelRewardModel::Label(std::vector<rollout::Trajectory>& rollouts, Rng& rng) const {
  for (auto& traj : rollouts) traj.est_rewards = Score(traj, PickDemo(demos_, rng));
}

}  // namespace vigan::baselines
