#ifndef VIGAN_BASELINES_TCN_H_
#define VIGAN_BASELINES_TCN_H_

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "vigan/adversarial/learner.h"
#include "vigan/diffcore/optim.h"
#include "vigan/diffcore/tape.h"
#include "vigan/envs/frame.h"
#include "vigan/models/discriminator.h"
#include "vigan/rollout/demos.h"

namespace vigan::baselines {

using FrameSequence = std::vector<envs::Frame>;

// Positives lie within +-pos_window frames of the anchor, negatives more
// than neg_window frames away, all in the anchor's sequence.
struct TripletSampler {
  int pos_window = 2;
  int neg_window = 10;
  double margin = 0.2;

  struct Triplet {
    std::size_t sequence = 0;
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
  };

  void Validate() const;
  // Throws ValueError when a sequence has no anchor with a valid negative.
  void CheckSequences(std::span<const FrameSequence* const> sequences) const;
  // Anchors are uniform over frames that admit a negative.
  Triplet Sample(std::span<const FrameSequence* const> sequences, Rng& rng) const;
};

// Mean over rows of max(0, |a - p|^2 - |a - n|^2 + margin); inputs [rows, d].
diff::Tensor TripletLoss(diff::Tape& tape, const diff::Tensor& anchor, const diff::Tensor& positive,
                         const diff::Tensor& negative, double margin);

struct TcnOptions {
  int epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  // Also train on agent frames during imitation.
  bool include_agent_frames = false;
  int agent_steps_per_iter = 5;
};

// One epoch is ceil(total frames / batch_size) triplet batches. Returns the
// mean triplet loss of the last epoch.
double TcnTrain(models::TcnEncoder& encoder, diff::Adam& optimizer,
                std::span<const FrameSequence* const> sequences, const TripletSampler& sampler,
                int epochs, std::size_t batch_size, Rng& rng);

double TcnReward(const models::TcnEncoder& encoder, const envs::Frame& expert,
                 const envs::Frame& agent);

// Time-synchronized reward in the learned embedding space.
class TcnRewardModel : public adversarial::RewardModel {
 public:
  // Requires frames demos; trains the encoder on them.
  TcnRewardModel(const rollout::DemoSet& demos, TripletSampler sampler, TcnOptions options, Rng& rng);

  bool needs_frames() const override { return true; }
  // Reports the triplet loss; trains on agent frames only when enabled.
  adversarial::RewardStats Update(const std::vector<rollout::Trajectory>& rollouts, Rng& rng) override;
  void Label(std::vector<rollout::Trajectory>& rollouts, Rng& rng) const override;

  std::vector<double> Score(const rollout::Trajectory& rollout, std::size_t demo) const;
  const models::TcnEncoder& encoder() const { return encoder_; }
  double pretrain_loss() const { return pretrain_loss_; }

 private:
  void EmbedDemos();

  const rollout::DemoSet& demos_;
  TripletSampler sampler_;
  TcnOptions options_;
  models::TcnEncoder encoder_;
  std::unique_ptr<diff::Adam> optimizer_;
  std::vector<std::vector<double>> demo_embeddings_;  // per demo, frames x 16
  double pretrain_loss_ = 0.0;
};

}  // namespace vigan::baselines

#endif  // VIGAN_BASELINES_TCN_H_
