#ifndef VIGAN_ADVERSARIAL_ADVERSARIAL_H_
#define VIGAN_ADVERSARIAL_ADVERSARIAL_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vigan/adversarial/learner.h"
#include "vigan/common/rng.h"
#include "vigan/common/spaces.h"
#include "vigan/diffcore/optim.h"
#include "vigan/diffcore/tape.h"
#include "vigan/models/discriminator.h"
#include "vigan/rollout/demos.h"
#include "vigan/rollout/trajectory.h"

namespace vigan::adversarial {

enum class Method { kGail, kSigan, kVigan };

std::string_view MethodName(Method method);
Method ParseMethod(std::string_view name);

struct AdversarialConfig {
  Method method = Method::kVigan;
  int k_frames = 2;
  int disc_steps_per_iter = 1;
  std::size_t disc_batch_size = 64;
  double disc_learning_rate = 1e-4;
  double reward_clamp_eps = 1e-7;

  void Validate() const;
};

// -ln(1 - clamp(d, eps, 1 - eps))
double RewardFromDisc(double d, double eps = models::kDiscriminatorEps);

// Discriminator inputs drawn from a set of sequences: (s, a) pairs,
// (s, s') pairs, or k consecutive frames stacked along channels. The pool
// refers to the trajectories or demos it was built from, which must
// outlive it.
class SamplePool {
 public:
  struct Position {
    std::size_t sequence = 0;
    std::size_t start = 0;
  };

  // Rollouts; vigan requires rendered trajectories.
  static SamplePool FromTrajectories(const std::vector<rollout::Trajectory>& trajectories,
                                     Method method, int k_frames, const ActionSpace& space);
  // Expert demos; the modality must carry what the method consumes.
  static SamplePool FromDemos(const rollout::DemoSet& demos, Method method, int k_frames,
                              const ActionSpace& space);

  std::size_t num_positions() const { return offsets_.empty() ? 0 : offsets_.back(); }
  // Valid positions of one sequence, in order.
  std::vector<Position> Positions(std::size_t sequence) const;
  std::size_t num_sequences() const { return sequences_.size(); }
  // Uniform over all valid positions of all sequences.
  std::vector<Position> Sample(std::size_t n, Rng& rng) const;
  diff::Tensor Gather(std::span<const Position> positions) const;
  diff::Shape sample_shape() const;

 private:
  struct Sequence {
    const double* states = nullptr;  // (length + 1) rows
    const double* actions = nullptr; // length rows, executed actions
    const envs::Frame* frames = nullptr;
    std::size_t length = 0;          // transitions
  };

  SamplePool(Method method, int k_frames, const ActionSpace& space, std::size_t state_dim);
  void Add(const Sequence& sequence);
  std::size_t ValidCount(const Sequence& s) const;

  Method method_;
  int k_frames_;
  ActionSpace space_;
  std::size_t state_dim_ = 0;
  int frame_w_ = 0, frame_h_ = 0, frame_c_ = 0;
  std::vector<Sequence> sequences_;
  std::vector<std::size_t> offsets_;  // cumulative valid-position counts
};

// Equal-size batches from each pool.
struct DiscBatch {
  diff::Tensor agent;
  diff::Tensor expert;
};
DiscBatch MakeDiscBatch(const SamplePool& agent, const SamplePool& expert, std::size_t batch_size,
                        Rng& rng);

// -mean ln D(expert) - mean ln(1 - D(agent)).
diff::Tensor DiscLoss(diff::Tape& tape, const models::Discriminator& disc, const diff::Tensor& agent,
                      const diff::Tensor& expert);

// Fraction of correctly classified samples at threshold 0.5.
double DiscAccuracy(const models::Discriminator& disc, const DiscBatch& batch);

std::unique_ptr<models::Discriminator> MakeDiscriminator(Method method, int k_frames,
                                                         const envs::EnvSpec& spec,
                                                         const envs::RenderMap* render, Rng& rng);

// GAIL, SIGAN or VIGAN reward estimator.
class AdversarialReward : public RewardModel {
 public:
  AdversarialReward(const rollout::DemoSet& demos, const envs::EnvSpec& spec,
                    const envs::RenderMap* render, AdversarialConfig config, Rng& rng);

  bool needs_frames() const override { return config_.method == Method::kVigan; }
  RewardStats Update(const std::vector<rollout::Trajectory>& rollouts, Rng& rng) override;
  void Label(std::vector<rollout::Trajectory>& rollouts, Rng& rng) const override;

  const models::Discriminator& discriminator() const { return *disc_; }
  models::Discriminator& discriminator() { return *disc_; }
  const AdversarialConfig& config() const { return config_; }

 private:
  const rollout::DemoSet& demos_;
  ActionSpace space_;
  AdversarialConfig config_;
  SamplePool expert_pool_;
  std::unique_ptr<models::Discriminator> disc_;
  std::unique_ptr<diff::Adam> optimizer_;
};

// Per-iteration CSV row: iter, mean_true_return, mean_est_reward, disc_loss,
// disc_accuracy, kl, surrogate_improvement.
std::string CsvHeader();
std::string CsvRow(const IterationReport& report);

}  // namespace vigan::adversarial

#endif  // VIGAN_ADVERSARIAL_ADVERSARIAL_H_
