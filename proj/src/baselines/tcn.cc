#include "vigan/baselines/tcn.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vigan/baselines/pixel.h"
#include "vigan/common/error.h"

namespace vigan::baselines {

using diff::Tape;
using diff::Tensor;

namespace {

Tensor FramesTensor(const std::vector<const envs::Frame*>& frames) {
  const envs::Frame& f = *frames.front();
  std::vector<double> data;
  data.reserve(frames.size() * f.size());
  for (const envs::Frame* x : frames) envs::AppendNormalizedChw(*x, data);
  return Tensor({frames.size(), static_cast<std::size_t>(f.channels), static_cast<std::size_t>(f.height),
                 static_cast<std::size_t>(f.width)},
                std::move(data));
}

std::size_t TotalFrames(std::span<const FrameSequence* const> sequences) {
  std::size_t n = 0;
  for (const FrameSequence* s : sequences) n += s->size();
  return n;
}

}  // namespace

void TripletSampler::Validate() const {
  if (pos_window < 1) throw ConfigError("tcn pos_window must be at least 1");
  if (neg_window <= pos_window) throw ConfigError("tcn neg_window must exceed pos_window");
  if (!(margin > 0.0)) throw ConfigError("tcn margin must be positive");
}

void TripletSampler::CheckSequences(std::span<const FrameSequence* const> sequences) const {
  if (sequences.empty()) throw ValueError("tcn: no frame sequences");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const std::size_t n = sequences[i]->size();
    if (n <= static_cast<std::size_t>(neg_window) + 1) {
      throw ValueError("tcn: sequence " + std::to_string(i) + " has " + std::to_string(n) +
                       " frames; the sampler needs more than " + std::to_string(neg_window + 1));
    }
  }
}

TripletSampler::Triplet TripletSampler::Sample(std::span<const FrameSequence* const> sequences,
                                               Rng& rng) const {
  const std::size_t total = TotalFrames(sequences);
  const auto neg = static_cast<std::size_t>(neg_window);
  const auto pos = static_cast<std::size_t>(pos_window);
  Triplet t;
  std::size_t len = 0;
  for (;;) {
    std::size_t g = rng.Index(total);
    t.sequence = 0;
    while (g >= sequences[t.sequence]->size()) g -= sequences[t.sequence++]->size();
    len = sequences[t.sequence]->size();
    t.anchor = g;
    if (t.anchor > neg || t.anchor + neg + 1 < len) break;
  }
  const std::size_t lo = t.anchor >= pos ? t.anchor - pos : 0;
  const std::size_t hi = std::min(len - 1, t.anchor + pos);
  do {
    t.positive = lo + rng.Index(hi - lo + 1);
  } while (t.positive == t.anchor);
  do {
    t.negative = rng.Index(len);
  } while ((t.negative > t.anchor ? t.negative - t.anchor : t.anchor - t.negative) <= neg);
  return t;
}

Tensor TripletLoss(Tape& tape, const Tensor& anchor, const Tensor& positive, const Tensor& negative,
                   double margin) {
  const Tensor dp = tape.Sub(anchor, positive);
  const Tensor dn = tape.Sub(anchor, negative);
  const Tensor sp = tape.SumRows(tape.Mul(dp, dp));
  const Tensor sn = tape.SumRows(tape.Mul(dn, dn));
  return tape.Mean(tape.Relu(tape.AddScalar(tape.Sub(sp, sn), margin)));
}

double TcnTrain(models::TcnEncoder& encoder, diff::Adam& optimizer,
                std::span<const FrameSequence* const> sequences, const TripletSampler& sampler,
                int epochs, std::size_t batch_size, Rng& rng) {
  sampler.Validate();
  sampler.CheckSequences(sequences);
  if (batch_size == 0) throw ConfigError("tcn batch_size must be positive");
  if (epochs < 0) throw ConfigError("tcn epochs must be non-negative");
  const std::size_t total = TotalFrames(sequences);
  const std::size_t batches = (total + batch_size - 1) / batch_size;
  double last = 0.0;
  for (int e = 0; e < epochs; ++e) {
    double sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<const envs::Frame*> a, p, n;
      for (std::size_t i = 0; i < batch_size; ++i) {
        const auto t = sampler.Sample(sequences, rng);
        const FrameSequence& s = *sequences[t.sequence];
        a.push_back(&s[t.anchor]);
        p.push_back(&s[t.positive]);
        n.push_back(&s[t.negative]);
      }
      Tape tape;
      const Tensor loss = TripletLoss(tape, encoder.Embed(tape, FramesTensor(a)),
                                      encoder.Embed(tape, FramesTensor(p)),
                                      encoder.Embed(tape, FramesTensor(n)), sampler.margin);
      sum += loss.item();
      tape.Backward(loss);
      optimizer.Step();
    }
    last = sum / static_cast<double>(batches);
  }
  return last;
}

double TcnReward(const models::TcnEncoder& encoder, const envs::Frame& expert, const envs::Frame& agent) {
  if (!expert.SameGeometry(agent)) throw ShapeError("tcn reward: frame geometry mismatch");
  const auto e = encoder.Evaluate(FramesTensor({&expert, &agent}));
  return DistanceReward(std::span(e).first(models::kEmbeddingDim), std::span(e).last(models::kEmbeddingDim));
}

TcnRewardModel::TcnRewardModel(const rollout::DemoSet& demos, TripletSampler sampler, TcnOptions options,
                               Rng& rng)
    : demos_(demos),
      sampler_(sampler),
      options_(options),
      encoder_(static_cast<std::size_t>(demos.frame_channels), static_cast<std::size_t>(demos.frame_height),
               static_cast<std::size_t>(demos.frame_width), rng) {
  if (demos.modality != rollout::Modality::kFrames) {
    throw ModalityError("tcn baseline needs frames demonstrations, got " +
                        std::string(rollout::ModalityName(demos.modality)));
  }
  sampler_.Validate();
  optimizer_ = std::make_unique<diff::Adam>(encoder_.Parameters(),
                                            diff::Adam::Options{.learning_rate = options_.learning_rate});
  std::vector<const FrameSequence*> seqs;
  for (const auto& d : demos.demos) seqs.push_back(&d.frames);
  pretrain_loss_ = TcnTrain(encoder_, *optimizer_, seqs, sampler_, options_.epochs, options_.batch_size, rng);
  EmbedDemos();
}

void TcnRewardModel::EmbedDemos() {
  demo_embeddings_.clear();
  for (const auto& d : demos_.demos) {
    std::vector<const envs::Frame*> frames;
    for (const auto& f : d.frames) frames.push_back(&f);
    demo_embeddings_.push_back(encoder_.Evaluate(FramesTensor(frames)));
  }
}

adversarial::RewardStats TcnRewardModel::Update(const std::vector<rollout::Trajectory>& rollouts, Rng& rng) {
  if (!options_.include_agent_frames) return {pretrain_loss_, 0.0};
  std::vector<const FrameSequence*> seqs;
  for (const auto& d : demos_.demos) seqs.push_back(&d.frames);
  for (const auto& r : rollouts) {
    if (r.frames.size() > static_cast<std::size_t>(sampler_.neg_window) + 1) seqs.push_back(&r.frames);
  }
  // One "epoch" here is a fixed number of batches.
  double sum = 0.0;
  for (int i = 0; i < options_.agent_steps_per_iter; ++i) {
    sum += TcnTrain(encoder_, *optimizer_, seqs, sampler_, 1, options_.batch_size, rng);
  }
  EmbedDemos();
  return {options_.agent_steps_per_iter > 0 ? sum / options_.agent_steps_per_iter : 0.0, 0.0};
}

std::vector<double> TcnRewardModel::Score(const rollout::Trajectory& rollout, std::size_t demo) const {
  if (rollout.frames.size() != rollout.length() + 1) throw ModalityError("tcn baseline needs rendered rollouts");
  std::vector<const envs::Frame*> frames;
  for (std::size_t t = 1; t < rollout.frames.size(); ++t) frames.push_back(&rollout.frames[t]);
  std::vector<double> rewards(rollout.length());
  if (frames.empty()) return rewards;
  const auto emb = encoder_.Evaluate(FramesTensor(frames));
  const auto& expert = demo_embeddings_.at(demo);
  constexpr std::size_t d = models::kEmbeddingDim;
  for (std::size_t t = 0; t < rollout.length(); ++t) {
    const SyncedDemoIndex idx = SyncedDemoIndex::At(demos_, demo, t + 1);
    rewards[t] = DistanceReward(std::span(expert).subspan(idx.t * d, d), std::span(emb).subspan(t * d, d));
  }
  return rewards;
}

void TcnRewardModel::Label(std::vector<rollout::Trajectory>& rollouts, Rng& rng) const {
  for (auto& traj : rollouts) traj.est_rewards = Score(traj, PickDemo(demos_, rng));
}

}  // namespace vigan::baselines
