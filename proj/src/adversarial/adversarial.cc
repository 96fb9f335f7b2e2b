#include "vigan/adversarial/adversarial.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "vigan/common/error.h"

namespace vigan::adversarial {

using diff::Tape;
using diff::Tensor;

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kGail:
      return "gail";
    case Method::kSigan:
      return "sigan";
    case Method::kVigan:
      return "vigan";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (Method m : {Method::kGail, Method::kSigan, Method::kVigan}) {
    if (MethodName(m) == name) return m;
  }
  throw ConfigError("unknown adversarial method '" + std::string(name) + "'");
}

void AdversarialConfig::Validate() const {
  if (k_frames != 2 && k_frames != 3) throw ConfigError("k_frames must be 2 or 3");
  if (disc_steps_per_iter < 1) throw ConfigError("disc_steps_per_iter must be at least 1");
  if (disc_batch_size < 1) throw ConfigError("disc_batch_size must be at least 1");
  if (!(disc_learning_rate > 0.0)) throw ConfigError("disc_learning_rate must be positive");
  if (!(reward_clamp_eps > 0.0 && reward_clamp_eps < 0.1)) {
    throw ConfigError("reward_clamp_eps must be in (0, 0.1)");
  }
}

double RewardFromDisc(double d, double eps) {
  return -std::log1p(-std::clamp(d, eps, 1.0 - eps));
}

// ---------------------------------------------------------------------------

SamplePool::SamplePool(Method method, int k_frames, const ActionSpace& space, std::size_t state_dim)
    : method_(method), k_frames_(k_frames), space_(space), state_dim_(state_dim) {
  if (method == Method::kVigan && k_frames != 2 && k_frames != 3) {
    throw ConfigError("k_frames must be 2 or 3");
  }
}

std::size_t SamplePool::ValidCount(const Sequence& s) const {
  if (method_ != Method::kVigan) return s.length;
  const std::size_t frames = s.length + 1;
  const auto k = static_cast<std::size_t>(k_frames_);
  return frames >= k ? frames - k + 1 : 0;
}

void SamplePool::Add(const Sequence& sequence) {
  sequences_.push_back(sequence);
  offsets_.push_back((offsets_.empty() ? 0 : offsets_.back()) + ValidCount(sequence));
}

SamplePool SamplePool::FromTrajectories(const std::vector<rollout::Trajectory>& trajectories,
                                        Method method, int k_frames, const ActionSpace& space) {
  if (trajectories.empty()) throw ValueError("sample pool: no trajectories");
  SamplePool pool(method, k_frames, space, trajectories.front().state_dim);
  for (const auto& t : trajectories) {
    Sequence s;
    s.length = t.length();
    s.states = t.states.data();
    s.actions = t.executed.data();
    if (method == Method::kVigan) {
      if (t.frames.size() != t.length() + 1) {
        throw ModalityError("vigan needs rendered rollouts (trajectory has no frames)");
      }
      s.frames = t.frames.data();
      pool.frame_w_ = t.frames.front().width;
      pool.frame_h_ = t.frames.front().height;
      pool.frame_c_ = t.frames.front().channels;
    }
    pool.Add(s);
  }
  return pool;
}

SamplePool SamplePool::FromDemos(const rollout::DemoSet& demos, Method method, int k_frames,
                                 const ActionSpace& space) {
  const bool ok = (method == Method::kGail && demos.modality == rollout::Modality::kStateAction) ||
                  (method == Method::kSigan && demos.modality != rollout::Modality::kFrames) ||
                  (method == Method::kVigan && demos.modality == rollout::Modality::kFrames);
  if (!ok) {
    throw ModalityError(std::string(MethodName(method)) + " cannot learn from " +
                        std::string(rollout::ModalityName(demos.modality)) + " demonstrations");
  }
  if (demos.demos.empty()) throw ValueError("sample pool: empty demo set");
  SamplePool pool(method, k_frames, space, demos.state_dim);
  pool.frame_w_ = demos.frame_width;
  pool.frame_h_ = demos.frame_height;
  pool.frame_c_ = demos.frame_channels;
  for (std::size_t i = 0; i < demos.demos.size(); ++i) {
    const rollout::Demo& d = demos.demos[i];
    Sequence s;
    s.length = demos.Length(i);
    s.states = d.states.empty() ? nullptr : d.states.data();
    s.actions = d.actions.empty() ? nullptr : d.actions.data();
    s.frames = d.frames.empty() ? nullptr : d.frames.data();
    pool.Add(s);
  }
  if (pool.num_positions() == 0) throw ValueError("sample pool: demos too short for k_frames");
  return pool;
}

std::vector<SamplePool::Position> SamplePool::Positions(std::size_t sequence) const {
  std::vector<Position> out;
  const std::size_t n = ValidCount(sequences_.at(sequence));
  for (std::size_t t = 0; t < n; ++t) out.push_back({sequence, t});
  return out;
}

std::vector<SamplePool::Position> SamplePool::Sample(std::size_t n, Rng& rng) const {
  if (num_positions() == 0) throw ValueError("sample pool: no valid positions");
  std::vector<Position> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = rng.Index(num_positions());
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), g);
    const auto seq = static_cast<std::size_t>(it - offsets_.begin());
    const std::size_t before = seq == 0 ? 0 : offsets_[seq - 1];
    out.push_back({seq, g - before});
  }
  return out;
}

diff::Shape SamplePool::sample_shape() const {
  switch (method_) {
    case Method::kGail:
      return {state_dim_ + space_.encoded_dim()};
    case Method::kSigan:
      return {2 * state_dim_};
    case Method::kVigan:
      return {static_cast<std::size_t>(k_frames_ * frame_c_), static_cast<std::size_t>(frame_h_),
              static_cast<std::size_t>(frame_w_)};
  }
  return {};
}

Tensor SamplePool::Gather(std::span<const Position> positions) const {
  diff::Shape shape = sample_shape();
  const std::size_t per = diff::NumElements(shape);
  shape.insert(shape.begin(), positions.size());
  std::vector<double> data;
  data.reserve(positions.size() * per);
  for (const Position& p : positions) {
    const Sequence& s = sequences_.at(p.sequence);
    switch (method_) {
      case Method::kGail: {
        const double* st = s.states + p.start * state_dim_;
        data.insert(data.end(), st, st + state_dim_);
        std::vector<double> enc(space_.encoded_dim());
        space_.Encode(std::span<const double>(s.actions + p.start * space_.dim(), space_.dim()), enc);
        data.insert(data.end(), enc.begin(), enc.end());
        break;
      }
      case Method::kSigan: {
        const double* st = s.states + p.start * state_dim_;
        data.insert(data.end(), st, st + 2 * state_dim_);
        break;
      }
      case Method::kVigan:
        // Indices past the last frame repeat it (only reachable when a
        // sequence is shorter than k_frames).
        for (int j = 0; j < k_frames_; ++j) {
          envs::AppendNormalizedChw(s.frames[std::min(p.start + static_cast<std::size_t>(j), s.length)], data);
        }
        break;
    }
  }
  return Tensor(std::move(shape), std::move(data));
}

DiscBatch MakeDiscBatch(const SamplePool& agent, const SamplePool& expert, std::size_t batch_size,
                        Rng& rng) {
  if (agent.sample_shape() != expert.sample_shape()) {
    throw ModalityError("agent samples " + diff::ShapeString(agent.sample_shape()) +
                        " do not match expert samples " + diff::ShapeString(expert.sample_shape()));
  }
  DiscBatch batch;
  const auto a = agent.Sample(batch_size, rng);
  const auto e = expert.Sample(batch_size, rng);
  batch.agent = agent.Gather(a);
  batch.expert = expert.Gather(e);
  return batch;
}

Tensor DiscLoss(Tape& tape, const models::Discriminator& disc, const Tensor& agent,
                const Tensor& expert) {
  Tensor d_expert = disc.Probability(tape, expert);
  Tensor d_agent = disc.Probability(tape, agent);
  Tensor expert_term = tape.Mean(tape.Log(d_expert));
  Tensor agent_term = tape.Mean(tape.Log(tape.AddScalar(tape.Scale(d_agent, -1.0), 1.0)));
  return tape.Scale(tape.Add(expert_term, agent_term), -1.0);
}

double DiscAccuracy(const models::Discriminator& disc, const DiscBatch& batch) {
  const auto pe = disc.Evaluate(batch.expert);
  const auto pa = disc.Evaluate(batch.agent);
  std::size_t correct = 0;
  for (double p : pe) correct += p > 0.5;
  for (double p : pa) correct += p < 0.5;
  return static_cast<double>(correct) / static_cast<double>(pe.size() + pa.size());
}

std::unique_ptr<models::Discriminator> MakeDiscriminator(Method method, int k_frames,
                                                         const envs::EnvSpec& spec,
                                                         const envs::RenderMap* render, Rng& rng) {
  switch (method) {
    case Method::kGail:
      return std::make_unique<models::MlpDiscriminator>(spec.state_dim + spec.action_space.encoded_dim(), rng);
    case Method::kSigan:
      return std::make_unique<models::MlpDiscriminator>(2 * spec.state_dim, rng);
    case Method::kVigan:
      if (render == nullptr) throw ModalityError("vigan requires a render map");
      return std::make_unique<models::ConvDiscriminator>(
          static_cast<std::size_t>(k_frames * render->channels), static_cast<std::size_t>(render->height),
          static_cast<std::size_t>(render->width), rng);
  }
  throw ConfigError("unknown method");
}

// ---------------------------------------------------------------------------

AdversarialReward::AdversarialReward(const rollout::DemoSet& demos, const envs::EnvSpec& spec,
                                     const envs::RenderMap* render, AdversarialConfig config, Rng& rng)
    : demos_(demos),
      space_(spec.action_space),
      config_(config),
      expert_pool_(SamplePool::FromDemos(demos, config.method, config.k_frames, spec.action_space)) {
  config_.Validate();
  if (demos.env_id != envs::EnvName(spec.id)) {
    throw ModalityError("demos were recorded on " + demos.env_id + ", not " +
                        std::string(envs::EnvName(spec.id)));
  }
  if (config_.method == Method::kVigan) {
    if (render == nullptr) throw ModalityError("vigan requires a render map");
    if (demos.frame_width != render->width || demos.frame_height != render->height ||
        demos.frame_channels != render->channels) {
      throw ModalityError("demo frames are " + std::to_string(demos.frame_width) + "x" +
                          std::to_string(demos.frame_height) + "x" + std::to_string(demos.frame_channels) +
                          " but the render map produces " + std::to_string(render->width) + "x" +
                          std::to_string(render->height) + "x" + std::to_string(render->channels));
    }
  }
  disc_ = MakeDiscriminator(config_.method, config_.k_frames, spec, render, rng);
  optimizer_ = std::make_unique<diff::Adam>(disc_->Parameters(),
                                            diff::Adam::Options{.learning_rate = config_.disc_learning_rate});
}

RewardStats AdversarialReward::Update(const std::vector<rollout::Trajectory>& rollouts, Rng& rng) {
  const SamplePool agent_pool = SamplePool::FromTrajectories(rollouts, config_.method, config_.k_frames, space_);
  RewardStats stats;
  for (int step = 0; step < config_.disc_steps_per_iter; ++step) {
    const DiscBatch batch = MakeDiscBatch(agent_pool, expert_pool_, config_.disc_batch_size, rng);
    Tape tape;
    Tensor loss = DiscLoss(tape, *disc_, batch.agent, batch.expert);
    if (step + 1 == config_.disc_steps_per_iter) {
      stats.loss = loss.item();
      stats.accuracy = DiscAccuracy(*disc_, batch);
    }
    tape.Backward(loss);
    optimizer_->Step();
  }
  return stats;
}

void AdversarialReward::Label(std::vector<rollout::Trajectory>& rollouts, Rng&) const {
  constexpr std::size_t kChunk = 128;
  const SamplePool pool = SamplePool::FromTrajectories(rollouts, config_.method, config_.k_frames, space_);
  const auto k = static_cast<std::size_t>(config_.k_frames);
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    rollout::Trajectory& traj = rollouts[i];
    const std::size_t t_len = traj.length();
    // For k-frame inputs the last k - 2 steps reuse the final full tuple.
    std::vector<SamplePool::Position> positions(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      std::size_t start = t;
      if (config_.method == Method::kVigan && t_len + 1 >= k) start = std::min(t, t_len + 1 - k);
      positions[t] = {i, start};
    }
    traj.est_rewards.assign(t_len, 0.0);
    for (std::size_t c = 0; c < t_len; c += kChunk) {
      const std::size_t n = std::min(kChunk, t_len - c);
      const auto probs = disc_->Evaluate(pool.Gather(std::span(positions).subspan(c, n)));
      for (std::size_t j = 0; j < n; ++j) {
        traj.est_rewards[c + j] = RewardFromDisc(probs[j], config_.reward_clamp_eps);
      }
    }
  }
}

std::string CsvHeader() {
  return "iter,mean_true_return,mean_est_reward,disc_loss,disc_accuracy,kl,surrogate_improvement";
}

std::string CsvRow(const IterationReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g,%.4f,%.6g,%.6g", r.iteration, r.mean_true_return,
                r.mean_est_reward, r.disc_loss, r.disc_accuracy, r.kl, r.surrogate_improvement);
  return buf;
}

}  // namespace vigan::adversarial
