#include "vigan/rollout/trajectory.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "vigan/common/error.h"

namespace vigan::rollout {

double Trajectory::TrueReturn() const {
  return std::accumulate(true_rewards.begin(), true_rewards.end(), 0.0);
}

void Trajectory::Validate() const {
  const std::size_t t = length();
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ValueError(std::string("trajectory: inconsistent ") + what);
  };
  check(states.size() == (t + 1) * state_dim, "states");
  check(actions.size() == t * action_dim && executed.size() == actions.size(), "actions");
  check(true_rewards.size() == t, "true rewards");
  check(est_rewards.empty() || est_rewards.size() == t, "estimated rewards");
  check(frames.empty() || frames.size() == t + 1, "frames");
}

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

envs::Frame RenderFrame(const envs::Env& env, std::span<const double> state,
                        const envs::RenderMap& map, Rng& noise) {
  envs::Frame frame = env.Render(state, map);
  if (map.crop_shake_max > 0.0) frame = envs::CropShake(frame, map.crop_shake_max, noise);
  return frame;
}

}  // namespace

Trajectory RunEpisode(const models::Policy& policy, const envs::Env& env, Rng& rng,
                      bool deterministic, const envs::RenderMap* render) {
  const envs::EnvSpec& spec = env.spec();
  Rng noise = rng.Fork(kNoiseStream);
  Trajectory traj;
  traj.state_dim = spec.state_dim;
  traj.action_dim = spec.action_space.dim();
  std::vector<double> state = env.Reset(rng);
  traj.states = state;
  if (render != nullptr) traj.frames.push_back(RenderFrame(env, state, *render, noise));
  for (int t = 0; t < spec.horizon; ++t) {
    models::ActionSample sample = policy.Act(state, rng, deterministic);
    envs::StepResult step = env.Step(state, sample.action, rng);
    traj.actions.insert(traj.actions.end(), sample.raw.begin(), sample.raw.end());
    traj.executed.insert(traj.executed.end(), sample.action.begin(), sample.action.end());
    traj.log_probs.push_back(sample.log_prob);
    traj.true_rewards.push_back(step.reward);
    traj.states.insert(traj.states.end(), step.next_state.begin(), step.next_state.end());
    state = std::move(step.next_state);
    if (render != nullptr) traj.frames.push_back(RenderFrame(env, state, *render, noise));
    if (step.terminal) {
      traj.done = true;
      break;
    }
  }
  return traj;
}

namespace {

// Runs episodes 0, 1, ... on `workers` threads until `enough` holds for the
// contiguous prefix of finished episodes, and returns that prefix.
template <typename Enough>
std::vector<Trajectory> RunPrefix(const models::Policy& policy, const envs::Env& env,
                                  const CollectOptions& options, Enough enough) {
  if (options.workers < 1) throw ConfigError("collect: workers must be at least 1");
  std::mutex mu;
  std::map<std::size_t, Trajectory> finished;
  std::size_t prefix_len = 0;  // episodes [0, prefix_len) are finished
  std::size_t prefix_steps = 0;
  bool satisfied = false;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (satisfied || failure) return;
      }
      const std::size_t index = next.fetch_add(1);
      Trajectory traj;
      try {
        Rng rng(DeriveSeed(options.seed, index));
        traj = RunEpisode(policy, env, rng, options.deterministic, options.render);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) {
          failure = std::make_exception_ptr(
              Error("rollout episode " + std::to_string(index) + " (seed " +
                    std::to_string(options.seed) + "): " + e.what()));
        }
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      finished.emplace(index, std::move(traj));
      while (!satisfied) {
        auto it = finished.find(prefix_len);
        if (it == finished.end()) break;
        prefix_steps += it->second.length();
        ++prefix_len;
        satisfied = enough(prefix_len, prefix_steps);
      }
    }
  };

  if (options.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < options.workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Trajectory> out;
  out.reserve(prefix_len);
  for (std::size_t i = 0; i < prefix_len; ++i) out.push_back(std::move(finished.at(i)));
  return out;
}

}  // namespace

std::vector<Trajectory> Collect(const models::Policy& policy, const envs::Env& env,
                                const CollectOptions& options) {
  if (options.n_steps < 1) throw ConfigError("collect: n_steps must be at least 1");
  return RunPrefix(policy, env, options, [&](std::size_t, std::size_t steps) {
    return steps >= options.n_steps;
  });
}

std::vector<Trajectory> CollectEpisodes(const models::Policy& policy, const envs::Env& env,
                                        std::size_t episodes, const CollectOptions& options) {
  if (episodes < 1) throw ConfigError("collect: need at least one episode");
  return RunPrefix(policy, env, options, [&](std::size_t count, std::size_t) {
    return count >= episodes;
  });
}

std::size_t TotalSteps(const std::vector<Trajectory>& trajectories) {
  std::size_t total = 0;
  for (const auto& t : trajectories) total += t.length();
  return total;
}

double MeanTrueReturn(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : trajectories) total += t.TrueReturn();
  return total / static_cast<double>(trajectories.size());
}

}  // namespace vigan::rollout
