#include "vigan/adversarial/learner.h"

#include <string>

#include "vigan/common/error.h"
#include "vigan/rollout/advantage.h"

namespace vigan::adversarial {

void TrueReward::Label(std::vector<rollout::Trajectory>& rollouts, Rng&) const {
  for (auto& t : rollouts) t.est_rewards = t.true_rewards;
}

Learner Learner::Create(const envs::Env& env, Rng& rng) {
  Learner learner;
  learner.policy = models::MakePolicy(env.spec().state_dim, env.spec().action_space, rng);
  learner.value = std::make_unique<models::ValueMlp>(env.spec().state_dim, rng);
  return learner;
}

IterationReport ImitationIteration(Learner& learner, RewardModel& reward, const envs::Env& env,
                                   const envs::RenderMap* render, const RolloutSettings& settings,
                                   const trpo::TrpoConfig& trpo, std::uint64_t seed, int iteration,
                                   Rng& rng) {
  try {
    if (reward.needs_frames() && render == nullptr) {
      throw ModalityError("reward model needs rendered frames but no render map was given");
    }
    rollout::CollectOptions options;
    options.n_steps = settings.steps_per_iter;
    options.workers = settings.workers;
    options.seed = DeriveSeed(seed, static_cast<std::uint64_t>(iteration));
    options.render = reward.needs_frames() ? render : nullptr;
    std::vector<rollout::Trajectory> trajs = rollout::Collect(*learner.policy, env, options);

    IterationReport report;
    report.iteration = iteration;
    report.steps = rollout::TotalSteps(trajs);
    report.episodes = trajs.size();
    report.mean_true_return = rollout::MeanTrueReturn(trajs);

    const RewardStats stats = reward.Update(trajs, rng);
    report.disc_loss = stats.loss;
    report.disc_accuracy = stats.accuracy;
    reward.Label(trajs, rng);
    double est = 0.0;
    for (const auto& t : trajs) {
      for (double r : t.est_rewards) est += r;
    }
    report.mean_est_reward = est / static_cast<double>(report.steps);

    const rollout::AdvantageBatch batch =
        rollout::BuildBatch(trajs, *learner.value, env.spec().gamma, settings.gae_lambda);
    const trpo::TrpoReport step = trpo::TrpoStep(*learner.policy, *learner.value, batch, trpo, rng);
    report.kl = step.kl;
    report.surrogate_improvement = step.improvement;
    report.accepted = step.accepted;
    return report;
  } catch (const ModalityError& e) {
    throw ModalityError("iteration " + std::to_string(iteration) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("iteration " + std::to_string(iteration) + ": " + e.what());
  } catch (const Error& e) {
    throw Error("iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

double EvaluatePolicy(const models::Policy& policy, const envs::Env& env, std::size_t episodes,
                      std::uint64_t seed, int workers) {
  rollout::CollectOptions options;
  options.seed = seed;
  options.deterministic = true;
  options.workers = workers;
  return rollout::MeanTrueReturn(rollout::CollectEpisodes(policy, env, episodes, options));
}

}  // namespace vigan::adversarial
