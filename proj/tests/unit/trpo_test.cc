#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "vigan/adversarial/learner.h"
#include "vigan/common/error.h"
#include "vigan/common/rng.h"
#include "vigan/envs/env.h"
#include "vigan/models/policy.h"
#include "vigan/rollout/advantage.h"
#include "vigan/trpo/trpo.h"

namespace vigan::trpo {
namespace {

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Single-state categorical bandit: rows copies of state [1], alternating
// actions, advantage +1 for action 0 and -1 for action 1.
rollout::AdvantageBatch BanditBatch(const models::Policy& policy, std::size_t rows, double a0, double a1) {
  rollout::AdvantageBatch b;
  b.rows = rows;
  b.state_dim = 1;
  b.action_dim = 1;
  for (std::size_t i = 0; i < rows; ++i) {
    const double action = static_cast<double>(i % 2);
    b.states.push_back(1.0);
    b.actions.push_back(action);
    b.log_probs.push_back(policy.LogProb(std::vector<double>{1.0}, std::vector<double>{action}));
    b.advantages.push_back(i % 2 == 0 ? a0 : a1);
    b.value_targets.push_back(0.0);
  }
  return b;
}

// Continuous batch sampled from the policy itself.
rollout::AdvantageBatch GaussianBatch(const models::Policy& policy, std::size_t rows, Rng& rng) {
  rollout::AdvantageBatch b;
  b.rows = rows;
  b.state_dim = policy.state_dim();
  b.action_dim = policy.action_space().dim();
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> s(b.state_dim);
    for (double& x : s) x = rng.Uniform(-1.0, 1.0);
    const auto sample = policy.Act(s, rng);
    b.states.insert(b.states.end(), s.begin(), s.end());
    b.actions.insert(b.actions.end(), sample.raw.begin(), sample.raw.end());
    b.log_probs.push_back(sample.log_prob);
    b.advantages.push_back(rng.Normal());
    b.value_targets.push_back(0.0);
  }
  return b;
}

TEST(TrpoConfigTest, RejectsInvalidValues) {
  TrpoConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.max_kl = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.cg_iters = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.entropy_coef = -1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// Conjugate gradient

TEST(ConjugateGradientTest, IdentitySolvesInOneIteration) {
  const std::vector<double> b = {1.0, -2.0, 3.0};
  const auto r = ConjugateGradient([](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); },
                                   b, 10);
  EXPECT_EQ(r.iterations, 1);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.x[i], b[i], 1e-15);
}

TEST(ConjugateGradientTest, DiagonalSystem) {
  const auto r = ConjugateGradient(
      [](std::span<const double> v) { return std::vector<double>{v[0], 4.0 * v[1]}; },
      std::vector<double>{1.0, 4.0}, 10);
  EXPECT_NEAR(r.x[0], 1.0, 1e-12);
  EXPECT_NEAR(r.x[1], 1.0, 1e-12);
}

TEST(ConjugateGradientTest, MatchesDirectSolveOnRandomSpdSystems) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd m(8, 8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) m(i, j) = rng.Normal();
    }
    const Eigen::MatrixXd a = m * m.transpose() + Eigen::MatrixXd::Identity(8, 8);
    std::vector<double> b(8);
    for (double& x : b) x = rng.Normal();
    const Eigen::VectorXd direct = a.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), 8));
    const auto r = ConjugateGradient(
        [&](std::span<const double> v) {
          const Eigen::VectorXd out = a * Eigen::Map<const Eigen::VectorXd>(v.data(), 8);
          return std::vector<double>(out.data(), out.data() + 8);
        },
        b, 50);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(r.x.data(), 8);
    EXPECT_LE((x - direct).norm() / direct.norm(), 1e-8);
  }
}

TEST(ConjugateGradientTest, NonFiniteOperatorIsAnError) {
  EXPECT_THROW(ConjugateGradient([](std::span<const double>) { return std::vector<double>{NAN}; },
                                 std::vector<double>{1.0}, 3),
               ValueError);
}

// ---------------------------------------------------------------------------
// Surrogate

TEST(SurrogateTest, EqualsMeanAdvantageAtOldParameters) {
  Rng rng(1);
  models::GaussianMlpPolicy policy(3, ActionSpace::Box({-1, -1}, {1, 1}), rng);
  const auto batch = GaussianBatch(policy, 40, rng);
  diff::Tape tape;
  const double value = SurrogateLoss(tape, policy, batch, 0.0).item();
  double mean = 0.0;
  for (double a : batch.advantages) mean += a / 40.0;
  EXPECT_NEAR(value, mean, 1e-12);
}

TEST(SurrogateTest, ZeroAdvantagesGiveZeroGradient) {
  Rng rng(2);
  models::GaussianMlpPolicy policy(3, ActionSpace::Box({-1}, {1}), rng);
  auto batch = GaussianBatch(policy, 20, rng);
  std::fill(batch.advantages.begin(), batch.advantages.end(), 0.0);
  diff::Tape tape;
  policy.ZeroGrad();
  tape.Backward(SurrogateLoss(tape, policy, batch, 0.0));
  for (double g : policy.FlatGrad()) EXPECT_EQ(g, 0.0);
}

TEST(SurrogateTest, BanditGradientRaisesTheFavoredLogit) {
  Rng rng(3);
  models::CategoricalMlpPolicy policy(1, 2, rng);
  const auto batch = BanditBatch(policy, 10, 1.0, 0.0);
  diff::Tape tape;
  policy.ZeroGrad();
  tape.Backward(SurrogateLoss(tape, policy, batch, 0.0));
  const auto grad = policy.FlatGrad();
  // A small step along the gradient raises p(a0).
  const auto theta = policy.FlatParameters();
  const double before = policy.Probabilities(std::vector<double>{1.0})[0];
  std::vector<double> moved = theta;
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += 1e-3 * grad[i];
  policy.SetFlatParameters(moved);
  EXPECT_GT(policy.Probabilities(std::vector<double>{1.0})[0], before);
}

TEST(SurrogateTest, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  models::GaussianMlpPolicy policy(2, ActionSpace::Box({-1}, {1}), rng);
  const auto batch = GaussianBatch(policy, 16, rng);
  diff::Tape tape;
  policy.ZeroGrad();
  tape.Backward(SurrogateLoss(tape, policy, batch, 0.01));
  const auto grad = policy.FlatGrad();
  const auto theta = policy.FlatParameters();
  auto value_at = [&](std::size_t i, double h) {
    auto t = theta;
    t[i] += h;
    policy.SetFlatParameters(t);
    diff::Tape tp;
    return SurrogateLoss(tp, policy, batch, 0.01).item();
  };
  for (std::size_t i = 0; i < theta.size(); i += 37) {
    const double fd = (value_at(i, 1e-5) - value_at(i, -1e-5)) / 2e-5;
    EXPECT_NEAR(grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

// ---------------------------------------------------------------------------
// Fisher-vector product

TEST(FisherTest, LinearSymmetricAndPositive) {
  Rng rng(5);
  models::GaussianMlpPolicy policy(3, ActionSpace::Box({-2, -2}, {2, 2}), rng);
  const auto batch = GaussianBatch(policy, 30, rng);
  const std::size_t n = policy.NumParameters();
  std::vector<double> zero(n, 0.0);
  for (double x : policy.FisherVectorProduct(batch.states, 30, zero, 0.1)) EXPECT_EQ(x, 0.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> u(n);
    std::vector<double> v(n);
    for (double& x : u) x = rng.Normal();
    for (double& x : v) x = rng.Normal();
    const auto fu = policy.FisherVectorProduct(batch.states, 30, u, 0.0);
    const auto fv = policy.FisherVectorProduct(batch.states, 30, v, 0.0);
    EXPECT_NEAR(Dot(v, fu), Dot(u, fv), 1e-9 * std::max(1.0, std::abs(Dot(v, fu))));
    EXPECT_GE(Dot(v, fv), -1e-12);
  }
}

TEST(FisherTest, CurvatureMatchesKlSecondOrder) {
  Rng rng(6);
  models::GaussianMlpPolicy policy(3, ActionSpace::Box({-2}, {2}), rng);
  const auto batch = GaussianBatch(policy, 30, rng);
  const auto old = policy.Distribution(batch.states, 30);
  const auto theta = policy.FlatParameters();
  std::vector<double> v(theta.size());
  for (double& x : v) x = rng.Normal();
  const double vfv = Dot(v, policy.FisherVectorProduct(batch.states, 30, v, 0.0));
  constexpr double eps = 1e-3;
  auto moved = theta;
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += eps * v[i];
  policy.SetFlatParameters(moved);
  const double kl = policy.MeanKl(old, batch.states, 30);
  EXPECT_NEAR(kl, 0.5 * eps * eps * vfv, 0.05 * 0.5 * eps * eps * vfv);
}

// ---------------------------------------------------------------------------
// Policy step

TEST(PolicyStepTest, ZeroAdvantagesLeaveParametersUnchanged) {
  Rng rng(7);
  models::GaussianMlpPolicy policy(3, ActionSpace::Box({-1}, {1}), rng);
  auto batch = GaussianBatch(policy, 30, rng);
  std::fill(batch.advantages.begin(), batch.advantages.end(), 0.0);
  const auto before = policy.FlatParameters();
  const auto report = PolicyStep(policy, batch, {});
  EXPECT_FALSE(report.accepted);
  const auto after = policy.FlatParameters();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-12);
}

TEST(PolicyStepTest, BanditStepRaisesFavoredActionWithinTrustRegion) {
  Rng rng(8);
  models::CategoricalMlpPolicy policy(1, 2, rng);
  const double before = policy.Probabilities(std::vector<double>{1.0})[0];
  const auto batch = BanditBatch(policy, 20, 1.0, -1.0);
  TrpoConfig config;
  const auto report = PolicyStep(policy, batch, config);
  ASSERT_TRUE(report.accepted);
  EXPECT_GT(policy.Probabilities(std::vector<double>{1.0})[0], before);
  EXPECT_LE(report.kl, 1.5 * config.max_kl);
  EXPECT_GT(report.surrogate_after, report.surrogate_before);
}

TEST(PolicyStepTest, AcceptedStepsRespectTheTrustRegion) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    models::GaussianMlpPolicy policy(3, ActionSpace::Box({-1, -1}, {1, 1}), rng);
    const auto batch = GaussianBatch(policy, 64, rng);
    TrpoConfig config;
    config.max_kl = 0.005;
    const auto report = PolicyStep(policy, batch, config);
    if (!report.accepted) continue;
    EXPECT_LE(report.kl, 1.5 * config.max_kl);
    EXPECT_GT(report.improvement, 0.0);
  }
}

TEST(PolicyStepTest, IdentityCurvatureGivesTheVanillaGradientDirection) {
  Rng rng(10);
  models::GaussianMlpPolicy policy(2, ActionSpace::Box({-1}, {1}), rng);
  const auto batch = GaussianBatch(policy, 32, rng);
  diff::Tape tape;
  policy.ZeroGrad();
  tape.Backward(SurrogateLoss(tape, policy, batch, 0.0));
  const auto grad = policy.FlatGrad();
  policy.ZeroGrad();
  const auto theta = policy.FlatParameters();
  TrpoConfig config;
  config.max_kl = 1e-6;  // small enough that the first step is accepted
  config.line_search_accept_ratio = 0.0;
  const auto report = PolicyStep(policy, batch, config, [](std::span<const double> v) {
    return std::vector<double>(v.begin(), v.end());
  });
  ASSERT_TRUE(report.accepted);
  const auto after = policy.FlatParameters();
  std::vector<double> step(theta.size());
  for (std::size_t i = 0; i < step.size(); ++i) step[i] = after[i] - theta[i];
  const double cosine = Dot(step, grad) / std::sqrt(Dot(step, step) * Dot(grad, grad));
  EXPECT_NEAR(cosine, 1.0, 1e-9);
}

TEST(TrpoStepTest, ValueFitLowersTheValueLoss) {
  Rng rng(11);
  models::GaussianMlpPolicy policy(2, ActionSpace::Box({-1}, {1}), rng);
  models::ValueMlp value(2, rng);
  auto batch = GaussianBatch(policy, 256, rng);
  for (std::size_t i = 0; i < batch.rows; ++i) batch.value_targets[i] = batch.states[2 * i] - batch.states[2 * i + 1];
  TrpoConfig config;
  config.value_fit_epochs = 1;
  const double first = TrpoStep(policy, value, batch, config, rng).value_loss;
  double last = first;
  for (int i = 0; i < 20; ++i) last = TrpoStep(policy, value, batch, config, rng).value_loss;
  EXPECT_LT(last, first);
}

TEST(TrpoStepTest, LearnsCartpoleFromTrueReward) {
  auto env = envs::MakeEnv("cartpole_analog");
  Rng rng(0);
  auto learner = adversarial::Learner::Create(*env, rng);
  adversarial::TrueReward reward;
  adversarial::RolloutSettings settings;
  settings.steps_per_iter = 1000;
  double best = 0.0;
  for (int it = 0; it < 60 && best < 195.0; ++it) {
    adversarial::ImitationIteration(learner, reward, *env, nullptr, settings, {}, 0, it, rng);
    if (it % 5 == 4) best = std::max(best, adversarial::EvaluatePolicy(*learner.policy, *env, 10, 99));
  }
  EXPECT_GE(best, 195.0);
}

}  // namespace
}  // namespace vigan::trpo
