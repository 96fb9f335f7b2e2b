#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "vigan/common/error.h"
#include "vigan/common/rng.h"
#include "vigan/models/discriminator.h"
#include "vigan/models/mlp.h"
#include "vigan/models/policy.h"

namespace vigan::models {
namespace {

std::vector<double> RandomVector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(-scale, scale);
  return v;
}

// Zeroes the mean network so the mean is exactly `mean` everywhere.
void SetConstantMean(GaussianMlpPolicy& policy, double mean, double log_std) {
  policy.SetFlatParameters(std::vector<double>(policy.NumParameters(), 0.0));
  auto params = policy.Parameters();
  for (double& b : params[params.size() - 2].data()) b = mean;
  for (double& l : policy.log_std().data()) l = log_std;
}

TEST(MlpTest, EvaluateIsBitIdenticalToTapedForward) {
  Rng rng(1);
  Mlp net({5, 64, 64, 3}, rng);
  const auto x = RandomVector(7 * 5, rng);
  diff::Tape tape;
  diff::Tensor out = net.Forward(tape, diff::Tensor({7, 5}, x));
  const auto eval = net.Evaluate(x, 7);
  ASSERT_EQ(eval.size(), out.size());
  for (std::size_t i = 0; i < eval.size(); ++i) EXPECT_EQ(eval[i], out.data()[i]);
}

TEST(MlpTest, JvpMatchesFiniteDifferences) {
  Rng rng(2);
  Mlp net({3, 8, 8, 2}, rng);
  const auto x = RandomVector(4 * 3, rng);
  const auto dir = RandomVector(net.NumParameters(), rng);
  const auto [out, dout] = net.Jvp(x, 4, dir);
  EXPECT_EQ(out, net.Evaluate(x, 4));
  auto params = net.Parameters();
  const auto theta = Flatten(params);
  constexpr double h = 1e-6;
  auto shifted = [&](double sign) {
    std::vector<double> t = theta;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += sign * h * dir[i];
    Unflatten(t, params);
    return net.Evaluate(x, 4);
  };
  const auto up = shifted(1.0);
  const auto down = shifted(-1.0);
  Unflatten(theta, params);
  for (std::size_t i = 0; i < dout.size(); ++i) EXPECT_NEAR(dout[i], (up[i] - down[i]) / (2 * h), 1e-7);
}

TEST(MlpTest, VjpMatchesTapedBackward) {
  Rng rng(3);
  Mlp net({3, 8, 8, 2}, rng);
  const auto x = RandomVector(5 * 3, rng);
  const auto g = RandomVector(5 * 2, rng);
  const auto vjp = net.Vjp(x, 5, g);
  diff::Tape tape;
  diff::Tensor out = net.Forward(tape, diff::Tensor({5, 3}, x));
  tape.Backward(tape.Sum(tape.Mul(out, diff::Tensor({5, 2}, g))));
  const auto grad = FlattenGrad(net.Parameters());
  ASSERT_EQ(vjp.size(), grad.size());
  for (std::size_t i = 0; i < vjp.size(); ++i) EXPECT_NEAR(vjp[i], grad[i], 1e-12);
}

TEST(PolicyTest, GaussianLogProbAtMode) {
  Rng rng(4);
  GaussianMlpPolicy policy(3, ActionSpace::Box({-5.0}, {5.0}), rng);
  SetConstantMean(policy, 0.0, 0.0);
  const std::vector<double> s = {0.1, 0.2, 0.3};
  EXPECT_NEAR(policy.LogProb(s, std::vector<double>{0.0}), -0.5 * std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(policy.LogProb(s, std::vector<double>{0.0}), -0.9189, 1e-4);
}

TEST(PolicyTest, CategoricalUniformLogits) {
  Rng rng(5);
  CategoricalMlpPolicy policy(2, 2, rng);
  policy.SetFlatParameters(std::vector<double>(policy.NumParameters(), 0.0));
  const auto p = policy.Probabilities(std::vector<double>{0.5, -1.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PolicyTest, CategoricalProbabilitiesSumToOne) {
  Rng rng(6);
  CategoricalMlpPolicy policy(4, 5, rng);
  policy.SetFlatParameters(RandomVector(policy.NumParameters(), rng, 2.0));
  for (int i = 0; i < 50; ++i) {
    const auto p = policy.Probabilities(RandomVector(4, rng, 3.0));
    double total = 0.0;
    for (double v : p) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(PolicyTest, VanishingStdSamplesTheMean) {
  Rng rng(7);
  GaussianMlpPolicy policy(2, ActionSpace::Box({-5.0, -5.0}, {5.0, 5.0}), rng);
  SetConstantMean(policy, 0.75, -40.0);
  for (int i = 0; i < 10; ++i) {
    const auto sample = policy.Act(std::vector<double>{0.0, 1.0}, rng);
    EXPECT_NEAR(sample.action[0], 0.75, 1e-12);
    EXPECT_NEAR(sample.action[1], 0.75, 1e-12);
  }
}

TEST(PolicyTest, SampledActionsAreClampedButLogProbIsPreClamp) {
  Rng rng(8);
  GaussianMlpPolicy policy(1, ActionSpace::Box({-0.1}, {0.1}), rng);
  SetConstantMean(policy, 0.0, 0.0);
  for (int i = 0; i < 100; ++i) {
    const auto sample = policy.Act(std::vector<double>{0.0}, rng);
    EXPECT_LE(std::abs(sample.action[0]), 0.1);
    EXPECT_NEAR(sample.log_prob, policy.LogProb(std::vector<double>{0.0}, sample.raw), 1e-12);
  }
}

TEST(PolicyTest, GaussianKlExample) {
  Rng rng(9);
  GaussianMlpPolicy policy(1, ActionSpace::Box({-5.0}, {5.0}), rng);
  SetConstantMean(policy, 0.0, 0.0);
  const std::vector<double> states = {0.3};
  const DistParams old = policy.Distribution(states, 1);
  SetConstantMean(policy, 1.0, 0.0);
  EXPECT_NEAR(policy.MeanKl(old, states, 1), 0.5, 1e-12);
}

TEST(PolicyTest, KlOfIdenticalPoliciesIsZero) {
  Rng rng(10);
  const auto states = RandomVector(20 * 3, rng);
  GaussianMlpPolicy gauss(3, ActionSpace::Box({-1.0, -1.0}, {1.0, 1.0}), rng);
  EXPECT_EQ(gauss.MeanKl(gauss.Distribution(states, 20), states, 20), 0.0);
  CategoricalMlpPolicy cat(3, 4, rng);
  EXPECT_EQ(cat.MeanKl(cat.Distribution(states, 20), states, 20), 0.0);
}

TEST(PolicyTest, EntropyExamples) {
  Rng rng(11);
  GaussianMlpPolicy gauss(1, ActionSpace::Box({-5.0, -5.0}, {5.0, 5.0}), rng);
  SetConstantMean(gauss, 0.3, 0.0);
  EXPECT_NEAR(gauss.Entropy(std::vector<double>{0.0}, 1), 2 * 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-12);
  EXPECT_NEAR(gauss.Entropy(std::vector<double>{0.0}, 1) / 2, 1.4189, 1e-4);

  CategoricalMlpPolicy cat(1, 2, rng);
  cat.SetFlatParameters(std::vector<double>(cat.NumParameters(), 0.0));
  auto params = cat.Parameters();
  // logits [0, ln(7/3)] give p = [0.3, 0.7].
  params.back().data()[1] = std::log(7.0 / 3.0);
  EXPECT_NEAR(cat.Entropy(std::vector<double>{0.0}, 1), -(0.3 * std::log(0.3) + 0.7 * std::log(0.7)), 1e-12);
  EXPECT_NEAR(cat.Entropy(std::vector<double>{0.0}, 1), 0.6109, 1e-4);
}

TEST(PolicyTest, GaussianSampleMoments) {
  Rng rng(12);
  GaussianMlpPolicy policy(1, ActionSpace::Box({-100.0}, {100.0}), rng);
  SetConstantMean(policy, 0.4, std::log(1.5));
  constexpr int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = policy.Act(std::vector<double>{0.0}, rng).action[0];
    sum += a;
    sq += a * a;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_LE(std::abs(mean - 0.4), 3 * 1.5 / std::sqrt(n));
  // Standard error of the sample variance is sigma^2 sqrt(2 / n).
  EXPECT_LE(std::abs(var - 2.25), 3 * 2.25 * std::sqrt(2.0 / n));
}

TEST(PolicyTest, DensityIntegratesToOne) {
  Rng rng(13);
  GaussianMlpPolicy policy(2, ActionSpace::Box({-1.0}, {1.0}), rng);
  const std::vector<double> s = {0.2, -0.4};
  double total = 0.0;
  const double lo = -12.0, hi = 12.0;
  const int steps = 24000;
  const double dx = (hi - lo) / steps;
  for (int i = 0; i < steps; ++i) {
    total += std::exp(policy.LogProb(s, std::vector<double>{lo + (i + 0.5) * dx})) * dx;
  }
  EXPECT_NEAR(total, 1.0, 1e-3);
}

// u^T H v from second differences of the KL along u + v and u - v.
double QuadraticFormByDifferences(Policy& policy, std::span<const double> states, std::size_t rows,
                                  const std::vector<double>& u, const std::vector<double>& v) {
  const auto theta = policy.FlatParameters();
  const DistParams old = policy.Distribution(states, rows);
  auto second_difference = [&](double sign) {
    constexpr double h = 1e-5;
    double acc = 0.0;
    for (double dir : {1.0, -1.0}) {
      std::vector<double> t = theta;
      for (std::size_t i = 0; i < t.size(); ++i) t[i] += dir * h * (u[i] + sign * v[i]);
      policy.SetFlatParameters(t);
      acc += policy.MeanKl(old, states, rows);
    }
    policy.SetFlatParameters(theta);
    return acc / (h * h);
  };
  return (second_difference(1.0) - second_difference(-1.0)) / 4.0;
}

TEST(PolicyTest, FisherVectorProductMatchesKlHessian) {
  Rng rng(14);
  const std::size_t rows = 6;
  const auto states = RandomVector(rows * 3, rng);
  std::vector<std::unique_ptr<Policy>> policies;
  policies.push_back(std::make_unique<GaussianMlpPolicy>(3, ActionSpace::Box({-1.0, -1.0}, {1.0, 1.0}), rng, -0.3));
  policies.push_back(std::make_unique<CategoricalMlpPolicy>(3, 3, rng));
  for (auto& policy : policies) {
    // Larger output weights so the Hessian is not dominated by the bias.
    policy->SetFlatParameters(RandomVector(policy->NumParameters(), rng, 0.3));
    for (int trial = 0; trial < 3; ++trial) {
      const auto u = RandomVector(policy->NumParameters(), rng);
      const auto v = RandomVector(policy->NumParameters(), rng);
      const auto hv = policy->FisherVectorProduct(states, rows, v, 0.0);
      double exact = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) exact += u[i] * hv[i];
      const double numeric = QuadraticFormByDifferences(*policy, states, rows, u, v);
      EXPECT_NEAR(exact, numeric, 1e-4 * std::max(1.0, std::abs(exact))) << "trial " << trial;
      const auto damped = policy->FisherVectorProduct(states, rows, v, 0.1);
      for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(damped[i], hv[i] + 0.1 * v[i], 1e-12);
    }
  }
}

TEST(PolicyTest, NonFiniteStateThrows) {
  Rng rng(15);
  auto policy = MakePolicy(2, ActionSpace::Discrete(3), rng);
  EXPECT_THROW(policy->Act(std::vector<double>{0.0, std::nan("")}, rng), ValueError);
}

TEST(PolicyTest, NamesAreStable) {
  Rng rng(16);
  GaussianMlpPolicy policy(2, ActionSpace::Box({-1.0}, {1.0}), rng);
  const auto named = policy.Named();
  EXPECT_EQ(named.front().first, "policy.mean.0.weight");
  EXPECT_EQ(named.back().first, "policy.log_std");
  EXPECT_EQ(named.size(), 7u);
}

TEST(PolicyTest, CloneIsIndependent) {
  Rng rng(17);
  CategoricalMlpPolicy policy(2, 2, rng);
  auto copy = policy.Clone();
  EXPECT_EQ(copy->FlatParameters(), policy.FlatParameters());
  copy->SetFlatParameters(std::vector<double>(copy->NumParameters(), 0.0));
  EXPECT_NE(copy->FlatParameters(), policy.FlatParameters());
}

TEST(ValueTest, FitReducesLoss) {
  Rng rng(18);
  ValueMlp value(2, rng);
  const std::size_t rows = 256;
  const auto states = RandomVector(rows * 2, rng);
  std::vector<double> targets(rows);
  for (std::size_t i = 0; i < rows; ++i) targets[i] = 3.0 * states[2 * i] - states[2 * i + 1] + 1.0;
  auto mse = [&] {
    const auto pred = value.Predict(states, rows);
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += (pred[i] - targets[i]) * (pred[i] - targets[i]);
    return acc / rows;
  };
  const double before = mse();
  for (int i = 0; i < 40; ++i) value.Fit(states, targets, {5, 1e-3, 64}, rng);
  EXPECT_LT(mse(), 0.1 * before);
}

TEST(DiscriminatorTest, OutputsAreClamped) {
  Rng rng(19);
  MlpDiscriminator disc(4, rng);
  diff::Tensor huge({3, 4}, {1e6, -1e6, 1e6, 1e6, -1e6, 1e6, -1e6, -1e6, 0, 0, 0, 0});
  for (double p : disc.Evaluate(huge)) {
    EXPECT_GE(p, kDiscriminatorEps);
    EXPECT_LE(p, 1.0 - kDiscriminatorEps);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(DiscriminatorTest, ConvShapesAndNames) {
  Rng rng(20);
  ConvDiscriminator disc(6, 32, 32, rng);
  diff::Tensor batch({2, 6, 32, 32}, RandomVector(2 * 6 * 32 * 32, rng));
  diff::Tape tape;
  diff::Tensor p = disc.Probability(tape, batch);
  ASSERT_EQ(p.shape(), (diff::Shape{2}));
  for (double v : p.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(disc.Evaluate(batch), std::vector<double>(p.data().begin(), p.data().end()));
  EXPECT_EQ(disc.Named().front().first, "disc.conv.0.weight");
  EXPECT_THROW(ConvDiscriminator(3, 30, 32, rng), ShapeError);
}

TEST(DiscriminatorTest, TcnEmbeddingDimension) {
  Rng rng(21);
  TcnEncoder enc(3, 32, 32, rng);
  diff::Tensor batch({3, 3, 32, 32}, RandomVector(3 * 3 * 32 * 32, rng));
  const auto emb = enc.Evaluate(batch);
  EXPECT_EQ(emb.size(), 3 * kEmbeddingDim);
  for (double v : emb) EXPECT_TRUE(std::isfinite(v));
}

}  // namespace
}  // namespace vigan::models
