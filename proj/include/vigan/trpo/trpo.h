#ifndef VIGAN_TRPO_TRPO_H_
#define VIGAN_TRPO_TRPO_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/diffcore/tape.h"
#include "vigan/models/policy.h"
#include "vigan/rollout/advantage.h"

namespace vigan::trpo {

struct TrpoConfig {
  double max_kl = 0.01;
  int cg_iters = 10;
  double cg_damping = 0.1;
  int line_search_backtracks = 10;
  double line_search_accept_ratio = 0.1;
  int value_fit_epochs = 5;
  double value_learning_rate = 1e-3;
  std::size_t value_minibatch = 64;
  double entropy_coef = 0.0;

  // Throws ConfigError on invalid values.
  void Validate() const;
};

struct TrpoReport {
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  double improvement = 0.0;           // surrogate_after - surrogate_before
  double expected_improvement = 0.0;  // first-order prediction for the full step
  double kl = 0.0;                    // mean KL(old || new) on the batch
  int line_search_steps = 0;
  bool accepted = false;
  double cg_residual = 0.0;
  double value_loss = 0.0;
};

// mean[exp(log pi(a|s) - log pi_old(a|s)) * A] + entropy_coef * H, to be
// maximized.
diff::Tensor SurrogateLoss(diff::Tape& tape, const models::Policy& policy,
                           const rollout::AdvantageBatch& batch, double entropy_coef);

using LinearOperator = std::function<std::vector<double>(std::span<const double>)>;

struct CgResult {
  std::vector<double> x;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Solves A x = b for symmetric positive (semi-)definite A. Stops once
// ||A x - b|| <= tol * ||b|| and returns the iterate with the smallest
// residual seen.
CgResult ConjugateGradient(const LinearOperator& apply, std::span<const double> b, int iters,
                           double tol = 1e-10);

// Natural-gradient step scaled to the trust region, with backtracking
// line search; then fits the value function to the batch targets.
TrpoReport TrpoStep(models::Policy& policy, models::ValueMlp& value,
                    const rollout::AdvantageBatch& batch, const TrpoConfig& config, Rng& rng);

// The policy step alone, with an injectable curvature operator (defaults to
// the policy's damped Fisher-vector product when empty).
TrpoReport PolicyStep(models::Policy& policy, const rollout::AdvantageBatch& batch,
                      const TrpoConfig& config, const LinearOperator& curvature = {});

}  // namespace vigan::trpo

#endif  // VIGAN_TRPO_TRPO_H_
