#include "vigan/trpo/trpo.h"

#include <cmath>
#include <string>

#include "vigan/common/error.h"

namespace vigan::trpo {

using diff::Tape;
using diff::Tensor;

void TrpoConfig::Validate() const {
  if (!(max_kl > 0.0)) throw ConfigError("trpo: max_kl must be positive");
  if (cg_iters < 1) throw ConfigError("trpo: cg_iters must be at least 1");
  if (!(cg_damping >= 0.0)) throw ConfigError("trpo: cg_damping must be non-negative");
  if (line_search_backtracks < 1) throw ConfigError("trpo: line_search_backtracks must be at least 1");
  if (!(line_search_accept_ratio >= 0.0)) throw ConfigError("trpo: accept ratio must be non-negative");
  if (value_fit_epochs < 0) throw ConfigError("trpo: value_fit_epochs must be non-negative");
  if (!(value_learning_rate > 0.0)) throw ConfigError("trpo: value_learning_rate must be positive");
  if (value_minibatch < 1) throw ConfigError("trpo: value_minibatch must be at least 1");
  if (!(entropy_coef >= 0.0)) throw ConfigError("trpo: entropy_coef must be non-negative");
}

Tensor SurrogateLoss(Tape& tape, const models::Policy& policy, const rollout::AdvantageBatch& batch,
                     double entropy_coef) {
  if (batch.rows == 0) throw ValueError("surrogate: empty batch");
  for (double a : batch.advantages) {
    if (!std::isfinite(a)) throw ValueError("surrogate: non-finite advantage");
  }
  Tensor states({batch.rows, batch.state_dim}, batch.states);
  Tensor log_probs = policy.LogProbs(tape, states, batch.actions);
  Tensor ratio = tape.Exp(tape.Sub(log_probs, Tensor({batch.rows}, batch.log_probs)));
  Tensor objective = tape.Mean(tape.Mul(ratio, Tensor({batch.rows}, batch.advantages)));
  if (entropy_coef > 0.0) {
    objective = tape.Add(objective, tape.Scale(policy.MeanEntropy(tape, states), entropy_coef));
  }
  if (!std::isfinite(objective.item())) throw ValueError("surrogate: non-finite objective");
  return objective;
}

namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void CheckFinite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ValueError(std::string("conjugate gradient: non-finite ") + what);
  }
}

double SurrogateValue(const models::Policy& policy, const rollout::AdvantageBatch& batch,
                      double entropy_coef) {
  Tape tape;
  return SurrogateLoss(tape, policy, batch, entropy_coef).item();
}

}  // namespace

CgResult ConjugateGradient(const LinearOperator& apply, std::span<const double> b, int iters,
                           double tol) {
  const std::size_t n = b.size();
  CgResult result;
  result.x.assign(n, 0.0);
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> p = r;
  double rr = Dot(r, r);
  const double b_norm = std::sqrt(rr);
  result.residual_norm = b_norm;
  if (b_norm == 0.0) return result;
  std::vector<double> x(n, 0.0);
  for (int k = 0; k < iters; ++k) {
    const std::vector<double> ap = apply(p);
    CheckFinite(ap, "operator output");
    const double pap = Dot(p, ap);
    if (!(pap > 0.0)) break;  // direction of zero or negative curvature
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    CheckFinite(x, "iterate");
    const double rr_new = Dot(r, r);
    result.iterations = k + 1;
    if (std::sqrt(rr_new) < result.residual_norm) {
      result.residual_norm = std::sqrt(rr_new);
      result.x = x;
    }
    if (std::sqrt(rr_new) <= tol * b_norm) break;
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
  return result;
}

TrpoReport PolicyStep(models::Policy& policy, const rollout::AdvantageBatch& batch,
                      const TrpoConfig& config, const LinearOperator& curvature) {
  config.Validate();
  TrpoReport report;
  const std::vector<double> theta = policy.FlatParameters();
  const models::DistParams old_dist = policy.Distribution(batch.states, batch.rows);

  std::vector<double> grad;
  {
    Tape tape;
    Tensor objective = SurrogateLoss(tape, policy, batch, config.entropy_coef);
    report.surrogate_before = objective.item();
    policy.ZeroGrad();
    tape.Backward(objective);
    grad = policy.FlatGrad();
    policy.ZeroGrad();
  }
  report.surrogate_after = report.surrogate_before;

  LinearOperator apply = curvature;
  if (!apply) {
    apply = [&](std::span<const double> v) {
      return policy.FisherVectorProduct(batch.states, batch.rows, v, config.cg_damping);
    };
  }
  const CgResult cg = ConjugateGradient(apply, grad, config.cg_iters);
  report.cg_residual = cg.residual_norm;
  const std::vector<double> f_dir = apply(cg.x);
  const double shs = Dot(cg.x, f_dir);
  if (!(shs > 0.0) || !std::isfinite(shs)) return report;  // no signal

  const double scale = std::sqrt(2.0 * config.max_kl / shs);
  std::vector<double> full_step(cg.x.size());
  for (std::size_t i = 0; i < full_step.size(); ++i) full_step[i] = scale * cg.x[i];
  report.expected_improvement = Dot(grad, full_step);

  std::vector<double> candidate(theta.size());
  double fraction = 1.0;
  for (int k = 0; k < config.line_search_backtracks; ++k, fraction *= 0.5) {
    for (std::size_t i = 0; i < theta.size(); ++i) candidate[i] = theta[i] + fraction * full_step[i];
    policy.SetFlatParameters(candidate);
    report.line_search_steps = k + 1;
    double value = 0.0;
    double kl = 0.0;
    try {
      value = SurrogateValue(policy, batch, config.entropy_coef);
      kl = policy.MeanKl(old_dist, batch.states, batch.rows);
    } catch (const ValueError&) {
      continue;  // overflow at this step size; shrink
    }
    const double improvement = value - report.surrogate_before;
    const double expected = fraction * report.expected_improvement;
    if (std::isfinite(kl) && kl <= config.max_kl && improvement > 0.0 &&
        improvement >= config.line_search_accept_ratio * expected) {
      report.accepted = true;
      report.surrogate_after = value;
      report.improvement = improvement;
      report.kl = kl;
      return report;
    }
  }
  policy.SetFlatParameters(theta);
  return report;
}

TrpoReport TrpoStep(models::Policy& policy, models::ValueMlp& value,
                    const rollout::AdvantageBatch& batch, const TrpoConfig& config, Rng& rng) {
  TrpoReport report = PolicyStep(policy, batch, config);
  if (config.value_fit_epochs > 0) {
    report.value_loss = value.Fit(batch.states, batch.value_targets,
                                  {config.value_fit_epochs, config.value_learning_rate,
                                   config.value_minibatch},
                                  rng);
  }
  return report;
}

}  // namespace vigan::trpo
