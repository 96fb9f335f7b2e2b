#include "vigan/models/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "vigan/common/error.h"

namespace vigan::models {

using diff::Tape;
using diff::Tensor;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

void CheckRows(std::span<const double> states, std::size_t rows, std::size_t dim) {
  if (states.size() != rows * dim) {
    throw ShapeError("state batch has " + std::to_string(states.size()) + " values, expected " +
                     std::to_string(rows) + " x " + std::to_string(dim));
  }
}

std::vector<double> SoftmaxRow(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) z += (p[j] = std::exp(logits[j] - mx));
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> LogSoftmaxRows(std::span<const double> logits, std::size_t rows,
                                   std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = logits.data() + i * cols;
    const double mx = *std::max_element(row, row + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = row[j] - lse;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Policy

double Policy::Entropy(std::span<const double> states, std::size_t rows) const {
  Tape tape;
  Tensor s({rows, state_dim()}, std::vector<double>(states.begin(), states.end()));
  return MeanEntropy(tape, s).item();
}

void Policy::SetFlatParameters(std::span<const double> flat) {
  auto params = Parameters();
  Unflatten(flat, params);
}

void Policy::ZeroGrad() {
  for (Tensor& p : Parameters()) p.ZeroGrad();
}

void Policy::CheckState(std::span<const double> state) const {
  if (state.size() != state_dim()) {
    throw ShapeError("state has " + std::to_string(state.size()) + " entries, policy expects " +
                     std::to_string(state_dim()));
  }
  for (double v : state) {
    if (!std::isfinite(v)) throw ValueError("non-finite state passed to policy");
  }
}

// ---------------------------------------------------------------------------
// GaussianMlpPolicy

GaussianMlpPolicy::GaussianMlpPolicy(std::size_t state_dim, ActionSpace space, Rng& rng,
                                     double init_log_std)
    : space_(std::move(space)),
      mean_({state_dim, kHiddenUnits, kHiddenUnits, space_.dim()}, rng, 0.01),
      log_std_(Tensor::Filled({space_.dim()}, init_log_std, true)) {
  if (space_.discrete) throw ValueError("gaussian policy needs a continuous action space");
}

ActionSample GaussianMlpPolicy::Act(std::span<const double> state, Rng& rng,
                                    bool deterministic) const {
  CheckState(state);
  const std::vector<double> mu = mean_.Evaluate(state, 1);
  auto ls = log_std_.data();
  ActionSample out;
  out.raw.resize(mu.size());
  double lp = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double eps = deterministic ? 0.0 : rng.Normal();
    out.raw[d] = mu[d] + std::exp(ls[d]) * eps;
    lp += -0.5 * eps * eps - ls[d] - kHalfLog2Pi;
  }
  out.log_prob = lp;
  out.action = space_.Clamp(out.raw);
  return out;
}

double GaussianMlpPolicy::LogProb(std::span<const double> state,
                                  std::span<const double> action) const {
  CheckState(state);
  const std::vector<double> mu = mean_.Evaluate(state, 1);
  if (action.size() != mu.size()) throw ShapeError("gaussian log_prob: action size mismatch");
  auto ls = log_std_.data();
  double lp = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double z = (action[d] - mu[d]) / std::exp(ls[d]);
    lp += -0.5 * z * z - ls[d] - kHalfLog2Pi;
  }
  return lp;
}

Tensor GaussianMlpPolicy::LogProbs(Tape& tape, const Tensor& states,
                                   std::span<const double> actions) const {
  const std::size_t rows = states.dim(0);
  const std::size_t dim = space_.dim();
  if (actions.size() != rows * dim) throw ShapeError("gaussian log_probs: action batch mismatch");
  Tensor mu = mean_.Forward(tape, states);
  Tensor a({rows, dim}, std::vector<double>(actions.begin(), actions.end()));
  Tensor z = tape.Mul(tape.Sub(a, mu), tape.Exp(tape.Scale(log_std_, -1.0)));
  Tensor quad = tape.SumRows(tape.Scale(tape.Mul(z, z), -0.5));
  Tensor lp = tape.Sub(quad, tape.Sum(log_std_));
  return tape.AddScalar(lp, -static_cast<double>(dim) * kHalfLog2Pi);
}

Tensor GaussianMlpPolicy::MeanEntropy(Tape& tape, const Tensor& /*states*/) const {
  return tape.AddScalar(tape.Sum(log_std_), static_cast<double>(space_.dim()) * kHalfLog2PiE);
}

DistParams GaussianMlpPolicy::Distribution(std::span<const double> states,
                                           std::size_t rows) const {
  CheckRows(states, rows, state_dim());
  DistParams d;
  d.rows = rows;
  d.cols = space_.dim();
  d.values = mean_.Evaluate(states, rows);
  d.log_std.assign(log_std_.data().begin(), log_std_.data().end());
  return d;
}

double GaussianMlpPolicy::MeanKl(const DistParams& old, std::span<const double> states,
                                 std::size_t rows) const {
  CheckRows(states, rows, state_dim());
  if (old.rows != rows || old.cols != space_.dim()) throw ShapeError("kl: old distribution shape");
  const std::vector<double> mu = mean_.Evaluate(states, rows);
  auto ls = log_std_.data();
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t d = 0; d < old.cols; ++d) {
      const double var_old = std::exp(2.0 * old.log_std[d]);
      const double var_new = std::exp(2.0 * ls[d]);
      const double diff = old.values[i * old.cols + d] - mu[i * old.cols + d];
      total += ls[d] - old.log_std[d] + (var_old + diff * diff) / (2.0 * var_new) - 0.5;
    }
  }
  return total / static_cast<double>(rows);
}

std::vector<double> GaussianMlpPolicy::FisherVectorProduct(std::span<const double> states,
                                                           std::size_t rows,
                                                           std::span<const double> v,
                                                           double damping) const {
  CheckRows(states, rows, state_dim());
  const std::size_t n_mean = mean_.NumParameters();
  const std::size_t dim = space_.dim();
  if (v.size() != n_mean + dim) {
    throw ShapeError("fisher_vector_product: vector has " + std::to_string(v.size()) +
                     " entries, policy has " + std::to_string(n_mean + dim) + " parameters");
  }
  auto [mu, dmu] = mean_.Jvp(states, rows, v.subspan(0, n_mean));
  auto ls = log_std_.data();
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t d = 0; d < dim; ++d) dmu[i * dim + d] *= std::exp(-2.0 * ls[d]) * inv_rows;
  }
  std::vector<double> out = mean_.Vjp(states, rows, dmu);
  for (std::size_t d = 0; d < dim; ++d) out.push_back(2.0 * v[n_mean + d]);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += damping * v[i];
  return out;
}

std::vector<Tensor> GaussianMlpPolicy::Parameters() const {
  auto params = mean_.Parameters();
  params.push_back(log_std_);
  return params;
}

diff::NamedTensors GaussianMlpPolicy::Named(const std::string& prefix) const {
  diff::NamedTensors out;
  mean_.AppendNamed(prefix + ".mean", out);
  out.emplace_back(prefix + ".log_std", log_std_);
  return out;
}

std::unique_ptr<Policy> GaussianMlpPolicy::Clone() const {
  auto copy = std::unique_ptr<GaussianMlpPolicy>(new GaussianMlpPolicy());
  copy->space_ = space_;
  copy->mean_ = mean_.Clone();
  copy->log_std_ = log_std_.Clone();
  copy->log_std_.set_requires_grad(true);
  return copy;
}

// ---------------------------------------------------------------------------
// CategoricalMlpPolicy

CategoricalMlpPolicy::CategoricalMlpPolicy(std::size_t state_dim, std::size_t num_actions,
                                           Rng& rng)
    : space_(ActionSpace::Discrete(num_actions)),
      logits_({state_dim, kHiddenUnits, kHiddenUnits, num_actions}, rng, 0.01) {}

std::vector<double> CategoricalMlpPolicy::Probabilities(std::span<const double> state) const {
  CheckState(state);
  return SoftmaxRow(logits_.Evaluate(state, 1));
}

ActionSample CategoricalMlpPolicy::Act(std::span<const double> state, Rng& rng,
                                       bool deterministic) const {
  const std::vector<double> p = Probabilities(state);
  std::size_t choice = 0;
  if (deterministic) {
    choice = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  } else {
    const double u = rng.Uniform();
    double acc = 0.0;
    choice = p.size() - 1;
    for (std::size_t j = 0; j < p.size(); ++j) {
      acc += p[j];
      if (u < acc) {
        choice = j;
        break;
      }
    }
  }
  const std::vector<double> lp = LogSoftmaxRows(logits_.Evaluate(state, 1), 1, p.size());
  ActionSample out;
  out.raw = {static_cast<double>(choice)};
  out.action = out.raw;
  out.log_prob = lp[choice];
  return out;
}

double CategoricalMlpPolicy::LogProb(std::span<const double> state,
                                     std::span<const double> action) const {
  CheckState(state);
  const std::vector<double> lp = LogSoftmaxRows(logits_.Evaluate(state, 1), 1, space_.n);
  const auto idx = static_cast<std::size_t>(std::lround(action[0]));
  if (idx >= space_.n) throw ValueError("categorical log_prob: action out of range");
  return lp[idx];
}

Tensor CategoricalMlpPolicy::LogProbs(Tape& tape, const Tensor& states,
                                      std::span<const double> actions) const {
  const std::size_t rows = states.dim(0);
  if (actions.size() != rows) throw ShapeError("categorical log_probs: action batch mismatch");
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = static_cast<std::size_t>(std::lround(actions[i]));
  return tape.Pick(tape.LogSoftmax(logits_.Forward(tape, states)), idx);
}

Tensor CategoricalMlpPolicy::MeanEntropy(Tape& tape, const Tensor& states) const {
  Tensor logp = tape.LogSoftmax(logits_.Forward(tape, states));
  Tensor plogp = tape.Mul(tape.Exp(logp), logp);
  return tape.Scale(tape.Sum(plogp), -1.0 / static_cast<double>(states.dim(0)));
}

DistParams CategoricalMlpPolicy::Distribution(std::span<const double> states,
                                              std::size_t rows) const {
  CheckRows(states, rows, state_dim());
  DistParams d;
  d.rows = rows;
  d.cols = space_.n;
  d.values = LogSoftmaxRows(logits_.Evaluate(states, rows), rows, space_.n);
  return d;
}

double CategoricalMlpPolicy::MeanKl(const DistParams& old, std::span<const double> states,
                                    std::size_t rows) const {
  CheckRows(states, rows, state_dim());
  if (old.rows != rows || old.cols != space_.n) throw ShapeError("kl: old distribution shape");
  const std::vector<double> lp = LogSoftmaxRows(logits_.Evaluate(states, rows), rows, space_.n);
  double total = 0.0;
  for (std::size_t i = 0; i < rows * space_.n; ++i) {
    const double lo = old.values[i];
    total += std::exp(lo) * (lo - lp[i]);
  }
  return total / static_cast<double>(rows);
}

std::vector<double> CategoricalMlpPolicy::FisherVectorProduct(std::span<const double> states,
                                                              std::size_t rows,
                                                              std::span<const double> v,
                                                              double damping) const {
  CheckRows(states, rows, state_dim());
  if (v.size() != logits_.NumParameters()) {
    throw ShapeError("fisher_vector_product: vector has " + std::to_string(v.size()) +
                     " entries, policy has " + std::to_string(logits_.NumParameters()) +
                     " parameters");
  }
  const std::size_t k = space_.n;
  auto [z, dz] = logits_.Jvp(states, rows, v);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  std::vector<double> w(rows * k);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::vector<double> p = SoftmaxRow(std::span<const double>(z).subspan(i * k, k));
    double pu = 0.0;
    for (std::size_t j = 0; j < k; ++j) pu += p[j] * dz[i * k + j];
    for (std::size_t j = 0; j < k; ++j) w[i * k + j] = p[j] * (dz[i * k + j] - pu) * inv_rows;
  }
  std::vector<double> out = logits_.Vjp(states, rows, w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += damping * v[i];
  return out;
}

std::vector<Tensor> CategoricalMlpPolicy::Parameters() const { return logits_.Parameters(); }

diff::NamedTensors CategoricalMlpPolicy::Named(const std::string& prefix) const {
  diff::NamedTensors out;
  logits_.AppendNamed(prefix + ".logits", out);
  return out;
}

std::unique_ptr<Policy> CategoricalMlpPolicy::Clone() const {
  auto copy = std::unique_ptr<CategoricalMlpPolicy>(new CategoricalMlpPolicy());
  copy->space_ = space_;
  copy->logits_ = logits_.Clone();
  return copy;
}

std::unique_ptr<Policy> MakePolicy(std::size_t state_dim, const ActionSpace& space, Rng& rng) {
  if (space.discrete) return std::make_unique<CategoricalMlpPolicy>(state_dim, space.n, rng);
  return std::make_unique<GaussianMlpPolicy>(state_dim, space, rng);
}

// ---------------------------------------------------------------------------
// ValueMlp

ValueMlp::ValueMlp(std::size_t state_dim, Rng& rng)
    : net_({state_dim, kHiddenUnits, kHiddenUnits, 1}, rng) {}

Tensor ValueMlp::Forward(Tape& tape, const Tensor& states) const {
  Tensor out = net_.Forward(tape, states);
  return tape.Reshape(out, {states.dim(0)});
}

std::vector<double> ValueMlp::Predict(std::span<const double> states, std::size_t rows) const {
  return net_.Evaluate(states, rows);
}

double ValueMlp::Fit(std::span<const double> states, std::span<const double> targets,
                     const FitOptions& options, Rng& rng) {
  const std::size_t dim = net_.in_dim();
  const std::size_t rows = targets.size();
  CheckRows(states, rows, dim);
  if (rows == 0) return 0.0;
  if (!optimizer_ || optimizer_->options().learning_rate != options.learning_rate) {
    optimizer_ = std::make_unique<diff::Adam>(net_.Parameters(),
                                              diff::Adam::Options{options.learning_rate});
  }
  const std::size_t mb = std::max<std::size_t>(1, std::min(options.minibatch, rows));
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  double last = 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng.Index(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < rows; start += mb) {
      const std::size_t end = std::min(rows, start + mb);
      const std::size_t n = end - start;
      std::vector<double> xs(n * dim), ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = order[start + i];
        std::copy_n(states.begin() + static_cast<long>(r * dim), dim, xs.begin() + static_cast<long>(i * dim));
        ys[i] = targets[r];
      }
      Tape tape;
      Tensor pred = Forward(tape, Tensor({n, dim}, std::move(xs)));
      Tensor err = tape.Sub(pred, Tensor({n}, std::move(ys)));
      Tensor loss = tape.Mean(tape.Mul(err, err));
      tape.Backward(loss);
      optimizer_->Step();
      epoch_loss += loss.item() * static_cast<double>(n);
    }
    last = epoch_loss / static_cast<double>(rows);
  }
  return last;
}

}  // namespace vigan::models
