#ifndef VIGAN_MODELS_POLICY_H_
#define VIGAN_MODELS_POLICY_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/common/spaces.h"
#include "vigan/diffcore/checkpoint.h"
#include "vigan/diffcore/optim.h"
#include "vigan/diffcore/tape.h"
#include "vigan/models/mlp.h"

namespace vigan::models {

inline constexpr std::size_t kHiddenUnits = 64;

struct ActionSample {
  std::vector<double> action;  // executable: clamped to the action space
  std::vector<double> raw;     // the draw itself, before clamping
  double log_prob = 0.0;       // density / mass of `raw`
};

// Frozen distribution parameters over a batch of states. Gaussian policies
// store per-row means plus the shared log std; categorical policies store
// per-row log probabilities.
struct DistParams {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<double> log_std;
};

// Stochastic policy over low-dimensional states. Batched methods take a
// row-major [rows, state_dim] state matrix.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t state_dim() const = 0;
  virtual const ActionSpace& action_space() const = 0;

  // Samples a ~ pi(.|s). With `deterministic`, returns the mode.
  virtual ActionSample Act(std::span<const double> state, Rng& rng,
                           bool deterministic = false) const = 0;
  virtual double LogProb(std::span<const double> state, std::span<const double> action) const = 0;

  // Taped log pi(a_i|s_i) for every row: shape [rows].
  virtual diff::Tensor LogProbs(diff::Tape& tape, const diff::Tensor& states,
                                std::span<const double> actions) const = 0;
  // Taped mean entropy over the rows (scalar).
  virtual diff::Tensor MeanEntropy(diff::Tape& tape, const diff::Tensor& states) const = 0;

  virtual DistParams Distribution(std::span<const double> states, std::size_t rows) const = 0;
  double Entropy(std::span<const double> states, std::size_t rows) const;
  // Mean over rows of KL(old || current).
  virtual double MeanKl(const DistParams& old, std::span<const double> states,
                        std::size_t rows) const = 0;
  // (H + damping I) v, with H the Hessian of the mean KL(old || new) at
  // new = old = current parameters.
  virtual std::vector<double> FisherVectorProduct(std::span<const double> states, std::size_t rows,
                                                  std::span<const double> v,
                                                  double damping) const = 0;

  virtual std::vector<diff::Tensor> Parameters() const = 0;
  virtual diff::NamedTensors Named(const std::string& prefix = "policy") const = 0;
  virtual std::unique_ptr<Policy> Clone() const = 0;

  std::size_t NumParameters() const { return CountParameters(Parameters()); }
  std::vector<double> FlatParameters() const { return Flatten(Parameters()); }
  void SetFlatParameters(std::span<const double> flat);
  std::vector<double> FlatGrad() const { return FlattenGrad(Parameters()); }
  void ZeroGrad();

 protected:
  void CheckState(std::span<const double> state) const;
};

// Diagonal Gaussian with an MLP mean and a state-independent log std.
class GaussianMlpPolicy : public Policy {
 public:
  GaussianMlpPolicy(std::size_t state_dim, ActionSpace space, Rng& rng, double init_log_std = 0.0);

  std::size_t state_dim() const override { return mean_.in_dim(); }
  const ActionSpace& action_space() const override { return space_; }

  ActionSample Act(std::span<const double> state, Rng& rng,
                   bool deterministic = false) const override;
  double LogProb(std::span<const double> state, std::span<const double> action) const override;
  diff::Tensor LogProbs(diff::Tape& tape, const diff::Tensor& states,
                        std::span<const double> actions) const override;
  diff::Tensor MeanEntropy(diff::Tape& tape, const diff::Tensor& states) const override;
  DistParams Distribution(std::span<const double> states, std::size_t rows) const override;
  double MeanKl(const DistParams& old, std::span<const double> states,
                std::size_t rows) const override;
  std::vector<double> FisherVectorProduct(std::span<const double> states, std::size_t rows,
                                          std::span<const double> v,
                                          double damping) const override;
  std::vector<diff::Tensor> Parameters() const override;
  diff::NamedTensors Named(const std::string& prefix = "policy") const override;
  std::unique_ptr<Policy> Clone() const override;

  diff::Tensor& log_std() { return log_std_; }
  const Mlp& mean_net() const { return mean_; }

 private:
  GaussianMlpPolicy() = default;

  ActionSpace space_;
  Mlp mean_;
  diff::Tensor log_std_;  // [action_dim]
};

// Softmax over discrete actions with an MLP producing the logits.
class CategoricalMlpPolicy : public Policy {
 public:
  CategoricalMlpPolicy(std::size_t state_dim, std::size_t num_actions, Rng& rng);

  std::size_t state_dim() const override { return logits_.in_dim(); }
  const ActionSpace& action_space() const override { return space_; }

  ActionSample Act(std::span<const double> state, Rng& rng,
                   bool deterministic = false) const override;
  double LogProb(std::span<const double> state, std::span<const double> action) const override;
  diff::Tensor LogProbs(diff::Tape& tape, const diff::Tensor& states,
                        std::span<const double> actions) const override;
  diff::Tensor MeanEntropy(diff::Tape& tape, const diff::Tensor& states) const override;
  DistParams Distribution(std::span<const double> states, std::size_t rows) const override;
  double MeanKl(const DistParams& old, std::span<const double> states,
                std::size_t rows) const override;
  std::vector<double> FisherVectorProduct(std::span<const double> states, std::size_t rows,
                                          std::span<const double> v,
                                          double damping) const override;
  std::vector<diff::Tensor> Parameters() const override;
  diff::NamedTensors Named(const std::string& prefix = "policy") const override;
  std::unique_ptr<Policy> Clone() const override;

  // Action probabilities at one state.
  std::vector<double> Probabilities(std::span<const double> state) const;

 private:
  CategoricalMlpPolicy() = default;

  ActionSpace space_;
  Mlp logits_;
};

// Builds the policy family matching the action space.
std::unique_ptr<Policy> MakePolicy(std::size_t state_dim, const ActionSpace& space, Rng& rng);

// Scalar state value estimate.
class ValueMlp {
 public:
  ValueMlp(std::size_t state_dim, Rng& rng);

  diff::Tensor Forward(diff::Tape& tape, const diff::Tensor& states) const;  // [rows]
  std::vector<double> Predict(std::span<const double> states, std::size_t rows) const;

  struct FitOptions {
    int epochs = 5;
    double learning_rate = 1e-3;
    std::size_t minibatch = 64;
  };
  // Squared-error regression onto `targets`; returns the final mean loss.
  double Fit(std::span<const double> states, std::span<const double> targets,
             const FitOptions& options, Rng& rng);

  std::vector<diff::Tensor> Parameters() const { return net_.Parameters(); }
  void AppendNamed(const std::string& prefix, diff::NamedTensors& out) const {
    net_.AppendNamed(prefix, out);
  }

 private:
  Mlp net_;
  std::unique_ptr<diff::Adam> optimizer_;
};

}  // namespace vigan::models

#endif  // VIGAN_MODELS_POLICY_H_
