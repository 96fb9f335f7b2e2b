#include "vigan/baselines/bc.h"

#include <string>

#include "vigan/common/error.h"
#include "vigan/diffcore/optim.h"
#include "vigan/diffcore/tape.h"

namespace vigan::baselines {

std::vector<double> BcTrain(models::Policy& policy, const rollout::DemoSet& demos,
                            const BcOptions& options) {
  if (demos.modality != rollout::Modality::kStateAction) {
    throw ModalityError("behavior cloning needs state_action demonstrations, got " +
                        std::string(rollout::ModalityName(demos.modality)));
  }
  if (demos.state_dim != policy.state_dim() || demos.action_dim != policy.action_space().dim()) {
    throw ShapeError("behavior cloning: demo dims do not match the policy");
  }
  if (options.epochs < 0) throw ConfigError("bc epochs must be non-negative");
  if (!(options.learning_rate > 0.0)) throw ConfigError("bc learning_rate must be positive");

  const std::size_t sd = demos.state_dim;
  const std::size_t ad = demos.action_dim;
  std::vector<double> states;
  std::vector<double> actions;
  for (std::size_t i = 0; i < demos.demos.size(); ++i) {
    const auto& d = demos.demos[i];
    const std::size_t t_len = demos.Length(i);
    states.insert(states.end(), d.states.begin(), d.states.begin() + static_cast<std::ptrdiff_t>(t_len * sd));
    actions.insert(actions.end(), d.actions.begin(), d.actions.begin() + static_cast<std::ptrdiff_t>(t_len * ad));
  }
  const std::size_t rows = states.size() / sd;
  if (rows == 0) throw ValueError("behavior cloning: no transitions");
  const diff::Tensor state_tensor({rows, sd}, std::move(states));

  diff::Adam optimizer(policy.Parameters(), {.learning_rate = options.learning_rate});
  std::vector<double> losses;
  for (int e = 0; e < options.epochs; ++e) {
    diff::Tape tape;
    const diff::Tensor loss = tape.Scale(tape.Mean(policy.LogProbs(tape, state_tensor, actions)), -1.0);
    tape.Backward(loss);
    optimizer.Step();
    losses.push_back(loss.item());
    if (options.on_epoch) options.on_epoch(e);
  }
  return losses;
}

}  // namespace vigan::baselines
