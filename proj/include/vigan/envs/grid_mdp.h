#ifndef VIGAN_ENVS_GRID_MDP_H_
#define VIGAN_ENVS_GRID_MDP_H_

#include <cstddef>
#include <vector>

#include "vigan/common/rng.h"

namespace vigan::envs {

// Tabular MDP. States are rendered as cells of a grid `grid_width` wide.
struct GridMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> transitions;  // [s][a][s'] flattened
  std::vector<double> rewards;      // [s][a]
  std::vector<double> initial;      // p0
  double gamma = 0.99;
  std::size_t grid_width = 1;

  double P(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions[(s * n_actions + a) * n_states + next];
  }
  double& P(std::size_t s, std::size_t a, std::size_t next) {
    return transitions[(s * n_actions + a) * n_states + next];
  }
  double R(std::size_t s, std::size_t a) const { return rewards[s * n_actions + a]; }

  // Throws ValueError unless rows of P and p0 are distributions (1e-12).
  void Validate() const;

  // Samples s' ~ P(.|s, a).
  std::size_t Sample(std::size_t s, std::size_t a, Rng& rng) const;
  std::size_t SampleInitial(Rng& rng) const;
};

// s0 -> s1 -> s0 under every action; reward 1 in s1.
GridMdp TwoStateCycle(double gamma = 0.9);

// rows x cols grid; actions stay/up/down/left/right. With probability
// `slip` the move is replaced by a uniformly random one. Starts in the
// top-left cell; reward 1 for any action taken in the bottom-right cell.
GridMdp GridWorld(std::size_t rows, std::size_t cols, double slip = 0.1, double gamma = 0.95);

// Dense random transitions from Dirichlet(1) rows and uniform rewards.
GridMdp RandomMdp(std::size_t n_states, std::size_t n_actions, Rng& rng, double gamma = 0.9);

}  // namespace vigan::envs

#endif  // VIGAN_ENVS_GRID_MDP_H_
