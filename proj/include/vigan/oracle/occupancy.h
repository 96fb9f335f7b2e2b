#ifndef VIGAN_ORACLE_OCCUPANCY_H_
#define VIGAN_ORACLE_OCCUPANCY_H_

#include <cstddef>
#include <span>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/envs/grid_mdp.h"

namespace vigan::oracle {

// pi[s][a], flattened row-major.
struct PolicyTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;

  double operator()(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }
  // Throws ValueError unless every row is a distribution (1e-9).
  void Validate() const;

  static PolicyTable Uniform(std::size_t n_states, std::size_t n_actions);
  // Puts all mass on actions[s].
  static PolicyTable Deterministic(std::span<const std::size_t> actions, std::size_t n_actions);
  // Rows drawn from Dirichlet(1).
  static PolicyTable Random(std::size_t n_states, std::size_t n_actions, Rng& rng);
};

// Unnormalized discounted visitation. Totals are 1 / (1 - gamma).
struct OccupancyTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  double gamma = 0.0;
  std::vector<double> visitation;  // v[s]
  std::vector<double> rho_sa;      // [s][a]
  std::vector<double> rho_ss;      // [s][s']

  double sa(std::size_t s, std::size_t a) const { return rho_sa[s * n_actions + a]; }
  double ss(std::size_t s, std::size_t next) const { return rho_ss[s * n_states + next]; }
};

// Solves v = p0 + gamma P_pi^T v directly.
OccupancyTable Occupancy(const envs::GridMdp& mdp, const PolicyTable& pi);

// Monte Carlo estimate of v from `steps` simulated transitions. The chain
// restarts from p0 with probability 1 - gamma after every step; its
// stationary distribution is v scaled by 1 - gamma.
std::vector<double> MonteCarloVisitation(const envs::GridMdp& mdp, const PolicyTable& pi,
                                         std::size_t steps, Rng& rng);

// Jensen-Shannon divergence (natural log) of two non-negative tables, each
// normalized by its own total. Throws ValueError on negative entries, size
// mismatch, or an all-zero table.
double JsDivergence(std::span<const double> p, std::span<const double> q);

// D[x] = rho_e[x] / (rho_e[x] + rho_a[x]); 0.5 where both are zero.
std::vector<double> BayesDiscriminator(std::span<const double> rho_agent,
                                       std::span<const double> rho_expert);

}  // namespace vigan::oracle

#endif  // VIGAN_ORACLE_OCCUPANCY_H_
