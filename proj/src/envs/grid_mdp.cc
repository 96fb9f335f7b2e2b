#include "vigan/envs/grid_mdp.h"

#include <cmath>
#include <string>

#include "vigan/common/error.h"

namespace vigan::envs {

namespace {

void CheckDistribution(const double* p, std::size_t n, const std::string& what) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] >= 0.0)) throw ValueError(what + " has a negative or non-finite entry");
    total += p[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValueError(what + " sums to " + std::to_string(total) + ", expected 1");
  }
}

std::size_t SampleFrom(const double* p, std::size_t n, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding left a sliver above the cumulative sum: take the last
  // state with positive mass.
  for (std::size_t i = n; i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return n - 1;
}

}  // namespace

void GridMdp::Validate() const {
  if (n_states == 0 || n_actions == 0) throw ValueError("grid mdp needs states and actions");
  if (transitions.size() != n_states * n_actions * n_states || rewards.size() != n_states * n_actions ||
      initial.size() != n_states) {
    throw ValueError("grid mdp table sizes do not match n_states/n_actions");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValueError("grid mdp gamma must be in (0, 1)");
  if (grid_width == 0) throw ValueError("grid mdp grid_width must be positive");
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      CheckDistribution(&transitions[(s * n_actions + a) * n_states], n_states,
                        "P[" + std::to_string(s) + "][" + std::to_string(a) + "]");
    }
  }
  CheckDistribution(initial.data(), n_states, "p0");
}

std::size_t GridMdp::Sample(std::size_t s, std::size_t a, Rng& rng) const {
  return SampleFrom(&transitions[(s * n_actions + a) * n_states], n_states, rng);
}

std::size_t GridMdp::SampleInitial(Rng& rng) const {
  return SampleFrom(initial.data(), n_states, rng);
}

namespace {

GridMdp Allocate(std::size_t n_states, std::size_t n_actions, double gamma) {
  GridMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.transitions.assign(n_states * n_actions * n_states, 0.0);
  mdp.rewards.assign(n_states * n_actions, 0.0);
  mdp.initial.assign(n_states, 0.0);
  mdp.gamma = gamma;
  mdp.grid_width = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_states))));
  return mdp;
}

}  // namespace

GridMdp TwoStateCycle(double gamma) {
  GridMdp mdp = Allocate(2, 2, gamma);
  for (std::size_t a = 0; a < 2; ++a) {
    mdp.P(0, a, 1) = 1.0;
    mdp.P(1, a, 0) = 1.0;
    mdp.rewards[1 * 2 + a] = 1.0;
  }
  mdp.initial[0] = 1.0;
  mdp.grid_width = 2;
  mdp.Validate();
  return mdp;
}

GridMdp GridWorld(std::size_t rows, std::size_t cols, double slip, double gamma) {
  if (rows == 0 || cols == 0) throw ValueError("grid world needs at least one cell");
  if (!(slip >= 0.0 && slip <= 1.0)) throw ValueError("grid world slip must be in [0, 1]");
  constexpr std::size_t kActions = 5;
  constexpr int kDr[kActions] = {0, -1, 1, 0, 0};
  constexpr int kDc[kActions] = {0, 0, 0, -1, 1};
  GridMdp mdp = Allocate(rows * cols, kActions, gamma);
  mdp.grid_width = cols;
  auto move = [&](std::size_t s, std::size_t a) {
    const int r = static_cast<int>(s / cols) + kDr[a];
    const int c = static_cast<int>(s % cols) + kDc[a];
    if (r < 0 || c < 0 || r >= static_cast<int>(rows) || c >= static_cast<int>(cols)) return s;
    return static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c);
  };
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < kActions; ++a) {
      mdp.P(s, a, move(s, a)) += 1.0 - slip;
      for (std::size_t b = 0; b < kActions; ++b) mdp.P(s, a, move(s, b)) += slip / kActions;
    }
  }
  // Renormalize so rows are exact distributions despite the split masses.
  for (std::size_t sa = 0; sa < mdp.n_states * kActions; ++sa) {
    double total = 0.0;
    for (std::size_t n = 0; n < mdp.n_states; ++n) total += mdp.transitions[sa * mdp.n_states + n];
    for (std::size_t n = 0; n < mdp.n_states; ++n) mdp.transitions[sa * mdp.n_states + n] /= total;
  }
  for (std::size_t a = 0; a < kActions; ++a) mdp.rewards[(mdp.n_states - 1) * kActions + a] = 1.0;
  mdp.initial[0] = 1.0;
  mdp.Validate();
  return mdp;
}

GridMdp RandomMdp(std::size_t n_states, std::size_t n_actions, Rng& rng, double gamma) {
  GridMdp mdp = Allocate(n_states, n_actions, gamma);
  auto dirichlet = [&](double* out, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = -std::log(1.0 - rng.Uniform());
      total += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= total;
  };
  for (std::size_t sa = 0; sa < n_states * n_actions; ++sa) {
    dirichlet(&mdp.transitions[sa * n_states], n_states);
    mdp.rewards[sa] = rng.Uniform();
  }
  dirichlet(mdp.initial.data(), n_states);
  mdp.Validate();
  return mdp;
}

}  // namespace vigan::envs
