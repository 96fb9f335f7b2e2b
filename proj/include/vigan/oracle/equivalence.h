#ifndef VIGAN_ORACLE_EQUIVALENCE_H_
#define VIGAN_ORACLE_EQUIVALENCE_H_

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "vigan/envs/env.h"
#include "vigan/envs/frame.h"
#include "vigan/oracle/occupancy.h"

namespace vigan::oracle {

// Renders state i of some enumeration.
using StateRenderer = std::function<envs::Frame(std::size_t)>;

// Groups states by rendered image. Frames with equal hashes are compared
// byte by byte (re-rendering the earlier one) before they are merged, so a
// hash collision never merges distinct images. Returns a class id per state,
// numbered in order of first appearance.
std::vector<std::size_t> FrameClasses(std::size_t n_states, const StateRenderer& render);

struct InjectivityReport {
  bool injective = true;
  std::size_t n_states = 0;
  std::size_t n_distinct = 0;
  // Total number of colliding state pairs; at most `max_listed` are listed.
  std::size_t collision_pairs = 0;
  std::vector<std::pair<std::size_t, std::size_t>> collisions;
};

InjectivityReport InjectivityCheck(std::size_t n_states, const StateRenderer& render,
                                   std::size_t max_listed = std::numeric_limits<std::size_t>::max());
InjectivityReport InjectivityCheck(const envs::Env& env, const std::vector<std::vector<double>>& states,
                                   const envs::RenderMap& map,
                                   std::size_t max_listed = std::numeric_limits<std::size_t>::max());

struct TransitionRow {
  std::size_t s = 0;
  std::size_t next = 0;
  double rho_agent = 0.0;
  double rho_expert = 0.0;
  double d_state = 0.5;
  double d_image = 0.5;
  double abs_diff = 0.0;
};

struct EquivalenceReport {
  double max_abs_diff = 0.0;
  // Every transition with positive mass under either policy.
  std::vector<TransitionRow> rows;
  // Indices into rows whose difference exceeds 1e-12.
  std::vector<std::size_t> offending;
  // Total image-transition mass minus total state-transition mass.
  double mass_residual = 0.0;
};

// Compares the Bayes discriminator over state transitions with the one over
// image transitions, where image-transition occupancy is the pushforward of
// state-transition occupancy through `frame_class`.
EquivalenceReport EquivalenceCheck(const envs::GridMdp& mdp, const PolicyTable& agent,
                                   const PolicyTable& expert, std::span<const std::size_t> frame_class);
EquivalenceReport EquivalenceCheck(const envs::GridMdpEnv& env, const PolicyTable& agent,
                                   const PolicyTable& expert, const envs::RenderMap& map);

}  // namespace vigan::oracle

#endif  // VIGAN_ORACLE_EQUIVALENCE_H_
