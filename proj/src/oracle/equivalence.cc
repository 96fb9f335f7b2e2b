#include "vigan/oracle/equivalence.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "vigan/common/error.h"

namespace vigan::oracle {

std::vector<std::size_t> FrameClasses(std::size_t n_states, const StateRenderer& render) {
  // hash -> (class id, representative state)
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, std::size_t>>> buckets;
  std::vector<std::size_t> classes(n_states);
  std::size_t next_class = 0;
  for (std::size_t i = 0; i < n_states; ++i) {
    const envs::Frame frame = render(i);
    auto& bucket = buckets[envs::HashFrame(frame)];
    bool found = false;
    for (const auto& [cls, rep] : bucket) {
      if (render(rep) == frame) {
        classes[i] = cls;
        found = true;
        break;
      }
    }
    if (!found) {
      classes[i] = next_class++;
      bucket.emplace_back(classes[i], i);
    }
  }
  return classes;
}

InjectivityReport InjectivityCheck(std::size_t n_states, const StateRenderer& render,
                                   std::size_t max_listed) {
  const auto classes = FrameClasses(n_states, render);
  InjectivityReport report;
  report.n_states = n_states;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n_states; ++i) {
    if (classes[i] >= members.size()) members.resize(classes[i] + 1);
    members[classes[i]].push_back(i);
  }
  report.n_distinct = members.size();
  for (const auto& group : members) {
    report.collision_pairs += group.size() * (group.size() - 1) / 2;
    for (std::size_t a = 0; a < group.size(); ++a) {
      for (std::size_t b = a + 1; b < group.size() && report.collisions.size() < max_listed; ++b) {
        report.collisions.emplace_back(group[a], group[b]);
      }
    }
  }
  report.injective = report.collision_pairs == 0;
  return report;
}

InjectivityReport InjectivityCheck(const envs::Env& env, const std::vector<std::vector<double>>& states,
                                   const envs::RenderMap& map, std::size_t max_listed) {
  return InjectivityCheck(
      states.size(), [&](std::size_t i) { return env.Render(states[i], map); }, max_listed);
}

EquivalenceReport EquivalenceCheck(const envs::GridMdp& mdp, const PolicyTable& agent,
                                   const PolicyTable& expert, std::span<const std::size_t> frame_class) {
  if (frame_class.size() != mdp.n_states) throw ShapeError("equivalence check: one frame class per state");
  const OccupancyTable oa = Occupancy(mdp, agent);
  const OccupancyTable oe = Occupancy(mdp, expert);
  const std::size_t n = mdp.n_states;

  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> image;
  double state_mass = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t next = 0; next < n; ++next) {
      auto& cell = image[{frame_class[s], frame_class[next]}];
      cell.first += oa.ss(s, next);
      cell.second += oe.ss(s, next);
      state_mass += oa.ss(s, next) + oe.ss(s, next);
    }
  }
  double image_mass = 0.0;
  for (const auto& [key, cell] : image) image_mass += cell.first + cell.second;

  EquivalenceReport report;
  report.mass_residual = image_mass - state_mass;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t next = 0; next < n; ++next) {
      TransitionRow row;
      row.s = s;
      row.next = next;
      row.rho_agent = oa.ss(s, next);
      row.rho_expert = oe.ss(s, next);
      if (row.rho_agent + row.rho_expert <= 0.0) continue;
      row.d_state = BayesDiscriminator(std::span(&row.rho_agent, 1), std::span(&row.rho_expert, 1))[0];
      const auto& cell = image.at({frame_class[s], frame_class[next]});
      row.d_image = BayesDiscriminator(std::span(&cell.first, 1), std::span(&cell.second, 1))[0];
      row.abs_diff = std::abs(row.d_image - row.d_state);
      report.max_abs_diff = std::max(report.max_abs_diff, row.abs_diff);
      if (row.abs_diff > 1e-12) report.offending.push_back(report.rows.size());
      report.rows.push_back(row);
    }
  }
  return report;
}

EquivalenceReport EquivalenceCheck(const envs::GridMdpEnv& env, const PolicyTable& agent,
                                   const PolicyTable& expert, const envs::RenderMap& map) {
  const auto classes = FrameClasses(env.mdp().n_states,
                                    [&](std::size_t s) { return env.Render(env.OneHot(s), map); });
  return EquivalenceCheck(env.mdp(), agent, expert, classes);
}

}  // namespace vigan::oracle
