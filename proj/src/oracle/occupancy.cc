#include "vigan/oracle/occupancy.h"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "vigan/common/error.h"

namespace vigan::oracle {

void PolicyTable::Validate() const {
  if (probs.size() != n_states * n_actions) throw ValueError("policy table has the wrong size");
  for (std::size_t s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
      const double p = (*this)(s, a);
      if (!(p >= 0.0)) throw ValueError("policy row " + std::to_string(s) + " has a negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValueError("policy row " + std::to_string(s) + " sums to " + std::to_string(sum));
    }
  }
}

PolicyTable PolicyTable::Uniform(std::size_t n_states, std::size_t n_actions) {
  return {n_states, n_actions, std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions))};
}

PolicyTable PolicyTable::Deterministic(std::span<const std::size_t> actions, std::size_t n_actions) {
  PolicyTable t{actions.size(), n_actions, std::vector<double>(actions.size() * n_actions, 0.0)};
  for (std::size_t s = 0; s < actions.size(); ++s) t.probs.at(s * n_actions + actions[s]) = 1.0;
  return t;
}

PolicyTable PolicyTable::Random(std::size_t n_states, std::size_t n_actions, Rng& rng) {
  PolicyTable t{n_states, n_actions, std::vector<double>(n_states * n_actions)};
  for (std::size_t s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
      const double e = -std::log(1.0 - rng.Uniform());
      t.probs[s * n_actions + a] = e;
      sum += e;
    }
    for (std::size_t a = 0; a < n_actions; ++a) t.probs[s * n_actions + a] /= sum;
  }
  return t;
}

OccupancyTable Occupancy(const envs::GridMdp& mdp, const PolicyTable& pi) {
  mdp.Validate();
  pi.Validate();
  if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions) {
    throw ShapeError("policy table does not match the MDP");
  }
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) throw ValueError("occupancy needs gamma in [0, 1)");
  const auto n = static_cast<Eigen::Index>(mdp.n_states);
  // A = I - gamma P_pi^T with P_pi[s][s'] = sum_a pi(a|s) P(s'|s,a).
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd p0(n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    p0(static_cast<Eigen::Index>(s)) = mdp.initial[s];
    for (std::size_t next = 0; next < mdp.n_states; ++next) {
      double p = 0.0;
      for (std::size_t act = 0; act < mdp.n_actions; ++act) p += pi(s, act) * mdp.P(s, act, next);
      a(static_cast<Eigen::Index>(next), static_cast<Eigen::Index>(s)) -= mdp.gamma * p;
    }
  }
  const Eigen::VectorXd v = a.partialPivLu().solve(p0);

  OccupancyTable t;
  t.n_states = mdp.n_states;
  t.n_actions = mdp.n_actions;
  t.gamma = mdp.gamma;
  t.visitation.assign(v.data(), v.data() + n);
  t.rho_sa.assign(mdp.n_states * mdp.n_actions, 0.0);
  t.rho_ss.assign(mdp.n_states * mdp.n_states, 0.0);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t act = 0; act < mdp.n_actions; ++act) {
      const double w = pi(s, act) * t.visitation[s];
      t.rho_sa[s * mdp.n_actions + act] = w;
      for (std::size_t next = 0; next < mdp.n_states; ++next) {
        t.rho_ss[s * mdp.n_states + next] += mdp.P(s, act, next) * w;
      }
    }
  }
  return t;
}

std::vector<double> MonteCarloVisitation(const envs::GridMdp& mdp, const PolicyTable& pi,
                                         std::size_t steps, Rng& rng) {
  pi.Validate();
  std::vector<double> counts(mdp.n_states, 0.0);
  std::size_t s = mdp.SampleInitial(rng);
  for (std::size_t i = 0; i < steps; ++i) {
    counts[s] += 1.0;
    const double u = rng.Uniform();
    std::size_t a = 0;
    for (double acc = pi(s, 0); a + 1 < mdp.n_actions && u >= acc; acc += pi(s, a)) ++a;
    if (rng.Uniform() < 1.0 - mdp.gamma) {
      s = mdp.SampleInitial(rng);
    } else {
      s = mdp.Sample(s, a, rng);
    }
  }
  const double scale = 1.0 / ((1.0 - mdp.gamma) * static_cast<double>(steps));
  for (double& c : counts) c *= scale;
  return counts;
}

double JsDivergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValueError("js divergence: tables differ in size");
  double sp = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) throw ValueError("js divergence: negative entry");
    sp += p[i];
    sq += q[i];
  }
  if (sp <= 0.0 || sq <= 0.0) throw ValueError("js divergence: empty table");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i] / sp;
    const double b = q[i] / sq;
    const double m = 0.5 * (a + b);
    if (a > 0.0) js += 0.5 * a * std::log(a / m);
    if (b > 0.0) js += 0.5 * b * std::log(b / m);
  }
  return js;
}

std::vector<double> BayesDiscriminator(std::span<const double> rho_agent,
                                       std::span<const double> rho_expert) {
  if (rho_agent.size() != rho_expert.size()) throw ValueError("bayes discriminator: size mismatch");
  std::vector<double> d(rho_agent.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double sum = rho_agent[i] + rho_expert[i];
    d[i] = sum > 0.0 ? rho_expert[i] / sum : 0.5;
  }
  return d;
}

}  // namespace vigan::oracle
