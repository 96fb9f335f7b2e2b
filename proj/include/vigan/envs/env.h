#ifndef VIGAN_ENVS_ENV_H_
#define VIGAN_ENVS_ENV_H_

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/common/spaces.h"
#include "vigan/envs/frame.h"
#include "vigan/envs/grid_mdp.h"
#include "vigan/envs/render.h"

namespace vigan::envs {

enum class EnvId { kCartpole, kPendulum, kPointMass, kGridMdp };

std::string_view EnvName(EnvId id);
EnvId ParseEnvId(std::string_view name);

struct EnvSpec {
  EnvId id = EnvId::kCartpole;
  std::size_t state_dim = 0;
  ActionSpace action_space;
  int horizon = 1;
  double gamma = 0.99;
  // Initial states are uniform over this box (grid_mdp uses its p0 instead).
  std::vector<double> init_low;
  std::vector<double> init_high;
};

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool terminal = false;  // termination predicate; the horizon is the caller's
};

// Environments are immutable after construction and safe to share between
// threads; all randomness comes from the caller's Rng.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  void set_horizon(int horizon);

  virtual std::vector<double> Reset(Rng& rng) const;
  // Continuous actions are clamped to the box; discrete ones must be a
  // valid index. Non-finite inputs throw ValueError.
  StepResult Step(std::span<const double> state, std::span<const double> action, Rng& rng) const;

  Frame Render(std::span<const double> state, const RenderMap& map) const;

  // States over which injectivity of the render map is claimed.
  virtual std::vector<std::vector<double>> QuantizationGrid() const = 0;

  virtual std::unique_ptr<Env> Clone() const = 0;

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}

  virtual StepResult Transition(std::span<const double> state, std::span<const double> action,
                                Rng& rng) const = 0;
  // Draws the state. With `collapse_depth` the coordinate along the camera
  // axis is ignored. Returns true if the geometry had to be clamped into
  // the frame.
  virtual bool Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
                    bool collapse_depth) const = 0;

  EnvSpec spec_;
};

// Euler step of the cart-pole equations under horizontal force `force`.
std::vector<double> CartpoleDynamics(std::span<const double> state, double force);

class CartpoleEnv : public Env {
 public:
  static constexpr double kForce = 10.0;
  static constexpr double kXLimit = 2.4;
  static constexpr double kThetaLimit = 12.0 * 3.14159265358979323846 / 180.0;

  CartpoleEnv();
  std::vector<std::vector<double>> QuantizationGrid() const override;
  std::unique_ptr<Env> Clone() const override { return std::make_unique<CartpoleEnv>(*this); }

 protected:
  StepResult Transition(std::span<const double> state, std::span<const double> action,
                        Rng& rng) const override;
  bool Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
            bool collapse_depth) const override;
};

// theta = 0 is upright.
class PendulumEnv : public Env {
 public:
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kMaxSpeed = 8.0;

  PendulumEnv();
  std::vector<std::vector<double>> QuantizationGrid() const override;
  std::unique_ptr<Env> Clone() const override { return std::make_unique<PendulumEnv>(*this); }

  static double Reward(double theta, double omega, double torque);

 protected:
  StepResult Transition(std::span<const double> state, std::span<const double> action,
                        Rng& rng) const override;
  bool Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
            bool collapse_depth) const override;
};

// Velocity-controlled point in a box, rewarded for staying near the origin.
class PointMassEnv : public Env {
 public:
  static constexpr double kBox = 2.0;
  static constexpr double kDt = 0.1;
  // Disk radius in world units; the view spans [-kBox, kBox] on both axes.
  static constexpr double kRadius = 0.25;

  PointMassEnv();
  std::vector<std::vector<double>> QuantizationGrid() const override;
  std::unique_ptr<Env> Clone() const override { return std::make_unique<PointMassEnv>(*this); }

 protected:
  StepResult Transition(std::span<const double> state, std::span<const double> action,
                        Rng& rng) const override;
  bool Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
            bool collapse_depth) const override;
};

// Tabular MDP with one-hot states.
class GridMdpEnv : public Env {
 public:
  explicit GridMdpEnv(GridMdp mdp, int horizon = 50);

  const GridMdp& mdp() const { return mdp_; }
  std::vector<double> Reset(Rng& rng) const override;
  std::vector<std::vector<double>> QuantizationGrid() const override;
  std::unique_ptr<Env> Clone() const override { return std::make_unique<GridMdpEnv>(*this); }

  std::vector<double> OneHot(std::size_t s) const;
  // Index of a one-hot state; throws ValueError otherwise.
  std::size_t StateIndex(std::span<const double> state) const;

 protected:
  StepResult Transition(std::span<const double> state, std::span<const double> action,
                        Rng& rng) const override;
  bool Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
            bool collapse_depth) const override;

 private:
  GridMdp mdp_;
};

// grid_mdp builds the default 5x5 grid world.
std::unique_ptr<Env> MakeEnv(EnvId id);
std::unique_ptr<Env> MakeEnv(std::string_view name);

}  // namespace vigan::envs

#endif  // VIGAN_ENVS_ENV_H_
