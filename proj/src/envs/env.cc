#include "vigan/envs/env.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vigan/common/error.h"

namespace vigan::envs {

std::string_view EnvName(EnvId id) {
  switch (id) {
    case EnvId::kCartpole:
      return "cartpole_analog";
    case EnvId::kPendulum:
      return "pendulum_analog";
    case EnvId::kPointMass:
      return "point_mass";
    case EnvId::kGridMdp:
      return "grid_mdp";
  }
  return "unknown";
}

EnvId ParseEnvId(std::string_view name) {
  for (EnvId id : {EnvId::kCartpole, EnvId::kPendulum, EnvId::kPointMass, EnvId::kGridMdp}) {
    if (EnvName(id) == name) return id;
  }
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

namespace {

void CheckFinite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValueError(std::string("non-finite ") + what);
  }
}

// Orthographic world window mapped onto the whole frame, y up.
struct View {
  double x_lo, x_hi, y_lo, y_hi;
  double Px(const Canvas& c, double x) const { return (x - x_lo) / (x_hi - x_lo) * c.width(); }
  double Py(const Canvas& c, double y) const { return (y_hi - y) / (y_hi - y_lo) * c.height(); }
  double Sx(const Canvas& c, double len) const { return len / (x_hi - x_lo) * c.width(); }
  double Sy(const Canvas& c, double len) const { return len / (y_hi - y_lo) * c.height(); }
};

double WrapAngle(double theta) { return std::remainder(theta, 2.0 * std::numbers::pi); }

std::vector<double> Linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace

void Env::set_horizon(int horizon) {
  if (horizon < 1) throw ConfigError("horizon must be at least 1, got " + std::to_string(horizon));
  spec_.horizon = horizon;
}

std::vector<double> Env::Reset(Rng& rng) const {
  std::vector<double> state(spec_.state_dim);
  for (std::size_t i = 0; i < state.size(); ++i) state[i] = rng.Uniform(spec_.init_low[i], spec_.init_high[i]);
  return state;
}

StepResult Env::Step(std::span<const double> state, std::span<const double> action, Rng& rng) const {
  if (state.size() != spec_.state_dim) {
    throw ShapeError(std::string(EnvName(spec_.id)) + ": state has " + std::to_string(state.size()) +
                     " entries, expected " + std::to_string(spec_.state_dim));
  }
  if (action.size() != spec_.action_space.dim()) {
    throw ShapeError(std::string(EnvName(spec_.id)) + ": action has " + std::to_string(action.size()) +
                     " entries, expected " + std::to_string(spec_.action_space.dim()));
  }
  CheckFinite(state, "state");
  CheckFinite(action, "action");
  const std::vector<double> clamped = spec_.action_space.Clamp(action);
  return Transition(state, clamped, rng);
}

Frame Env::Render(std::span<const double> state, const RenderMap& map) const {
  map.Validate();
  if (state.size() != spec_.state_dim) {
    throw ShapeError(std::string(EnvName(spec_.id)) + ": cannot render state of size " +
                     std::to_string(state.size()));
  }
  CheckFinite(state, "state");
  Canvas canvas(map.width, map.height, map.channels, map.palette.background);
  const bool clamped = Draw(canvas, state, map.palette, map.mode == RenderMode::kAxisDegenerate);
  if (map.mode == RenderMode::kOccluding) {
    canvas.FillPixels(static_cast<int>(std::lround(map.occluder_x0 * map.width)),
                      static_cast<int>(std::lround(map.occluder_y0 * map.height)),
                      static_cast<int>(std::lround(map.occluder_x1 * map.width)),
                      static_cast<int>(std::lround(map.occluder_y1 * map.height)), map.palette.occluder);
  }
  if (clamped) canvas.SetPixel(0, 0, map.palette.marker);
  return canvas.ToFrame();
}

// ---------------------------------------------------------------------------
// cartpole_analog

std::vector<double> CartpoleDynamics(std::span<const double> s, double force) {
  constexpr double kGravity = 9.8;
  constexpr double kMassCart = 1.0;
  constexpr double kMassPole = 0.1;
  constexpr double kTotalMass = kMassCart + kMassPole;
  constexpr double kHalfLength = 0.5;
  constexpr double kPoleMassLength = kMassPole * kHalfLength;
  constexpr double kDt = 0.02;
  const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                           (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
  return {x + kDt * x_dot, x_dot + kDt * x_acc, theta + kDt * theta_dot, theta_dot + kDt * theta_acc};
}

CartpoleEnv::CartpoleEnv()
    : Env(EnvSpec{EnvId::kCartpole, 4, ActionSpace::Discrete(2), 200, 0.99,
                  {-0.05, -0.05, -0.05, -0.05}, {0.05, 0.05, 0.05, 0.05}}) {}

StepResult CartpoleEnv::Transition(std::span<const double> state, std::span<const double> action,
                                   Rng&) const {
  const double force = action[0] >= 0.5 ? kForce : -kForce;
  StepResult out;
  out.next_state = CartpoleDynamics(state, force);
  out.reward = 1.0;
  out.terminal = std::abs(out.next_state[0]) > kXLimit || std::abs(out.next_state[2]) > kThetaLimit;
  return out;
}

std::vector<std::vector<double>> CartpoleEnv::QuantizationGrid() const {
  std::vector<std::vector<double>> grid;
  // x in steps of 0.01 and theta in steps of 0.005 over the non-terminal
  // range; velocities are not visible in a single frame.
  for (double x : Linspace(-2.4, 2.4, 481)) {
    for (double theta : Linspace(-0.21, 0.21, 85)) grid.push_back({x, 0.0, theta, 0.0});
  }
  return grid;
}

bool CartpoleEnv::Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
                       bool collapse_depth) const {
  constexpr View kView{-2.8, 2.8, -2.8, 2.8};
  constexpr double kCartY = -1.0;
  constexpr double kCartHalfW = 0.3;
  constexpr double kCartHalfH = 0.15;
  constexpr double kPoleLength = 1.2;
  constexpr double kPoleHalfWidth = 0.06;
  constexpr double kXClamp = 2.5;
  double x = collapse_depth ? 0.0 : state[0];
  const bool clamped = std::abs(x) > kXClamp;
  x = std::clamp(x, -kXClamp, kXClamp);
  const double theta = state[2];
  canvas.FillBox(kView.Px(canvas, x), kView.Py(canvas, kCartY), kView.Sx(canvas, kCartHalfW),
                 kView.Sy(canvas, kCartHalfH), palette.body);
  const double base_y = kCartY + kCartHalfH;
  canvas.FillSegment(kView.Px(canvas, x), kView.Py(canvas, base_y),
                     kView.Px(canvas, x + kPoleLength * std::sin(theta)),
                     kView.Py(canvas, base_y + kPoleLength * std::cos(theta)),
                     kView.Sx(canvas, kPoleHalfWidth), palette.limb);
  return clamped;
}

// ---------------------------------------------------------------------------
// pendulum_analog

PendulumEnv::PendulumEnv()
    : Env(EnvSpec{EnvId::kPendulum, 2, ActionSpace::Box({-kMaxTorque}, {kMaxTorque}), 200, 0.99,
                  {-std::numbers::pi, -1.0}, {std::numbers::pi, 1.0}}) {}

double PendulumEnv::Reward(double theta, double omega, double torque) {
  const double t = WrapAngle(theta);
  return -(t * t + 0.1 * omega * omega + 0.001 * torque * torque);
}

StepResult PendulumEnv::Transition(std::span<const double> state, std::span<const double> action,
                                   Rng&) const {
  constexpr double kDt = 0.02;
  const double theta = state[0], omega = state[1], u = action[0];
  const double next_omega = std::clamp(omega + (15.0 * std::sin(theta) + 3.0 * u) * kDt, -kMaxSpeed, kMaxSpeed);
  StepResult out;
  out.next_state = {WrapAngle(theta + next_omega * kDt), next_omega};
  out.reward = Reward(theta, omega, u);
  return out;
}

std::vector<std::vector<double>> PendulumEnv::QuantizationGrid() const {
  std::vector<std::vector<double>> grid;
  constexpr int kSteps = 3141;  // about 0.002 rad apart
  for (int i = 0; i < kSteps; ++i) {
    grid.push_back({-std::numbers::pi + 2.0 * std::numbers::pi * i / kSteps, 0.0});
  }
  return grid;
}

bool PendulumEnv::Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
                       bool collapse_depth) const {
  constexpr View kView{-1.6, 1.6, -1.6, 1.6};
  constexpr double kLength = 1.0;
  constexpr double kRodHalfWidth = 0.07;
  constexpr double kBobRadius = 0.15;
  const double tip_x = collapse_depth ? 0.0 : kLength * std::sin(state[0]);
  const double tip_y = kLength * std::cos(state[0]);
  canvas.FillSegment(kView.Px(canvas, 0.0), kView.Py(canvas, 0.0), kView.Px(canvas, tip_x),
                     kView.Py(canvas, tip_y), kView.Sx(canvas, kRodHalfWidth), palette.limb);
  canvas.FillDisk(kView.Px(canvas, tip_x), kView.Py(canvas, tip_y), kView.Sx(canvas, kBobRadius),
                  palette.body);
  return false;
}

// ---------------------------------------------------------------------------
// point_mass

PointMassEnv::PointMassEnv()
    : Env(EnvSpec{EnvId::kPointMass, 2, ActionSpace::Box({-1.0, -1.0}, {1.0, 1.0}), 100, 0.99,
                  {-1.0, -1.0}, {1.0, 1.0}}) {}

StepResult PointMassEnv::Transition(std::span<const double> state, std::span<const double> action,
                                    Rng&) const {
  StepResult out;
  out.next_state = {std::clamp(state[0] + kDt * action[0], -kBox, kBox),
                    std::clamp(state[1] + kDt * action[1], -kBox, kBox)};
  const double d2 = out.next_state[0] * out.next_state[0] + out.next_state[1] * out.next_state[1];
  out.reward = std::exp(-2.0 * d2);
  return out;
}

std::vector<std::vector<double>> PointMassEnv::QuantizationGrid() const {
  std::vector<std::vector<double>> grid;
  for (double x : Linspace(-1.0, 1.0, 50)) {
    for (double y : Linspace(-1.0, 1.0, 50)) grid.push_back({x, y});
  }
  return grid;
}

bool PointMassEnv::Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
                        bool collapse_depth) const {
  constexpr View kView{-kBox, kBox, -kBox, kBox};
  double x = state[0];
  double y = collapse_depth ? 0.0 : state[1];
  const bool clamped = std::abs(x) > kBox || std::abs(y) > kBox;
  x = std::clamp(x, -kBox, kBox);
  y = std::clamp(y, -kBox, kBox);
  canvas.FillDisk(kView.Px(canvas, x), kView.Py(canvas, y), kView.Sx(canvas, kRadius), palette.body);
  return clamped;
}

// ---------------------------------------------------------------------------
// grid_mdp

namespace {

EnvSpec GridSpec(const GridMdp& mdp, int horizon) {
  mdp.Validate();
  EnvSpec spec{EnvId::kGridMdp, mdp.n_states, ActionSpace::Discrete(mdp.n_actions), horizon, mdp.gamma,
               {}, {}};
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  return spec;
}

}  // namespace

GridMdpEnv::GridMdpEnv(GridMdp mdp, int horizon) : Env(GridSpec(mdp, horizon)), mdp_(std::move(mdp)) {}

std::vector<double> GridMdpEnv::OneHot(std::size_t s) const {
  std::vector<double> v(mdp_.n_states, 0.0);
  v.at(s) = 1.0;
  return v;
}

std::size_t GridMdpEnv::StateIndex(std::span<const double> state) const {
  std::size_t index = state.size();
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i] == 1.0 && index == state.size()) {
      index = i;
    } else if (state[i] != 0.0) {
      index = state.size();
      break;
    }
  }
  if (state.size() != mdp_.n_states || index == state.size()) {
    throw ValueError("grid_mdp state is not a one-hot vector of size " + std::to_string(mdp_.n_states));
  }
  return index;
}

std::vector<double> GridMdpEnv::Reset(Rng& rng) const { return OneHot(mdp_.SampleInitial(rng)); }

StepResult GridMdpEnv::Transition(std::span<const double> state, std::span<const double> action,
                                  Rng& rng) const {
  const std::size_t s = StateIndex(state);
  const auto a = static_cast<std::size_t>(action[0]);
  StepResult out;
  out.next_state = OneHot(mdp_.Sample(s, a, rng));
  out.reward = mdp_.R(s, a);
  return out;
}

std::vector<std::vector<double>> GridMdpEnv::QuantizationGrid() const {
  std::vector<std::vector<double>> grid;
  for (std::size_t s = 0; s < mdp_.n_states; ++s) grid.push_back(OneHot(s));
  return grid;
}

bool GridMdpEnv::Draw(Canvas& canvas, std::span<const double> state, const Palette& palette,
                      bool collapse_depth) const {
  const std::size_t s = StateIndex(state);
  const std::size_t cols = mdp_.grid_width;
  const std::size_t rows = (mdp_.n_states + cols - 1) / cols;
  const double cw = static_cast<double>(canvas.width()) / static_cast<double>(cols);
  const double ch = static_cast<double>(canvas.height()) / static_cast<double>(rows);
  const double col = collapse_depth ? (static_cast<double>(cols) - 1.0) / 2.0 : static_cast<double>(s % cols);
  const double row = static_cast<double>(s / cols);
  canvas.FillBox((col + 0.5) * cw, (row + 0.5) * ch, 0.35 * cw, 0.35 * ch, palette.body);
  return false;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Env> MakeEnv(EnvId id) {
  switch (id) {
    case EnvId::kCartpole:
      return std::make_unique<CartpoleEnv>();
    case EnvId::kPendulum:
      return std::make_unique<PendulumEnv>();
    case EnvId::kPointMass:
      return std::make_unique<PointMassEnv>();
    case EnvId::kGridMdp:
      return std::make_unique<GridMdpEnv>(GridWorld(5, 5), 50);
  }
  throw ConfigError("unknown environment id");
}

std::unique_ptr<Env> MakeEnv(std::string_view name) { return MakeEnv(ParseEnvId(name)); }

}  // namespace vigan::envs
