#include "vigan/common/spaces.h"

#include <algorithm>
#include <cmath>

#include "vigan/common/error.h"

namespace vigan {

std::vector<double> ActionSpace::Clamp(std::span<const double> action) const {
  if (action.size() != dim()) {
    throw ShapeError("action has " + std::to_string(action.size()) + " entries, space expects " +
                     std::to_string(dim()));
  }
  std::vector<double> out(action.begin(), action.end());
  if (discrete) {
    const double idx = std::round(out[0]);
    if (!(idx >= 0.0 && idx < static_cast<double>(n))) {
      throw ValueError("discrete action " + std::to_string(out[0]) + " outside [0, " +
                       std::to_string(n) + ")");
    }
    out[0] = idx;
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], low[i], high[i]);
  return out;
}

void ActionSpace::Encode(std::span<const double> action, std::span<double> out) const {
  if (discrete) {
    std::fill(out.begin(), out.begin() + static_cast<long>(n), 0.0);
    const auto idx = static_cast<std::size_t>(std::lround(action[0]));
    if (idx >= n) throw ValueError("discrete action index out of range");
    out[idx] = 1.0;
    return;
  }
  for (std::size_t i = 0; i < low.size(); ++i) out[i] = std::clamp(action[i], low[i], high[i]);
}

}  // namespace vigan
