#ifndef VIGAN_COMMON_SPACES_H_
#define VIGAN_COMMON_SPACES_H_

#include <cstddef>
#include <span>
#include <vector>

namespace vigan {

// Either n discrete actions (encoded as a single index value) or a
// continuous box.
struct ActionSpace {
  bool discrete = true;
  std::size_t n = 2;
  std::vector<double> low;
  std::vector<double> high;

  static ActionSpace Discrete(std::size_t n) { return {true, n, {}, {}}; }
  static ActionSpace Box(std::vector<double> low, std::vector<double> high) {
    return {false, 0, std::move(low), std::move(high)};
  }

  // Width of the action vector: 1 for discrete spaces.
  std::size_t dim() const { return discrete ? 1 : low.size(); }
  // Width of the action encoding fed to networks: one-hot for discrete.
  std::size_t encoded_dim() const { return discrete ? n : low.size(); }

  std::vector<double> Clamp(std::span<const double> action) const;
  // One-hot for discrete, clamped values for boxes.
  void Encode(std::span<const double> action, std::span<double> out) const;
};

}  // namespace vigan

#endif  // VIGAN_COMMON_SPACES_H_
