#ifndef VIGAN_ROLLOUT_DEMOS_H_
#define VIGAN_ROLLOUT_DEMOS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vigan/common/rng.h"
#include "vigan/envs/frame.h"
#include "vigan/rollout/trajectory.h"

namespace vigan::rollout {

enum class Modality : std::uint8_t { kStateAction = 0, kStateOnly = 1, kFrames = 2 };

std::string_view ModalityName(Modality modality);
Modality ParseModality(std::string_view name);

// One demonstration. Which fields are populated depends on the modality:
// state_action fills states, actions and log_probs; state_only fills
// states; frames fills frames.
struct Demo {
  std::vector<double> states;  // (T + 1) x state_dim
  std::vector<double> actions; // T x action_dim
  std::vector<double> log_probs;
  std::vector<envs::Frame> frames;

  friend bool operator==(const Demo&, const Demo&) = default;
};

struct DemoSet {
  std::string env_id;
  Modality modality = Modality::kStateAction;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  int frame_width = 0;
  int frame_height = 0;
  int frame_channels = 0;
  std::vector<Demo> demos;

  // Number of transitions (T) in demo i.
  std::size_t Length(std::size_t i) const;
  std::size_t TotalTransitions() const;
  // Throws ValueError when a demo does not match the declared geometry.
  void Validate() const;

  friend bool operator==(const DemoSet&, const DemoSet&) = default;
};

// Builds a demo set of the given modality from rollouts. Frames modality
// requires rendered trajectories.
DemoSet MakeDemoSet(const std::vector<Trajectory>& trajectories, Modality modality,
                    std::string env_id);

// VIGD container:
//   "VIGD" | u32 version | env id (u32 len + bytes) | u8 modality |
//   u32 state_dim | u32 action_dim | u32 W | u32 H | u32 C | u32 count |
//   count x ( u32 T | payload )
// with payload = states (T+1) x f64, actions and log_probs for
// state_action; states for state_only; (T+1) x W*H*C u8 frames for frames.
// The frames modality stores the frame count (T + 1) instead of T.
inline constexpr std::uint32_t kDemoVersion = 1;

std::vector<std::uint8_t> EncodeDemos(const DemoSet& demos);
DemoSet DecodeDemos(std::span<const std::uint8_t> bytes);
void SaveDemos(const DemoSet& demos, const std::string& path);
DemoSet LoadDemos(const std::string& path);

// Drops the first `offset` frames or states of every demo.
DemoSet PhaseShift(const DemoSet& demos, std::size_t offset);
// Random demo order, and a random number of leading steps in
// [0, max_offset] dropped from each demo.
DemoSet ShuffleOrderAndPhase(const DemoSet& demos, std::size_t max_offset, Rng& rng);

}  // namespace vigan::rollout

#endif  // VIGAN_ROLLOUT_DEMOS_H_
