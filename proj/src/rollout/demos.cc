#include "vigan/rollout/demos.h"

#include <algorithm>
#include <string>

#include "vigan/common/binary_io.h"
#include "vigan/common/error.h"

namespace vigan::rollout {

std::string_view ModalityName(Modality modality) {
  switch (modality) {
    case Modality::kStateAction:
      return "state_action";
    case Modality::kStateOnly:
      return "state_only";
    case Modality::kFrames:
      return "frames";
  }
  return "unknown";
}

Modality ParseModality(std::string_view name) {
  for (Modality m : {Modality::kStateAction, Modality::kStateOnly, Modality::kFrames}) {
    if (ModalityName(m) == name) return m;
  }
  throw ConfigError("unknown demo modality '" + std::string(name) + "'");
}

std::size_t DemoSet::Length(std::size_t i) const {
  const Demo& d = demos.at(i);
  if (modality == Modality::kFrames) return d.frames.empty() ? 0 : d.frames.size() - 1;
  return state_dim == 0 || d.states.empty() ? 0 : d.states.size() / state_dim - 1;
}

std::size_t DemoSet::TotalTransitions() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < demos.size(); ++i) total += Length(i);
  return total;
}

void DemoSet::Validate() const {
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const Demo& d = demos[i];
    const std::string where = "demo " + std::to_string(i) + ": ";
    if (modality == Modality::kFrames) {
      if (d.frames.empty()) throw ValueError(where + "no frames");
      for (const envs::Frame& f : d.frames) {
        if (f.width != frame_width || f.height != frame_height || f.channels != frame_channels ||
            f.pixels.size() != static_cast<std::size_t>(f.width * f.height * f.channels)) {
          throw ValueError(where + "frame geometry differs from the demo set");
        }
      }
      if (!d.states.empty() || !d.actions.empty()) throw ValueError(where + "frames modality carries states");
      continue;
    }
    if (state_dim == 0 || d.states.empty() || d.states.size() % state_dim != 0) {
      throw ValueError(where + "states are not a whole number of rows");
    }
    const std::size_t t = d.states.size() / state_dim - 1;
    if (modality == Modality::kStateAction) {
      if (d.actions.size() != t * action_dim || d.log_probs.size() != t) {
        throw ValueError(where + "actions or log_probs do not match the state count");
      }
    } else if (!d.actions.empty() || !d.log_probs.empty()) {
      throw ValueError(where + "state_only demo carries actions");
    }
    if (!d.frames.empty()) throw ValueError(where + "state demo carries frames");
  }
}

DemoSet MakeDemoSet(const std::vector<Trajectory>& trajectories, Modality modality,
                    std::string env_id) {
  DemoSet set;
  set.env_id = std::move(env_id);
  set.modality = modality;
  if (trajectories.empty()) throw ValueError("demo set needs at least one trajectory");
  set.state_dim = trajectories.front().state_dim;
  set.action_dim = trajectories.front().action_dim;
  for (const Trajectory& traj : trajectories) {
    traj.Validate();
    Demo d;
    switch (modality) {
      case Modality::kStateAction:
        d.actions = traj.executed;
        d.log_probs = traj.log_probs;
        d.states = traj.states;
        break;
      case Modality::kStateOnly:
        d.states = traj.states;
        break;
      case Modality::kFrames:
        if (traj.frames.empty()) throw ModalityError("frames demo set needs rendered trajectories");
        d.frames = traj.frames;
        break;
    }
    set.demos.push_back(std::move(d));
  }
  if (modality == Modality::kFrames) {
    const envs::Frame& f = set.demos.front().frames.front();
    set.frame_width = f.width;
    set.frame_height = f.height;
    set.frame_channels = f.channels;
  }
  set.Validate();
  return set;
}

std::vector<std::uint8_t> EncodeDemos(const DemoSet& demos) {
  demos.Validate();
  ByteWriter w;
  w.Tag("VIGD");
  w.U32(kDemoVersion);
  w.String(demos.env_id);
  w.U8(static_cast<std::uint8_t>(demos.modality));
  w.U32(static_cast<std::uint32_t>(demos.state_dim));
  w.U32(static_cast<std::uint32_t>(demos.action_dim));
  w.U32(static_cast<std::uint32_t>(demos.frame_width));
  w.U32(static_cast<std::uint32_t>(demos.frame_height));
  w.U32(static_cast<std::uint32_t>(demos.frame_channels));
  w.U32(static_cast<std::uint32_t>(demos.demos.size()));
  for (std::size_t i = 0; i < demos.demos.size(); ++i) {
    const Demo& d = demos.demos[i];
    if (demos.modality == Modality::kFrames) {
      w.U32(static_cast<std::uint32_t>(d.frames.size()));
      for (const envs::Frame& f : d.frames) w.Raw(f.pixels);
      continue;
    }
    w.U32(static_cast<std::uint32_t>(demos.Length(i)));
    w.F64s(d.states);
    if (demos.modality == Modality::kStateAction) {
      w.F64s(d.actions);
      w.F64s(d.log_probs);
    }
  }
  return w.bytes();
}

DemoSet DecodeDemos(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "VIGD")) {
    throw FormatError(FormatError::Kind::kBadMagic, "not a VIGD demo file (bad magic)");
  }
  r.Raw(4);
  const std::uint32_t version = r.U32();
  if (version != kDemoVersion) {
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "VIGD version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kDemoVersion) + ")");
  }
  DemoSet set;
  set.env_id = r.String();
  const std::uint8_t modality = r.U8();
  if (modality > static_cast<std::uint8_t>(Modality::kFrames)) {
    throw FormatError(FormatError::Kind::kMalformed, "VIGD: unknown modality " + std::to_string(modality));
  }
  set.modality = static_cast<Modality>(modality);
  set.state_dim = r.U32();
  set.action_dim = r.U32();
  set.frame_width = static_cast<int>(r.U32());
  set.frame_height = static_cast<int>(r.U32());
  set.frame_channels = static_cast<int>(r.U32());
  const std::uint32_t count = r.U32();
  // Guards allocations against corrupted counts.
  auto need = [&](std::size_t n_bytes) {
    if (n_bytes > r.remaining()) {
      throw FormatError(FormatError::Kind::kTruncated, "VIGD: truncated payload");
    }
  };
  for (std::uint32_t i = 0; i < count; ++i) {
    Demo d;
    const std::size_t t = r.U32();
    if (set.modality == Modality::kFrames) {
      const std::size_t frame_bytes = static_cast<std::size_t>(set.frame_width) *
                                      static_cast<std::size_t>(set.frame_height) *
                                      static_cast<std::size_t>(set.frame_channels);
      need(t * frame_bytes);
      for (std::size_t f = 0; f < t; ++f) {
        envs::Frame frame(set.frame_width, set.frame_height, set.frame_channels);
        const auto raw = r.Raw(frame_bytes);
        std::copy(raw.begin(), raw.end(), frame.pixels.begin());
        d.frames.push_back(std::move(frame));
      }
    } else {
      need((t + 1) * set.state_dim * 8);
      d.states.resize((t + 1) * set.state_dim);
      r.F64s(d.states);
      if (set.modality == Modality::kStateAction) {
        need(t * (set.action_dim + 1) * 8);
        d.actions.resize(t * set.action_dim);
        r.F64s(d.actions);
        d.log_probs.resize(t);
        r.F64s(d.log_probs);
      }
    }
    set.demos.push_back(std::move(d));
  }
  if (!r.AtEnd()) {
    throw FormatError(FormatError::Kind::kMalformed,
                      "VIGD: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  try {
    set.Validate();
  } catch (const ValueError& e) {
    throw FormatError(FormatError::Kind::kMalformed, std::string("VIGD: ") + e.what());
  }
  return set;
}

void SaveDemos(const DemoSet& demos, const std::string& path) { WriteFileBytes(path, EncodeDemos(demos)); }

DemoSet LoadDemos(const std::string& path) {
  try {
    return DecodeDemos(ReadFileBytes(path));
  } catch (const FormatError& e) {
    if (e.kind() == FormatError::Kind::kIo) throw;
    throw FormatError(e.kind(), path + ": " + e.what());
  }
}

namespace {

std::size_t DemoLength(const DemoSet& set, const Demo& d) {
  if (set.modality == Modality::kFrames) return d.frames.empty() ? 0 : d.frames.size() - 1;
  return d.states.empty() ? 0 : d.states.size() / set.state_dim - 1;
}

Demo DropPrefix(const DemoSet& set, const Demo& d, std::size_t offset) {
  Demo out;
  if (set.modality == Modality::kFrames) {
    offset = std::min(offset, d.frames.size() - 2);
    out.frames.assign(d.frames.begin() + static_cast<std::ptrdiff_t>(offset), d.frames.end());
    return out;
  }
  const std::size_t t = d.states.size() / set.state_dim - 1;
  offset = std::min(offset, t - 1);
  out.states.assign(d.states.begin() + static_cast<std::ptrdiff_t>(offset * set.state_dim), d.states.end());
  if (set.modality == Modality::kStateAction) {
    out.actions.assign(d.actions.begin() + static_cast<std::ptrdiff_t>(offset * set.action_dim), d.actions.end());
    out.log_probs.assign(d.log_probs.begin() + static_cast<std::ptrdiff_t>(offset), d.log_probs.end());
  }
  return out;
}

}  // namespace

DemoSet PhaseShift(const DemoSet& demos, std::size_t offset) {
  DemoSet out = demos;
  for (std::size_t i = 0; i < out.demos.size(); ++i) {
    if (DemoLength(demos, demos.demos[i]) < 2) continue;
    out.demos[i] = DropPrefix(demos, demos.demos[i], offset);
  }
  return out;
}

DemoSet ShuffleOrderAndPhase(const DemoSet& demos, std::size_t max_offset, Rng& rng) {
  DemoSet out = demos;
  // Fisher-Yates with the platform-independent index draw.
  for (std::size_t i = out.demos.size(); i > 1; --i) {
    std::swap(out.demos[i - 1], out.demos[rng.Index(i)]);
  }
  for (Demo& d : out.demos) {
    const std::size_t offset = rng.Index(max_offset + 1);
    if (DemoLength(out, d) < 2) continue;
    d = DropPrefix(out, d, offset);
  }
  return out;
}

}  // namespace vigan::rollout
