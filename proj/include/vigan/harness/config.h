#ifndef VIGAN_HARNESS_CONFIG_H_
#define VIGAN_HARNESS_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "vigan/adversarial/adversarial.h"
#include "vigan/adversarial/learner.h"
#include "vigan/baselines/tcn.h"
#include "vigan/envs/render.h"
#include "vigan/rollout/demos.h"
#include "vigan/trpo/trpo.h"

namespace vigan::harness {

enum class MethodId { kExpertTrpo, kBc, kGail, kSigan, kVigan, kPixel, kTcn };

std::string_view MethodIdName(MethodId method);
MethodId ParseMethodId(std::string_view name);

// True for the methods that learn from frames demos.
bool IsVideoMethod(MethodId method);

// Throws ModalityError unless `modality` carries what `method` consumes.
void CheckMethodModality(MethodId method, rollout::Modality modality);

struct RenderSettings {
  int width = 64;
  int height = 64;
  int channels = 3;
  std::string mode = "injective";
  double crop_shake_max = 0.0;
  int k_frames = 2;
  double occluder_x0 = 0.2;
  double occluder_y0 = 0.4;
  double occluder_x1 = 0.8;
  double occluder_y1 = 0.6;

  envs::RenderMap ToMap() const;
};

struct BcSettings {
  int epochs = 500;
  double learning_rate = 1e-3;
};

struct TcnSettings {
  int epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  int pos_window = 2;
  int neg_window = 10;
  double margin = 0.2;
  bool include_agent_frames = false;
  int agent_steps_per_iter = 5;
};

// Frame directory import. A zero crop width or height means the full frame.
struct IngestSettings {
  std::string frames_dir;
  int crop_x = 0;
  int crop_y = 0;
  int crop_width = 0;
  int crop_height = 0;
};

// One experiment. Loaded from a single JSON document in which every field is
// optional and unknown fields are rejected.
struct ExperimentConfig {
  std::string env = "cartpole_analog";
  std::string method = "vigan";
  std::uint64_t seed = 0;
  int iterations = 300;
  int horizon = 0;  // 0 keeps the environment default
  std::string demos;       // VIGD path read by imitate, written by record-demos
  std::string checkpoint;  // VGNP path read by record-demos and eval
  std::string output_dir = "runs/default";
  int eval_every = 5;
  int eval_episodes = 20;

  // record-demos
  int n_traj = 5;
  std::string modality = "frames";
  bool demo_deterministic = true;
  bool export_frames = false;

  // verify-injectivity on grid_mdp
  int policy_pairs = 20;

  RenderSettings render;
  adversarial::RolloutSettings rollout;
  trpo::TrpoConfig trpo;
  adversarial::AdversarialConfig adversarial;
  BcSettings bc;
  TcnSettings tcn;
  IngestSettings ingest;

  // Throws ConfigError naming the offending field.
  void Validate() const;

  MethodId method_id() const { return ParseMethodId(method); }
  adversarial::AdversarialConfig AdversarialFor(adversarial::Method method) const;
  baselines::TripletSampler Sampler() const;
  baselines::TcnOptions TcnOpts() const;
};

// Parses a JSON document on top of the defaults. Type errors and unknown
// fields raise ConfigError with the dotted field path.
ExperimentConfig ParseConfig(std::string_view json_text);
ExperimentConfig LoadConfig(const std::string& path);

// Every field, with 2-space indentation and a trailing newline.
std::string ConfigToJson(const ExperimentConfig& config);

// Sets one field from text, e.g. ("render.width", "32"). The value is read
// as JSON when it parses as such and as a string otherwise.
void SetField(ExperimentConfig& config, const std::string& path, const std::string& value);

}  // namespace vigan::harness

#endif  // VIGAN_HARNESS_CONFIG_H_
