#ifndef VIGAN_HARNESS_RUNNER_H_
#define VIGAN_HARNESS_RUNNER_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vigan/adversarial/learner.h"
#include "vigan/envs/env.h"
#include "vigan/harness/config.h"
#include "vigan/oracle/equivalence.h"
#include "vigan/rollout/demos.h"

namespace vigan::harness {

// Final evaluation of one run, as stored in summary.csv.
struct RunSummary {
  std::string env;
  std::string method;
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
};

std::string SummaryCsv(const RunSummary& summary);
// Reads <run_dir>/summary.csv. Throws Error naming the run when it is
// missing or has no data row.
RunSummary ReadSummary(const std::string& run_dir);

struct EvalResult {
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// Deterministic-action episodes on the true reward.
EvalResult EvaluateReturns(const models::Policy& policy, const envs::Env& env, std::size_t episodes,
                           std::uint64_t seed, int workers);

// Exclusive claim on an output directory, held through a .lock file that is
// created with O_EXCL and removed on destruction. Creates the directory.
class RunLock {
 public:
  explicit RunLock(const std::string& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

// The configured environment with the horizon override applied.
std::unique_ptr<envs::Env> MakeConfiguredEnv(const ExperimentConfig& config);

// The learner a run with this seed starts from.
adversarial::Learner InitialLearner(const envs::Env& env, std::uint64_t seed);

// Policy and value parameters as "policy.*" and "value.*" tensors.
void SaveLearner(const adversarial::Learner& learner, const std::string& path);
adversarial::Learner LoadLearner(const envs::Env& env, const std::string& path);

// Each command validates the config first. Progress lines go to `log`.
//
// train-expert and imitate write run.csv, summary.csv, policy.vgnp and
// config.json into output_dir.
RunSummary TrainExpert(const ExperimentConfig& config, std::ostream* log = nullptr);
RunSummary Imitate(const ExperimentConfig& config, std::ostream* log = nullptr);

// Rolls out the checkpointed policy for n_traj episodes and writes the demos
// file; with export_frames the frames also go to output_dir/frames as PPM.
rollout::DemoSet RecordDemos(const ExperimentConfig& config);

// Packs the lexicographically ordered .ppm files of ingest.frames_dir into a
// single frames trajectory of the render size and writes the demos file.
rollout::DemoSet IngestFrames(const ExperimentConfig& config);

struct InjectivityResult {
  oracle::InjectivityReport report;
  // Worst equivalence gap over random policy pairs; grid_mdp only.
  std::optional<double> max_abs_diff;
  std::string json;
  std::string text;
};

// Checks the render map over the environment's quantization grid and writes
// injectivity.json and injectivity.txt into output_dir.
InjectivityResult VerifyInjectivity(const ExperimentConfig& config);

EvalResult Eval(const ExperimentConfig& config);

}  // namespace vigan::harness

#endif  // VIGAN_HARNESS_RUNNER_H_
