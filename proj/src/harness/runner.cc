#include "vigan/harness/runner.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vigan/adversarial/adversarial.h"
#include "vigan/baselines/bc.h"
#include "vigan/baselines/pixel.h"
#include "vigan/baselines/tcn.h"
#include "vigan/common/error.h"
#include "vigan/diffcore/checkpoint.h"
#include "vigan/envs/frame.h"
#include "vigan/envs/render.h"
#include "vigan/rollout/trajectory.h"

namespace vigan::harness {
namespace fs = std::filesystem;

namespace {

// Independent random streams under the run seed.
enum Stream : std::uint64_t {
  kInitStream = 1,
  kTrainStream = 2,
  kRolloutStream = 3,
  kEvalStream = 4,
  kDemoStream = 5,
  kPolicyPairStream = 6,
};

constexpr const char* kSummaryHeader = "env,method,n_traj,seed,iterations,eval_mean,eval_std";

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string Join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

void Log(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

// Checks everything about the demos that the method depends on, before any
// learning starts.
void CheckDemos(const ExperimentConfig& config, MethodId method, const rollout::DemoSet& demos,
                const envs::Env& env, const envs::RenderMap& map) {
  CheckMethodModality(method, demos.modality);
  const std::string_view env_name = envs::EnvName(env.spec().id);
  if (demos.env_id != env_name) {
    throw ModalityError("demos " + config.demos + " were recorded on " + demos.env_id + ", not " +
                        std::string(env_name));
  }
  if (demos.demos.empty()) throw ValueError("demos " + config.demos + " hold no trajectories");
  if (demos.modality == rollout::Modality::kFrames) {
    if (demos.frame_width != map.width || demos.frame_height != map.height ||
        demos.frame_channels != map.channels) {
      throw ModalityError("demo frames are " + std::to_string(demos.frame_width) + "x" +
                          std::to_string(demos.frame_height) + "x" +
                          std::to_string(demos.frame_channels) + " but the render map is " +
                          std::to_string(map.width) + "x" + std::to_string(map.height) + "x" +
                          std::to_string(map.channels));
    }
  } else if (demos.state_dim != env.spec().state_dim) {
    throw ModalityError("demo states have dimension " + std::to_string(demos.state_dim) +
                        ", environment has " + std::to_string(env.spec().state_dim));
  }
}

struct LoopResult {
  std::string csv;
  EvalResult final_eval;
};

// The shared iteration loop of expert training and adversarial or
// reward-model imitation.
LoopResult RunIterations(const ExperimentConfig& config, const envs::Env& env,
                         adversarial::Learner& learner, adversarial::RewardModel& reward,
                         const envs::RenderMap* map, Rng& rng, std::ostream* log) {
  const std::uint64_t rollout_seed = DeriveSeed(config.seed, kRolloutStream);
  const std::uint64_t eval_seed = DeriveSeed(config.seed, kEvalStream);
  const auto episodes = static_cast<std::size_t>(config.eval_episodes);
  LoopResult out;
  out.csv = adversarial::CsvHeader() + ",eval_return,method\n";
  for (int i = 0; i < config.iterations; ++i) {
    const adversarial::IterationReport report = adversarial::ImitationIteration(
        learner, reward, env, map, config.rollout, config.trpo, rollout_seed, i, rng);
    std::string eval;
    if ((i + 1) % config.eval_every == 0) {
      const EvalResult e =
          EvaluateReturns(*learner.policy, env, episodes, eval_seed, config.rollout.workers);
      eval = Format("%.6g", e.mean);
      Log(log, config.method + " iter " + std::to_string(i + 1) + "/" +
                   std::to_string(config.iterations) + " train " +
                   Format("%.2f", report.mean_true_return) + " eval " + Format("%.2f", e.mean));
    }
    out.csv += adversarial::CsvRow(report) + "," + eval + "," + config.method + "\n";
  }
  out.final_eval = EvaluateReturns(*learner.policy, env, episodes, eval_seed, config.rollout.workers);
  return out;
}

RunSummary Finish(const ExperimentConfig& config, const adversarial::Learner& learner,
                  const std::string& run_csv, const EvalResult& eval, std::size_t n_traj,
                  int iterations, std::ostream* log) {
  const fs::path dir(config.output_dir);
  RunSummary summary{config.env, config.method, n_traj, config.seed, iterations, eval.mean, eval.std};
  WriteText(dir / "run.csv", run_csv);
  WriteText(dir / "summary.csv", SummaryCsv(summary));
  WriteText(dir / "config.json", ConfigToJson(config));
  SaveLearner(learner, Join(dir, "policy.vgnp"));
  Log(log, config.method + " final eval " + Format("%.4f", eval.mean) + " +- " +
               Format("%.4f", eval.std) + " over " + std::to_string(eval.returns.size()) +
               " episodes");
  return summary;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string SummaryCsv(const RunSummary& s) {
  return std::string(kSummaryHeader) + "\n" + s.env + "," + s.method + "," + std::to_string(s.n_traj) +
         "," + std::to_string(s.seed) + "," + std::to_string(s.iterations) + "," +
         Format("%.6f", s.eval_mean) + "," + Format("%.6f", s.eval_std) + "\n";
}

RunSummary ReadSummary(const std::string& run_dir) {
  const fs::path path = fs::path(run_dir) / "summary.csv";
  std::ifstream in(path);
  if (!in) throw Error("run " + run_dir + " has no summary.csv");
  std::string header, row;
  std::getline(in, header);
  if (header != kSummaryHeader || !std::getline(in, row) || row.empty()) {
    throw Error("run " + run_dir + " has no summary row");
  }
  const std::vector<std::string> cells = SplitCsv(row);
  if (cells.size() != 7) throw Error("run " + run_dir + ": malformed summary row");
  try {
    RunSummary s;
    s.env = cells[0];
    s.method = cells[1];
    s.n_traj = std::stoul(cells[2]);
    s.seed = std::stoull(cells[3]);
    s.iterations = std::stoi(cells[4]);
    s.eval_mean = std::stod(cells[5]);
    s.eval_std = std::stod(cells[6]);
    return s;
  } catch (const std::logic_error&) {
    throw Error("run " + run_dir + ": malformed summary row");
  }
}

EvalResult EvaluateReturns(const models::Policy& policy, const envs::Env& env, std::size_t episodes,
                           std::uint64_t seed, int workers) {
  rollout::CollectOptions options;
  options.seed = seed;
  options.deterministic = true;
  options.workers = workers;
  EvalResult r;
  for (const auto& t : rollout::CollectEpisodes(policy, env, episodes, options)) {
    r.returns.push_back(t.TrueReturn());
  }
  if (r.returns.empty()) return r;
  for (double x : r.returns) r.mean += x;
  r.mean /= static_cast<double>(r.returns.size());
  double var = 0.0;
  for (double x : r.returns) var += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(var / static_cast<double>(r.returns.size()));
  return r;
}

RunLock::RunLock(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  path_ = Join(dir, ".lock");
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw Error("output directory " + dir + " is in use by another run (remove " + path_ +
                  " if that run is gone)");
    }
    throw Error("cannot create " + path_ + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() { ::unlink(path_.c_str()); }

std::unique_ptr<envs::Env> MakeConfiguredEnv(const ExperimentConfig& config) {
  auto env = envs::MakeEnv(config.env);
  if (config.horizon > 0) env->set_horizon(config.horizon);
  return env;
}

adversarial::Learner InitialLearner(const envs::Env& env, std::uint64_t seed) {
  Rng init = Rng(seed).Fork(kInitStream);
  return adversarial::Learner::Create(env, init);
}

void SaveLearner(const adversarial::Learner& learner, const std::string& path) {
  diff::NamedTensors named = learner.policy->Named("policy");
  learner.value->AppendNamed("value", named);
  diff::SaveCheckpoint(named, path);
}

adversarial::Learner LoadLearner(const envs::Env& env, const std::string& path) {
  Rng rng(0);
  adversarial::Learner learner = adversarial::Learner::Create(env, rng);
  diff::NamedTensors named = learner.policy->Named("policy");
  learner.value->AppendNamed("value", named);
  try {
    diff::AssignFrom(diff::LoadCheckpoint(path), named);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw Error("checkpoint " + path + " does not fit " + std::string(envs::EnvName(env.spec().id)) +
                ": " + e.what());
  }
  return learner;
}

RunSummary TrainExpert(const ExperimentConfig& config, std::ostream* log) {
  config.Validate();
  const auto env = MakeConfiguredEnv(config);
  RunLock lock(config.output_dir);
  Rng train = Rng(config.seed).Fork(kTrainStream);
  adversarial::Learner learner = InitialLearner(*env, config.seed);
  adversarial::TrueReward reward;
  ExperimentConfig named = config;
  named.method = "expert_trpo";
  const LoopResult loop = RunIterations(named, *env, learner, reward, nullptr, train, log);
  return Finish(named, learner, loop.csv, loop.final_eval, 0, config.iterations, log);
}

RunSummary Imitate(const ExperimentConfig& config, std::ostream* log) {
  config.Validate();
  const MethodId method = config.method_id();
  if (method == MethodId::kExpertTrpo) return TrainExpert(config, log);
  if (config.demos.empty()) throw ConfigError("demos: required for " + config.method);

  const auto env = MakeConfiguredEnv(config);
  const envs::RenderMap map = config.render.ToMap();
  const rollout::DemoSet demos = rollout::LoadDemos(config.demos);
  CheckDemos(config, method, demos, *env, map);

  RunLock lock(config.output_dir);
  Rng train = Rng(config.seed).Fork(kTrainStream);
  adversarial::Learner learner = InitialLearner(*env, config.seed);
  const std::size_t n_traj = demos.demos.size();

  if (method == MethodId::kBc) {
    const std::uint64_t eval_seed = DeriveSeed(config.seed, kEvalStream);
    std::vector<std::string> evals(static_cast<std::size_t>(config.bc.epochs));
    baselines::BcOptions options;
    options.epochs = config.bc.epochs;
    options.learning_rate = config.bc.learning_rate;
    options.on_epoch = [&](int epoch) {
      if ((epoch + 1) % config.eval_every != 0) return;
      const EvalResult e = EvaluateReturns(*learner.policy, *env, static_cast<std::size_t>(config.eval_episodes),
                                           eval_seed, config.rollout.workers);
      evals[static_cast<std::size_t>(epoch)] = Format("%.6g", e.mean);
      Log(log, "bc epoch " + std::to_string(epoch + 1) + " eval " + Format("%.2f", e.mean));
    };
    const std::vector<double> losses = baselines::BcTrain(*learner.policy, demos, options);
    std::string csv = "epoch,loss,eval_return,method\n";
    for (std::size_t e = 0; e < losses.size(); ++e) {
      csv += std::to_string(e) + "," + Format("%.6g", losses[e]) + "," + evals[e] + ",bc\n";
    }
    const EvalResult final_eval = EvaluateReturns(
        *learner.policy, *env, static_cast<std::size_t>(config.eval_episodes), eval_seed, config.rollout.workers);
    return Finish(config, learner, csv, final_eval, n_traj, config.bc.epochs, log);
  }

  std::unique_ptr<adversarial::RewardModel> reward;
  switch (method) {
    case MethodId::kGail:
      reward = std::make_unique<adversarial::AdversarialReward>(
          demos, env->spec(), nullptr, config.AdversarialFor(adversarial::Method::kGail), train);
      break;
    case MethodId::kSigan:
      reward = std::make_unique<adversarial::AdversarialReward>(
          demos, env->spec(), nullptr, config.AdversarialFor(adversarial::Method::kSigan), train);
      break;
    case MethodId::kVigan:
      reward = std::make_unique<adversarial::AdversarialReward>(
          demos, env->spec(), &map, config.AdversarialFor(adversarial::Method::kVigan), train);
      break;
    case MethodId::kPixel:
      reward = std::make_unique<baselines::PixelRewardModel>(demos);
      break;
    case MethodId::kTcn: {
      auto tcn = std::make_unique<baselines::TcnRewardModel>(demos, config.Sampler(), config.TcnOpts(), train);
      Log(log, "tcn pretrain loss " + Format("%.4f", tcn->pretrain_loss()));
      reward = std::move(tcn);
      break;
    }
    default:
      throw ConfigError("method: " + config.method + " is not an imitation method");
  }
  const LoopResult loop = RunIterations(config, *env, learner, *reward, &map, train, log);
  return Finish(config, learner, loop.csv, loop.final_eval, n_traj, config.iterations, log);
}

rollout::DemoSet RecordDemos(const ExperimentConfig& config) {
  config.Validate();
  if (config.checkpoint.empty()) throw ConfigError("checkpoint: required for record-demos");
  if (config.demos.empty()) throw ConfigError("demos: output path required for record-demos");
  const rollout::Modality modality = rollout::ParseModality(config.modality);
  const auto env = MakeConfiguredEnv(config);
  const envs::RenderMap map = config.render.ToMap();
  const adversarial::Learner learner = LoadLearner(*env, config.checkpoint);

  rollout::CollectOptions options;
  options.seed = DeriveSeed(config.seed, kDemoStream);
  options.deterministic = config.demo_deterministic;
  options.workers = config.rollout.workers;
  options.render = modality == rollout::Modality::kFrames ? &map : nullptr;
  const auto trajs = rollout::CollectEpisodes(*learner.policy, *env,
                                              static_cast<std::size_t>(config.n_traj), options);
  rollout::DemoSet demos = rollout::MakeDemoSet(trajs, modality, config.env);
  rollout::SaveDemos(demos, config.demos);

  if (config.export_frames) {
    RunLock lock(config.output_dir);
    for (std::size_t i = 0; i < demos.demos.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "traj_%03zu", i);
      const fs::path dir = fs::path(config.output_dir) / "frames" / name;
      fs::create_directories(dir);
      const auto& frames = demos.demos[i].frames;
      for (std::size_t t = 0; t < frames.size(); ++t) {
        std::snprintf(name, sizeof(name), "frame_%05zu.ppm", t);
        envs::WritePpm(frames[t], Join(dir, name));
      }
    }
  }
  return demos;
}

rollout::DemoSet IngestFrames(const ExperimentConfig& config) {
  config.Validate();
  const IngestSettings& in = config.ingest;
  if (in.frames_dir.empty()) throw ConfigError("ingest.frames_dir: required for ingest-frames");
  if (config.demos.empty()) throw ConfigError("demos: output path required for ingest-frames");
  if (!fs::is_directory(in.frames_dir)) throw ValueError("not a directory: " + in.frames_dir);

  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(in.frames_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.size() < 2) {
    throw ValueError("ingest needs at least 2 .ppm frames in " + in.frames_dir + ", found " +
                     std::to_string(paths.size()));
  }

  const int out_w = config.render.width, out_h = config.render.height;
  rollout::Demo demo;
  envs::CropRect rect;
  int src_w = 0, src_h = 0;
  for (const std::string& path : paths) {
    envs::Frame frame = envs::ReadPpm(path, config.render.channels);
    if (src_w == 0) {
      src_w = frame.width;
      src_h = frame.height;
      rect = {in.crop_x, in.crop_y, in.crop_width > 0 ? in.crop_width : src_w - in.crop_x,
              in.crop_height > 0 ? in.crop_height : src_h - in.crop_y};
      if (rect.width <= 0 || rect.height <= 0 || rect.x + rect.width > src_w ||
          rect.y + rect.height > src_h) {
        throw ConfigError("ingest: crop rectangle does not fit the " + std::to_string(src_w) + "x" +
                          std::to_string(src_h) + " frames");
      }
    } else if (frame.width != src_w || frame.height != src_h) {
      throw ValueError("frame " + path + " is " + std::to_string(frame.width) + "x" +
                       std::to_string(frame.height) + ", earlier frames are " + std::to_string(src_w) +
                       "x" + std::to_string(src_h));
    }
    const bool identity = rect.x == 0 && rect.y == 0 && rect.width == out_w && rect.height == out_h &&
                          src_w == out_w && src_h == out_h;
    demo.frames.push_back(identity ? std::move(frame) : envs::ResizeAndCrop(frame, rect, out_w, out_h));
  }

  const auto env = MakeConfiguredEnv(config);
  rollout::DemoSet demos;
  demos.env_id = config.env;
  demos.modality = rollout::Modality::kFrames;
  demos.state_dim = env->spec().state_dim;
  demos.action_dim = env->spec().action_space.dim();
  demos.frame_width = out_w;
  demos.frame_height = out_h;
  demos.frame_channels = config.render.channels;
  demos.demos.push_back(std::move(demo));
  rollout::SaveDemos(demos, config.demos);
  return demos;
}

InjectivityResult VerifyInjectivity(const ExperimentConfig& config) {
  config.Validate();
  const auto env = MakeConfiguredEnv(config);
  const envs::RenderMap map = config.render.ToMap();
  constexpr std::size_t kMaxListed = 50;

  InjectivityResult result;
  result.report = oracle::InjectivityCheck(*env, env->QuantizationGrid(), map, kMaxListed);
  if (const auto* grid = dynamic_cast<const envs::GridMdpEnv*>(env.get())) {
    Rng rng(DeriveSeed(config.seed, kPolicyPairStream));
    const envs::GridMdp& mdp = grid->mdp();
    double worst = 0.0;
    for (int i = 0; i < config.policy_pairs; ++i) {
      const auto agent = oracle::PolicyTable::Random(mdp.n_states, mdp.n_actions, rng);
      const auto expert = oracle::PolicyTable::Random(mdp.n_states, mdp.n_actions, rng);
      worst = std::max(worst, oracle::EquivalenceCheck(*grid, agent, expert, map).max_abs_diff);
    }
    result.max_abs_diff = worst;
  }

  nlohmann::ordered_json doc;
  doc["env"] = config.env;
  doc["render_mode"] = config.render.mode;
  doc["injective"] = result.report.injective;
  doc["n_states"] = result.report.n_states;
  doc["n_distinct"] = result.report.n_distinct;
  doc["collision_pairs"] = result.report.collision_pairs;
  if (result.max_abs_diff) {
    doc["max_abs_diff"] = *result.max_abs_diff;
  } else {
    doc["max_abs_diff"] = nullptr;
  }
  doc["collisions"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : result.report.collisions) doc["collisions"].push_back({a, b});
  result.json = doc.dump(2) + "\n";

  std::ostringstream text;
  text << "render map " << config.render.mode << " on " << config.env << " (" << map.width << "x"
       << map.height << "x" << map.channels << ")\n";
  text << "states checked: " << result.report.n_states << ", distinct frames: " << result.report.n_distinct
       << "\n";
  text << (result.report.injective ? "injective: yes\n" : "injective: NO\n");
  if (!result.report.injective) {
    text << "colliding pairs: " << result.report.collision_pairs << " (first "
         << result.report.collisions.size() << " listed)\n";
    for (const auto& [a, b] : result.report.collisions) text << "  " << a << " ~ " << b << "\n";
  }
  if (result.max_abs_diff) {
    text << "max |D_image - D_state| over " << config.policy_pairs
         << " random policy pairs: " << Format("%.3e", *result.max_abs_diff) << "\n";
  }
  result.text = text.str();

  RunLock lock(config.output_dir);
  WriteText(fs::path(config.output_dir) / "injectivity.json", result.json);
  WriteText(fs::path(config.output_dir) / "injectivity.txt", result.text);
  return result;
}

EvalResult Eval(const ExperimentConfig& config) {
  config.Validate();
  if (config.checkpoint.empty()) throw ConfigError("checkpoint: required for eval");
  const auto env = MakeConfiguredEnv(config);
  const adversarial::Learner learner = LoadLearner(*env, config.checkpoint);
  return EvaluateReturns(*learner.policy, *env, static_cast<std::size_t>(config.eval_episodes),
                         DeriveSeed(config.seed, kEvalStream), config.rollout.workers);
}

}  // namespace vigan::harness
