// Command-line front end: one subcommand per experiment step.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vigan/common/error.h"
#include "vigan/harness/config.h"
#include "vigan/harness/report.h"
#include "vigan/harness/runner.h"

namespace {

using vigan::harness::ExperimentConfig;

// Flags that mirror config fields; applied on top of --config in this order.
struct FlagField {
  const char* flag;
  const char* field;
  const char* help;
};

constexpr FlagField kFlags[] = {
    {"--env", "env", "cartpole_analog, pendulum_analog, point_mass or grid_mdp"},
    {"--method", "method", "expert_trpo, bc, gail, sigan, vigan, pixel or tcn"},
    {"--seed", "seed", "run seed"},
    {"--iterations", "iterations", "training iterations"},
    {"--horizon", "horizon", "episode horizon (0 keeps the env default)"},
    {"--demos", "demos", "demos file (VIGD)"},
    {"--checkpoint", "checkpoint", "policy checkpoint (VGNP)"},
    {"--output-dir", "output_dir", "directory for run outputs"},
    {"--eval-every", "eval_every", "evaluate every N iterations"},
    {"--eval-episodes", "eval_episodes", "episodes per evaluation"},
    {"--n-traj", "n_traj", "trajectories to record"},
    {"--modality", "modality", "state_action, state_only or frames"},
    {"--width", "render.width", "frame width"},
    {"--height", "render.height", "frame height"},
    {"--channels", "render.channels", "1 or 3"},
    {"--render-mode", "render.mode", "injective, occluding or axis_degenerate"},
    {"--crop-shake-max", "render.crop_shake_max", "max crop fraction per side"},
    {"--k-frames", "render.k_frames", "frames per discriminator sample (2 or 3)"},
    {"--steps-per-iter", "rollout.steps_per_iter", "environment steps per iteration"},
    {"--workers", "rollout.workers", "rollout worker threads"},
    {"--frames-dir", "ingest.frames_dir", "directory of PPM frames to ingest"},
    {"--crop-x", "ingest.crop_x", "crop rectangle left edge"},
    {"--crop-y", "ingest.crop_y", "crop rectangle top edge"},
    {"--crop-width", "ingest.crop_width", "crop rectangle width (0 = full)"},
    {"--crop-height", "ingest.crop_height", "crop rectangle height (0 = full)"},
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> flag_values = std::vector<std::string>(std::size(kFlags));
  std::vector<std::string> sets;
  bool fast = false;
  bool export_frames = false;
};

void AddCommon(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)");
  for (std::size_t i = 0; i < std::size(kFlags); ++i) {
    cmd->add_option(kFlags[i].flag, args.flag_values[i], kFlags[i].help);
  }
  cmd->add_option("--set", args.sets, "override any field: path=value, e.g. trpo.max_kl=0.02");
  cmd->add_flag("--fast", args.fast, "32x32x1 frames");
}

ExperimentConfig BuildConfig(const CommonArgs& args) {
  ExperimentConfig config =
      args.config_path.empty() ? ExperimentConfig{} : vigan::harness::LoadConfig(args.config_path);
  if (args.fast) {
    config.render.width = 32;
    config.render.height = 32;
    config.render.channels = 1;
  }
  if (args.export_frames) config.export_frames = true;
  for (std::size_t i = 0; i < std::size(kFlags); ++i) {
    if (!args.flag_values[i].empty()) vigan::harness::SetField(config, kFlags[i].field, args.flag_values[i]);
  }
  for (const std::string& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw vigan::ConfigError("--set expects path=value, got '" + s + "'");
    vigan::harness::SetField(config, s.substr(0, eq), s.substr(eq + 1));
  }
  config.Validate();
  return config;
}

void PrintSummary(const vigan::harness::RunSummary& s) {
  std::printf("%s %s n_traj=%zu seed=%llu eval %.4f +- %.4f\n", s.env.c_str(), s.method.c_str(), s.n_traj,
              static_cast<unsigned long long>(s.seed), s.eval_mean, s.eval_std);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video imitation experiments: experts, demos, imitation and reports"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* train = app.add_subcommand("train-expert", "TRPO on the true reward");
  auto* record = app.add_subcommand("record-demos", "roll out a checkpoint into a demos file");
  auto* imitate = app.add_subcommand("imitate", "learn a policy from demos");
  auto* ingest = app.add_subcommand("ingest-frames", "pack a directory of PPM frames into a demos file");
  auto* verify = app.add_subcommand("verify-injectivity", "check the render map for collisions");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  for (auto* cmd : {train, record, imitate, ingest, verify, eval}) AddCommon(cmd, args);
  record->add_flag("--export-frames", args.export_frames, "also write frames as PPM");
  bool print_config = false;
  for (auto* cmd : {train, imitate}) cmd->add_flag("--print-config", print_config, "print the resolved config");

  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  auto* report = app.add_subcommand("report", "tabulate run summaries");
  report->add_option("runs", report_inputs, "run directories or report CSV files")->required();
  report->add_option("--out", report_out, "directory for report.txt and report.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      const auto entries = vigan::harness::LoadReportInputs(report_inputs);
      const std::string table = vigan::harness::ReportTable(entries);
      std::filesystem::create_directories(report_out);
      std::ofstream(std::filesystem::path(report_out) / "report.txt", std::ios::binary) << table;
      std::ofstream(std::filesystem::path(report_out) / "report.csv", std::ios::binary)
          << vigan::harness::ReportCsv(entries);
      std::cout << table;
      return 0;
    }

    const ExperimentConfig config = BuildConfig(args);
    if (print_config) std::cout << vigan::harness::ConfigToJson(config);
    if (train->parsed()) {
      PrintSummary(vigan::harness::TrainExpert(config, &std::cout));
    } else if (imitate->parsed()) {
      PrintSummary(vigan::harness::Imitate(config, &std::cout));
    } else if (record->parsed()) {
      const auto demos = vigan::harness::RecordDemos(config);
      std::printf("wrote %zu %s trajectories (%zu transitions) to %s\n", demos.demos.size(),
                  std::string(vigan::rollout::ModalityName(demos.modality)).c_str(), demos.TotalTransitions(),
                  config.demos.c_str());
    } else if (ingest->parsed()) {
      const auto demos = vigan::harness::IngestFrames(config);
      std::printf("wrote %zu frames to %s\n", demos.demos.front().frames.size(), config.demos.c_str());
    } else if (verify->parsed()) {
      const auto result = vigan::harness::VerifyInjectivity(config);
      std::cout << result.text;
      return result.report.injective ? 0 : 3;
    } else if (eval->parsed()) {
      const auto r = vigan::harness::Eval(config);
      std::printf("eval %.4f +- %.4f over %zu episodes\n", r.mean, r.std, r.returns.size());
    }
  } catch (const vigan::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
