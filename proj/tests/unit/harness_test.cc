#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "vigan/adversarial/adversarial.h"
#include "vigan/common/error.h"
#include "vigan/diffcore/checkpoint.h"
#include "vigan/envs/frame.h"
#include "vigan/harness/config.h"
#include "vigan/harness/report.h"
#include "vigan/harness/runner.h"
#include "vigan/rollout/demos.h"

namespace vigan::harness {
namespace {

namespace fs = std::filesystem;

// Scratch directory removed at the end of the test.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("vigan_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Fast cartpole settings for runner tests.
ExperimentConfig Small(const TempDir& dir, const std::string& out) {
  ExperimentConfig c;
  c.env = "cartpole_analog";
  c.iterations = 2;
  c.rollout.steps_per_iter = 200;
  c.eval_every = 1;
  c.eval_episodes = 3;
  c.render.width = 16;
  c.render.height = 16;
  c.output_dir = dir / out;
  return c;
}

// Trains nothing; just a checkpoint to record demos from.
std::string ZeroIterationCheckpoint(const TempDir& dir) {
  ExperimentConfig c = Small(dir, "expert");
  c.iterations = 0;
  TrainExpert(c);
  return c.output_dir + "/policy.vgnp";
}

TEST(Config, DefaultsSurviveJsonRoundTrip) {
  const ExperimentConfig c;
  const std::string json = ConfigToJson(c);
  EXPECT_EQ(ConfigToJson(ParseConfig(json)), json);
  EXPECT_EQ(ParseConfig("{}").iterations, 300);
  EXPECT_EQ(ParseConfig("{}").eval_episodes, 20);
}

TEST(Config, UnknownFieldsAreRejectedWithTheirPath) {
  try {
    ParseConfig(R"({"env": "point_mass", "itertions": 3})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'itertions'"), std::string::npos) << e.what();
  }
  try {
    ParseConfig(R"({"render": {"width": 32, "colour": 1}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("render.colour"), std::string::npos) << e.what();
  }
}

TEST(Config, TypeAndRangeErrorsNameTheField) {
  auto message = [](const char* json) {
    try {
      ParseConfig(json);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"seed": -1})").find("seed"), std::string::npos);
  EXPECT_NE(message(R"({"trpo": {"max_kl": "big"}})").find("trpo.max_kl"), std::string::npos);
  EXPECT_NE(message(R"({"render": {"k_frames": 4}})").find("k_frames"), std::string::npos);
  EXPECT_NE(message(R"({"method": "dagger"})").find("method"), std::string::npos);
  EXPECT_NE(message(R"({"env": "hopper"})").find("env"), std::string::npos);
  EXPECT_NE(message(R"({"rollout": {"workers": 0}})").find("rollout.workers"), std::string::npos);
  EXPECT_NE(message("{not json").find("JSON"), std::string::npos);
}

TEST(Config, SetFieldOverridesAndValidates) {
  ExperimentConfig c;
  SetField(c, "render.width", "32");
  SetField(c, "env", "point_mass");
  SetField(c, "tcn.include_agent_frames", "true");
  SetField(c, "demos", "123");  // string fields keep numeric-looking text
  EXPECT_EQ(c.render.width, 32);
  EXPECT_EQ(c.env, "point_mass");
  EXPECT_TRUE(c.tcn.include_agent_frames);
  EXPECT_EQ(c.demos, "123");
  EXPECT_THROW(SetField(c, "render.depth", "3"), ConfigError);
  EXPECT_THROW(SetField(c, "render", "3"), ConfigError);
  EXPECT_THROW(SetField(c, "iterations", "-1"), ConfigError);
}

TEST(Config, MethodModalityTable) {
  using rollout::Modality;
  const Modality all[] = {Modality::kStateAction, Modality::kStateOnly, Modality::kFrames};
  const struct {
    MethodId method;
    bool ok[3];
  } table[] = {
      {MethodId::kBc, {true, false, false}},     {MethodId::kGail, {true, false, false}},
      {MethodId::kSigan, {true, true, false}},   {MethodId::kVigan, {false, false, true}},
      {MethodId::kPixel, {false, false, true}},  {MethodId::kTcn, {false, false, true}},
  };
  for (const auto& row : table) {
    for (int m = 0; m < 3; ++m) {
      if (row.ok[m]) {
        EXPECT_NO_THROW(CheckMethodModality(row.method, all[m]));
      } else {
        EXPECT_THROW(CheckMethodModality(row.method, all[m]), ModalityError)
            << MethodIdName(row.method) << " " << rollout::ModalityName(all[m]);
      }
    }
  }
}

TEST(Runner, SameSeedGivesIdenticalBytes) {
  TempDir dir;
  ExperimentConfig a = Small(dir, "a");
  ExperimentConfig b = Small(dir, "b");
  TrainExpert(a);
  TrainExpert(b);
  for (const char* file : {"run.csv", "summary.csv", "policy.vgnp"}) {
    EXPECT_EQ(ReadFile(a.output_dir + "/" + file), ReadFile(b.output_dir + "/" + file)) << file;
  }
  ExperimentConfig c = Small(dir, "c");
  c.seed = 1;
  TrainExpert(c);
  EXPECT_NE(ReadFile(a.output_dir + "/policy.vgnp"), ReadFile(c.output_dir + "/policy.vgnp"));

  const std::string csv = ReadFile(a.output_dir + "/run.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), adversarial::CsvHeader() + ",eval_return,method");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_FALSE(fs::exists(a.output_dir + "/.lock"));
}

TEST(Runner, ZeroIterationsSavesTheInitialPolicy) {
  TempDir dir;
  ExperimentConfig c = Small(dir, "zero");
  c.iterations = 0;
  const RunSummary s = TrainExpert(c);
  const auto env = MakeConfiguredEnv(c);
  const adversarial::Learner init = InitialLearner(*env, c.seed);
  diff::NamedTensors expected = init.policy->Named("policy");
  init.value->AppendNamed("value", expected);
  const std::vector<std::uint8_t> bytes = diff::EncodeCheckpoint(expected);
  EXPECT_EQ(ReadFile(c.output_dir + "/policy.vgnp"), std::string(bytes.begin(), bytes.end()));
  EXPECT_EQ(ReadFile(c.output_dir + "/run.csv"), adversarial::CsvHeader() + ",eval_return,method\n");
  EXPECT_EQ(s.iterations, 0);
  // The logged evaluation is that of the saved policy.
  c.checkpoint = c.output_dir + "/policy.vgnp";
  EXPECT_NEAR(Eval(c).mean, ReadSummary(c.output_dir).eval_mean, 1e-6);
}

TEST(Runner, LockExcludesASecondRun) {
  TempDir dir;
  ExperimentConfig c = Small(dir, "locked");
  {
    RunLock lock(c.output_dir);
    EXPECT_THROW(RunLock again(c.output_dir), Error);
    EXPECT_THROW(TrainExpert(c), Error);
  }
  EXPECT_NO_THROW(RunLock(c.output_dir));
}

TEST(Runner, VideoMethodWithStateDemosFailsBeforeTraining) {
  TempDir dir;
  ExperimentConfig rec = Small(dir, "rec");
  rec.checkpoint = ZeroIterationCheckpoint(dir);
  rec.demos = dir / "state_only.vigd";
  rec.modality = "state_only";
  rec.n_traj = 1;
  RecordDemos(rec);

  for (const char* method : {"vigan", "pixel", "tcn", "gail", "bc"}) {
    ExperimentConfig c = Small(dir, std::string("run_") + method);
    c.method = method;
    c.demos = rec.demos;
    EXPECT_THROW(Imitate(c), ModalityError) << method;
    EXPECT_FALSE(fs::exists(c.output_dir)) << method;
  }
}

TEST(Runner, FrameGeometryMismatchIsAModalityError) {
  TempDir dir;
  ExperimentConfig rec = Small(dir, "rec");
  rec.checkpoint = ZeroIterationCheckpoint(dir);
  rec.demos = dir / "frames.vigd";
  rec.n_traj = 1;
  RecordDemos(rec);
  ExperimentConfig c = Small(dir, "run");
  c.demos = rec.demos;
  c.render.width = 32;
  EXPECT_THROW(Imitate(c), ModalityError);
}

TEST(Runner, ImitationRunsAreDeterministic) {
  TempDir dir;
  ExperimentConfig rec = Small(dir, "rec");
  rec.checkpoint = ZeroIterationCheckpoint(dir);
  rec.demos = dir / "frames.vigd";
  rec.n_traj = 2;
  RecordDemos(rec);
  for (const char* method : {"vigan", "pixel"}) {
    ExperimentConfig a = Small(dir, std::string(method) + "_a");
    ExperimentConfig b = Small(dir, std::string(method) + "_b");
    a.method = b.method = method;
    a.demos = b.demos = rec.demos;
    const RunSummary s = Imitate(a);
    Imitate(b);
    EXPECT_EQ(s.n_traj, 2u);
    EXPECT_EQ(ReadFile(a.output_dir + "/run.csv"), ReadFile(b.output_dir + "/run.csv")) << method;
    EXPECT_EQ(ReadFile(a.output_dir + "/policy.vgnp"), ReadFile(b.output_dir + "/policy.vgnp")) << method;
    EXPECT_EQ(ParseConfig(ReadFile(a.output_dir + "/config.json")).method, method);
  }
}

TEST(Runner, BcLogsEpochRows) {
  TempDir dir;
  ExperimentConfig rec = Small(dir, "rec");
  rec.checkpoint = ZeroIterationCheckpoint(dir);
  rec.demos = dir / "sa.vigd";
  rec.modality = "state_action";
  rec.n_traj = 1;
  RecordDemos(rec);
  ExperimentConfig c = Small(dir, "bc");
  c.method = "bc";
  c.demos = rec.demos;
  c.bc.epochs = 10;
  c.eval_every = 5;
  const RunSummary s = Imitate(c);
  EXPECT_EQ(s.iterations, 10);
  const std::string csv = ReadFile(c.output_dir + "/run.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,loss,eval_return,method");
}

TEST(Runner, RecordedStateOnlyDemosCarryNoActions) {
  TempDir dir;
  ExperimentConfig rec = Small(dir, "rec");
  rec.checkpoint = ZeroIterationCheckpoint(dir);
  rec.n_traj = 2;
  rec.modality = "state_action";
  rec.demos = dir / "sa.vigd";
  const auto sa = RecordDemos(rec);
  rec.modality = "state_only";
  rec.demos = dir / "so.vigd";
  const auto so = RecordDemos(rec);
  ASSERT_EQ(sa.TotalTransitions(), so.TotalTransitions());
  // actions (f64) and log_probs (f64) per transition for the 1-d cartpole action
  EXPECT_EQ(fs::file_size(dir / "sa.vigd") - fs::file_size(dir / "so.vigd"), sa.TotalTransitions() * 16);
  EXPECT_TRUE(so.demos[0].actions.empty());
}

// Exports frames through record-demos and ingests them back.
TEST(Ingest, ExportedFramesRoundTripByteExactly) {
  for (int channels : {3, 1}) {
    TempDir dir;
    ExperimentConfig rec = Small(dir, "rec");
    rec.checkpoint = ZeroIterationCheckpoint(dir);
    rec.render.channels = channels;
    rec.demos = dir / "frames.vigd";
    rec.n_traj = 1;
    rec.export_frames = true;
    const rollout::DemoSet recorded = RecordDemos(rec);

    ExperimentConfig in = rec;
    in.ingest.frames_dir = rec.output_dir + "/frames/traj_000";
    in.demos = dir / "ingested.vigd";
    const rollout::DemoSet ingested = IngestFrames(in);
    ASSERT_EQ(ingested.demos.size(), 1u);
    EXPECT_TRUE(ingested.demos[0].frames == recorded.demos[0].frames) << "channels " << channels;
    EXPECT_TRUE(rollout::LoadDemos(in.demos) == ingested);
  }
}

TEST(Ingest, ThreeFramesGiveTwoPairTransitions) {
  TempDir dir;
  fs::create_directories(dir / "frames");
  for (int i = 0; i < 3; ++i) {
    envs::Frame f(20, 10, 3, static_cast<std::uint8_t>(40 * i));
    envs::WritePpm(f, dir / ("frames/f" + std::to_string(i) + ".ppm"));
  }
  WriteFile(dir / "frames/notes.txt", "ignored");
  ExperimentConfig c;
  c.env = "point_mass";
  c.render.width = 8;
  c.render.height = 8;
  c.ingest.frames_dir = dir / "frames";
  c.ingest.crop_x = 5;
  c.ingest.crop_width = 10;
  c.demos = dir / "out.vigd";
  const rollout::DemoSet demos = IngestFrames(c);
  EXPECT_EQ(demos.demos[0].frames.size(), 3u);
  EXPECT_EQ(demos.Length(0), 2u);
  EXPECT_EQ(demos.demos[0].frames[2].width, 8);
  EXPECT_EQ(demos.demos[0].frames[2].at(3, 3, 0), 80);
  const auto env = MakeConfiguredEnv(c);
  const auto pool = adversarial::SamplePool::FromDemos(demos, adversarial::Method::kVigan, 2,
                                                       env->spec().action_space);
  EXPECT_EQ(pool.num_positions(), 2u);
}

TEST(Ingest, MalformedAndMixedInputsGiveDistinctErrors) {
  TempDir dir;
  fs::create_directories(dir / "bad");
  envs::WritePpm(envs::Frame(8, 8, 3), dir / "bad/a.ppm");
  WriteFile(dir / "bad/b.ppm", "P5\n8 8\n255\n" + std::string(64, '\0'));
  ExperimentConfig c;
  c.ingest.frames_dir = dir / "bad";
  c.demos = dir / "out.vigd";
  c.render.width = c.render.height = 8;
  try {
    IngestFrames(c);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("b.ppm"), std::string::npos) << e.what();
  }

  fs::create_directories(dir / "mixed");
  envs::WritePpm(envs::Frame(8, 8, 3), dir / "mixed/a.ppm");
  envs::WritePpm(envs::Frame(9, 8, 3), dir / "mixed/b.ppm");
  c.ingest.frames_dir = dir / "mixed";
  try {
    IngestFrames(c);
    FAIL() << "expected ValueError";
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("b.ppm"), std::string::npos) << e.what();
  }

  fs::create_directories(dir / "single");
  envs::WritePpm(envs::Frame(8, 8, 3), dir / "single/a.ppm");
  c.ingest.frames_dir = dir / "single";
  EXPECT_THROW(IngestFrames(c), ValueError);
}

TEST(Injectivity, GridReportsMatchTheMapKind) {
  TempDir dir;
  ExperimentConfig c;
  c.env = "grid_mdp";
  c.output_dir = dir / "inj";
  c.policy_pairs = 5;
  const InjectivityResult ok = VerifyInjectivity(c);
  EXPECT_TRUE(ok.report.injective);
  ASSERT_TRUE(ok.max_abs_diff.has_value());
  EXPECT_LE(*ok.max_abs_diff, 1e-12);

  c.render.mode = "occluding";
  const InjectivityResult occ = VerifyInjectivity(c);
  EXPECT_FALSE(occ.report.injective);
  EXPECT_GT(*occ.max_abs_diff, 1e-3);
  const auto doc = nlohmann::json::parse(ReadFile(c.output_dir + "/injectivity.json"));
  EXPECT_FALSE(doc["injective"].get<bool>());
  EXPECT_GT(doc["max_abs_diff"].get<double>(), 1e-3);
  EXPECT_EQ(doc["collisions"].size(), occ.report.collisions.size());
}

TEST(Injectivity, ContinuousEnvHasNoEquivalenceNumber) {
  TempDir dir;
  ExperimentConfig c;
  c.env = "point_mass";
  c.render.width = c.render.height = 32;
  c.output_dir = dir / "inj";
  const InjectivityResult r = VerifyInjectivity(c);
  EXPECT_TRUE(r.report.injective);
  EXPECT_FALSE(r.max_abs_diff.has_value());
  EXPECT_TRUE(nlohmann::json::parse(r.json)["max_abs_diff"].is_null());
}

TEST(Report, SingleRunGivesOneByOneTable) {
  TempDir dir;
  fs::create_directories(dir / "gail");
  WriteFile(dir / "gail/summary.csv",
            SummaryCsv({"cartpole_analog", "gail", 5, 0, 300, 198.25, 1.5}));
  const auto entries = LoadReportInputs({dir / "gail"});
  ASSERT_EQ(entries.size(), 1u);
  const std::string table = ReportTable(entries);
  std::istringstream lines(table);
  std::string header, rule, row;
  std::getline(lines, header);
  std::getline(lines, rule);
  std::getline(lines, row);
  EXPECT_NE(header.find("gail"), std::string::npos);
  EXPECT_NE(row.find("cartpole_analog"), std::string::npos);
  EXPECT_NE(row.find("198.2"), std::string::npos);
  EXPECT_EQ(ReportCsv(entries), "env,n_traj,method,eval_return\ncartpole_analog,5,gail,198.2500\n");
}

TEST(Report, CsvRoundTripIsIdentical) {
  const std::vector<ReportEntry> entries = {
      {"pendulum_analog", 1, "vigan", -194.412345}, {"pendulum_analog", 1, "pixel", -1203.4},
      {"cartpole_analog", 5, "gail", 200.0},         {"cartpole_analog", 5, "tcn", 150.0},
      {"pendulum_analog", 1, "vigan", -200.0},
  };
  const std::string csv = ReportCsv(entries);
  const auto reparsed = ParseReportCsv(csv);
  EXPECT_EQ(ReportCsv(reparsed), csv);
  EXPECT_EQ(ReportTable(reparsed), ReportTable(entries));
  // Two vigan seeds are averaged into one cell.
  EXPECT_EQ(reparsed.size(), 4u);
  EXPECT_NE(csv.find("pendulum_analog,1,vigan,-197.2062"), std::string::npos) << csv;
}

TEST(Report, MarksTheBestVideoMethod) {
  const std::string table = ReportTable({{"pendulum_analog", 1, "gail", -100.0},
                                         {"pendulum_analog", 1, "vigan", -194.4},
                                         {"pendulum_analog", 1, "pixel", -1203.4}});
  EXPECT_NE(table.find("-194.4*"), std::string::npos) << table;
  EXPECT_EQ(table.find("-100.0*"), std::string::npos) << table;
  EXPECT_EQ(table.find("-1203.4*"), std::string::npos) << table;
}

TEST(Report, MissingSummaryNamesTheRun) {
  TempDir dir;
  fs::create_directories(dir / "unfinished");
  WriteFile(dir / "unfinished/run.csv", "iter\n");
  try {
    LoadReportInputs({dir / "unfinished"});
    FAIL() << "expected Error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unfinished"), std::string::npos);
  }
  fs::create_directories(dir / "empty_summary");
  WriteFile(dir / "empty_summary/summary.csv", "env,method,n_traj,seed,iterations,eval_mean,eval_std\n");
  EXPECT_THROW(LoadReportInputs({dir / "empty_summary"}), Error);
}

}  // namespace
}  // namespace vigan::harness
