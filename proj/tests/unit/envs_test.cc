#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include "vigan/common/binary_io.h"
#include "vigan/common/error.h"
#include "vigan/envs/env.h"
#include "vigan/envs/frame.h"
#include "vigan/envs/grid_mdp.h"
#include "vigan/envs/render.h"

namespace vigan::envs {
namespace {

RenderMap SmallMap(RenderMode mode = RenderMode::kInjective) {
  RenderMap map;
  map.width = 32;
  map.height = 32;
  map.channels = 1;
  map.mode = mode;
  return map;
}

TEST(DynamicsTest, CartpoleUprightWithZeroForce) {
  const std::vector<double> zero = {0, 0, 0, 0};
  const auto next = CartpoleDynamics(zero, 0.0);
  EXPECT_LT(std::abs(next[2]), std::abs(zero[2]) + 1e-6);
  for (double v : next) EXPECT_EQ(v, 0.0);
}

TEST(DynamicsTest, PendulumRewardPeaksAtTarget) {
  EXPECT_EQ(PendulumEnv::Reward(0.0, 0.0, 0.0), 0.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.Uniform(-3, 3), w = rng.Uniform(-8, 8), u = rng.Uniform(-2, 2);
    if (t == 0.0 && w == 0.0 && u == 0.0) continue;
    EXPECT_LT(PendulumEnv::Reward(t, w, u), 0.0);
  }
  EXPECT_NEAR(PendulumEnv::Reward(0.5, 1.0, 2.0), -(0.25 + 0.1 + 0.004), 1e-15);
}

TEST(DynamicsTest, TwoStateCycleIsDeterministic) {
  GridMdpEnv env(TwoStateCycle());
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto out = env.Step(env.OneHot(0), std::vector<double>{0.0}, rng);
    EXPECT_EQ(env.StateIndex(out.next_state), 1u);
  }
}

TEST(DynamicsTest, RandomMdpRowsAreDistributions) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const GridMdp mdp = RandomMdp(2 + rng.Index(8), 1 + rng.Index(4), rng);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        double total = 0.0;
        for (std::size_t n = 0; n < mdp.n_states; ++n) total += mdp.P(s, a, n);
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
  const GridMdp world = GridWorld(5, 5);
  EXPECT_NO_THROW(world.Validate());
  GridMdp broken = world;
  broken.P(0, 0, 0) += 1e-9;
  EXPECT_THROW(broken.Validate(), ValueError);
}

TEST(DynamicsTest, NonFiniteInputsThrow) {
  auto env = MakeEnv(EnvId::kPendulum);
  Rng rng(4);
  EXPECT_THROW(env->Step(std::vector<double>{NAN, 0.0}, std::vector<double>{0.0}, rng), ValueError);
  EXPECT_THROW(env->Step(std::vector<double>{0.0, 0.0}, std::vector<double>{INFINITY}, rng), ValueError);
  auto cart = MakeEnv(EnvId::kCartpole);
  EXPECT_THROW(cart->Step(std::vector<double>{0, 0, 0, 0}, std::vector<double>{2.0}, rng), ValueError);
}

TEST(DynamicsTest, ContinuousActionsAreClamped) {
  auto env = MakeEnv(EnvId::kPointMass);
  Rng rng(5);
  const auto out = env->Step(std::vector<double>{0.0, 0.0}, std::vector<double>{5.0, -5.0}, rng);
  EXPECT_DOUBLE_EQ(out.next_state[0], 0.1);
  EXPECT_DOUBLE_EQ(out.next_state[1], -0.1);
}

TEST(DynamicsTest, SameSeedSameTrajectory) {
  for (EnvId id : {EnvId::kCartpole, EnvId::kPendulum, EnvId::kPointMass, EnvId::kGridMdp}) {
    auto env = MakeEnv(id);
    auto run = [&] {
      Rng rng(99);
      std::vector<double> s = env->Reset(rng);
      std::vector<double> all = s;
      for (int t = 0; t < 50; ++t) {
        std::vector<double> a;
        const auto& space = env->spec().action_space;
        if (space.discrete) {
          a = {static_cast<double>(rng.Index(space.n))};
        } else {
          for (std::size_t i = 0; i < space.dim(); ++i) a.push_back(rng.Uniform(-3, 3));
        }
        auto out = env->Step(s, a, rng);
        s = out.next_state;
        all.insert(all.end(), s.begin(), s.end());
        if (out.terminal) break;
      }
      return all;
    };
    EXPECT_EQ(run(), run()) << EnvName(id);
  }
}

TEST(DynamicsTest, CartpoleAlwaysPushingFalls) {
  auto env = MakeEnv(EnvId::kCartpole);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto s = env->Reset(rng);
    int t = 0;
    for (; t < env->spec().horizon; ++t) {
      auto out = env->Step(s, std::vector<double>{1.0}, rng);
      s = out.next_state;
      if (out.terminal) break;
    }
    EXPECT_LT(t, 199);
  }
}

TEST(RenderTest, RenderIsPure) {
  auto env = MakeEnv(EnvId::kCartpole);
  const std::vector<double> s = {0.3, 1.0, -0.05, 2.0};
  EXPECT_EQ(env->Render(s, RenderMap{}), env->Render(s, RenderMap{}));
}

TEST(RenderTest, PointMassAtOriginIsCenteredDisk) {
  auto env = MakeEnv(EnvId::kPointMass);
  RenderMap map;  // 64x64x3
  const Frame f = env->Render(std::vector<double>{0.0, 0.0}, map);
  const double radius_px = PointMassEnv::kRadius / (2 * PointMassEnv::kBox) * map.width;
  int lit = 0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double d = std::hypot(x + 0.5 - 32.0, y + 0.5 - 32.0);
      const bool nonzero = f.at(x, y, 0) || f.at(x, y, 1) || f.at(x, y, 2);
      if (nonzero) {
        ++lit;
        EXPECT_LT(d, radius_px + 0.5) << x << "," << y;
      }
      if (d <= radius_px - 0.5) {
        EXPECT_EQ(f.at(x, y, 0), static_cast<std::uint8_t>(map.palette.body[0]));
        EXPECT_EQ(f.at(x, y, 1), static_cast<std::uint8_t>(map.palette.body[1]));
      }
    }
  }
  EXPECT_GT(lit, 0);
}

TEST(RenderTest, OccludedStatesCollide) {
  auto env = MakeEnv(EnvId::kPointMass);
  for (RenderMap map : {RenderMap{}, SmallMap()}) {
    map.mode = RenderMode::kOccluding;
    const Frame a = env->Render(std::vector<double>{0.0, 0.0}, map);
    const Frame b = env->Render(std::vector<double>{0.2, 0.05}, map);
    EXPECT_EQ(a, b);
    map.mode = RenderMode::kInjective;
    EXPECT_NE(env->Render(std::vector<double>{0.0, 0.0}, map), env->Render(std::vector<double>{0.2, 0.05}, map));
  }
}

TEST(RenderTest, PointMassGridIsInjective) {
  auto env = MakeEnv(EnvId::kPointMass);
  const auto grid = env->QuantizationGrid();
  ASSERT_EQ(grid.size(), 2500u);
  for (const RenderMap& map : {RenderMap{}, SmallMap()}) {
    std::unordered_set<std::uint64_t> hashes;
    for (const auto& s : grid) hashes.insert(HashFrame(env->Render(s, map)));
    EXPECT_EQ(hashes.size(), 2500u) << map.width;
  }
}

TEST(RenderTest, GridMdpIsInjectiveAndDegenerateCollapsesColumns) {
  auto env = MakeEnv(EnvId::kGridMdp);
  const auto grid = env->QuantizationGrid();
  std::unordered_set<std::uint64_t> hashes;
  for (const auto& s : grid) hashes.insert(HashFrame(env->Render(s, SmallMap())));
  EXPECT_EQ(hashes.size(), grid.size());
  std::unordered_set<std::uint64_t> degenerate;
  for (const auto& s : grid) degenerate.insert(HashFrame(env->Render(s, SmallMap(RenderMode::kAxisDegenerate))));
  EXPECT_EQ(degenerate.size(), 5u);
}

TEST(RenderTest, ContinuousEnvGridsAreInjective) {
  for (EnvId id : {EnvId::kCartpole, EnvId::kPendulum}) {
    auto env = MakeEnv(id);
    const auto grid = env->QuantizationGrid();
    for (const RenderMap& map : {RenderMap{}, SmallMap()}) {
      std::vector<std::uint64_t> hashes;
      std::unordered_map<std::uint64_t, std::size_t> first;
      auto same_frame = [&](std::size_t a, std::size_t b) {
        return hashes[a] == hashes[b] && env->Render(grid[a], map) == env->Render(grid[b], map);
      };
      int collisions = 0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        hashes.push_back(HashFrame(env->Render(grid[i], map)));
        auto [it, fresh] = first.emplace(hashes.back(), i);
        if (!fresh && same_frame(it->second, i)) ++collisions;
      }
      EXPECT_EQ(collisions, 0) << EnvName(id) << " " << map.width;
      // Random pairs drawn from the grid.
      Rng rng(6);
      int pair_collisions = 0;
      for (int k = 0; k < 100000; ++k) {
        const std::size_t a = rng.Index(grid.size()), b = rng.Index(grid.size());
        if (a != b && same_frame(a, b)) ++pair_collisions;
      }
      EXPECT_EQ(pair_collisions, 0);
    }
  }
}

TEST(RenderTest, OutOfFrameStateSetsMarker) {
  auto env = MakeEnv(EnvId::kCartpole);
  const RenderMap map = SmallMap();
  EXPECT_EQ(env->Render(std::vector<double>{0, 0, 0, 0}, map).at(0, 0, 0), 0);
  EXPECT_EQ(env->Render(std::vector<double>{9.0, 0, 0, 0}, map).at(0, 0, 0), 255);
}

TEST(RenderTest, InvalidMapThrows) {
  auto env = MakeEnv(EnvId::kPointMass);
  RenderMap map;
  map.channels = 2;
  EXPECT_THROW(env->Render(std::vector<double>{0, 0}, map), ConfigError);
  map = RenderMap{};
  map.crop_shake_max = 0.2;
  EXPECT_THROW(map.Validate(), ConfigError);
}

Frame TestCard(int w, int h, int c) {
  Frame f(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        f.at(x, y, ch) = static_cast<std::uint8_t>((x * 37 + y * 11 + ch * 91 + ((x / 4 + y / 4) % 2) * 120) % 256);
      }
    }
  }
  return f;
}

// Direct evaluation of the bilinear formula for one output pixel.
std::uint8_t OracleBilinear(const Frame& f, const CropRect& r, int ow, int oh, int ox, int oy, int c) {
  double sx = (ox + 0.5) * r.width / ow - 0.5;
  double sy = (oy + 0.5) * r.height / oh - 0.5;
  sx = std::min(std::max(sx, 0.0), r.width - 1.0);
  sy = std::min(std::max(sy, 0.0), r.height - 1.0);
  const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
  const int x1 = std::min(x0 + 1, r.width - 1), y1 = std::min(y0 + 1, r.height - 1);
  const double fx = sx - x0, fy = sy - y0;
  auto p = [&](int x, int y) { return static_cast<double>(f.at(r.x + x, r.y + y, c)); };
  const double top = p(x0, y0) + fx * (p(x1, y0) - p(x0, y0));
  const double bottom = p(x0, y1) + fx * (p(x1, y1) - p(x0, y1));
  const double v = top + fy * (bottom - top);
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

TEST(ResizeTest, FullFrameIsIdentity) {
  const Frame f = TestCard(20, 12, 3);
  EXPECT_EQ(ResizeAndCrop(f, {0, 0, 20, 12}, 20, 12), f);
}

TEST(ResizeTest, CheckerboardAveragesWithHalfAwayRounding) {
  Frame f(2, 2, 1);
  f.pixels = {0, 255, 255, 0};
  const Frame out = ResizeAndCrop(f, {0, 0, 2, 2}, 1, 1);
  EXPECT_EQ(out.pixels[0], 128);
}

TEST(ResizeTest, DownscaleMatchesOracle) {
  const Frame card = TestCard(64, 64, 3);
  for (auto [rect, ow, oh] : std::vector<std::tuple<CropRect, int, int>>{
           {{0, 0, 64, 64}, 32, 32}, {{0, 0, 64, 64}, 16, 16}, {{3, 5, 50, 41}, 24, 17}, {{10, 2, 30, 30}, 64, 48}}) {
    const Frame out = ResizeAndCrop(card, rect, ow, oh);
    ASSERT_EQ(out.width, ow);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), OracleBilinear(card, rect, ow, oh, x, y, c));
      }
    }
  }
}

TEST(ResizeTest, EmptyOrOutsideRectThrows) {
  const Frame f = TestCard(8, 8, 1);
  EXPECT_THROW(ResizeAndCrop(f, {0, 0, 0, 4}, 4, 4), ValueError);
  EXPECT_THROW(ResizeAndCrop(f, {4, 4, 8, 8}, 4, 4), ValueError);
}

TEST(CropShakeTest, ZeroIsIdentity) {
  Rng rng(7);
  const Frame f = TestCard(64, 64, 3);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(CropShake(f, 0.0, rng), f);
}

TEST(CropShakeTest, KeepsSizeAndConstantFrames) {
  Rng rng(8);
  const Frame constant(64, 64, 3, 173);
  const Frame card = TestCard(64, 64, 3);
  int changed = 0;
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(CropShake(constant, 0.05, rng), constant);
    const Frame out = CropShake(card, 0.05, rng);
    EXPECT_TRUE(out.SameGeometry(card));
    changed += out != card;
  }
  EXPECT_GT(changed, 0);
}

TEST(CropShakeTest, CropsAtMostThreePixelsPerSideOn64) {
  // A frame whose column index is encoded in intensity: the leftmost output
  // column interpolates near the first kept source column.
  Frame ramp(64, 64, 1);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) ramp.at(x, y, 0) = static_cast<std::uint8_t>(x * 4);
  }
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Frame out = CropShake(ramp, 0.05, rng);
    EXPECT_LE(out.at(0, 0, 0), 3 * 4 + 4);
    EXPECT_GE(out.at(63, 0, 0), (60 - 1) * 4);
  }
}

TEST(PpmTest, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path();
  const Frame color = TestCard(13, 7, 3);
  WritePpm(color, (dir / "vigan_rgb.ppm").string());
  EXPECT_EQ(ReadPpm((dir / "vigan_rgb.ppm").string()), color);
  const Frame gray = TestCard(9, 5, 1);
  WritePpm(gray, (dir / "vigan_gray.ppm").string());
  EXPECT_EQ(ReadPpm((dir / "vigan_gray.ppm").string(), 1), gray);
}

TEST(PpmTest, MalformedFilesNameThePath) {
  const auto path = (std::filesystem::temp_directory_path() / "vigan_bad.ppm").string();
  WriteFileBytes(path, std::vector<std::uint8_t>{'P', '3', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', '0'});
  try {
    ReadPpm(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
  WriteFileBytes(path, std::vector<std::uint8_t>{'P', '6', '\n', '2', ' ', '1', '\n', '2', '5', '5', '\n', 0, 0, 0});
  try {
    ReadPpm(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::kTruncated);
  }
}

TEST(FrameTest, NormalizedChwLayout) {
  Frame f(2, 1, 3);
  f.pixels = {0, 255, 0, 255, 0, 255};
  std::vector<double> out;
  AppendNormalizedChw(f, out);
  EXPECT_EQ(out, (std::vector<double>{-1, 1, 1, -1, -1, 1}));
}

}  // namespace
}  // namespace vigan::envs
