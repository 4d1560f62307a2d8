#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "fieldio/field.hpp"
#include "fieldio/manifest.hpp"
#include "fieldio/raw.hpp"
#include "fieldio/synth.hpp"

using namespace flint;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("flint_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double f32(double v) { return static_cast<float>(v); }

}  // namespace

TEST_CASE("raw grid round-trip is exact") {
  auto dir = temp_dir("raw");
  Grid g({3, 3});
  Rng rng(1);
  for (auto& v : g.values) v = f32(rng.uniform(-2, 2));
  const std::string path = (dir / "g.flg").string();
  write_raw(g, path);
  Grid back = read_raw_grid(path);
  REQUIRE(back.dims == g.dims);
  for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(back.values[i] == g.values[i]);
}

TEST_CASE("raw rejects bad magic and truncation") {
  auto dir = temp_dir("rawbad");
  const std::string path = (dir / "bad.flg").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "XXXX" << std::string(16, '\0');
  }
  CHECK_THROWS_WITH_AS(read_raw(path), doctest::Contains("bad magic"), DataError);

  Grid g({4, 4});
  const std::string good = (dir / "good.flg").string();
  write_raw(g, good);
  std::string bytes;
  {
    std::ifstream is(good, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  }
  const std::string trunc_path = (dir / "trunc.flg").string();
  {
    std::ofstream os(trunc_path, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  CHECK_THROWS_WITH_AS(read_raw(trunc_path), doctest::Contains("truncated"), DataError);
}

TEST_CASE("flow raw layout matches the declared byte order") {
  // 2-component 4x4 flow: magic, rank=2, comps=2, extents 4,4 LE, then the
  // full first component, then the second, f32 little-endian.
  auto dir = temp_dir("rawflow");
  FlowGrid f({4, 4});
  for (std::size_t i = 0; i < 16; ++i) {
    f.components[0][i] = f32(0.25 * static_cast<double>(i));
    f.components[1][i] = f32(-1.0 - static_cast<double>(i));
  }
  const std::string path = (dir / "f.flg").string();
  write_raw(f, path);

  std::string bytes;
  {
    std::ifstream is(path, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  }
  REQUIRE(bytes.size() == 4 + 2 + 8 + 4 * 32);
  CHECK(bytes.substr(0, 4) == "FLG1");
  CHECK(bytes[4] == 2);
  CHECK(bytes[5] == 2);
  auto u32at = [&](std::size_t o) {
    return static_cast<unsigned char>(bytes[o]) |
           (static_cast<unsigned char>(bytes[o + 1]) << 8) |
           (static_cast<unsigned char>(bytes[o + 2]) << 16) |
           (static_cast<unsigned char>(bytes[o + 3]) << 24);
  };
  CHECK(u32at(6) == 4);
  CHECK(u32at(10) == 4);
  auto f32at = [&](std::size_t o) {
    std::uint32_t b = u32at(o);
    float v;
    std::memcpy(&v, &b, 4);
    return v;
  };
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(f32at(14 + 4 * i) == doctest::Approx(f.components[0][i]));
    CHECK(f32at(14 + 64 + 4 * i) == doctest::Approx(f.components[1][i]));
  }

  FlowGrid back = read_raw_flow(path);
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 16; ++i) CHECK(back.components[c][i] == f.components[c][i]);
}

TEST_CASE("raw round-trip property across ranks and component counts") {
  auto dir = temp_dir("rawprop");
  Rng rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    const bool threed = trial % 2 == 1;
    std::vector<int> dims = threed ? std::vector<int>{3, 4, 5} : std::vector<int>{5, 4};
    const std::string path = (dir / ("t" + std::to_string(trial) + ".flg")).string();
    if (trial % 4 < 2) {
      Grid g(dims);
      for (auto& v : g.values) v = f32(rng.normal());
      write_raw(g, path);
      Grid back = read_raw_grid(path);
      REQUIRE(back.dims == dims);
      for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(back.values[i] == g.values[i]);
    } else {
      FlowGrid f(dims);
      for (auto& c : f.components)
        for (auto& v : c) v = f32(rng.normal());
      write_raw(f, path);
      FlowGrid back = read_raw_flow(path);
      REQUIRE(back.dims == dims);
      for (std::size_t c = 0; c < f.components.size(); ++c)
        for (std::size_t i = 0; i < f.cells(); ++i)
          CHECK(back.components[c][i] == f.components[c][i]);
    }
  }
}

TEST_CASE("normalize maps range to [0,1] and is idempotent") {
  Grid g({4, 4});
  for (std::size_t i = 0; i < g.values.size(); ++i)
    g.values[i] = 2.0 + 2.0 * static_cast<double>(i) / 15.0;  // in {2..4}
  GridScale s = normalize(g);
  CHECK(s.offset == doctest::Approx(2.0));
  CHECK(s.scale == doctest::Approx(2.0));
  CHECK(*std::min_element(g.values.begin(), g.values.end()) == doctest::Approx(0.0));
  CHECK(*std::max_element(g.values.begin(), g.values.end()) == doctest::Approx(1.0));

  Grid g2 = g;
  normalize(g2);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    CHECK(g2.values[i] == doctest::Approx(g.values[i]));
}

TEST_CASE("normalize of constant grid yields zeros with scale 1") {
  Grid g({4, 4}, 7.5);
  GridScale s = normalize(g);
  CHECK(s.scale == 1.0);
  for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("normalize_flow divides by max component magnitude") {
  FlowGrid f({4, 4});
  f.components[0][5] = -5.0;
  f.components[1][7] = 2.0;
  double scale = normalize_flow(f);
  CHECK(scale == doctest::Approx(5.0));
  CHECK(f.components[0][5] == doctest::Approx(-1.0));
  CHECK(f.components[1][7] == doctest::Approx(0.4));
}

TEST_CASE("synth zero velocity gives static frames and zero flow") {
  SynthConfig cfg;
  cfg.dims = {16, 16};
  cfg.n_timesteps = 4;
  cfg.motions = {{MotionSpec::Kind::translate, {0.0, 0.0}, 0.0}};
  EnsembleSet es = synth_ensemble(cfg);
  REQUIRE(es.members.size() == 1);
  const Member& m = es.members[0];
  for (int t = 1; t < 4; ++t)
    for (std::size_t i = 0; i < m.timesteps[0].values.size(); ++i)
      CHECK(m.timesteps[t].values[i] == doctest::Approx(m.timesteps[0].values[i]));
  for (const auto& c : m.flows[0].components)
    for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("synth unit translation shifts the analytic pattern") {
  SynthConfig cfg;
  cfg.dims = {24, 24};
  cfg.n_timesteps = 5;
  cfg.motions = {{MotionSpec::Kind::translate, {0.0, 1.0}, 0.0}};  // one cell in x per step
  SynthPlan plan = synth_plan(cfg);
  EnsembleSet es = synth_ensemble(cfg);
  const Member& m = es.members[0];
  for (int k = 1; k < 5; ++k) {
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        const double expected =
            eval_blobs(plan.blobs0[0], cfg.dims, {static_cast<double>(y), x - 1.0 * k});
        CHECK(m.timesteps[k].values[y * 24 + x] == doctest::Approx(expected).epsilon(1e-9));
      }
  }
}

TEST_CASE("synth rotation flow matches the rigid-rotation formula") {
  SynthConfig cfg;
  cfg.dims = {16, 20};
  cfg.n_timesteps = 2;
  const double w = 0.01;
  cfg.motions = {{MotionSpec::Kind::rotate, {}, w}};
  SynthPlan plan = synth_plan(cfg);
  FlowGrid f = analytic_flow(plan, 0);
  const double cy = 7.5, cx = 9.5;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 20; ++x) {
      CHECK(f.components[1][y * 20 + x] == doctest::Approx(-w * (y - cy)));  // x component
      CHECK(f.components[0][y * 20 + x] == doctest::Approx(w * (x - cx)));   // y component
    }
}

TEST_CASE("analytic flow advects one frame onto the next") {
  SynthConfig cfg;
  cfg.dims = {64, 64};
  cfg.n_timesteps = 6;
  cfg.motions = {{MotionSpec::Kind::translate, {0.2, 0.3}, 0.0},
                 {MotionSpec::Kind::rotate, {}, 0.004}};
  SynthPlan plan = synth_plan(cfg);
  EnsembleSet es = synth_ensemble(cfg);
  for (int mi = 0; mi < 2; ++mi) {
    const Member& m = es.members[mi];
    const FlowGrid& f = m.flows[0];
    double worst = 0.0;
    for (int k = 0; k + 1 < 6; ++k) {
      const auto blobs = blobs_at(plan, mi, k);
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const std::size_t i = y * 64 + x;
          const double adv =
              eval_blobs(blobs, cfg.dims, {y - f.components[0][i], x - f.components[1][i]});
          worst = std::max(worst, std::fabs(adv - m.timesteps[k + 1].values[i]));
        }
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("synth rejects aliasing velocities") {
  SynthConfig cfg;
  cfg.dims = {16, 16};
  cfg.motions = {{MotionSpec::Kind::translate, {0.0, 5.0}, 0.0}};
  CHECK_THROWS_WITH_AS(synth_ensemble(cfg), doctest::Contains("alias"), DataError);
}

TEST_CASE("noise is applied to scalars only") {
  SynthConfig cfg;
  cfg.dims = {16, 16};
  cfg.n_timesteps = 2;
  cfg.noise_sigma = 0.025;
  cfg.motions = {{MotionSpec::Kind::translate, {0.0, 0.0}, 0.0}};
  EnsembleSet noisy = synth_ensemble(cfg);
  cfg.noise_sigma = 0.0;
  EnsembleSet clean = synth_ensemble(cfg);
  double diff = 0.0;
  for (std::size_t i = 0; i < noisy.members[0].timesteps[0].values.size(); ++i)
    diff += std::fabs(noisy.members[0].timesteps[0].values[i] -
                      clean.members[0].timesteps[0].values[i]);
  CHECK(diff > 0.0);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < noisy.members[0].flows[0].cells(); ++i)
      CHECK(noisy.members[0].flows[0].components[c][i] ==
            clean.members[0].flows[0].components[c][i]);
}

TEST_CASE("ensemble manifest round-trip") {
  auto dir = temp_dir("manifest");
  SynthConfig cfg;
  cfg.dims = {16, 16};
  cfg.n_timesteps = 3;
  cfg.motions = {{MotionSpec::Kind::translate, {0.0, 0.5}, 0.0},
                 {MotionSpec::Kind::rotate, {}, 0.01}};
  EnsembleSet es = synth_ensemble(cfg);
  // coerce to f32 so the round trip is exact
  for (auto& m : es.members) {
    for (auto& g : m.timesteps)
      for (auto& v : g.values) v = f32(v);
    for (auto& f : m.flows)
      for (auto& c : f.components)
        for (auto& v : c) v = f32(v);
  }
  write_ensemble(es, dir.string());
  EnsembleSet back = read_ensemble((dir / "ensemble.csv").string());
  REQUIRE(back.members.size() == 2);
  for (int mi = 0; mi < 2; ++mi) {
    CHECK(back.members[mi].sim_params == es.members[mi].sim_params);
    REQUIRE(back.members[mi].timesteps.size() == 3);
    REQUIRE(back.members[mi].flows.size() == 3);
    for (int t = 0; t < 3; ++t)
      for (std::size_t i = 0; i < 256; ++i)
        CHECK(back.members[mi].timesteps[t].values[i] == es.members[mi].timesteps[t].values[i]);
  }
}
