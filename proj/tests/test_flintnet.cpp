#include <cmath>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "losses/losses.hpp"
#include "net/flint_net.hpp"

using namespace flint;
using namespace flint::ag;

namespace {

Tensor random_field(Shape s, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& x : t.v) x = rng.uniform(0.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("build is deterministic under the seed") {
  FlintConfig cfg = FlintConfig::toy();
  ModelParams a = build_flint(cfg, 123);
  ModelParams b = build_flint(cfg, 123);
  ModelParams c = build_flint(cfg, 124);
  REQUIRE(a.entries().size() == b.entries().size());
  bool all_equal = true, any_diff_seed = false;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    const auto& ta = a.entries()[i].second->value;
    const auto& tb = b.entries()[i].second->value;
    const auto& tc = c.entries()[i].second->value;
    for (std::size_t j = 0; j < ta.size(); ++j) {
      all_equal = all_equal && ta[j] == tb[j];
      any_diff_seed = any_diff_seed || ta[j] != tc[j];
    }
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("head emits 2*rank flow channels plus one mask channel") {
  FlintConfig cfg = FlintConfig::toy(2);
  ModelParams p = build_flint(cfg, 1);
  CHECK(p.at("student.b0.head.kernel")->shape()[0] == 5);
  FlintConfig cfg3 = FlintConfig::toy(3);
  ModelParams p3 = build_flint(cfg3, 1);
  CHECK(p3.at("student.b0.head.kernel")->shape()[0] == 7);
}

TEST_CASE("desk scaling shrinks the parameter count") {
  FlintConfig paper;
  FlintConfig desk;
  desk.desk_scale = 8;
  CHECK(build_flint(desk, 1).scalar_count() < build_flint(paper, 1).scalar_count());
}

TEST_CASE("channel list must match block count") {
  FlintConfig cfg;
  cfg.channels = {256, 192};
  CHECK_THROWS_AS(build_flint(cfg, 1), DataError);
}

TEST_CASE("untrained network degenerates to frame averaging") {
  Rng rng(5);
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 9);
  Tensor ds = random_field(Shape{1, 8, 8}, rng);
  Tensor du = random_field(Shape{1, 8, 8}, rng);
  StudentOut out = forward_student(p, cfg, constant(ds), constant(du), 0.5, 1.0);

  REQUIRE(static_cast<int>(out.blocks.size()) == cfg.n_blocks);
  for (const auto& st : out.blocks) {
    for (double v : st.flow_s->value.v) CHECK(v == 0.0);
    for (double v : st.flow_u->value.v) CHECK(v == 0.0);
    for (double v : st.mask->value.v) CHECK(v == doctest::Approx(0.5));
  }
  for (std::size_t i = 0; i < ds.size(); ++i)
    CHECK(out.d_hat->value[i] == doctest::Approx(0.5 * (ds[i] + du[i])).epsilon(1e-12));
}

TEST_CASE("tau outside (0,1) is rejected") {
  Rng rng(6);
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 2);
  Tensor ds = random_field(Shape{1, 8, 8}, rng);
  CHECK_THROWS_AS(forward_student(p, cfg, constant(ds), constant(ds), 0.0, 1.0), DataError);
  CHECK_THROWS_AS(forward_student(p, cfg, constant(ds), constant(ds), 1.0, 1.0), DataError);
}

TEST_CASE("odd spatial extents are rejected") {
  Rng rng(61);
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 2);
  Tensor ds = random_field(Shape{1, 7, 8}, rng);
  CHECK_THROWS_WITH_AS(forward_student(p, cfg, constant(ds), constant(ds), 0.5, 1.0),
                       doctest::Contains("even"), DataError);
}

TEST_CASE("teacher consumes one extra channel and matches student dims") {
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 3);
  CHECK(p.at("teacher.conv0.kernel")->shape()[1] ==
        p.at("student.b1.conv0.kernel")->shape()[1] + 1);

  Rng rng(7);
  Tensor ds = random_field(Shape{1, 8, 8}, rng);
  Tensor du = random_field(Shape{1, 8, 8}, rng);
  Tensor dt = random_field(Shape{1, 8, 8}, rng);
  StudentOut s = forward_student(p, cfg, constant(ds), constant(du), 0.25, 1.0);
  TeacherOut t = forward_teacher(p, cfg, s, constant(ds), constant(du), constant(dt), 0.25, 1.0);
  CHECK(t.d_hat->shape() == s.d_hat->shape());
  CHECK(t.state.flow_u->shape() == s.blocks.back().flow_u->shape());

  CHECK_THROWS_AS(
      forward_teacher(p, cfg, s, constant(ds), constant(du), nullptr, 0.25, 1.0), DataError);
}

TEST_CASE("mask stays strictly inside (0,1) for random weights") {
  Rng rng(8);
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 11);
  // overwrite the head with random values so the mask logits are nonzero
  for (const auto& [name, node] : p.entries())
    if (name.find("head") != std::string::npos)
      for (auto& v : node->value.v) v = rng.uniform(-2, 2);
  Tensor ds = random_field(Shape{1, 8, 8}, rng);
  Tensor du = random_field(Shape{1, 8, 8}, rng);
  StudentOut out = forward_student(p, cfg, constant(ds), constant(du), 0.7, 1.0);
  for (const auto& st : out.blocks)
    for (double v : st.mask->value.v) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
}

TEST_CASE("inference is pure and shape preserving") {
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 21);
  Rng rng(9);
  Grid ds({8, 8});
  Grid du({8, 8});
  for (auto& v : ds.values) v = rng.uniform(0, 1);
  for (auto& v : du.values) v = rng.uniform(0, 1);

  InferOut a = infer(p, cfg, ds, du, 0.5, 1.0);
  InferOut b = infer(p, cfg, ds, du, 0.5, 1.0);
  CHECK(a.d_hat.dims == ds.dims);
  CHECK(a.flow.dims == ds.dims);
  for (std::size_t i = 0; i < a.d_hat.values.size(); ++i)
    CHECK(a.d_hat.values[i] == b.d_hat.values[i]);
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < a.flow.cells(); ++i)
      CHECK(a.flow.components[c][i] == b.flow.components[c][i]);
}

TEST_CASE("checkpoint round-trip preserves parameters and config") {
  FlintConfig cfg = FlintConfig::toy();
  cfg.desk_scale = 2;
  ModelParams p = build_flint(cfg, 31);
  Checkpoint ck = params_to_checkpoint(p);
  write_config_meta(cfg, ck);
  const std::string path = "/tmp/flint_ck_test.flc";
  save_checkpoint(ck, path);
  Checkpoint back = load_checkpoint(path);
  FlintConfig cfg2 = read_config_meta(back);
  CHECK(cfg2.rank == cfg.rank);
  CHECK(cfg2.n_blocks == cfg.n_blocks);
  CHECK(cfg2.channels == cfg.channels);
  CHECK(cfg2.desk_scale == 2);
  ModelParams p2 = params_from_checkpoint(back);
  REQUIRE(p2.entries().size() == p.entries().size());
  for (std::size_t i = 0; i < p.entries().size(); ++i) {
    CHECK(p2.entries()[i].first == p.entries()[i].first);
    const auto& ta = p.entries()[i].second->value;
    const auto& tb = p2.entries()[i].second->value;
    for (std::size_t j = 0; j < ta.size(); ++j)
      CHECK(tb[j] == doctest::Approx(static_cast<float>(ta[j])));
  }
}

TEST_CASE("full network loss passes the end-to-end gradient check") {
  FlintConfig cfg = FlintConfig::toy();
  ModelParams p = build_flint(cfg, 41);
  Rng rng(10);
  // nonzero heads so flows and masks are in general position
  for (const auto& [name, node] : p.entries())
    if (name.find("head") != std::string::npos)
      for (auto& v : node->value.v) v = rng.uniform(-0.3, 0.3);

  Tensor ds = random_field(Shape{1, 8, 8}, rng);
  Tensor du = random_field(Shape{1, 8, 8}, rng);
  Tensor dt = random_field(Shape{1, 8, 8}, rng);
  Tensor fgt(Shape{2, 8, 8});
  for (auto& v : fgt.v) v = rng.uniform(-0.3, 0.3);
  LossWeights w;

  auto loss = [&]() {
    StudentOut s = forward_student(p, cfg, constant(ds), constant(du), 0.4, 1.0);
    TeacherOut t = forward_teacher(p, cfg, s, constant(ds), constant(du), constant(dt), 0.4, 1.0);
    std::vector<NodePtr> flows;
    for (const auto& st : s.blocks) flows.push_back(st.flow_u);
    NodePtr rec = l_rec(s.d_hat, t.d_hat, constant(dt));
    NodePtr flow = l_flow(flows, t.state.flow_u, constant(fgt), w.gamma);
    NodePtr dis = l_dis(s.blocks.back().flow_s, s.blocks.back().flow_u, t.state.flow_s,
                        t.state.flow_u);
    NodePtr photo = l_photo(s.blocks.back().flow_s, s.blocks.back().flow_u, constant(ds),
                            constant(du), s.d_hat, 1e-3);
    NodePtr reg = l_reg(last_block_kernels(p, cfg), teacher_kernels(p));
    return add(total_supervised(rec, flow, w), total_unsupervised(rec, dis, photo, reg, w));
  };
  double err = grad_check_params(loss, p.nodes());
  CHECK(err < 1e-4);
}
