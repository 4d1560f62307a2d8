#include <cmath>

#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "losses/losses.hpp"

using namespace flint;
using namespace flint::ag;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo, double hi) {
  Tensor t(std::move(s));
  for (auto& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("l_rec fixtures") {
  Tensor gt(Shape{1, 3, 3}, 0.4);
  CHECK(l_rec(constant(gt), nullptr, constant(gt))->value[0] == doctest::Approx(0.0));

  Tensor off(Shape{1, 3, 3}, 0.5);
  CHECK(l_rec(constant(off), nullptr, constant(gt))->value[0] == doctest::Approx(0.1));

  Tensor toff(Shape{1, 3, 3}, 0.6);
  CHECK(l_rec(constant(off), constant(toff), constant(gt))->value[0] ==
        doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("l_flow closed-form weight sum") {
  // four blocks, gamma = 0.8, constant error e in one component:
  // e * (0.512 + 0.64 + 0.8 + 1.0) = 2.952 e
  const double e = 0.37;
  Tensor gt(Shape{2, 3, 3}, 0.0);
  Tensor pred(Shape{2, 3, 3}, 0.0);
  for (int i = 0; i < 9; ++i) pred[i] = e;  // first component only
  std::vector<NodePtr> blocks(4, constant(pred));
  double got = l_flow(blocks, nullptr, constant(gt), 0.8)->value[0];
  CHECK(std::fabs(got - 2.952 * e) <= 1e-12);

  // all blocks equal to ground truth -> 0
  std::vector<NodePtr> exact(4, constant(gt));
  CHECK(l_flow(exact, nullptr, constant(gt), 0.8)->value[0] == doctest::Approx(0.0));

  // N = 1 reduces to plain L1
  std::vector<NodePtr> one{constant(pred)};
  CHECK(l_flow(one, nullptr, constant(gt), 0.8)->value[0] == doctest::Approx(e));
}

TEST_CASE("l_flow teacher term carries unit weight") {
  const double e = 0.2;
  Tensor gt(Shape{2, 2, 2}, 0.0);
  Tensor terr(Shape{2, 2, 2}, 0.0);
  for (int i = 0; i < 4; ++i) terr[i] = e;
  std::vector<NodePtr> blocks{constant(gt)};
  double got = l_flow(blocks, constant(terr), constant(gt), 0.8)->value[0];
  CHECK(got == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("l_dis fixtures") {
  Tensor f(Shape{2, 2, 2}, 0.3);
  CHECK(l_dis(constant(f), constant(f), constant(f), constant(f))->value[0] ==
        doctest::Approx(0.0));

  // unit offset in the time-backward direction only
  Tensor fs(Shape{2, 2, 2}, 0.3);
  for (int i = 0; i < 4; ++i) fs[i] += 1.0;  // first component
  double got = l_dis(constant(fs), constant(f), constant(f), constant(f))->value[0];
  CHECK(got == doctest::Approx(1.0).epsilon(1e-12));

  // hand-computed root-sum-square on a 2x2 fixture: per-cell diff (0.3, -0.4)
  Tensor s(Shape{2, 2, 2}, 0.0);
  Tensor t(Shape{2, 2, 2}, 0.0);
  for (int i = 0; i < 4; ++i) {
    s[i] = 0.3;
    s[4 + i] = -0.4;
  }
  double got2 = l_dis(constant(s), constant(t), constant(t), constant(t))->value[0];
  CHECK(got2 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l_dis blocks gradients into the teacher") {
  Rng rng(3);
  auto sfs = param(random_tensor(Shape{2, 2, 2}, rng, -1, 1));
  auto sfu = param(random_tensor(Shape{2, 2, 2}, rng, -1, 1));
  auto tfs = param(random_tensor(Shape{2, 2, 2}, rng, -1, 1));
  auto tfu = param(random_tensor(Shape{2, 2, 2}, rng, -1, 1));
  backward(l_dis(sfs, sfu, tfs, tfu));
  double snorm = 0.0, tnorm = 0.0;
  for (double g : sfs->grad.v) snorm += std::fabs(g);
  for (double g : tfs->grad.v) tnorm += std::fabs(g);
  for (double g : tfu->grad.v) tnorm += std::fabs(g);
  CHECK(snorm > 0.0);
  CHECK(tnorm == 0.0);
}

TEST_CASE("charbonnier plug-in values") {
  Tensor x(Shape{1}, 3e-9);
  CHECK(charbonnier(constant(x), 1e-9)->value[0] ==
        doctest::Approx(std::sqrt(10.0) * 1e-9).epsilon(1e-12));
  Tensor z(Shape{1}, 0.0);
  CHECK(charbonnier(constant(z), 1e-9)->value[0] == doctest::Approx(1e-9));
}

TEST_CASE("l_photo of all-zero arguments is exactly epsilon") {
  const double eps = 1e-9;
  Tensor zf(Shape{2, 3, 3}, 0.0);
  Tensor zg(Shape{1, 3, 3}, 0.0);
  double got = l_photo(constant(zf), constant(zf), constant(zg), constant(zg), constant(zg),
                       eps)->value[0];
  CHECK(got == doctest::Approx(eps).epsilon(1e-12));
}

TEST_CASE("l_photo matches a direct-summation oracle on a 3x3 fixture") {
  const double eps = 1e-9;
  Rng rng(17);
  Tensor ds = random_tensor(Shape{1, 3, 3}, rng, 0, 1);
  Tensor du = random_tensor(Shape{1, 3, 3}, rng, 0, 1);
  Tensor dh = random_tensor(Shape{1, 3, 3}, rng, 0, 1);
  Tensor fs(Shape{2, 3, 3}, 0.0);
  Tensor fu(Shape{2, 3, 3}, 0.0);
  for (int i = 0; i < 9; ++i) {
    fs[9 + i] = 0.5;   // half-pixel in +x
    fu[9 + i] = -0.5;  // half-pixel in -x
  }

  // independent evaluation: clamp, hand bilinear, Charbonnier, direct sums
  auto sample = [&](const Tensor& src, double y, double x) {
    y = std::min(std::max(y, 0.0), 2.0);
    x = std::min(std::max(x, 0.0), 2.0);
    int y0 = std::min(static_cast<int>(y), 1), x0 = std::min(static_cast<int>(x), 1);
    double fy = y - y0, fx = x - x0;
    auto at = [&](int yy, int xx) { return src[yy * 3 + xx]; };
    return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
           fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
  };
  double expected = 0.0;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      const double rs = ds[y * 3 + x] - sample(dh, y, x + 0.5);
      const double ru = du[y * 3 + x] - sample(dh, y, x - 0.5);
      expected += std::sqrt(rs * rs + eps * eps) + std::sqrt(ru * ru + eps * eps);
    }
  expected *= 0.5 / 9.0;

  double got = l_photo(constant(fs), constant(fu), constant(ds), constant(du), constant(dh),
                       eps)->value[0];
  CHECK(got == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("l_reg fixtures and sign gradient") {
  std::vector<NodePtr> zw{constant(Tensor(Shape{10}, 0.0))};
  CHECK(l_reg(zw, zw)->value[0] == doctest::Approx(0.0));

  auto s = param(Tensor(Shape{10}, 1.0));
  auto t = param(Tensor(Shape{10}, 1.0));
  auto loss = l_reg({s}, {t});
  CHECK(loss->value[0] == doctest::Approx(20.0));
  backward(loss);
  for (double g : s->grad.v) CHECK(g == doctest::Approx(1.0));

  Rng rng(5);
  Tensor w = random_tensor(Shape{8}, rng, 0.2, 1.0);
  w[3] = -0.7;
  double err = grad_check(
      [](const std::vector<NodePtr>& in) { return l_reg({in[0]}, {in[1]}); }, {w, w});
  CHECK(err < 1e-6);
}

TEST_CASE("composite objectives") {
  LossWeights w;
  auto zero = constant(Tensor::scalar(0.0));
  auto one = constant(Tensor::scalar(1.0));

  CHECK(total_supervised(zero, zero, w)->value[0] == 0.0);
  CHECK(std::fabs(total_supervised(one, one, w)->value[0] - 1.2) <= 1e-12);

  CHECK(total_unsupervised(zero, zero, zero, zero, w)->value[0] == 0.0);
  const double expected = 1.0 + 1e-4 + 1e-6 + 1e-8;
  CHECK(std::fabs(total_unsupervised(one, one, one, one, w)->value[0] - expected) <= 1e-15);

  // linearity in each part
  auto two = constant(Tensor::scalar(2.0));
  CHECK(total_supervised(two, zero, w)->value[0] ==
        doctest::Approx(2.0 * total_supervised(one, zero, w)->value[0]));
  CHECK(total_supervised(zero, two, w)->value[0] ==
        doctest::Approx(2.0 * total_supervised(zero, one, w)->value[0]));
}

TEST_CASE("losses are nonnegative with zero only at the fixed point") {
  Rng rng(904);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_tensor(Shape{1, 3, 3}, rng, 0, 1);
    Tensor b = random_tensor(Shape{1, 3, 3}, rng, 0, 1);
    CHECK(l_rec(constant(a), nullptr, constant(b))->value[0] >= 0.0);
    Tensor fa = random_tensor(Shape{2, 3, 3}, rng, -1, 1);
    Tensor fb = random_tensor(Shape{2, 3, 3}, rng, -1, 1);
    CHECK(l_flow({constant(fa)}, nullptr, constant(fb), 0.8)->value[0] >= 0.0);
    CHECK(l_dis(constant(fa), constant(fa), constant(fb), constant(fb))->value[0] >= 0.0);
  }
}

TEST_CASE("gradients flow through every loss term") {
  Rng rng(906);
  Tensor dh = random_tensor(Shape{1, 4, 4}, rng, 0.1, 0.9);
  Tensor dt = random_tensor(Shape{1, 4, 4}, rng, 0.1, 0.9);
  Tensor ds = random_tensor(Shape{1, 4, 4}, rng, 0.1, 0.9);
  Tensor du = random_tensor(Shape{1, 4, 4}, rng, 0.1, 0.9);
  Tensor fs(Shape{2, 4, 4});
  Tensor fu(Shape{2, 4, 4});
  for (auto& v : fs.v) v = rng.uniform(0.1, 0.4);
  for (auto& v : fu.v) v = rng.uniform(-0.4, -0.1);
  Tensor tfs = random_tensor(Shape{2, 4, 4}, rng, -0.3, 0.3);
  Tensor tfu = random_tensor(Shape{2, 4, 4}, rng, -0.3, 0.3);
  Tensor fgt = random_tensor(Shape{2, 4, 4}, rng, -0.5, 0.5);

  LossWeights w;
  double err = grad_check(
      [&](const std::vector<NodePtr>& in) {
        auto rec = l_rec(in[0], nullptr, constant(dt));
        auto flow = l_flow({in[4], in[5]}, nullptr, constant(fgt), w.gamma);
        auto dis = l_dis(in[4], in[5], constant(tfs), constant(tfu));
        auto photo = l_photo(in[4], in[5], in[2], in[3], in[0], 1e-3);
        auto reg = l_reg({in[1]}, {in[1]});
        return add(total_unsupervised(rec, dis, photo, reg, w),
                   scale(flow, w.lambda_flow));
      },
      {dh, random_tensor(Shape{6}, rng, 0.2, 1.0), ds, du, fs, fu});
  CHECK(err < 1e-4);
}
