#include "warp/warp.hpp"

#include <cmath>

#include "core/error.hpp"

namespace flint {

using ag::NodePtr;

namespace {

// One interpolation axis: clamped position, base index, fraction, and
// whether the position was clamped (killing the flow derivative).
struct AxisSample {
  int i0 = 0;
  double f = 0.0;
  bool clamped = false;
};

inline AxisSample sample_axis(double q, int extent) {
  AxisSample s;
  if (q <= 0.0) {
    s.clamped = q < 0.0;
    s.i0 = 0;
    s.f = 0.0;
    return s;
  }
  if (q >= extent - 1) {
    s.clamped = q > extent - 1;
    s.i0 = extent >= 2 ? extent - 2 : 0;
    s.f = extent >= 2 ? 1.0 : 0.0;
    return s;
  }
  double fl = std::floor(q);
  s.i0 = static_cast<int>(fl);
  s.f = q - fl;
  if (s.f == 0.0 && s.i0 > 0) {  // integer position: use the left cell
    s.i0 -= 1;
    s.f = 1.0;
  }
  return s;
}

}  // namespace

NodePtr backward_warp(const NodePtr& source, const NodePtr& flow) {
  const Shape& ss = source->shape();
  const Shape& fs = flow->shape();
  const int rank = ss.rank() - 1;
  if (rank != 2 && rank != 3)
    throw DataError("backward_warp: spatial rank must be 2 or 3, got " + std::to_string(rank));
  if (fs.rank() != ss.rank())
    throw DataError("backward_warp: flow rank " + fs.str() + " vs source " + ss.str());
  if (fs[0] != rank)
    throw DataError("backward_warp: flow has " + std::to_string(fs[0]) +
                    " components, expected " + std::to_string(rank));
  for (int a = 1; a < ss.rank(); ++a)
    if (fs[a] != ss[a])
      throw DataError("backward_warp: spatial axis " + std::to_string(a - 1) + " extent " +
                      std::to_string(fs[a]) + " != " + std::to_string(ss[a]));

  const int channels = ss[0];
  std::size_t cells = 1;
  for (int a = 1; a < ss.rank(); ++a) cells *= static_cast<std::size_t>(ss[a]);

  Tensor out{ss};
  const double* sv = source->value.data();
  const double* fv = flow->value.data();

  if (rank == 2) {
    const int H = ss[1], W = ss[2];
    std::size_t i = 0;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x, ++i) {
        const AxisSample ay = sample_axis(y + fv[i], H);
        const AxisSample ax = sample_axis(x + fv[cells + i], W);
        const int y1 = ay.i0 + (H >= 2 ? 1 : 0);
        const int x1 = ax.i0 + (W >= 2 ? 1 : 0);
        const double w00 = (1 - ay.f) * (1 - ax.f), w01 = (1 - ay.f) * ax.f;
        const double w10 = ay.f * (1 - ax.f), w11 = ay.f * ax.f;
        for (int c = 0; c < channels; ++c) {
          const double* sc = sv + c * cells;
          out[c * cells + i] = w00 * sc[ay.i0 * W + ax.i0] + w01 * sc[ay.i0 * W + x1] +
                               w10 * sc[y1 * W + ax.i0] + w11 * sc[y1 * W + x1];
        }
      }
    }
  } else {
    const int D = ss[1], H = ss[2], W = ss[3];
    std::size_t i = 0;
    for (int z = 0; z < D; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x, ++i) {
          const AxisSample az = sample_axis(z + fv[i], D);
          const AxisSample ay = sample_axis(y + fv[cells + i], H);
          const AxisSample ax = sample_axis(x + fv[2 * cells + i], W);
          const int z1 = az.i0 + (D >= 2 ? 1 : 0);
          const int y1 = ay.i0 + (H >= 2 ? 1 : 0);
          const int x1 = ax.i0 + (W >= 2 ? 1 : 0);
          for (int c = 0; c < channels; ++c) {
            const double* sc = sv + c * cells;
            auto at = [&](int zz, int yy, int xx) { return sc[(zz * H + yy) * W + xx]; };
            const double v00 = (1 - ax.f) * at(az.i0, ay.i0, ax.i0) + ax.f * at(az.i0, ay.i0, x1);
            const double v01 = (1 - ax.f) * at(az.i0, y1, ax.i0) + ax.f * at(az.i0, y1, x1);
            const double v10 = (1 - ax.f) * at(z1, ay.i0, ax.i0) + ax.f * at(z1, ay.i0, x1);
            const double v11 = (1 - ax.f) * at(z1, y1, ax.i0) + ax.f * at(z1, y1, x1);
            const double v0 = (1 - ay.f) * v00 + ay.f * v01;
            const double v1 = (1 - ay.f) * v10 + ay.f * v11;
            out[c * cells + i] = (1 - az.f) * v0 + az.f * v1;
          }
        }
  }

  return ag::make_op(
      std::move(out), {source, flow},
      [source, flow, rank, channels, cells](const Tensor& gout,
                                            const std::vector<Tensor*>& gp) {
        const Shape& ss2 = source->shape();
        const double* sv = source->value.data();
        const double* fv = flow->value.data();
        if (rank == 2) {
          const int H = ss2[1], W = ss2[2];
          std::size_t i = 0;
          for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x, ++i) {
              const AxisSample ay = sample_axis(y + fv[i], H);
              const AxisSample ax = sample_axis(x + fv[cells + i], W);
              const int y1 = ay.i0 + (H >= 2 ? 1 : 0);
              const int x1 = ax.i0 + (W >= 2 ? 1 : 0);
              const double w00 = (1 - ay.f) * (1 - ax.f), w01 = (1 - ay.f) * ax.f;
              const double w10 = ay.f * (1 - ax.f), w11 = ay.f * ax.f;
              double gfy = 0.0, gfx = 0.0;
              for (int c = 0; c < channels; ++c) {
                const double g = gout[c * cells + i];
                if (g == 0.0) continue;
                const double* sc = sv + c * cells;
                const double s00 = sc[ay.i0 * W + ax.i0], s01 = sc[ay.i0 * W + x1];
                const double s10 = sc[y1 * W + ax.i0], s11 = sc[y1 * W + x1];
                if (gp[0]) {
                  double* gs = gp[0]->data() + c * cells;
                  gs[ay.i0 * W + ax.i0] += g * w00;
                  gs[ay.i0 * W + x1] += g * w01;
                  gs[y1 * W + ax.i0] += g * w10;
                  gs[y1 * W + x1] += g * w11;
                }
                gfy += g * ((1 - ax.f) * (s10 - s00) + ax.f * (s11 - s01));
                gfx += g * ((1 - ay.f) * (s01 - s00) + ay.f * (s11 - s10));
              }
              if (gp[1]) {
                if (!ay.clamped) (*gp[1])[i] += gfy;
                if (!ax.clamped) (*gp[1])[cells + i] += gfx;
              }
            }
        } else {
          const int D = ss2[1], H = ss2[2], W = ss2[3];
          std::size_t i = 0;
          for (int z = 0; z < D; ++z)
            for (int y = 0; y < H; ++y)
              for (int x = 0; x < W; ++x, ++i) {
                const AxisSample az = sample_axis(z + fv[i], D);
                const AxisSample ay = sample_axis(y + fv[cells + i], H);
                const AxisSample ax = sample_axis(x + fv[2 * cells + i], W);
                const int z1 = az.i0 + (D >= 2 ? 1 : 0);
                const int y1 = ay.i0 + (H >= 2 ? 1 : 0);
                const int x1 = ax.i0 + (W >= 2 ? 1 : 0);
                double gfz = 0.0, gfy = 0.0, gfx = 0.0;
                for (int c = 0; c < channels; ++c) {
                  const double g = gout[c * cells + i];
                  if (g == 0.0) continue;
                  const double* sc = sv + c * cells;
                  auto at = [&](int zz, int yy, int xx) { return sc[(zz * H + yy) * W + xx]; };
                  const double wz[2] = {1 - az.f, az.f};
                  const double wy[2] = {1 - ay.f, ay.f};
                  const double wx[2] = {1 - ax.f, ax.f};
                  const int zz[2] = {az.i0, z1}, yy[2] = {ay.i0, y1}, xx[2] = {ax.i0, x1};
                  if (gp[0]) {
                    double* gs = gp[0]->data() + c * cells;
                    for (int a = 0; a < 2; ++a)
                      for (int b = 0; b < 2; ++b)
                        for (int d = 0; d < 2; ++d)
                          gs[(zz[a] * H + yy[b]) * W + xx[d]] += g * wz[a] * wy[b] * wx[d];
                  }
                  for (int b = 0; b < 2; ++b)
                    for (int d = 0; d < 2; ++d) {
                      gfz += g * wy[b] * wx[d] * (at(z1, yy[b], xx[d]) - at(az.i0, yy[b], xx[d]));
                      gfy += g * wz[b] * wx[d] * (at(zz[b], y1, xx[d]) - at(zz[b], ay.i0, xx[d]));
                      gfx += g * wz[b] * wy[d] * (at(zz[b], yy[d], x1) - at(zz[b], yy[d], ax.i0));
                    }
                }
                if (gp[1]) {
                  if (!az.clamped) (*gp[1])[i] += gfz;
                  if (!ay.clamped) (*gp[1])[cells + i] += gfy;
                  if (!ax.clamped) (*gp[1])[2 * cells + i] += gfx;
                }
              }
        }
      });
}

NodePtr fuse(const NodePtr& warped_s, const NodePtr& warped_u, const NodePtr& mask) {
  if (warped_s->shape() != warped_u->shape() || warped_s->shape() != mask->shape())
    throw DataError("fuse: shape mismatch " + warped_s->shape().str() + " / " +
                    warped_u->shape().str() + " / " + mask->shape().str());
  for (double m : mask->value.v)
    if (!(m >= 0.0 && m <= 1.0))
      throw NumericError("fuse: mask value " + std::to_string(m) + " outside [0,1]");

  Tensor out{warped_s->shape()};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = mask->value[i];
    out[i] = warped_s->value[i] * m + warped_u->value[i] * (1.0 - m);
  }
  return ag::make_op(std::move(out), {warped_s, warped_u, mask},
                     [warped_s, warped_u, mask](const Tensor& gout,
                                                const std::vector<Tensor*>& gp) {
                       for (std::size_t i = 0; i < gout.size(); ++i) {
                         const double g = gout[i];
                         const double m = mask->value[i];
                         if (gp[0]) (*gp[0])[i] += g * m;
                         if (gp[1]) (*gp[1])[i] += g * (1.0 - m);
                         if (gp[2])
                           (*gp[2])[i] += g * (warped_s->value[i] - warped_u->value[i]);
                       }
                     });
}

}  // namespace flint
