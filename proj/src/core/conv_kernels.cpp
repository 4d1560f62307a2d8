#include "core/conv_kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace flint::ag::detail {

namespace {

// Valid correlation output range on one axis: all o with 0 <= o*s - p + kap < iext.
inline void o_range(int iext, int oext, int s, int p, int kap, int& o0, int& o1) {
  int lo = p - kap;
  o0 = lo > 0 ? (lo + s - 1) / s : 0;
  int hi = iext - 1 - kap + p;
  o1 = hi >= 0 ? std::min(oext - 1, hi / s) : -1;
}

inline std::size_t volume(const int* d, int rank) {
  std::size_t n = 1;
  for (int a = 0; a < rank; ++a) n *= static_cast<std::size_t>(d[a]);
  return n;
}

}  // namespace

void gather(const double* x, int cx_n, const double* ker, int cy_n, const ConvGeom& g,
            double* y) {
  const std::size_t in_vol = volume(g.in, g.rank);
  const std::size_t out_vol = volume(g.out, g.rank);
  const std::size_t k_vol = volume(g.k, g.rank);

  if (g.rank == 1) {
    const int s0 = g.stride[0], p0 = g.pad[0];
    for (int cy = 0; cy < cy_n; ++cy) {
      double* yc = y + cy * out_vol;
      for (int cx = 0; cx < cx_n; ++cx) {
        const double* xc = x + cx * in_vol;
        const double* kc = ker + (static_cast<std::size_t>(cy) * cx_n + cx) * k_vol;
        for (int k0 = 0; k0 < g.k[0]; ++k0) {
          const double w = kc[k0];
          int o0, o1;
          o_range(g.in[0], g.out[0], s0, p0, k0, o0, o1);
          const int off = -p0 + k0;
          for (int o = o0; o <= o1; ++o) yc[o] += w * xc[o * s0 + off];
        }
      }
    }
  } else if (g.rank == 2) {
    const int sy = g.stride[0], sx = g.stride[1], py = g.pad[0], px = g.pad[1];
    const int inX = g.in[1], outX = g.out[1];
    for (int cy = 0; cy < cy_n; ++cy) {
      double* yc = y + cy * out_vol;
      for (int cx = 0; cx < cx_n; ++cx) {
        const double* xc = x + cx * in_vol;
        const double* kc = ker + (static_cast<std::size_t>(cy) * cx_n + cx) * k_vol;
        for (int ky = 0; ky < g.k[0]; ++ky) {
          int oy0, oy1;
          o_range(g.in[0], g.out[0], sy, py, ky, oy0, oy1);
          for (int kx = 0; kx < g.k[1]; ++kx) {
            const double w = kc[ky * g.k[1] + kx];
            int ox0, ox1;
            o_range(inX, outX, sx, px, kx, ox0, ox1);
            const int offx = -px + kx;
            for (int oy = oy0; oy <= oy1; ++oy) {
              const int iy = oy * sy - py + ky;
              const double* xrow = xc + static_cast<std::size_t>(iy) * inX;
              double* yrow = yc + static_cast<std::size_t>(oy) * outX;
              if (sx == 1) {
                const double* xs = xrow + offx;
                for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += w * xs[ox];
              } else {
                for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += w * xrow[ox * sx + offx];
              }
            }
          }
        }
      }
    }
  } else {
    const int sz = g.stride[0], sy = g.stride[1], sx = g.stride[2];
    const int pz = g.pad[0], py = g.pad[1], px = g.pad[2];
    const int inY = g.in[1], inX = g.in[2], outY = g.out[1], outX = g.out[2];
    for (int cy = 0; cy < cy_n; ++cy) {
      double* yc = y + cy * out_vol;
      for (int cx = 0; cx < cx_n; ++cx) {
        const double* xc = x + cx * in_vol;
        const double* kc = ker + (static_cast<std::size_t>(cy) * cx_n + cx) * k_vol;
        for (int kz = 0; kz < g.k[0]; ++kz) {
          int oz0, oz1;
          o_range(g.in[0], g.out[0], sz, pz, kz, oz0, oz1);
          for (int ky = 0; ky < g.k[1]; ++ky) {
            int oy0, oy1;
            o_range(inY, outY, sy, py, ky, oy0, oy1);
            for (int kx = 0; kx < g.k[2]; ++kx) {
              const double w = kc[(kz * g.k[1] + ky) * g.k[2] + kx];
              int ox0, ox1;
              o_range(inX, outX, sx, px, kx, ox0, ox1);
              const int offx = -px + kx;
              for (int oz = oz0; oz <= oz1; ++oz) {
                const int iz = oz * sz - pz + kz;
                for (int oy = oy0; oy <= oy1; ++oy) {
                  const int iy = oy * sy - py + ky;
                  const double* xrow = xc + (static_cast<std::size_t>(iz) * inY + iy) * inX;
                  double* yrow = yc + (static_cast<std::size_t>(oz) * outY + oy) * outX;
                  for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += w * xrow[ox * sx + offx];
                }
              }
            }
          }
        }
      }
    }
  }
}

void scatter(const double* gsrc, int cg_n, const double* ker, int cout_n, const ConvGeom& g,
             double* y) {
  const std::size_t in_vol = volume(g.in, g.rank);
  const std::size_t out_vol = volume(g.out, g.rank);
  const std::size_t k_vol = volume(g.k, g.rank);

  if (g.rank == 1) {
    const int s0 = g.stride[0], p0 = g.pad[0];
    for (int cg = 0; cg < cg_n; ++cg) {
      const double* gc = gsrc + cg * out_vol;
      for (int co = 0; co < cout_n; ++co) {
        double* yc = y + co * in_vol;
        const double* kc = ker + (static_cast<std::size_t>(cg) * cout_n + co) * k_vol;
        for (int k0 = 0; k0 < g.k[0]; ++k0) {
          const double w = kc[k0];
          int o0, o1;
          o_range(g.in[0], g.out[0], s0, p0, k0, o0, o1);
          const int off = -p0 + k0;
          for (int o = o0; o <= o1; ++o) yc[o * s0 + off] += w * gc[o];
        }
      }
    }
  } else if (g.rank == 2) {
    const int sy = g.stride[0], sx = g.stride[1], py = g.pad[0], px = g.pad[1];
    const int inX = g.in[1], outX = g.out[1];
    for (int cg = 0; cg < cg_n; ++cg) {
      const double* gc = gsrc + cg * out_vol;
      for (int co = 0; co < cout_n; ++co) {
        double* yc = y + co * in_vol;
        const double* kc = ker + (static_cast<std::size_t>(cg) * cout_n + co) * k_vol;
        for (int ky = 0; ky < g.k[0]; ++ky) {
          int oy0, oy1;
          o_range(g.in[0], g.out[0], sy, py, ky, oy0, oy1);
          for (int kx = 0; kx < g.k[1]; ++kx) {
            const double w = kc[ky * g.k[1] + kx];
            int ox0, ox1;
            o_range(inX, outX, sx, px, kx, ox0, ox1);
            const int offx = -px + kx;
            for (int oy = oy0; oy <= oy1; ++oy) {
              const int iy = oy * sy - py + ky;
              double* yrow = yc + static_cast<std::size_t>(iy) * inX;
              const double* grow = gc + static_cast<std::size_t>(oy) * outX;
              if (sx == 1) {
                double* ys = yrow + offx;
                for (int ox = ox0; ox <= ox1; ++ox) ys[ox] += w * grow[ox];
              } else {
                for (int ox = ox0; ox <= ox1; ++ox) yrow[ox * sx + offx] += w * grow[ox];
              }
            }
          }
        }
      }
    }
  } else {
    const int sz = g.stride[0], sy = g.stride[1], sx = g.stride[2];
    const int pz = g.pad[0], py = g.pad[1], px = g.pad[2];
    const int inY = g.in[1], inX = g.in[2], outY = g.out[1], outX = g.out[2];
    for (int cg = 0; cg < cg_n; ++cg) {
      const double* gc = gsrc + cg * out_vol;
      for (int co = 0; co < cout_n; ++co) {
        double* yc = y + co * in_vol;
        const double* kc = ker + (static_cast<std::size_t>(cg) * cout_n + co) * k_vol;
        for (int kz = 0; kz < g.k[0]; ++kz) {
          int oz0, oz1;
          o_range(g.in[0], g.out[0], sz, pz, kz, oz0, oz1);
          for (int ky = 0; ky < g.k[1]; ++ky) {
            int oy0, oy1;
            o_range(inY, outY, sy, py, ky, oy0, oy1);
            for (int kx = 0; kx < g.k[2]; ++kx) {
              const double w = kc[(kz * g.k[1] + ky) * g.k[2] + kx];
              int ox0, ox1;
              o_range(inX, outX, sx, px, kx, ox0, ox1);
              const int offx = -px + kx;
              for (int oz = oz0; oz <= oz1; ++oz) {
                const int iz = oz * sz - pz + kz;
                for (int oy = oy0; oy <= oy1; ++oy) {
                  const int iy = oy * sy - py + ky;
                  double* yrow = yc + (static_cast<std::size_t>(iz) * inY + iy) * inX;
                  const double* grow = gc + (static_cast<std::size_t>(oz) * outY + oy) * outX;
                  for (int ox = ox0; ox <= ox1; ++ox) yrow[ox * sx + offx] += w * grow[ox];
                }
              }
            }
          }
        }
      }
    }
  }
}

void kernel_grad(const double* x, int cx_n, const double* gy, int cy_n, const ConvGeom& g,
                 double* gk) {
  const std::size_t in_vol = volume(g.in, g.rank);
  const std::size_t out_vol = volume(g.out, g.rank);
  const std::size_t k_vol = volume(g.k, g.rank);

  if (g.rank == 1) {
    const int s0 = g.stride[0], p0 = g.pad[0];
    for (int cy = 0; cy < cy_n; ++cy) {
      const double* gc = gy + cy * out_vol;
      for (int cx = 0; cx < cx_n; ++cx) {
        const double* xc = x + cx * in_vol;
        double* kc = gk + (static_cast<std::size_t>(cy) * cx_n + cx) * k_vol;
        for (int k0 = 0; k0 < g.k[0]; ++k0) {
          int o0, o1;
          o_range(g.in[0], g.out[0], s0, p0, k0, o0, o1);
          const int off = -p0 + k0;
          double acc = 0.0;
          for (int o = o0; o <= o1; ++o) acc += gc[o] * xc[o * s0 + off];
          kc[k0] += acc;
        }
      }
    }
  } else if (g.rank == 2) {
    const int sy = g.stride[0], sx = g.stride[1], py = g.pad[0], px = g.pad[1];
    const int inX = g.in[1], outX = g.out[1];
    for (int cy = 0; cy < cy_n; ++cy) {
      const double* gc = gy + cy * out_vol;
      for (int cx = 0; cx < cx_n; ++cx) {
        const double* xc = x + cx * in_vol;
        double* kc = gk + (static_cast<std::size_t>(cy) * cx_n + cx) * k_vol;
        for (int ky = 0; ky < g.k[0]; ++ky) {
          int oy0, oy1;
          o_range(g.in[0], g.out[0], sy, py, ky, oy0, oy1);
          for (int kx = 0; kx < g.k[1]; ++kx) {
            int ox0, ox1;
            o_range(inX, outX, sx, px, kx, ox0, ox1);
            const int offx = -px + kx;
            double acc = 0.0;
            for (int oy = oy0; oy <= oy1; ++oy) {
              const int iy = oy * sy - py + ky;
              const double* xrow = xc + static_cast<std::size_t>(iy) * inX;
              const double* grow = gc + static_cast<std::size_t>(oy) * outX;
              if (sx == 1) {
                const double* xs = xrow + offx;
                for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * xs[ox];
              } else {
                for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * xrow[ox * sx + offx];
              }
            }
            kc[ky * g.k[1] + kx] += acc;
          }
        }
      }
    }
  } else {
    const int sz = g.stride[0], sy = g.stride[1], sx = g.stride[2];
    const int pz = g.pad[0], py = g.pad[1], px = g.pad[2];
    const int inY = g.in[1], inX = g.in[2], outY = g.out[1], outX = g.out[2];
    for (int cy = 0; cy < cy_n; ++cy) {
      const double* gc = gy + cy * out_vol;
      for (int cx = 0; cx < cx_n; ++cx) {
        const double* xc = x + cx * in_vol;
        double* kc = gk + (static_cast<std::size_t>(cy) * cx_n + cx) * k_vol;
        for (int kz = 0; kz < g.k[0]; ++kz) {
          int oz0, oz1;
          o_range(g.in[0], g.out[0], sz, pz, kz, oz0, oz1);
          for (int ky = 0; ky < g.k[1]; ++ky) {
            int oy0, oy1;
            o_range(inY, outY, sy, py, ky, oy0, oy1);
            for (int kx = 0; kx < g.k[2]; ++kx) {
              int ox0, ox1;
              o_range(inX, outX, sx, px, kx, ox0, ox1);
              const int offx = -px + kx;
              double acc = 0.0;
              for (int oz = oz0; oz <= oz1; ++oz) {
                const int iz = oz * sz - pz + kz;
                for (int oy = oy0; oy <= oy1; ++oy) {
                  const int iy = oy * sy - py + ky;
                  const double* xrow = xc + (static_cast<std::size_t>(iz) * inY + iy) * inX;
                  const double* grow = gc + (static_cast<std::size_t>(oz) * outY + oy) * outX;
                  for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * xrow[ox * sx + offx];
                }
              }
              kc[(kz * g.k[1] + ky) * g.k[2] + kx] += acc;
            }
          }
        }
      }
    }
  }
}

}  // namespace flint::ag::detail
