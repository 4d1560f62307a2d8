#pragma once

// Reference cross-correlation by direct summation over index tuples.
// Deliberately simple and independent of the engine's kernels.

#include <vector>

#include "core/tensor.hpp"

namespace testref {

inline flint::Tensor ref_conv(const flint::Tensor& x, const flint::Tensor& k,
                              const std::vector<double>& bias, const std::vector<int>& stride,
                              const std::vector<int>& pad) {
  const int srank = x.shape.rank() - 1;
  const int ci = x.shape[0];
  const int co = k.shape[0];
  std::vector<int> in(3, 1), kk(3, 1), st(3, 1), pd(3, 0), out(3, 1);
  for (int a = 0; a < srank; ++a) {
    in[a] = x.shape[a + 1];
    kk[a] = k.shape[a + 2];
    st[a] = stride[a];
    pd[a] = pad[a];
    out[a] = (in[a] + 2 * pd[a] - kk[a]) / st[a] + 1;
  }
  std::vector<int> odims{co};
  for (int a = 0; a < srank; ++a) odims.push_back(out[a]);
  flint::Tensor y{flint::Shape(odims)};

  auto xat = [&](int c, int i0, int i1, int i2) -> double {
    if (i0 < 0 || i0 >= in[0] || i1 < 0 || i1 >= in[1] || i2 < 0 || i2 >= in[2]) return 0.0;
    return x[((static_cast<std::size_t>(c) * in[0] + i0) * in[1] + i1) * in[2] + i2];
  };

  std::size_t oi = 0;
  for (int c = 0; c < co; ++c)
    for (int o0 = 0; o0 < out[0]; ++o0)
      for (int o1 = 0; o1 < out[1]; ++o1)
        for (int o2 = 0; o2 < out[2]; ++o2) {
          double acc = bias[c];
          for (int ic = 0; ic < ci; ++ic)
            for (int k0 = 0; k0 < kk[0]; ++k0)
              for (int k1 = 0; k1 < kk[1]; ++k1)
                for (int k2 = 0; k2 < kk[2]; ++k2) {
                  const double w =
                      k[(((static_cast<std::size_t>(c) * ci + ic) * kk[0] + k0) * kk[1] + k1) *
                            kk[2] +
                        k2];
                  acc += w * xat(ic, o0 * st[0] - pd[0] + k0, o1 * st[1] - pd[1] + k1,
                                 o2 * st[2] - pd[2] + k2);
                }
          y[oi++] = acc;
        }
  return y;
}

}  // namespace testref
