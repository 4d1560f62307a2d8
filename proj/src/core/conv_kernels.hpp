#pragma once

namespace flint::ag::detail {

// Correlation geometry shared by conv, deconv and their adjoints. The "o"
// side indexes correlation outputs, the "i" side inputs, related per axis by
// i = o*stride - pad + kappa. Arrays are padded to rank entries.
struct ConvGeom {
  int rank = 0;
  int in[3] = {1, 1, 1};
  int out[3] = {1, 1, 1};
  int k[3] = {1, 1, 1};
  int stride[3] = {1, 1, 1};
  int pad[3] = {0, 0, 0};
};

// y[cy, o] += sum_{cx, kappa} x[cx, o*s - p + kappa] * ker[cy, cx, kappa]
void gather(const double* x, int cx_n, const double* ker, int cy_n, const ConvGeom& g,
            double* y);

// y[cout, o*s - p + kappa] += sum_{cg} gsrc[cg, o] * ker[cg, cout, kappa]
void scatter(const double* gsrc, int cg_n, const double* ker, int cout_n, const ConvGeom& g,
             double* y);

// gk[cy, cx, kappa] += sum_o gy[cy, o] * x[cx, o*s - p + kappa]
void kernel_grad(const double* x, int cx_n, const double* gy, int cy_n, const ConvGeom& g,
                 double* gk);

}  // namespace flint::ag::detail
