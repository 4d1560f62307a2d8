#include "core/ops.hpp"

#include <cmath>
#include <cstring>

#include "core/conv_kernels.hpp"
#include "core/error.hpp"

namespace flint::ag {

namespace {

using detail::ConvGeom;

void check_spatial_args(const char* op, int srank, const std::vector<int>& stride,
                        const std::vector<int>& pad) {
  if (static_cast<int>(stride.size()) != srank)
    throw DataError(std::string(op) + ": stride entries (" + std::to_string(stride.size()) +
                    ") do not match spatial rank " + std::to_string(srank));
  if (static_cast<int>(pad.size()) != srank)
    throw DataError(std::string(op) + ": padding entries (" + std::to_string(pad.size()) +
                    ") do not match spatial rank " + std::to_string(srank));
  for (int a = 0; a < srank; ++a) {
    if (stride[a] <= 0)
      throw DataError(std::string(op) + ": stride must be positive on axis " + std::to_string(a));
    if (pad[a] < 0)
      throw DataError(std::string(op) + ": padding must be nonnegative on axis " +
                      std::to_string(a));
  }
}

std::size_t spatial_numel(const Shape& s) {
  std::size_t n = 1;
  for (int a = 1; a < s.rank(); ++a) n *= static_cast<std::size_t>(s[a]);
  return n;
}

}  // namespace

NodePtr conv(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias,
             std::vector<int> stride, std::vector<int> pad) {
  const Shape& xs = input->shape();
  const Shape& ks = kernel->shape();
  const int srank = xs.rank() - 1;
  if (srank < 1 || srank > 3)
    throw DataError("conv: input spatial rank must be 1..3, got " + std::to_string(srank));
  if (ks.rank() != srank + 2)
    throw DataError("conv: kernel rank " + std::to_string(ks.rank()) + " does not match input " +
                    xs.str());
  if (ks[1] != xs[0])
    throw DataError("conv: kernel input channels " + std::to_string(ks[1]) +
                    " != input channels " + std::to_string(xs[0]));
  check_spatial_args("conv", srank, stride, pad);

  const int co = ks[0], ci = xs[0];
  ConvGeom g;
  g.rank = srank;
  std::vector<int> odims{co};
  for (int a = 0; a < srank; ++a) {
    g.in[a] = xs[a + 1];
    g.k[a] = ks[a + 2];
    g.stride[a] = stride[a];
    g.pad[a] = pad[a];
    const int padded = g.in[a] + 2 * g.pad[a];
    if (g.k[a] > padded)
      throw DataError("conv: kernel extent " + std::to_string(g.k[a]) +
                      " exceeds padded input extent " + std::to_string(padded) + " on axis " +
                      std::to_string(a));
    g.out[a] = (padded - g.k[a]) / g.stride[a] + 1;
    odims.push_back(g.out[a]);
  }
  if (bias->shape() != Shape{co})
    throw DataError("conv: bias shape " + bias->shape().str() + " != (" + std::to_string(co) +
                    ")");

  Tensor out{Shape(odims)};
  const std::size_t ovol = spatial_numel(out.shape);
  for (int c = 0; c < co; ++c) {
    double* yc = out.data() + c * ovol;
    const double b = bias->value[c];
    for (std::size_t i = 0; i < ovol; ++i) yc[i] = b;
  }
  detail::gather(input->value.data(), ci, kernel->value.data(), co, g, out.data());

  return make_op(
      std::move(out), {input, kernel, bias},
      [input, kernel, g, ci, co, ovol](const Tensor& gout, const std::vector<Tensor*>& gp) {
        if (gp[0])  // input: scatter gout through the kernel, (co, ci) layout fits directly
          detail::scatter(gout.data(), co, kernel->value.data(), ci, g, gp[0]->data());
        if (gp[1])
          detail::kernel_grad(input->value.data(), ci, gout.data(), co, g, gp[1]->data());
        if (gp[2]) {
          for (int c = 0; c < co; ++c) {
            const double* gc = gout.data() + c * ovol;
            double acc = 0.0;
            for (std::size_t i = 0; i < ovol; ++i) acc += gc[i];
            (*gp[2])[c] += acc;
          }
        }
      });
}

NodePtr deconv(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias,
               std::vector<int> stride, std::vector<int> pad) {
  const Shape& xs = input->shape();
  const Shape& ks = kernel->shape();
  const int srank = xs.rank() - 1;
  if (srank < 1 || srank > 3)
    throw DataError("deconv: input spatial rank must be 1..3, got " + std::to_string(srank));
  if (ks.rank() != srank + 2)
    throw DataError("deconv: kernel rank " + std::to_string(ks.rank()) +
                    " does not match input " + xs.str());
  if (ks[0] != xs[0])
    throw DataError("deconv: kernel input channels " + std::to_string(ks[0]) +
                    " != input channels " + std::to_string(xs[0]));
  check_spatial_args("deconv", srank, stride, pad);

  const int ci = xs[0], co = ks[1];
  // Correlation geometry with the deconv input on the "o" side.
  ConvGeom g;
  g.rank = srank;
  std::vector<int> odims{co};
  for (int a = 0; a < srank; ++a) {
    g.out[a] = xs[a + 1];
    g.k[a] = ks[a + 2];
    g.stride[a] = stride[a];
    g.pad[a] = pad[a];
    const int oext = (g.out[a] - 1) * g.stride[a] - 2 * g.pad[a] + g.k[a];
    if (oext <= 0)
      throw DataError("deconv: nonpositive output extent on axis " + std::to_string(a));
    g.in[a] = oext;
    odims.push_back(oext);
  }
  if (bias->shape() != Shape{co})
    throw DataError("deconv: bias shape " + bias->shape().str() + " != (" + std::to_string(co) +
                    ")");

  Tensor out{Shape(odims)};
  const std::size_t ovol = spatial_numel(out.shape);
  for (int c = 0; c < co; ++c) {
    double* yc = out.data() + c * ovol;
    const double b = bias->value[c];
    for (std::size_t i = 0; i < ovol; ++i) yc[i] = b;
  }
  detail::scatter(input->value.data(), ci, kernel->value.data(), co, g, out.data());

  return make_op(
      std::move(out), {input, kernel, bias},
      [input, kernel, g, ci, co, ovol](const Tensor& gout, const std::vector<Tensor*>& gp) {
        if (gp[0])  // input grad: gather gout with the (ci, co) kernel layout
          detail::gather(gout.data(), co, kernel->value.data(), ci, g, gp[0]->data());
        if (gp[1])  // kernel grad: roles swapped, gout is on the "i" side
          detail::kernel_grad(gout.data(), co, input->value.data(), ci, g, gp[1]->data());
        if (gp[2]) {
          for (int c = 0; c < co; ++c) {
            const double* gc = gout.data() + c * ovol;
            double acc = 0.0;
            for (std::size_t i = 0; i < ovol; ++i) acc += gc[i];
            (*gp[2])[c] += acc;
          }
        }
      });
}

NodePtr linear(const NodePtr& input, const NodePtr& weight, const NodePtr& bias) {
  const Shape& xs = input->shape();
  const Shape& ws = weight->shape();
  if (xs.rank() != 1) throw DataError("linear: input must be rank 1, got " + xs.str());
  if (ws.rank() != 2) throw DataError("linear: weight must be rank 2, got " + ws.str());
  const int out_n = ws[0], in_n = ws[1];
  if (in_n != xs[0])
    throw DataError("linear: weight columns " + std::to_string(in_n) + " != input length " +
                    std::to_string(xs[0]));
  if (bias->shape() != Shape{out_n})
    throw DataError("linear: bias shape " + bias->shape().str() + " != (" +
                    std::to_string(out_n) + ")");

  Tensor out(Shape{out_n});
  const double* x = input->value.data();
  const double* w = weight->value.data();
  for (int o = 0; o < out_n; ++o) {
    double acc = bias->value[o];
    const double* wr = w + static_cast<std::size_t>(o) * in_n;
    for (int i = 0; i < in_n; ++i) acc += wr[i] * x[i];
    out[o] = acc;
  }

  return make_op(std::move(out), {input, weight, bias},
                 [input, weight, out_n, in_n](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   const double* w = weight->value.data();
                   const double* x = input->value.data();
                   if (gp[0]) {
                     double* gx = gp[0]->data();
                     for (int o = 0; o < out_n; ++o) {
                       const double go = gout[o];
                       const double* wr = w + static_cast<std::size_t>(o) * in_n;
                       for (int i = 0; i < in_n; ++i) gx[i] += go * wr[i];
                     }
                   }
                   if (gp[1]) {
                     double* gw = gp[1]->data();
                     for (int o = 0; o < out_n; ++o) {
                       const double go = gout[o];
                       double* gr = gw + static_cast<std::size_t>(o) * in_n;
                       for (int i = 0; i < in_n; ++i) gr[i] += go * x[i];
                     }
                   }
                   if (gp[2])
                     for (int o = 0; o < out_n; ++o) (*gp[2])[o] += gout[o];
                 });
}

NodePtr prelu(const NodePtr& input, const NodePtr& slope) {
  const Shape& xs = input->shape();
  const Shape& as = slope->shape();
  const int channels = xs[0];
  if (as.rank() != 1 || (as[0] != 1 && as[0] != channels))
    throw DataError("prelu: slope shape " + as.str() + " must be (1) or (" +
                    std::to_string(channels) + ")");
  const bool shared = as[0] == 1;
  const std::size_t cvol = spatial_numel(xs);

  Tensor out(xs);
  for (int c = 0; c < channels; ++c) {
    const double a = slope->value[shared ? 0 : c];
    const double* x = input->value.data() + c * cvol;
    double* y = out.data() + c * cvol;
    for (std::size_t i = 0; i < cvol; ++i) y[i] = x[i] > 0.0 ? x[i] : a * x[i];
  }

  return make_op(std::move(out), {input, slope},
                 [input, slope, channels, cvol, shared](const Tensor& gout,
                                                        const std::vector<Tensor*>& gp) {
                   for (int c = 0; c < channels; ++c) {
                     const double a = slope->value[shared ? 0 : c];
                     const double* x = input->value.data() + c * cvol;
                     const double* go = gout.data() + c * cvol;
                     if (gp[0]) {
                       double* gx = gp[0]->data() + c * cvol;
                       for (std::size_t i = 0; i < cvol; ++i)
                         gx[i] += go[i] * (x[i] > 0.0 ? 1.0 : a);
                     }
                     if (gp[1]) {
                       double acc = 0.0;
                       for (std::size_t i = 0; i < cvol; ++i)
                         if (x[i] <= 0.0) acc += go[i] * x[i];
                       (*gp[1])[shared ? 0 : c] += acc;
                     }
                   }
                 });
}

NodePtr concat(const std::vector<NodePtr>& inputs) {
  if (inputs.empty()) throw DataError("concat: no inputs");
  if (inputs.size() == 1) {
    // single input passes through unchanged
    const NodePtr& a = inputs[0];
    Tensor out = a->value;
    return make_op(std::move(out), {a}, [](const Tensor& gout, const std::vector<Tensor*>& gp) {
      if (gp[0]) gp[0]->add_(gout);
    });
  }
  const Shape& s0 = inputs[0]->shape();
  int channels = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape& si = inputs[i]->shape();
    if (si.rank() != s0.rank())
      throw DataError("concat: input " + std::to_string(i) + " rank mismatch");
    for (int a = 1; a < s0.rank(); ++a)
      if (si[a] != s0[a])
        throw DataError("concat: input " + std::to_string(i) + " spatial axis " +
                        std::to_string(a - 1) + " extent " + std::to_string(si[a]) + " != " +
                        std::to_string(s0[a]));
    channels += si[0];
  }
  std::vector<int> odims = s0.d;
  odims[0] = channels;
  Tensor out{Shape(odims)};
  const std::size_t cvol = spatial_numel(s0);
  std::size_t off = 0;
  for (const auto& in : inputs) {
    std::memcpy(out.data() + off, in->value.data(), in->value.size() * sizeof(double));
    off += in->value.size();
  }

  std::vector<NodePtr> parents(inputs.begin(), inputs.end());
  std::vector<std::size_t> sizes;
  for (const auto& in : inputs) sizes.push_back(in->value.size());
  (void)cvol;
  return make_op(std::move(out), std::move(parents),
                 [sizes](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   std::size_t off2 = 0;
                   for (std::size_t i = 0; i < sizes.size(); ++i) {
                     if (gp[i]) {
                       double* g = gp[i]->data();
                       const double* src = gout.data() + off2;
                       for (std::size_t j = 0; j < sizes[i]; ++j) g[j] += src[j];
                     }
                     off2 += sizes[i];
                   }
                 });
}

NodePtr slice_channels(const NodePtr& x, int c0, int c1) {
  const Shape& xs = x->shape();
  if (c0 < 0 || c1 > xs[0] || c0 >= c1)
    throw DataError("slice_channels: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                    ") invalid for " + std::to_string(xs[0]) + " channels");
  std::vector<int> odims = xs.d;
  odims[0] = c1 - c0;
  const std::size_t cvol = spatial_numel(xs);
  Tensor out{Shape(odims)};
  std::memcpy(out.data(), x->value.data() + c0 * cvol, out.size() * sizeof(double));
  const std::size_t n = out.size();
  return make_op(std::move(out), {x},
                 [c0, cvol, n](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   double* g = gp[0]->data() + c0 * cvol;
                   for (std::size_t i = 0; i < n; ++i) g[i] += gout[i];
                 });
}

NodePtr reshape(const NodePtr& x, Shape s) {
  if (s.numel() != x->value.size())
    throw DataError("reshape: numel mismatch " + x->shape().str() + " -> " + s.str());
  Tensor out(std::move(s), x->value.v);
  return make_op(std::move(out), {x}, [](const Tensor& gout, const std::vector<Tensor*>& gp) {
    if (!gp[0]) return;
    for (std::size_t i = 0; i < gout.size(); ++i) (*gp[0])[i] += gout[i];
  });
}

NodePtr slice_flat(const NodePtr& x, std::size_t offset, Shape s) {
  if (x->shape().rank() != 1) throw DataError("slice_flat: source must be rank 1");
  const std::size_t n = s.numel();
  if (offset + n > x->value.size())
    throw DataError("slice_flat: window [" + std::to_string(offset) + "," +
                    std::to_string(offset + n) + ") exceeds length " +
                    std::to_string(x->value.size()));
  Tensor out{std::move(s)};
  std::memcpy(out.data(), x->value.data() + offset, n * sizeof(double));
  return make_op(std::move(out), {x},
                 [offset, n](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   double* g = gp[0]->data() + offset;
                   for (std::size_t i = 0; i < n; ++i) g[i] += gout[i];
                 });
}

namespace {

void check_same_shape(const char* op, const NodePtr& a, const NodePtr& b) {
  if (a->shape() != b->shape())
    throw DataError(std::string(op) + ": shape mismatch " + a->shape().str() + " vs " +
                    b->shape().str());
}

}  // namespace

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check_same_shape("add", a, b);
  Tensor out = a->value;
  out.add_(b->value);
  return make_op(std::move(out), {a, b}, [](const Tensor& gout, const std::vector<Tensor*>& gp) {
    if (gp[0]) gp[0]->add_(gout);
    if (gp[1]) gp[1]->add_(gout);
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check_same_shape("sub", a, b);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
  return make_op(std::move(out), {a, b}, [](const Tensor& gout, const std::vector<Tensor*>& gp) {
    if (gp[0]) gp[0]->add_(gout);
    if (gp[1])
      for (std::size_t i = 0; i < gout.size(); ++i) (*gp[1])[i] -= gout[i];
  });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  check_same_shape("mul", a, b);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make_op(std::move(out), {a, b},
                 [a, b](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (gp[0])
                     for (std::size_t i = 0; i < gout.size(); ++i)
                       (*gp[0])[i] += gout[i] * b->value[i];
                   if (gp[1])
                     for (std::size_t i = 0; i < gout.size(); ++i)
                       (*gp[1])[i] += gout[i] * a->value[i];
                 });
}

NodePtr scale(const NodePtr& a, double c) {
  Tensor out = a->value;
  for (auto& x : out.v) x *= c;
  return make_op(std::move(out), {a}, [c](const Tensor& gout, const std::vector<Tensor*>& gp) {
    if (gp[0])
      for (std::size_t i = 0; i < gout.size(); ++i) (*gp[0])[i] += c * gout[i];
  });
}

NodePtr add_const(const NodePtr& a, double c) {
  Tensor out = a->value;
  for (auto& x : out.v) x += c;
  return make_op(std::move(out), {a}, [](const Tensor& gout, const std::vector<Tensor*>& gp) {
    if (gp[0]) gp[0]->add_(gout);
  });
}

NodePtr abs(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& x : out.v) x = std::fabs(x);
  return make_op(std::move(out), {a}, [a](const Tensor& gout, const std::vector<Tensor*>& gp) {
    if (!gp[0]) return;
    for (std::size_t i = 0; i < gout.size(); ++i) {
      const double x = a->value[i];
      (*gp[0])[i] += gout[i] * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
    }
  });
}

NodePtr sigmoid(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  Tensor saved = out;
  return make_op(std::move(out), {a},
                 [saved = std::move(saved)](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   for (std::size_t i = 0; i < gout.size(); ++i) {
                     const double y = saved[i];
                     (*gp[0])[i] += gout[i] * y * (1.0 - y);
                   }
                 });
}

NodePtr exp(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& x : out.v) x = std::exp(x);
  Tensor saved = out;
  return make_op(std::move(out), {a},
                 [saved = std::move(saved)](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   for (std::size_t i = 0; i < gout.size(); ++i)
                     (*gp[0])[i] += gout[i] * saved[i];
                 });
}

NodePtr sqrt(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& x : out.v) {
    if (x < 0.0) throw NumericError("sqrt of negative value");
    x = std::sqrt(x);
  }
  Tensor saved = out;
  return make_op(std::move(out), {a},
                 [saved = std::move(saved)](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   for (std::size_t i = 0; i < gout.size(); ++i) {
                     const double y = saved[i];
                     if (y > 0.0) (*gp[0])[i] += gout[i] * 0.5 / y;
                   }
                 });
}

NodePtr sum(const NodePtr& a) {
  double acc = 0.0;
  for (double x : a->value.v) acc += x;
  return make_op(Tensor::scalar(acc), {a},
                 [](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   const double g = gout[0];
                   for (auto& x : gp[0]->v) x += g;
                 });
}

NodePtr mean(const NodePtr& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  return scale(sum(a), inv);
}

NodePtr sum_channels(const NodePtr& a) {
  const Shape& xs = a->shape();
  const int channels = xs[0];
  const std::size_t cvol = spatial_numel(xs);
  std::vector<int> odims = xs.d;
  odims[0] = 1;
  Tensor out{Shape(odims)};
  for (int c = 0; c < channels; ++c) {
    const double* x = a->value.data() + c * cvol;
    for (std::size_t i = 0; i < cvol; ++i) out[i] += x[i];
  }
  return make_op(std::move(out), {a},
                 [channels, cvol](const Tensor& gout, const std::vector<Tensor*>& gp) {
                   if (!gp[0]) return;
                   for (int c = 0; c < channels; ++c) {
                     double* g = gp[0]->data() + c * cvol;
                     for (std::size_t i = 0; i < cvol; ++i) g[i] += gout[i];
                   }
                 });
}

NodePtr detach(const NodePtr& a) { return constant(a->value); }

}  // namespace flint::ag
