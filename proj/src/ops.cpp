#include "camera/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "camera/kernels.hpp"

namespace camera::ops {
namespace {

void requireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.sameShape(b))
    throw DimensionError(std::string(what) + ": shape mismatch");
}

void requireRank(const Tensor& x, int r, const char* what) {
  if (x.rank() != r)
    throw DimensionError(std::string(what) + ": wrong rank");
}

struct ConvDims {
  int h, w, cin, kh, kw, cout, stride;
  int outH, outW, padY, padX;
  int M, K;
};

ConvDims convDims(const Tensor& input, const Tensor& kernel, int stride,
                  Pad pad) {
  requireRank(input, 3, "conv2d input");
  requireRank(kernel, 4, "conv2d kernel");
  ConvDims d;
  d.h = input.dim(0);
  d.w = input.dim(1);
  d.cin = input.dim(2);
  d.kh = kernel.dim(0);
  d.kw = kernel.dim(1);
  d.cout = kernel.dim(3);
  d.stride = stride;
  if (kernel.dim(2) != d.cin)
    throw DimensionError("conv2d: kernel input channels mismatch");
  if (d.kh % 2 == 0 || d.kw % 2 == 0)
    throw DimensionError("conv2d: kernel extents must be odd");
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (pad == Pad::Valid) {
    if (d.h < d.kh || d.w < d.kw)
      throw DimensionError("conv2d: kernel larger than padded input");
    d.outH = (d.h - d.kh) / stride + 1;
    d.outW = (d.w - d.kw) / stride + 1;
    d.padY = d.padX = 0;
  } else {
    d.outH = (d.h + stride - 1) / stride;
    d.outW = (d.w + stride - 1) / stride;
    d.padY = std::max(0, (d.outH - 1) * stride + d.kh - d.h) / 2;
    d.padX = std::max(0, (d.outW - 1) * stride + d.kw - d.w) / 2;
  }
  d.M = d.outH * d.outW;
  d.K = d.kh * d.kw * d.cin;
  return d;
}

void im2col(const Tensor& input, const ConvDims& d, double* col) {
  const double* in = input.data();
  size_t idx = 0;
  for (int oy = 0; oy < d.outH; ++oy) {
    for (int ox = 0; ox < d.outW; ++ox) {
      const int y0 = oy * d.stride - d.padY;
      const int x0 = ox * d.stride - d.padX;
      for (int ky = 0; ky < d.kh; ++ky) {
        const int iy = y0 + ky;
        if (iy < 0 || iy >= d.h) {
          for (int kx = 0; kx < d.kw; ++kx)
            for (int ci = 0; ci < d.cin; ++ci) col[idx++] = 0.0;
          continue;
        }
        for (int kx = 0; kx < d.kw; ++kx) {
          const int ix = x0 + kx;
          if (ix < 0 || ix >= d.w) {
            for (int ci = 0; ci < d.cin; ++ci) col[idx++] = 0.0;
          } else {
            const double* src =
                in + (static_cast<size_t>(iy) * d.w + ix) * d.cin;
            for (int ci = 0; ci < d.cin; ++ci) col[idx++] = src[ci];
          }
        }
      }
    }
  }
}

void col2imAdd(const double* dcol, const ConvDims& d, Tensor& dInput) {
  double* out = dInput.data();
  size_t idx = 0;
  for (int oy = 0; oy < d.outH; ++oy) {
    for (int ox = 0; ox < d.outW; ++ox) {
      const int y0 = oy * d.stride - d.padY;
      const int x0 = ox * d.stride - d.padX;
      for (int ky = 0; ky < d.kh; ++ky) {
        const int iy = y0 + ky;
        if (iy < 0 || iy >= d.h) {
          idx += static_cast<size_t>(d.kw) * d.cin;
          continue;
        }
        for (int kx = 0; kx < d.kw; ++kx) {
          const int ix = x0 + kx;
          if (ix < 0 || ix >= d.w) {
            idx += d.cin;
          } else {
            double* dst = out + (static_cast<size_t>(iy) * d.w + ix) * d.cin;
            for (int ci = 0; ci < d.cin; ++ci) dst[ci] += dcol[idx++];
          }
        }
      }
    }
  }
}

Var unary(Tape& t, Var x, Tensor y,
          std::function<void(const Tensor& xv, const Tensor& yv,
                             const Tensor& gy, Tensor& gx)>
              back) {
  return t.make(std::move(y), {x.id},
                [x, back](Tape& tt, int self) {
                  if (!tt.needsGrad(x)) return;
                  back(tt.val(x), tt.val(Var{self}), tt.grad(Var{self}),
                       tt.grad(x));
                });
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireSameShape(av, bv, "add");
  Tensor y(av.shape());
  kern::active().add(av.data(), bv.data(), y.data(), y.size());
  return t.make(std::move(y), {a.id, b.id}, [a, b](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(a))
      kern::active().axpy(1.0, g.data(), tt.grad(a).data(), g.size());
    if (tt.needsGrad(b))
      kern::active().axpy(1.0, g.data(), tt.grad(b).data(), g.size());
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireSameShape(av, bv, "sub");
  Tensor y(av.shape());
  kern::active().sub(av.data(), bv.data(), y.data(), y.size());
  return t.make(std::move(y), {a.id, b.id}, [a, b](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(a))
      kern::active().axpy(1.0, g.data(), tt.grad(a).data(), g.size());
    if (tt.needsGrad(b))
      kern::active().axpy(-1.0, g.data(), tt.grad(b).data(), g.size());
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireSameShape(av, bv, "mul");
  Tensor y(av.shape());
  kern::active().mul(av.data(), bv.data(), y.data(), y.size());
  return t.make(std::move(y), {a.id, b.id}, [a, b](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    const size_t n = g.size();
    if (tt.needsGrad(a)) {
      Tensor& ga = tt.grad(a);
      const double* bp = tt.val(b).data();
      for (size_t i = 0; i < n; ++i) ga[i] += g[i] * bp[i];
    }
    if (tt.needsGrad(b)) {
      Tensor& gb = tt.grad(b);
      const double* ap = tt.val(a).data();
      for (size_t i = 0; i < n; ++i) gb[i] += g[i] * ap[i];
    }
  });
}

Var divv(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireSameShape(av, bv, "div");
  Tensor y(av.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = av[i] / bv[i];
  return t.make(std::move(y), {a.id, b.id}, [a, b](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    const Tensor& bvv = tt.val(b);
    const size_t n = g.size();
    if (tt.needsGrad(a)) {
      Tensor& ga = tt.grad(a);
      for (size_t i = 0; i < n; ++i) ga[i] += g[i] / bvv[i];
    }
    if (tt.needsGrad(b)) {
      Tensor& gb = tt.grad(b);
      const Tensor& avv = tt.val(a);
      for (size_t i = 0; i < n; ++i)
        gb[i] -= g[i] * avv[i] / (bvv[i] * bvv[i]);
    }
  });
}

Var affine(Tape& t, Var x, double k, double c) {
  Tensor y(t.val(x).shape());
  const Tensor& xv = t.val(x);
  for (size_t i = 0; i < y.size(); ++i) y[i] = k * xv[i] + c;
  return t.make(std::move(y), {x.id}, [x, k](Tape& tt, int self) {
    if (!tt.needsGrad(x)) return;
    const Tensor& g = tt.grad(Var{self});
    kern::active().axpy(k, g.data(), tt.grad(x).data(), g.size());
  });
}

Var sigmoid(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  return unary(t, x, std::move(y),
               [](const Tensor&, const Tensor& yv, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i)
                   gx[i] += g[i] * yv[i] * (1.0 - yv[i]);
               });
}

Var tanhv(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xv[i]);
  return unary(t, x, std::move(y),
               [](const Tensor&, const Tensor& yv, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i)
                   gx[i] += g[i] * (1.0 - yv[i] * yv[i]);
               });
}

Var relu(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return unary(t, x, std::move(y),
               [](const Tensor& xvv, const Tensor&, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i)
                   if (xvv[i] > 0.0) gx[i] += g[i];
               });
}

Var expv(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::exp(xv[i]);
  return unary(t, x, std::move(y),
               [](const Tensor&, const Tensor& yv, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i];
               });
}

Var logv(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::log(xv[i]);
  return unary(t, x, std::move(y),
               [](const Tensor& xvv, const Tensor&, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xvv[i];
               });
}

Var sqrtv(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::sqrt(xv[i]);
  return unary(t, x, std::move(y),
               [](const Tensor&, const Tensor& yv, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i)
                   gx[i] += g[i] * 0.5 / yv[i];
               });
}

Var clampMin(Tape& t, Var x, double lo) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] < lo ? lo : xv[i];
  return unary(t, x, std::move(y),
               [lo](const Tensor& xvv, const Tensor&, const Tensor& g,
                    Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i)
                   if (xvv[i] > lo) gx[i] += g[i];
               });
}

Var clampRange(Tape& t, Var x, double lo, double hi) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i)
    y[i] = xv[i] < lo ? lo : (xv[i] > hi ? hi : xv[i]);
  return unary(t, x, std::move(y),
               [lo, hi](const Tensor& xvv, const Tensor&, const Tensor& g,
                        Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i)
                   if (xvv[i] > lo && xvv[i] < hi) gx[i] += g[i];
               });
}

Var powc(Tape& t, Var x, double e) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::pow(xv[i], e);
  return unary(t, x, std::move(y),
               [e](const Tensor& xvv, const Tensor&, const Tensor& g,
                   Tensor& gx) {
                 if (e == 0.0) return;
                 for (size_t i = 0; i < g.size(); ++i)
                   gx[i] += g[i] * e * std::pow(xvv[i], e - 1.0);
               });
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireRank(av, 2, "matmul a");
  requireRank(bv, 2, "matmul b");
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) throw DimensionError("matmul: inner extents mismatch");
  Tensor y({m, n});
  kern::active().gemm_nn(av.data(), bv.data(), y.data(), m, k, n);
  return t.make(std::move(y), {a.id, b.id},
                [a, b, m, k, n](Tape& tt, int self) {
                  const Tensor& g = tt.grad(Var{self});
                  if (tt.needsGrad(a)) {
                    // dA += g * B^T, via explicit transpose of B
                    const Tensor& bvv = tt.val(b);
                    Tensor bt({n, k});
                    for (int i = 0; i < k; ++i)
                      for (int j = 0; j < n; ++j) bt.at(j, i) = bvv.at(i, j);
                    kern::active().gemm_nn(g.data(), bt.data(),
                                           tt.grad(a).data(), m, n, k);
                  }
                  if (tt.needsGrad(b)) {
                    kern::active().gemm_tn(tt.val(a).data(), g.data(),
                                           tt.grad(b).data(), m, k, n);
                  }
                });
}

Var linear(Tape& t, Var W, Var x, Var b) {
  const Tensor &wv = t.val(W), &xv = t.val(x);
  requireRank(wv, 2, "linear W");
  requireRank(xv, 1, "linear x");
  const int m = wv.dim(0), n = wv.dim(1);
  if (xv.dim(0) != n) throw DimensionError("linear: input size mismatch");
  Tensor y({m});
  for (int i = 0; i < m; ++i) {
    const double* row = wv.data() + static_cast<size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * xv[j];
    y[i] = s;
  }
  std::vector<int> parents{W.id, x.id};
  if (b.valid()) {
    const Tensor& bv = t.val(b);
    if (bv.size() != static_cast<size_t>(m))
      throw DimensionError("linear: bias size mismatch");
    for (int i = 0; i < m; ++i) y[i] += bv[i];
    parents.push_back(b.id);
  }
  return t.make(std::move(y), std::move(parents),
                [W, x, b, m, n](Tape& tt, int self) {
                  const Tensor& g = tt.grad(Var{self});
                  if (tt.needsGrad(W)) {
                    Tensor& gw = tt.grad(W);
                    const double* xp = tt.val(x).data();
                    for (int i = 0; i < m; ++i)
                      kern::active().axpy(g[i], xp,
                                          gw.data() + static_cast<size_t>(i) * n,
                                          n);
                  }
                  if (tt.needsGrad(x)) {
                    Tensor& gx = tt.grad(x);
                    const double* wp = tt.val(W).data();
                    for (int i = 0; i < m; ++i)
                      kern::active().axpy(g[i], wp + static_cast<size_t>(i) * n,
                                          gx.data(), n);
                  }
                  if (b.valid() && tt.needsGrad(b)) {
                    kern::active().axpy(1.0, g.data(), tt.grad(b).data(),
                                        g.size());
                  }
                });
}

Var conv2d(Tape& t, Var input, Var kernel, int stride, Pad pad) {
  const Tensor &inv = t.val(input), &kv = t.val(kernel);
  const ConvDims d = convDims(inv, kv, stride, pad);
  auto col = std::make_shared<std::vector<double>>(
      static_cast<size_t>(d.M) * d.K);
  im2col(inv, d, col->data());
  Tensor y({d.outH, d.outW, d.cout});
  kern::active().gemm_nn(col->data(), kv.data(), y.data(), d.M, d.K, d.cout);
  return t.make(
      std::move(y), {input.id, kernel.id},
      [input, kernel, d, col](Tape& tt, int self) {
        const Tensor& g = tt.grad(Var{self});
        if (tt.needsGrad(kernel)) {
          kern::active().gemm_tn(col->data(), g.data(),
                                 tt.grad(kernel).data(), d.M, d.K, d.cout);
        }
        if (tt.needsGrad(input)) {
          const Tensor& kvv = tt.val(kernel);
          Tensor kt({d.cout, d.K});
          for (int i = 0; i < d.K; ++i)
            for (int j = 0; j < d.cout; ++j) kt.at(j, i) = kvv[static_cast<size_t>(i) * d.cout + j];
          std::vector<double> dcol(static_cast<size_t>(d.M) * d.K, 0.0);
          kern::active().gemm_nn(g.data(), kt.data(), dcol.data(), d.M,
                                 d.cout, d.K);
          col2imAdd(dcol.data(), d, tt.grad(input));
        }
      });
}

Var addChannelBias(Tape& t, Var x, Var b) {
  const Tensor &xv = t.val(x), &bv = t.val(b);
  requireRank(xv, 3, "addChannelBias x");
  const int c = xv.dim(2);
  if (bv.size() != static_cast<size_t>(c))
    throw DimensionError("addChannelBias: bias size mismatch");
  Tensor y = xv;
  const size_t hw = y.size() / c;
  for (size_t p = 0; p < hw; ++p)
    for (int ch = 0; ch < c; ++ch) y[p * c + ch] += bv[ch];
  return t.make(std::move(y), {x.id, b.id}, [x, b, c](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(x))
      kern::active().axpy(1.0, g.data(), tt.grad(x).data(), g.size());
    if (tt.needsGrad(b)) {
      Tensor& gb = tt.grad(b);
      const size_t hw = g.size() / c;
      for (size_t p = 0; p < hw; ++p)
        for (int ch = 0; ch < c; ++ch) gb[ch] += g[p * c + ch];
    }
  });
}

Var softmaxAll(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.shape());
  double mx = xv[0];
  for (size_t i = 1; i < xv.size(); ++i) mx = std::max(mx, xv[i]);
  double sum = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) {
    y[i] = std::exp(xv[i] - mx);
    sum += y[i];
  }
  for (size_t i = 0; i < y.size(); ++i) y[i] /= sum;
  return unary(t, x, std::move(y),
               [](const Tensor&, const Tensor& yv, const Tensor& g, Tensor& gx) {
                 double s = 0.0;
                 for (size_t i = 0; i < g.size(); ++i) s += g[i] * yv[i];
                 for (size_t i = 0; i < g.size(); ++i)
                   gx[i] += yv[i] * (g[i] - s);
               });
}

Var globalAvgPool(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  requireRank(xv, 3, "globalAvgPool");
  const int c = xv.dim(2);
  const size_t hw = xv.size() / c;
  Tensor y({c});
  for (size_t p = 0; p < hw; ++p)
    for (int ch = 0; ch < c; ++ch) y[ch] += xv[p * c + ch];
  for (int ch = 0; ch < c; ++ch) y[ch] /= static_cast<double>(hw);
  return unary(t, x, std::move(y),
               [c, hw](const Tensor&, const Tensor&, const Tensor& g,
                       Tensor& gx) {
                 const double inv = 1.0 / static_cast<double>(hw);
                 for (size_t p = 0; p < hw; ++p)
                   for (int ch = 0; ch < c; ++ch)
                     gx[p * c + ch] += g[ch] * inv;
               });
}

Var globalMaxPool(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  requireRank(xv, 3, "globalMaxPool");
  const int c = xv.dim(2);
  const size_t hw = xv.size() / c;
  Tensor y({c});
  auto arg = std::make_shared<std::vector<size_t>>(c, 0);
  for (int ch = 0; ch < c; ++ch) y[ch] = xv[ch];
  for (size_t p = 1; p < hw; ++p)
    for (int ch = 0; ch < c; ++ch)
      if (xv[p * c + ch] > y[ch]) {
        y[ch] = xv[p * c + ch];
        (*arg)[ch] = p;
      }
  return t.make(std::move(y), {x.id}, [x, arg, c](Tape& tt, int self) {
    if (!tt.needsGrad(x)) return;
    const Tensor& g = tt.grad(Var{self});
    Tensor& gx = tt.grad(x);
    for (int ch = 0; ch < c; ++ch) gx[(*arg)[ch] * c + ch] += g[ch];
  });
}

Var channelAvgPool(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  requireRank(xv, 3, "channelAvgPool");
  const int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  Tensor y({h, w});
  for (size_t p = 0; p < static_cast<size_t>(h) * w; ++p) {
    double s = 0.0;
    for (int ch = 0; ch < c; ++ch) s += xv[p * c + ch];
    y[p] = s / c;
  }
  return unary(t, x, std::move(y),
               [c](const Tensor&, const Tensor&, const Tensor& g, Tensor& gx) {
                 const double inv = 1.0 / c;
                 for (size_t p = 0; p < g.size(); ++p)
                   for (int ch = 0; ch < c; ++ch)
                     gx[p * c + ch] += g[p] * inv;
               });
}

Var channelMaxPool(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  requireRank(xv, 3, "channelMaxPool");
  const int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  const size_t hw = static_cast<size_t>(h) * w;
  Tensor y({h, w});
  auto arg = std::make_shared<std::vector<int>>(hw, 0);
  for (size_t p = 0; p < hw; ++p) {
    double best = xv[p * c];
    int bi = 0;
    for (int ch = 1; ch < c; ++ch)
      if (xv[p * c + ch] > best) {
        best = xv[p * c + ch];
        bi = ch;
      }
    y[p] = best;
    (*arg)[p] = bi;
  }
  return t.make(std::move(y), {x.id}, [x, arg, c](Tape& tt, int self) {
    if (!tt.needsGrad(x)) return;
    const Tensor& g = tt.grad(Var{self});
    Tensor& gx = tt.grad(x);
    for (size_t p = 0; p < g.size(); ++p) gx[p * c + (*arg)[p]] += g[p];
  });
}

Var concatChannels(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireRank(av, 3, "concatChannels a");
  requireRank(bv, 3, "concatChannels b");
  if (av.dim(0) != bv.dim(0) || av.dim(1) != bv.dim(1))
    throw DimensionError("concatChannels: spatial mismatch");
  const int h = av.dim(0), w = av.dim(1), ca = av.dim(2), cb = bv.dim(2);
  Tensor y({h, w, ca + cb});
  const size_t hw = static_cast<size_t>(h) * w;
  for (size_t p = 0; p < hw; ++p) {
    for (int ch = 0; ch < ca; ++ch) y[p * (ca + cb) + ch] = av[p * ca + ch];
    for (int ch = 0; ch < cb; ++ch)
      y[p * (ca + cb) + ca + ch] = bv[p * cb + ch];
  }
  return t.make(std::move(y), {a.id, b.id},
                [a, b, ca, cb, hw](Tape& tt, int self) {
                  const Tensor& g = tt.grad(Var{self});
                  if (tt.needsGrad(a)) {
                    Tensor& ga = tt.grad(a);
                    for (size_t p = 0; p < hw; ++p)
                      for (int ch = 0; ch < ca; ++ch)
                        ga[p * ca + ch] += g[p * (ca + cb) + ch];
                  }
                  if (tt.needsGrad(b)) {
                    Tensor& gb = tt.grad(b);
                    for (size_t p = 0; p < hw; ++p)
                      for (int ch = 0; ch < cb; ++ch)
                        gb[p * cb + ch] += g[p * (ca + cb) + ca + ch];
                  }
                });
}

Var concatVec(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  const int na = static_cast<int>(av.size()), nb = static_cast<int>(bv.size());
  Tensor y({na + nb});
  for (int i = 0; i < na; ++i) y[i] = av[i];
  for (int i = 0; i < nb; ++i) y[na + i] = bv[i];
  return t.make(std::move(y), {a.id, b.id}, [a, b, na, nb](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(a)) {
      Tensor& ga = tt.grad(a);
      for (int i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (tt.needsGrad(b)) {
      Tensor& gb = tt.grad(b);
      for (int i = 0; i < nb; ++i) gb[i] += g[na + i];
    }
  });
}

Var stackMaps2(Tape& t, Var a, Var b) {
  const Tensor &av = t.val(a), &bv = t.val(b);
  requireSameShape(av, bv, "stackMaps2");
  requireRank(av, 2, "stackMaps2");
  const int h = av.dim(0), w = av.dim(1);
  Tensor y({h, w, 2});
  for (size_t p = 0; p < av.size(); ++p) {
    y[p * 2] = av[p];
    y[p * 2 + 1] = bv[p];
  }
  return t.make(std::move(y), {a.id, b.id}, [a, b](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    const size_t n = g.size() / 2;
    if (tt.needsGrad(a)) {
      Tensor& ga = tt.grad(a);
      for (size_t p = 0; p < n; ++p) ga[p] += g[p * 2];
    }
    if (tt.needsGrad(b)) {
      Tensor& gb = tt.grad(b);
      for (size_t p = 0; p < n; ++p) gb[p] += g[p * 2 + 1];
    }
  });
}

Var mulChannel(Tape& t, Var x, Var v) {
  const Tensor &xv = t.val(x), &vv = t.val(v);
  requireRank(xv, 3, "mulChannel x");
  const int c = xv.dim(2);
  if (vv.size() != static_cast<size_t>(c))
    throw DimensionError("mulChannel: channel vector size mismatch");
  Tensor y(xv.shape());
  const size_t hw = xv.size() / c;
  for (size_t p = 0; p < hw; ++p)
    for (int ch = 0; ch < c; ++ch) y[p * c + ch] = xv[p * c + ch] * vv[ch];
  return t.make(std::move(y), {x.id, v.id}, [x, v, c, hw](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(x)) {
      Tensor& gx = tt.grad(x);
      const Tensor& vvv = tt.val(v);
      for (size_t p = 0; p < hw; ++p)
        for (int ch = 0; ch < c; ++ch)
          gx[p * c + ch] += g[p * c + ch] * vvv[ch];
    }
    if (tt.needsGrad(v)) {
      Tensor& gv = tt.grad(v);
      const Tensor& xvv = tt.val(x);
      for (size_t p = 0; p < hw; ++p)
        for (int ch = 0; ch < c; ++ch)
          gv[ch] += g[p * c + ch] * xvv[p * c + ch];
    }
  });
}

Var mulSpatial(Tape& t, Var x, Var m) {
  const Tensor &xv = t.val(x), &mv = t.val(m);
  requireRank(xv, 3, "mulSpatial x");
  const int c = xv.dim(2);
  const size_t hw = xv.size() / c;
  if (mv.size() != hw)
    throw DimensionError("mulSpatial: map size mismatch");
  Tensor y(xv.shape());
  for (size_t p = 0; p < hw; ++p)
    for (int ch = 0; ch < c; ++ch) y[p * c + ch] = xv[p * c + ch] * mv[p];
  return t.make(std::move(y), {x.id, m.id}, [x, m, c, hw](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(x)) {
      Tensor& gx = tt.grad(x);
      const Tensor& mvv = tt.val(m);
      for (size_t p = 0; p < hw; ++p)
        for (int ch = 0; ch < c; ++ch) gx[p * c + ch] += g[p * c + ch] * mvv[p];
    }
    if (tt.needsGrad(m)) {
      Tensor& gm = tt.grad(m);
      const Tensor& xvv = tt.val(x);
      for (size_t p = 0; p < hw; ++p) {
        double s = 0.0;
        for (int ch = 0; ch < c; ++ch) s += g[p * c + ch] * xvv[p * c + ch];
        gm[p] += s;
      }
    }
  });
}

Var channelSum(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  requireRank(xv, 3, "channelSum");
  const int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  Tensor y({h, w});
  for (size_t p = 0; p < y.size(); ++p) {
    double s = 0.0;
    for (int ch = 0; ch < c; ++ch) s += xv[p * c + ch];
    y[p] = s;
  }
  return unary(t, x, std::move(y),
               [c](const Tensor&, const Tensor&, const Tensor& g, Tensor& gx) {
                 for (size_t p = 0; p < g.size(); ++p)
                   for (int ch = 0; ch < c; ++ch) gx[p * c + ch] += g[p];
               });
}

Var broadcastChannelTo(Tape& t, Var v, int h, int w) {
  const Tensor& vv = t.val(v);
  requireRank(vv, 1, "broadcastChannelTo");
  const int c = vv.dim(0);
  Tensor y({h, w, c});
  const size_t hw = static_cast<size_t>(h) * w;
  for (size_t p = 0; p < hw; ++p)
    for (int ch = 0; ch < c; ++ch) y[p * c + ch] = vv[ch];
  return unary(t, v, std::move(y),
               [c, hw](const Tensor&, const Tensor&, const Tensor& g,
                       Tensor& gx) {
                 for (size_t p = 0; p < hw; ++p)
                   for (int ch = 0; ch < c; ++ch) gx[ch] += g[p * c + ch];
               });
}

Var upsampleNearest(Tape& t, Var x, int H, int W) {
  const Tensor& xv = t.val(x);
  requireRank(xv, 3, "upsampleNearest");
  const int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  if (H < h || W < w || H % h != 0 || W % w != 0)
    throw DimensionError("upsampleNearest: non-integer scale");
  const int sy = H / h, sx = W / w;
  Tensor y({H, W, c});
  for (int Y = 0; Y < H; ++Y)
    for (int X = 0; X < W; ++X)
      for (int ch = 0; ch < c; ++ch) y.at(Y, X, ch) = xv.at(Y / sy, X / sx, ch);
  return unary(t, x, std::move(y),
               [h, w, c, sy, sx, H, W](const Tensor&, const Tensor&,
                                       const Tensor& g, Tensor& gx) {
                 (void)h;
                 (void)w;
                 for (int Y = 0; Y < H; ++Y)
                   for (int X = 0; X < W; ++X)
                     for (int ch = 0; ch < c; ++ch)
                       gx[(static_cast<size_t>(Y / sy) * w + X / sx) * c + ch] +=
                           g[(static_cast<size_t>(Y) * W + X) * c + ch];
               });
}

Var sumAll(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  double s = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) s += xv[i];
  return unary(t, x, Tensor::scalar(s),
               [](const Tensor&, const Tensor&, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
               });
}

Var meanAll(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  double s = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) s += xv[i];
  const double n = static_cast<double>(xv.size());
  return unary(t, x, Tensor::scalar(s / n),
               [n](const Tensor&, const Tensor&, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] / n;
               });
}

Var pick(Tape& t, Var x, int i) {
  const Tensor& xv = t.val(x);
  if (i < 0 || static_cast<size_t>(i) >= xv.size())
    throw DimensionError("pick: index out of range");
  return unary(t, x, Tensor::scalar(xv[static_cast<size_t>(i)]),
               [i](const Tensor&, const Tensor&, const Tensor& g, Tensor& gx) {
                 gx[static_cast<size_t>(i)] += g[0];
               });
}

Var scaleVar(Tape& t, Var x, Var s) {
  const Tensor &xv = t.val(x), &sv = t.val(s);
  if (sv.size() != 1) throw DimensionError("scaleVar: scale must be scalar");
  Tensor y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * sv[0];
  return t.make(std::move(y), {x.id, s.id}, [x, s](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    if (tt.needsGrad(x))
      kern::active().axpy(tt.val(s)[0], g.data(), tt.grad(x).data(), g.size());
    if (tt.needsGrad(s)) {
      const Tensor& xvv = tt.val(x);
      double acc = 0.0;
      for (size_t i = 0; i < g.size(); ++i) acc += g[i] * xvv[i];
      tt.grad(s)[0] += acc;
    }
  });
}

Var stackScalars(Tape& t, const std::vector<Var>& xs) {
  const int n = static_cast<int>(xs.size());
  if (n == 0) throw InputError("stackScalars: empty input");
  Tensor y({n});
  std::vector<int> parents(xs.size());
  for (int i = 0; i < n; ++i) {
    const Tensor& xv = t.val(xs[static_cast<size_t>(i)]);
    if (xv.size() != 1)
      throw DimensionError("stackScalars: inputs must be scalars");
    y[static_cast<size_t>(i)] = xv[0];
    parents[static_cast<size_t>(i)] = xs[static_cast<size_t>(i)].id;
  }
  auto vars = std::make_shared<std::vector<Var>>(xs);
  return t.make(std::move(y), std::move(parents), [vars](Tape& tt, int self) {
    const Tensor& g = tt.grad(Var{self});
    for (size_t i = 0; i < vars->size(); ++i)
      if (tt.needsGrad((*vars)[i])) tt.grad((*vars)[i])[0] += g[i];
  });
}

Var diffv(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  if (xv.size() < 2) throw InputError("diffv: need at least two entries");
  const int n = static_cast<int>(xv.size()) - 1;
  Tensor y({n});
  for (int i = 0; i < n; ++i)
    y[static_cast<size_t>(i)] = xv[static_cast<size_t>(i) + 1] - xv[static_cast<size_t>(i)];
  return unary(t, x, std::move(y),
               [](const Tensor&, const Tensor&, const Tensor& g, Tensor& gx) {
                 for (size_t i = 0; i < g.size(); ++i) {
                   gx[i + 1] += g[i];
                   gx[i] -= g[i];
                 }
               });
}

Var embedMeanPool(Tape& t, Var table, const std::vector<int>& tokens,
                  int padId) {
  const Tensor& tv = t.val(table);
  requireRank(tv, 2, "embedMeanPool table");
  const int V = tv.dim(0), c = tv.dim(1);
  auto ids = std::make_shared<std::vector<int>>();
  for (int id : tokens) {
    if (id < 0 || id >= V)
      throw InputError("embedMeanPool: token id out of range");
    if (id != padId) ids->push_back(id);
  }
  Tensor y({c});
  if (!ids->empty()) {
    for (int id : *ids)
      for (int ch = 0; ch < c; ++ch)
        y[ch] += tv[static_cast<size_t>(id) * c + ch];
    for (int ch = 0; ch < c; ++ch) y[ch] /= static_cast<double>(ids->size());
  }
  return t.make(std::move(y), {table.id}, [table, ids, c](Tape& tt, int self) {
    if (!tt.needsGrad(table) || ids->empty()) return;
    const Tensor& g = tt.grad(Var{self});
    Tensor& gt = tt.grad(table);
    const double inv = 1.0 / static_cast<double>(ids->size());
    for (int id : *ids)
      for (int ch = 0; ch < c; ++ch)
        gt[static_cast<size_t>(id) * c + ch] += g[static_cast<size_t>(ch)] * inv;
  });
}

Tensor conv2dShapeProbe(const Tensor& input, const Tensor& kernel, int stride,
                        Pad pad) {
  const ConvDims d = convDims(input, kernel, stride, pad);
  return Tensor({d.outH, d.outW, d.cout});
}

}  // namespace camera::ops
