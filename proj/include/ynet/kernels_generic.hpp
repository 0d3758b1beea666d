#pragma once

// Generic kernel templates. Instantiated with T=float they form the scalar
// backend; with T=double they serve the gradient-check path, where every op
// must run in 64-bit.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ynet/kernels.hpp"

namespace ynet::kernels::generic {

template <class T>
void conv_fwd(const T* xpad, const T* wts, const T* bias, T* out, const ConvShape& s) {
  const int D = s.d, H = s.h, W = s.w;
  const int ph = H + 2, pw = W + 2;
  const size_t xch = size_t(D + 2) * ph * pw;
  const size_t och = size_t(D) * H * W;
  for (int oc = 0; oc < s.cout; ++oc) {
    T* o = out + size_t(oc) * och;
    const T bv = bias ? bias[oc] : T(0);
    std::fill(o, o + och, bv);
    for (int ic = 0; ic < s.cin; ++ic) {
      const T* xc = xpad + size_t(ic) * xch;
      const T* wk = wts + (size_t(oc) * s.cin + ic) * 27;
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const T wv = wk[(kz * 3 + ky) * 3 + kx];
            for (int z = 0; z < D; ++z) {
              const T* xp = xc + size_t(z + kz) * ph * pw;
              T* op = o + size_t(z) * H * W;
              for (int y = 0; y < H; ++y) {
                const T* xr = xp + size_t(y + ky) * pw + kx;
                T* orow = op + size_t(y) * W;
                for (int x = 0; x < W; ++x) orow[x] += wv * xr[x];
              }
            }
          }
    }
  }
}

template <class T>
void conv_gradw(const T* xpad, const T* gout, T* gw, T* gbias, const ConvShape& s) {
  const int D = s.d, H = s.h, W = s.w;
  const int ph = H + 2, pw = W + 2;
  const size_t xch = size_t(D + 2) * ph * pw;
  const size_t och = size_t(D) * H * W;
  for (int oc = 0; oc < s.cout; ++oc) {
    const T* g = gout + size_t(oc) * och;
    double bsum = 0.0;
    for (size_t i = 0; i < och; ++i) bsum += double(g[i]);
    gbias[oc] += T(bsum);
    for (int ic = 0; ic < s.cin; ++ic) {
      const T* xc = xpad + size_t(ic) * xch;
      T* wk = gw + (size_t(oc) * s.cin + ic) * 27;
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            double acc = 0.0;
            for (int z = 0; z < D; ++z) {
              const T* xp = xc + size_t(z + kz) * ph * pw;
              const T* gp = g + size_t(z) * H * W;
              for (int y = 0; y < H; ++y) {
                const T* xr = xp + size_t(y + ky) * pw + kx;
                const T* gr = gp + size_t(y) * W;
                for (int x = 0; x < W; ++x) acc += double(gr[x]) * double(xr[x]);
              }
            }
            wk[(kz * 3 + ky) * 3 + kx] += T(acc);
          }
    }
  }
}

template <class T>
void conv1d_axis(const T* src, T* dst, int nx, int ny, int nz, int axis,
                 const T* k, int radius) {
  const int taps = 2 * radius + 1;
  auto idx = [&](int x, int y, int z) { return (size_t(z) * ny + y) * nx + x; };
  if (axis == 0) {
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y) {
        const T* row = src + idx(0, y, z);
        T* orow = dst + idx(0, y, z);
        for (int x = 0; x < nx; ++x) {
          T acc = T(0);
          for (int t = 0; t < taps; ++t) {
            const int xi = std::clamp(x + t - radius, 0, nx - 1);
            acc += k[t] * row[xi];
          }
          orow[x] = acc;
        }
      }
  } else if (axis == 1) {
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y) {
        T* orow = dst + idx(0, y, z);
        for (int x = 0; x < nx; ++x) orow[x] = T(0);
        for (int t = 0; t < taps; ++t) {
          const int yi = std::clamp(y + t - radius, 0, ny - 1);
          const T* row = src + idx(0, yi, z);
          const T kv = k[t];
          for (int x = 0; x < nx; ++x) orow[x] += kv * row[x];
        }
      }
  } else {
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y) {
        T* orow = dst + idx(0, y, z);
        for (int x = 0; x < nx; ++x) orow[x] = T(0);
        for (int t = 0; t < taps; ++t) {
          const int zi = std::clamp(z + t - radius, 0, nz - 1);
          const T* row = src + idx(0, y, zi);
          const T kv = k[t];
          for (int x = 0; x < nx; ++x) orow[x] += kv * row[x];
        }
      }
  }
}

template <class T>
void relu_fwd(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

// ReLU'(0) is 0: y==0 wherever x<=0, so gating on y>0 matches.
template <class T>
void relu_bwd_from_y(const T* y, const T* g, T* gx, size_t n) {
  for (size_t i = 0; i < n; ++i) gx[i] = y[i] > T(0) ? g[i] : T(0);
}

template <class T>
void sigmoid_fwd(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <class T>
void tanh_fwd(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

template <class T>
void sigmoid_bwd_from_y(const T* y, const T* g, T* gx, size_t n) {
  for (size_t i = 0; i < n; ++i) gx[i] = g[i] * y[i] * (T(1) - y[i]);
}

template <class T>
void tanh_bwd_from_y(const T* y, const T* g, T* gx, size_t n) {
  for (size_t i = 0; i < n; ++i) gx[i] = g[i] * (T(1) - y[i] * y[i]);
}

template <class T>
void adam_step(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2,
               T eps, T bc1_inv, T bc2_inv) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * (g[i] * g[i]);
    const T mh = m[i] * bc1_inv;
    const T vh = v[i] * bc2_inv;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

constexpr double kBceEps = 1e-7;

template <class T>
double bce_sum(const T* p, const T* t, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(double(p[i]), kBceEps, 1.0 - kBceEps);
    acc -= double(t[i]) * std::log(pc) + (1.0 - double(t[i])) * std::log(1.0 - pc);
  }
  return acc;
}

// Gradient of scale * sum(bce); zero where the clamp is active, matching the
// clamped forward.
template <class T>
void bce_grad(const T* p, const T* t, T scale, T* gp, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double pv = double(p[i]);
    if (pv < kBceEps || pv > 1.0 - kBceEps) {
      gp[i] = T(0);
      continue;
    }
    gp[i] = T(double(scale) * (-double(t[i]) / pv + (1.0 - double(t[i])) / (1.0 - pv)));
  }
}

template <class T>
double sum(const T* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += double(x[i]);
  return acc;
}

}  // namespace ynet::kernels::generic
