// AVX2/FMA kernel variants. Convolution microkernels block 4 output channels
// over 8- or 16-wide row tiles so each loaded input vector feeds several FMAs.
// Elementwise kernels mirror the scalar formulas with mul/add only (no FMA
// contraction), so they match the scalar backend bit for bit.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ynet/kernels.hpp"
#include "ynet/kernels_generic.hpp"

namespace ynet::kernels {

namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

inline double hsum256d(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

void conv_fwd_avx2(const float* xpad, const float* wts, const float* bias,
                   float* out, const ConvShape& s) {
  if (s.w < 8) {
    generic::conv_fwd<float>(xpad, wts, bias, out, s);
    return;
  }
  const int D = s.d, H = s.h, W = s.w;
  const int ph = H + 2, pw = W + 2;
  const size_t xch = size_t(D + 2) * ph * pw;
  const size_t och = size_t(D) * H * W;

  // weights repacked per 4-oc block: wb[ic][kz][ky][kx][j]
  std::vector<float> wb(size_t(s.cin) * 27 * 4);
  for (int oc0 = 0; oc0 < s.cout; oc0 += 4) {
    const int bn = std::min(4, s.cout - oc0);
    for (int ic = 0; ic < s.cin; ++ic)
      for (int k = 0; k < 27; ++k)
        for (int j = 0; j < 4; ++j)
          wb[(size_t(ic) * 27 + k) * 4 + j] =
              j < bn ? wts[(size_t(oc0 + j) * s.cin + ic) * 27 + k] : 0.f;

    __m256 bias4[4];
    for (int j = 0; j < 4; ++j)
      bias4[j] = _mm256_set1_ps(bias && j < bn ? bias[oc0 + j] : 0.f);

    for (int z = 0; z < D; ++z)
      for (int y = 0; y < H; ++y) {
        const size_t row_off = (size_t(z) * H + y) * W;
        int x = 0;
        for (; x + 16 <= W; x += 16) {
          __m256 a0l = bias4[0], a0h = bias4[0], a1l = bias4[1], a1h = bias4[1];
          __m256 a2l = bias4[2], a2h = bias4[2], a3l = bias4[3], a3h = bias4[3];
          for (int ic = 0; ic < s.cin; ++ic) {
            const float* xc = xpad + size_t(ic) * xch;
            const float* wrow = wb.data() + size_t(ic) * 108;
            for (int kz = 0; kz < 3; ++kz)
              for (int ky = 0; ky < 3; ++ky) {
                const float* r = xc + (size_t(z + kz) * ph + (y + ky)) * pw + x;
                const __m256 v00 = _mm256_loadu_ps(r);
                const __m256 v01 = _mm256_loadu_ps(r + 1);
                const __m256 v02 = _mm256_loadu_ps(r + 2);
                const __m256 v10 = _mm256_loadu_ps(r + 8);
                const __m256 v11 = _mm256_loadu_ps(r + 9);
                const __m256 v12 = _mm256_loadu_ps(r + 10);
                const float* wp = wrow + size_t(kz * 3 + ky) * 12;
                __m256 w;
                w = _mm256_set1_ps(wp[0]);
                a0l = _mm256_fmadd_ps(v00, w, a0l); a0h = _mm256_fmadd_ps(v10, w, a0h);
                w = _mm256_set1_ps(wp[4]);
                a0l = _mm256_fmadd_ps(v01, w, a0l); a0h = _mm256_fmadd_ps(v11, w, a0h);
                w = _mm256_set1_ps(wp[8]);
                a0l = _mm256_fmadd_ps(v02, w, a0l); a0h = _mm256_fmadd_ps(v12, w, a0h);
                w = _mm256_set1_ps(wp[1]);
                a1l = _mm256_fmadd_ps(v00, w, a1l); a1h = _mm256_fmadd_ps(v10, w, a1h);
                w = _mm256_set1_ps(wp[5]);
                a1l = _mm256_fmadd_ps(v01, w, a1l); a1h = _mm256_fmadd_ps(v11, w, a1h);
                w = _mm256_set1_ps(wp[9]);
                a1l = _mm256_fmadd_ps(v02, w, a1l); a1h = _mm256_fmadd_ps(v12, w, a1h);
                w = _mm256_set1_ps(wp[2]);
                a2l = _mm256_fmadd_ps(v00, w, a2l); a2h = _mm256_fmadd_ps(v10, w, a2h);
                w = _mm256_set1_ps(wp[6]);
                a2l = _mm256_fmadd_ps(v01, w, a2l); a2h = _mm256_fmadd_ps(v11, w, a2h);
                w = _mm256_set1_ps(wp[10]);
                a2l = _mm256_fmadd_ps(v02, w, a2l); a2h = _mm256_fmadd_ps(v12, w, a2h);
                w = _mm256_set1_ps(wp[3]);
                a3l = _mm256_fmadd_ps(v00, w, a3l); a3h = _mm256_fmadd_ps(v10, w, a3h);
                w = _mm256_set1_ps(wp[7]);
                a3l = _mm256_fmadd_ps(v01, w, a3l); a3h = _mm256_fmadd_ps(v11, w, a3h);
                w = _mm256_set1_ps(wp[11]);
                a3l = _mm256_fmadd_ps(v02, w, a3l); a3h = _mm256_fmadd_ps(v12, w, a3h);
              }
          }
          const __m256 accs[4][2] = {{a0l, a0h}, {a1l, a1h}, {a2l, a2h}, {a3l, a3h}};
          for (int j = 0; j < bn; ++j) {
            float* o = out + size_t(oc0 + j) * och + row_off + x;
            _mm256_storeu_ps(o, accs[j][0]);
            _mm256_storeu_ps(o + 8, accs[j][1]);
          }
        }
        for (; x + 8 <= W; x += 8) {
          __m256 a0 = bias4[0], a1 = bias4[1], a2 = bias4[2], a3 = bias4[3];
          for (int ic = 0; ic < s.cin; ++ic) {
            const float* xc = xpad + size_t(ic) * xch;
            const float* wrow = wb.data() + size_t(ic) * 108;
            for (int kz = 0; kz < 3; ++kz)
              for (int ky = 0; ky < 3; ++ky) {
                const float* r = xc + (size_t(z + kz) * ph + (y + ky)) * pw + x;
                const __m256 v0 = _mm256_loadu_ps(r);
                const __m256 v1 = _mm256_loadu_ps(r + 1);
                const __m256 v2 = _mm256_loadu_ps(r + 2);
                const float* wp = wrow + size_t(kz * 3 + ky) * 12;
                a0 = _mm256_fmadd_ps(v0, _mm256_set1_ps(wp[0]), a0);
                a0 = _mm256_fmadd_ps(v1, _mm256_set1_ps(wp[4]), a0);
                a0 = _mm256_fmadd_ps(v2, _mm256_set1_ps(wp[8]), a0);
                a1 = _mm256_fmadd_ps(v0, _mm256_set1_ps(wp[1]), a1);
                a1 = _mm256_fmadd_ps(v1, _mm256_set1_ps(wp[5]), a1);
                a1 = _mm256_fmadd_ps(v2, _mm256_set1_ps(wp[9]), a1);
                a2 = _mm256_fmadd_ps(v0, _mm256_set1_ps(wp[2]), a2);
                a2 = _mm256_fmadd_ps(v1, _mm256_set1_ps(wp[6]), a2);
                a2 = _mm256_fmadd_ps(v2, _mm256_set1_ps(wp[10]), a2);
                a3 = _mm256_fmadd_ps(v0, _mm256_set1_ps(wp[3]), a3);
                a3 = _mm256_fmadd_ps(v1, _mm256_set1_ps(wp[7]), a3);
                a3 = _mm256_fmadd_ps(v2, _mm256_set1_ps(wp[11]), a3);
              }
          }
          const __m256 accs[4] = {a0, a1, a2, a3};
          for (int j = 0; j < bn; ++j)
            _mm256_storeu_ps(out + size_t(oc0 + j) * och + row_off + x, accs[j]);
        }
        for (; x < W; ++x) {
          for (int j = 0; j < bn; ++j) {
            float acc = bias ? bias[oc0 + j] : 0.f;
            for (int ic = 0; ic < s.cin; ++ic) {
              const float* xc = xpad + size_t(ic) * xch;
              const float* wk = wts + (size_t(oc0 + j) * s.cin + ic) * 27;
              for (int kz = 0; kz < 3; ++kz)
                for (int ky = 0; ky < 3; ++ky)
                  for (int kx = 0; kx < 3; ++kx)
                    acc += wk[(kz * 3 + ky) * 3 + kx] *
                           xc[(size_t(z + kz) * ph + (y + ky)) * pw + x + kx];
            }
            out[size_t(oc0 + j) * och + row_off + x] = acc;
          }
        }
      }
  }
}

void conv_gradw_avx2(const float* xpad, const float* gout, float* gw,
                     float* gbias, const ConvShape& s) {
  if (s.w < 8) {
    generic::conv_gradw<float>(xpad, gout, gw, gbias, s);
    return;
  }
  const int D = s.d, H = s.h, W = s.w;
  const int ph = H + 2, pw = W + 2;
  const size_t xch = size_t(D + 2) * ph * pw;
  const size_t och = size_t(D) * H * W;
  const int wmain = (W / 8) * 8;

  for (int oc = 0; oc < s.cout; ++oc) {
    const float* g = gout + size_t(oc) * och;
    {
      __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
      size_t i = 0;
      for (; i + 8 <= och; i += 8) {
        const __m256 v = _mm256_loadu_ps(g + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
      }
      double bsum = hsum256d(_mm256_add_pd(acc0, acc1));
      for (; i < och; ++i) bsum += double(g[i]);
      gbias[oc] += float(bsum);
    }
    for (int ic = 0; ic < s.cin; ++ic) {
      const float* xc = xpad + size_t(ic) * xch;
      float* wk = gw + (size_t(oc) * s.cin + ic) * 27;
      for (int kz = 0; kz < 3; ++kz) {
        __m256 acc[3][3];
        for (auto& row : acc)
          for (auto& a : row) a = _mm256_setzero_ps();
        double tail[3][3] = {};
        for (int z = 0; z < D; ++z) {
          const float* xpl = xc + size_t(z + kz) * ph * pw;
          const float* gpl = g + size_t(z) * H * W;
          for (int y = 0; y < H; ++y) {
            const float* gr = gpl + size_t(y) * W;
            int x = 0;
            for (; x < wmain; x += 8) {
              const __m256 gv = _mm256_loadu_ps(gr + x);
              for (int ky = 0; ky < 3; ++ky) {
                const float* xr = xpl + size_t(y + ky) * pw + x;
                acc[ky][0] = _mm256_fmadd_ps(gv, _mm256_loadu_ps(xr), acc[ky][0]);
                acc[ky][1] = _mm256_fmadd_ps(gv, _mm256_loadu_ps(xr + 1), acc[ky][1]);
                acc[ky][2] = _mm256_fmadd_ps(gv, _mm256_loadu_ps(xr + 2), acc[ky][2]);
              }
            }
            for (; x < W; ++x) {
              const double gd = double(gr[x]);
              for (int ky = 0; ky < 3; ++ky) {
                const float* xr = xpl + size_t(y + ky) * pw + x;
                tail[ky][0] += gd * double(xr[0]);
                tail[ky][1] += gd * double(xr[1]);
                tail[ky][2] += gd * double(xr[2]);
              }
            }
          }
        }
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            wk[(kz * 3 + ky) * 3 + kx] +=
                float(double(hsum256(acc[ky][kx])) + tail[ky][kx]);
      }
    }
  }
}

void conv1d_axis_avx2(const float* src, float* dst, int nx, int ny, int nz,
                      int axis, const float* k, int radius) {
  const int taps = 2 * radius + 1;
  auto idx = [&](int x, int y, int z) { return (size_t(z) * ny + y) * nx + x; };
  if (axis == 0) {
    std::vector<float> buf(size_t(nx) + 2 * radius);
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y) {
        const float* row = src + idx(0, y, z);
        for (int i = 0; i < radius; ++i) buf[i] = row[0];
        std::copy(row, row + nx, buf.begin() + radius);
        for (int i = 0; i < radius; ++i) buf[size_t(radius) + nx + i] = row[nx - 1];
        float* orow = dst + idx(0, y, z);
        int x = 0;
        for (; x + 8 <= nx; x += 8) {
          __m256 acc = _mm256_setzero_ps();
          for (int t = 0; t < taps; ++t)
            acc = _mm256_fmadd_ps(_mm256_loadu_ps(buf.data() + x + t),
                                  _mm256_set1_ps(k[t]), acc);
          _mm256_storeu_ps(orow + x, acc);
        }
        for (; x < nx; ++x) {
          float acc = 0.f;
          for (int t = 0; t < taps; ++t) acc += k[t] * buf[size_t(x) + t];
          orow[x] = acc;
        }
      }
    return;
  }
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) {
      float* orow = dst + idx(0, y, z);
      std::fill(orow, orow + nx, 0.f);
      for (int t = 0; t < taps; ++t) {
        const float* row;
        if (axis == 1) {
          const int yi = std::clamp(y + t - radius, 0, ny - 1);
          row = src + idx(0, yi, z);
        } else {
          const int zi = std::clamp(z + t - radius, 0, nz - 1);
          row = src + idx(0, y, zi);
        }
        const __m256 kv = _mm256_set1_ps(k[t]);
        int x = 0;
        for (; x + 8 <= nx; x += 8)
          _mm256_storeu_ps(orow + x,
                           _mm256_fmadd_ps(_mm256_loadu_ps(row + x), kv,
                                           _mm256_loadu_ps(orow + x)));
        for (; x < nx; ++x) orow[x] += k[t] * row[x];
      }
    }
}

void relu_fwd_avx2(const float* x, float* y, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.f ? x[i] : 0.f;
}

void relu_bwd_avx2(const float* y, const float* g, float* gx, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(gx + i, _mm256_and_ps(_mm256_loadu_ps(g + i), mask));
  }
  for (; i < n; ++i) gx[i] = y[i] > 0.f ? g[i] : 0.f;
}

void sigmoid_bwd_avx2(const float* y, const float* g, float* gx, size_t n) {
  const __m256 one = _mm256_set1_ps(1.f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 yv = _mm256_loadu_ps(y + i);
    const __m256 gv = _mm256_loadu_ps(g + i);
    _mm256_storeu_ps(gx + i, _mm256_mul_ps(_mm256_mul_ps(gv, yv),
                                           _mm256_sub_ps(one, yv)));
  }
  for (; i < n; ++i) gx[i] = g[i] * y[i] * (1.f - y[i]);
}

void tanh_bwd_avx2(const float* y, const float* g, float* gx, size_t n) {
  const __m256 one = _mm256_set1_ps(1.f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 yv = _mm256_loadu_ps(y + i);
    const __m256 gv = _mm256_loadu_ps(g + i);
    _mm256_storeu_ps(
        gx + i, _mm256_mul_ps(gv, _mm256_sub_ps(one, _mm256_mul_ps(yv, yv))));
  }
  for (; i < n; ++i) gx[i] = g[i] * (1.f - y[i] * y[i]);
}

void adam_step_avx2(float* p, const float* g, float* m, float* v, size_t n,
                    float lr, float beta1, float beta2, float eps,
                    float bc1_inv, float bc2_inv) {
  const __m256 b1 = _mm256_set1_ps(beta1), ob1 = _mm256_set1_ps(1.f - beta1);
  const __m256 b2 = _mm256_set1_ps(beta2), ob2 = _mm256_set1_ps(1.f - beta2);
  const __m256 lrv = _mm256_set1_ps(lr), epsv = _mm256_set1_ps(eps);
  const __m256 c1 = _mm256_set1_ps(bc1_inv), c2 = _mm256_set1_ps(bc2_inv);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_loadu_ps(m + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    mv = _mm256_add_ps(_mm256_mul_ps(b1, mv), _mm256_mul_ps(ob1, gv));
    vv = _mm256_add_ps(_mm256_mul_ps(b2, vv),
                       _mm256_mul_ps(ob2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    const __m256 mh = _mm256_mul_ps(mv, c1);
    const __m256 vh = _mm256_mul_ps(vv, c2);
    const __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vh), epsv);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(lrv, mh), den);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.f - beta2) * (g[i] * g[i]);
    const float mh = m[i] * bc1_inv;
    const float vh = v[i] * bc2_inv;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

double sum_avx2(const float* x, size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double s = hsum256d(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += double(x[i]);
  return s;
}

void sigmoid_fwd_scalar(const float* x, float* y, size_t n) {
  generic::sigmoid_fwd(x, y, n);
}
void tanh_fwd_scalar(const float* x, float* y, size_t n) {
  generic::tanh_fwd(x, y, n);
}
double bce_sum_scalar(const float* p, const float* t, size_t n) {
  return generic::bce_sum(p, t, n);
}
void bce_grad_scalar(const float* p, const float* t, float scale, float* gp,
                     size_t n) {
  generic::bce_grad(p, t, scale, gp, n);
}

}  // namespace

const Backend* avx2_backend() {
  if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")))
    return nullptr;
  static const Backend b{
      "avx2",
      conv_fwd_avx2,
      conv_gradw_avx2,
      conv1d_axis_avx2,
      relu_fwd_avx2,
      relu_bwd_avx2,
      sigmoid_fwd_scalar,  // libm forward keeps backends exactly equal
      tanh_fwd_scalar,
      sigmoid_bwd_avx2,
      tanh_bwd_avx2,
      adam_step_avx2,
      bce_sum_scalar,
      bce_grad_scalar,
      sum_avx2,
  };
  return &b;
}

}  // namespace ynet::kernels
