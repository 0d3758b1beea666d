#pragma once

// Data-parallel inner loops, provided as scalar reference kernels plus an
// AVX2/FMA variant selected at runtime. The two backends are equivalence
// tested against each other; elementwise kernels avoid FMA contraction so
// their results are bit-identical across backends, convolution kernels use
// FMA and agree to float rounding.
//
// Convolutions operate on one sample at a time with a zero-padded input
// buffer of shape (cin, d+2, h+2, w+2); weights are (cout, cin, 3, 3, 3)
// with kx fastest. Reductions accumulate in double in both backends.

#include <cstddef>

namespace ynet::kernels {

struct ConvShape {
  int cin = 0;
  int cout = 0;
  int d = 0, h = 0, w = 0;  // output spatial size (= input, pad 1, stride 1)
};

struct Backend {
  const char* name;

  // out = bias + cross-correlation(xpad, wts)
  void (*conv_fwd)(const float* xpad, const float* wts, const float* bias,
                   float* out, const ConvShape& s);
  // accumulates weight/bias gradients: gw += d(sum(gout*conv))/dw
  void (*conv_gradw)(const float* xpad, const float* gout, float* gw,
                     float* gbias, const ConvShape& s);

  // 1D convolution along one volume axis with clamped edges; kernel has
  // 2*radius+1 taps. src and dst must not alias. axis: 0=x, 1=y, 2=z.
  void (*conv1d_axis)(const float* src, float* dst, int nx, int ny, int nz,
                      int axis, const float* k, int radius);

  void (*relu_fwd)(const float* x, float* y, size_t n);
  void (*relu_bwd_from_y)(const float* y, const float* g, float* gx, size_t n);
  void (*sigmoid_fwd)(const float* x, float* y, size_t n);
  void (*tanh_fwd)(const float* x, float* y, size_t n);
  void (*sigmoid_bwd_from_y)(const float* y, const float* g, float* gx, size_t n);
  void (*tanh_bwd_from_y)(const float* y, const float* g, float* gx, size_t n);

  void (*adam_step)(float* p, const float* g, float* m, float* v, size_t n,
                    float lr, float beta1, float beta2, float eps,
                    float bc1_inv, float bc2_inv);

  // mean-free BCE sum with clamping to [1e-7, 1-1e-7]; caller divides.
  double (*bce_sum)(const float* p, const float* t, size_t n);
  void (*bce_grad)(const float* p, const float* t, float scale, float* gp, size_t n);

  double (*sum)(const float* x, size_t n);
};

const Backend& scalar_backend();
const Backend* avx2_backend();  // nullptr when unsupported at runtime

// avx2 when compiled in, supported by the CPU, and not forced off.
const Backend& active_backend();
void set_force_scalar(bool force);
bool simd_active();

}  // namespace ynet::kernels
