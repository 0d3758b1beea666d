#include "ynet/kernels.hpp"
#include "ynet/kernels_generic.hpp"

namespace ynet::kernels {

namespace {

void conv_fwd_f(const float* xpad, const float* wts, const float* bias,
                float* out, const ConvShape& s) {
  generic::conv_fwd<float>(xpad, wts, bias, out, s);
}

void conv_gradw_f(const float* xpad, const float* gout, float* gw, float* gbias,
                  const ConvShape& s) {
  generic::conv_gradw<float>(xpad, gout, gw, gbias, s);
}

void conv1d_axis_f(const float* src, float* dst, int nx, int ny, int nz,
                   int axis, const float* k, int radius) {
  generic::conv1d_axis<float>(src, dst, nx, ny, nz, axis, k, radius);
}

void relu_fwd_f(const float* x, float* y, size_t n) { generic::relu_fwd(x, y, n); }
void relu_bwd_f(const float* y, const float* g, float* gx, size_t n) {
  generic::relu_bwd_from_y(y, g, gx, n);
}
void sigmoid_fwd_f(const float* x, float* y, size_t n) { generic::sigmoid_fwd(x, y, n); }
void tanh_fwd_f(const float* x, float* y, size_t n) { generic::tanh_fwd(x, y, n); }
void sigmoid_bwd_f(const float* y, const float* g, float* gx, size_t n) {
  generic::sigmoid_bwd_from_y(y, g, gx, n);
}
void tanh_bwd_f(const float* y, const float* g, float* gx, size_t n) {
  generic::tanh_bwd_from_y(y, g, gx, n);
}

void adam_step_f(float* p, const float* g, float* m, float* v, size_t n,
                 float lr, float beta1, float beta2, float eps, float bc1_inv,
                 float bc2_inv) {
  generic::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1_inv, bc2_inv);
}

double bce_sum_f(const float* p, const float* t, size_t n) {
  return generic::bce_sum(p, t, n);
}
void bce_grad_f(const float* p, const float* t, float scale, float* gp, size_t n) {
  generic::bce_grad(p, t, scale, gp, n);
}
double sum_f(const float* x, size_t n) { return generic::sum(x, n); }

}  // namespace

const Backend& scalar_backend() {
  static const Backend b{
      "scalar",       conv_fwd_f,    conv_gradw_f,  conv1d_axis_f, relu_fwd_f,
      relu_bwd_f,     sigmoid_fwd_f, tanh_fwd_f,    sigmoid_bwd_f, tanh_bwd_f,
      adam_step_f,    bce_sum_f,     bce_grad_f,    sum_f,
  };
  return b;
}

}  // namespace ynet::kernels
