#pragma once

// Forward and gradient operations for the patch autoencoder: 3^3 same-padded
// cross-correlation (plus stride-2 and transposed stride-2 variants), 2^3 max
// pooling, nearest-neighbor upsampling, channel concatenation, elementwise
// activations, BCE loss, Xavier init and Adam. Float tensors run through the
// dispatched kernels; double tensors run the generic path and are what the
// finite-difference checks use.

#include <cstdint>
#include <utility>
#include <vector>

#include "ynet/rng.hpp"
#include "ynet/tensor.hpp"

namespace ynet::ops {

template <class T>
struct ConvParams {
  int cout = 0, cin = 0;
  std::vector<T> w;  // (cout, cin, 3, 3, 3), kx fastest
  std::vector<T> b;  // (cout)

  ConvParams() = default;
  ConvParams(int cout_, int cin_)
      : cout(cout_), cin(cin_), w(size_t(cout_) * cin_ * 27, T(0)), b(cout_, T(0)) {}

  size_t param_count() const { return w.size() + b.size(); }
  void set_zero() {
    std::fill(w.begin(), w.end(), T(0));
    std::fill(b.begin(), b.end(), T(0));
  }
};

using ConvParamsF = ConvParams<float>;
using ConvParamsD = ConvParams<double>;

// Same-padding (zeros) cross-correlation, stride 1; output spatial = input.
template <class T>
Tensor5<T> conv3d(const Tensor5<T>& x, const ConvParams<T>& p, int threads = 1);

// Gradients of sum(gout * conv3d(x, p)). Either output may be null.
template <class T>
void conv3d_backward(const Tensor5<T>& x, const ConvParams<T>& p,
                     const Tensor5<T>& gout, Tensor5<T>* gx, ConvParams<T>* gp,
                     int threads = 1);

// Stride-2 downsampling convolution, pad 1; output spatial = ceil(in/2).
template <class T>
Tensor5<T> conv3d_s2(const Tensor5<T>& x, const ConvParams<T>& p);
template <class T>
void conv3d_s2_backward(const Tensor5<T>& x, const ConvParams<T>& p,
                        const Tensor5<T>& gout, Tensor5<T>* gx, ConvParams<T>* gp);

// Transposed stride-2 convolution; output spatial = 2*in. Adjoint of the
// stride-2 convolution above.
template <class T>
Tensor5<T> tconv3d_s2(const Tensor5<T>& x, const ConvParams<T>& p);
template <class T>
void tconv3d_s2_backward(const Tensor5<T>& x, const ConvParams<T>& p,
                         const Tensor5<T>& gout, Tensor5<T>* gx, ConvParams<T>* gp);

// Non-overlapping 2^3 max pooling. argmax stores the in-window winner index
// (dz*4 + dy*2 + dx); ties keep the first in scan order.
template <class T>
struct PoolResult {
  Tensor5<T> y;
  std::vector<uint8_t> argmax;
};
template <class T>
PoolResult<T> maxpool3d(const Tensor5<T>& x);
template <class T>
Tensor5<T> maxpool3d_backward(const Tensor5<T>& gy, const std::vector<uint8_t>& argmax);

// Nearest-neighbor x2 upsampling; backward sums the 8 replicas.
template <class T>
Tensor5<T> upsample3(const Tensor5<T>& x);
template <class T>
Tensor5<T> upsample3_backward(const Tensor5<T>& gy);

template <class T>
Tensor5<T> concat_channels(const Tensor5<T>& a, const Tensor5<T>& b);
template <class T>
std::pair<Tensor5<T>, Tensor5<T>> split_channels(const Tensor5<T>& g, int ca);

enum class Act { ReLU, Tanh, Sigmoid };

template <class T>
Tensor5<T> activation(const Tensor5<T>& x, Act kind);
// Backward from outputs: ReLU gates on y>0 (so ReLU'(0)=0), sigmoid uses
// y(1-y), tanh uses 1-y^2.
template <class T>
Tensor5<T> activation_backward(const Tensor5<T>& y, const Tensor5<T>& g, Act kind);

// Mean over all elements of -[t ln p + (1-t) ln(1-p)], p clamped to
// [1e-7, 1-1e-7].
template <class T>
double bce_loss(const Tensor5<T>& pred, const Tensor5<T>& target);
template <class T>
Tensor5<T> bce_loss_backward(const Tensor5<T>& pred, const Tensor5<T>& target);
// Gradient of scale * sum(bce); lets a batch be processed in chunks while
// keeping the whole-batch mean as the objective.
template <class T>
Tensor5<T> bce_sum_backward(const Tensor5<T>& pred, const Tensor5<T>& target,
                            double scale);

// Uniform on +-sqrt(6/(fan_in+fan_out)) with fan = c*27; biases zero.
template <class T>
void xavier_init(ConvParams<T>& p, Rng& rng);
template <class T>
void normal_init(ConvParams<T>& p, Rng& rng, double stddev);

struct AdamHyper {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Standard bias-corrected Adam on a raw array; step_index starts at 1.
template <class T>
void adam_step_array(T* p, const T* g, T* m, T* v, size_t n, const AdamHyper& h,
                     int64_t step_index);

template <class T>
class Adam {
public:
  Adam() = default;
  Adam(const std::vector<ConvParams<T>>& params, AdamHyper hyper) : hyper_(hyper) {
    for (const auto& l : params) {
      mw_.emplace_back(l.w.size(), T(0));
      vw_.emplace_back(l.w.size(), T(0));
      mb_.emplace_back(l.b.size(), T(0));
      vb_.emplace_back(l.b.size(), T(0));
    }
  }

  void step(std::vector<ConvParams<T>>& params, const std::vector<ConvParams<T>>& grads) {
    require(params.size() == grads.size() && params.size() == mw_.size(),
            Err::ShapeMismatch, "adam: layer count mismatch");
    ++step_;
    for (size_t i = 0; i < params.size(); ++i) {
      require(params[i].w.size() == grads[i].w.size() &&
                  params[i].b.size() == grads[i].b.size(),
              Err::ShapeMismatch, "adam: layer shape mismatch");
      adam_step_array(params[i].w.data(), grads[i].w.data(), mw_[i].data(),
                      vw_[i].data(), params[i].w.size(), hyper_, step_);
      adam_step_array(params[i].b.data(), grads[i].b.data(), mb_[i].data(),
                      vb_[i].data(), params[i].b.size(), hyper_, step_);
    }
  }

  int64_t steps() const { return step_; }
  const AdamHyper& hyper() const { return hyper_; }

private:
  AdamHyper hyper_;
  int64_t step_ = 0;
  std::vector<std::vector<T>> mw_, vw_, mb_, vb_;
};

}  // namespace ynet::ops
