#include "ynet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ynet/kernels.hpp"
#include "ynet/kernels_generic.hpp"
#include "ynet/parallel.hpp"

namespace ynet::ops {

namespace {

template <class T>
void pad_sample(const T* x, T* xpad, int c, int d, int h, int w) {
  const int pd = d + 2, ph = h + 2, pw = w + 2;
  std::fill(xpad, xpad + size_t(c) * pd * ph * pw, T(0));
  for (int ic = 0; ic < c; ++ic)
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; ++y) {
        const T* src = x + ((size_t(ic) * d + z) * h + y) * w;
        T* dst = xpad + ((size_t(ic) * pd + z + 1) * ph + y + 1) * pw + 1;
        std::copy(src, src + w, dst);
      }
}

template <class T>
void conv_fwd_dispatch(const T* xpad, const T* wts, const T* bias, T* out,
                       const kernels::ConvShape& s) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active_backend().conv_fwd(xpad, wts, bias, out, s);
  } else {
    kernels::generic::conv_fwd<T>(xpad, wts, bias, out, s);
  }
}

template <class T>
void conv_gradw_dispatch(const T* xpad, const T* gout, T* gw, T* gbias,
                         const kernels::ConvShape& s) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active_backend().conv_gradw(xpad, gout, gw, gbias, s);
  } else {
    kernels::generic::conv_gradw<T>(xpad, gout, gw, gbias, s);
  }
}

template <class T>
void check_conv_input(const Tensor5<T>& x, const ConvParams<T>& p) {
  require(x.c == p.cin, Err::ShapeMismatch, "conv3d: channel mismatch");
  require(x.d >= 1 && x.h >= 1 && x.w >= 1, Err::ShapeMismatch,
          "conv3d: empty spatial dims");
  require(p.w.size() == size_t(p.cout) * p.cin * 27 && p.b.size() == size_t(p.cout),
          Err::ShapeMismatch, "conv3d: bad parameter array sizes");
}

// Channel-transposed, spatially flipped weights: backward-data is a forward
// convolution of the padded output gradient with these.
template <class T>
std::vector<T> flip_transpose_weights(const ConvParams<T>& p) {
  std::vector<T> wt(p.w.size());
  for (int oc = 0; oc < p.cout; ++oc)
    for (int ic = 0; ic < p.cin; ++ic)
      for (int k = 0; k < 27; ++k)
        wt[(size_t(ic) * p.cout + oc) * 27 + (26 - k)] =
            p.w[(size_t(oc) * p.cin + ic) * 27 + k];
  return wt;
}

}  // namespace

template <class T>
Tensor5<T> conv3d(const Tensor5<T>& x, const ConvParams<T>& p, int threads) {
  check_conv_input(x, p);
  Tensor5<T> out(x.n, p.cout, x.d, x.h, x.w);
  const kernels::ConvShape s{p.cin, p.cout, x.d, x.h, x.w};
  const size_t padsz = size_t(x.c) * (x.d + 2) * (x.h + 2) * (x.w + 2);
  parallel_for(x.n, threads, [&](int n) {
    std::vector<T> xpad(padsz);
    pad_sample(x.sample(n), xpad.data(), x.c, x.d, x.h, x.w);
    conv_fwd_dispatch(xpad.data(), p.w.data(), p.b.data(), out.sample(n), s);
  });
  return out;
}

template <class T>
void conv3d_backward(const Tensor5<T>& x, const ConvParams<T>& p,
                     const Tensor5<T>& gout, Tensor5<T>* gx, ConvParams<T>* gp,
                     int threads) {
  check_conv_input(x, p);
  require(gout.n == x.n && gout.c == p.cout && gout.d == x.d && gout.h == x.h &&
              gout.w == x.w,
          Err::ShapeMismatch, "conv3d_backward: gout shape");

  if (gx) {
    *gx = Tensor5<T>(x.n, x.c, x.d, x.h, x.w);
    const std::vector<T> wt = flip_transpose_weights(p);
    const kernels::ConvShape s{p.cout, p.cin, x.d, x.h, x.w};
    const size_t padsz = size_t(p.cout) * (x.d + 2) * (x.h + 2) * (x.w + 2);
    parallel_for(x.n, threads, [&](int n) {
      std::vector<T> gpad(padsz);
      pad_sample(gout.sample(n), gpad.data(), p.cout, x.d, x.h, x.w);
      conv_fwd_dispatch(gpad.data(), wt.data(), (const T*)nullptr, gx->sample(n), s);
    });
  }

  if (gp) {
    *gp = ConvParams<T>(p.cout, p.cin);
    const kernels::ConvShape s{p.cin, p.cout, x.d, x.h, x.w};
    const size_t padsz = size_t(x.c) * (x.d + 2) * (x.h + 2) * (x.w + 2);
    const int nshards = std::max(1, std::min(threads, x.n));
    const int chunk = (x.n + nshards - 1) / nshards;
    std::vector<ConvParams<T>> shard(nshards);
    parallel_for(nshards, threads, [&](int si) {
      shard[si] = ConvParams<T>(p.cout, p.cin);
      std::vector<T> xpad(padsz);
      const int lo = si * chunk, hi = std::min(x.n, lo + chunk);
      for (int n = lo; n < hi; ++n) {
        pad_sample(x.sample(n), xpad.data(), x.c, x.d, x.h, x.w);
        conv_gradw_dispatch(xpad.data(), gout.sample(n), shard[si].w.data(),
                            shard[si].b.data(), s);
      }
    });
    for (int si = 0; si < nshards; ++si) {
      for (size_t i = 0; i < gp->w.size(); ++i) gp->w[i] += shard[si].w[i];
      for (size_t i = 0; i < gp->b.size(); ++i) gp->b[i] += shard[si].b[i];
    }
  }
}

template <class T>
Tensor5<T> conv3d_s2(const Tensor5<T>& x, const ConvParams<T>& p) {
  check_conv_input(x, p);
  const int od = (x.d + 1) / 2, oh = (x.h + 1) / 2, ow = (x.w + 1) / 2;
  Tensor5<T> out(x.n, p.cout, od, oh, ow);
  for (int n = 0; n < x.n; ++n)
    for (int oc = 0; oc < p.cout; ++oc)
      for (int oz = 0; oz < od; ++oz)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            T acc = p.b[oc];
            for (int ic = 0; ic < p.cin; ++ic) {
              const T* wk = p.w.data() + (size_t(oc) * p.cin + ic) * 27;
              for (int kz = 0; kz < 3; ++kz) {
                const int z = 2 * oz + kz - 1;
                if (z < 0 || z >= x.d) continue;
                for (int ky = 0; ky < 3; ++ky) {
                  const int y = 2 * oy + ky - 1;
                  if (y < 0 || y >= x.h) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    const int xx = 2 * ox + kx - 1;
                    if (xx < 0 || xx >= x.w) continue;
                    acc += wk[(kz * 3 + ky) * 3 + kx] * x.at(n, ic, z, y, xx);
                  }
                }
              }
            }
            out.at(n, oc, oz, oy, ox) = acc;
          }
  return out;
}

template <class T>
void conv3d_s2_backward(const Tensor5<T>& x, const ConvParams<T>& p,
                        const Tensor5<T>& gout, Tensor5<T>* gx, ConvParams<T>* gp) {
  check_conv_input(x, p);
  const int od = (x.d + 1) / 2, oh = (x.h + 1) / 2, ow = (x.w + 1) / 2;
  require(gout.n == x.n && gout.c == p.cout && gout.d == od && gout.h == oh &&
              gout.w == ow,
          Err::ShapeMismatch, "conv3d_s2_backward: gout shape");
  if (gx) *gx = Tensor5<T>(x.n, x.c, x.d, x.h, x.w);
  if (gp) *gp = ConvParams<T>(p.cout, p.cin);
  for (int n = 0; n < x.n; ++n)
    for (int oc = 0; oc < p.cout; ++oc)
      for (int oz = 0; oz < od; ++oz)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const T g = gout.at(n, oc, oz, oy, ox);
            if (gp) gp->b[oc] += g;
            for (int ic = 0; ic < p.cin; ++ic) {
              const T* wk = p.w.data() + (size_t(oc) * p.cin + ic) * 27;
              T* gwk = gp ? gp->w.data() + (size_t(oc) * p.cin + ic) * 27 : nullptr;
              for (int kz = 0; kz < 3; ++kz) {
                const int z = 2 * oz + kz - 1;
                if (z < 0 || z >= x.d) continue;
                for (int ky = 0; ky < 3; ++ky) {
                  const int y = 2 * oy + ky - 1;
                  if (y < 0 || y >= x.h) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    const int xx = 2 * ox + kx - 1;
                    if (xx < 0 || xx >= x.w) continue;
                    if (gx) gx->at(n, ic, z, y, xx) += wk[(kz * 3 + ky) * 3 + kx] * g;
                    if (gwk) gwk[(kz * 3 + ky) * 3 + kx] += g * x.at(n, ic, z, y, xx);
                  }
                }
              }
            }
          }
}

template <class T>
Tensor5<T> tconv3d_s2(const Tensor5<T>& x, const ConvParams<T>& p) {
  check_conv_input(x, p);
  Tensor5<T> out(x.n, p.cout, 2 * x.d, 2 * x.h, 2 * x.w);
  for (int n = 0; n < x.n; ++n) {
    for (int oc = 0; oc < p.cout; ++oc) {
      T* o = out.channel(n, oc);
      std::fill(o, o + out.spatial(), p.b[oc]);
    }
    for (int ic = 0; ic < p.cin; ++ic)
      for (int z = 0; z < x.d; ++z)
        for (int y = 0; y < x.h; ++y)
          for (int xx = 0; xx < x.w; ++xx) {
            const T v = x.at(n, ic, z, y, xx);
            for (int oc = 0; oc < p.cout; ++oc) {
              const T* wk = p.w.data() + (size_t(oc) * p.cin + ic) * 27;
              for (int kz = 0; kz < 3; ++kz) {
                const int qz = 2 * z + kz - 1;
                if (qz < 0 || qz >= out.d) continue;
                for (int ky = 0; ky < 3; ++ky) {
                  const int qy = 2 * y + ky - 1;
                  if (qy < 0 || qy >= out.h) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    const int qx = 2 * xx + kx - 1;
                    if (qx < 0 || qx >= out.w) continue;
                    out.at(n, oc, qz, qy, qx) += wk[(kz * 3 + ky) * 3 + kx] * v;
                  }
                }
              }
            }
          }
  }
  return out;
}

template <class T>
void tconv3d_s2_backward(const Tensor5<T>& x, const ConvParams<T>& p,
                         const Tensor5<T>& gout, Tensor5<T>* gx, ConvParams<T>* gp) {
  check_conv_input(x, p);
  require(gout.n == x.n && gout.c == p.cout && gout.d == 2 * x.d &&
              gout.h == 2 * x.h && gout.w == 2 * x.w,
          Err::ShapeMismatch, "tconv3d_s2_backward: gout shape");
  if (gx) *gx = Tensor5<T>(x.n, x.c, x.d, x.h, x.w);
  if (gp) {
    *gp = ConvParams<T>(p.cout, p.cin);
    for (int n = 0; n < gout.n; ++n)
      for (int oc = 0; oc < p.cout; ++oc) {
        const T* g = gout.channel(n, oc);
        T acc = T(0);
        for (size_t i = 0; i < gout.spatial(); ++i) acc += g[i];
        gp->b[oc] += acc;
      }
  }
  for (int n = 0; n < x.n; ++n)
    for (int ic = 0; ic < p.cin; ++ic)
      for (int z = 0; z < x.d; ++z)
        for (int y = 0; y < x.h; ++y)
          for (int xx = 0; xx < x.w; ++xx) {
            const T v = x.at(n, ic, z, y, xx);
            T gacc = T(0);
            for (int oc = 0; oc < p.cout; ++oc) {
              const T* wk = p.w.data() + (size_t(oc) * p.cin + ic) * 27;
              T* gwk = gp ? gp->w.data() + (size_t(oc) * p.cin + ic) * 27 : nullptr;
              for (int kz = 0; kz < 3; ++kz) {
                const int qz = 2 * z + kz - 1;
                if (qz < 0 || qz >= gout.d) continue;
                for (int ky = 0; ky < 3; ++ky) {
                  const int qy = 2 * y + ky - 1;
                  if (qy < 0 || qy >= gout.h) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    const int qx = 2 * xx + kx - 1;
                    if (qx < 0 || qx >= gout.w) continue;
                    const T g = gout.at(n, oc, qz, qy, qx);
                    gacc += wk[(kz * 3 + ky) * 3 + kx] * g;
                    if (gwk) gwk[(kz * 3 + ky) * 3 + kx] += g * v;
                  }
                }
              }
            }
            if (gx) gx->at(n, ic, z, y, xx) = gacc;
          }
}

template <class T>
PoolResult<T> maxpool3d(const Tensor5<T>& x) {
  require(x.d % 2 == 0 && x.h % 2 == 0 && x.w % 2 == 0, Err::OddSpatialDim,
          "maxpool3d: spatial dims must be even");
  PoolResult<T> r;
  r.y = Tensor5<T>(x.n, x.c, x.d / 2, x.h / 2, x.w / 2);
  r.argmax.resize(r.y.size());
  size_t oi = 0;
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int oz = 0; oz < r.y.d; ++oz)
        for (int oy = 0; oy < r.y.h; ++oy)
          for (int ox = 0; ox < r.y.w; ++ox, ++oi) {
            T best = x.at(n, c, 2 * oz, 2 * oy, 2 * ox);
            uint8_t code = 0;
            for (int dz = 0; dz < 2; ++dz)
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                  const T v = x.at(n, c, 2 * oz + dz, 2 * oy + dy, 2 * ox + dx);
                  const uint8_t k = uint8_t(dz * 4 + dy * 2 + dx);
                  if (v > best) {
                    best = v;
                    code = k;
                  }
                }
            r.y.data[oi] = best;
            r.argmax[oi] = code;
          }
  return r;
}

template <class T>
Tensor5<T> maxpool3d_backward(const Tensor5<T>& gy, const std::vector<uint8_t>& argmax) {
  require(argmax.size() == gy.size(), Err::ShapeMismatch, "maxpool3d_backward: argmax size");
  Tensor5<T> gx(gy.n, gy.c, 2 * gy.d, 2 * gy.h, 2 * gy.w);
  size_t oi = 0;
  for (int n = 0; n < gy.n; ++n)
    for (int c = 0; c < gy.c; ++c)
      for (int oz = 0; oz < gy.d; ++oz)
        for (int oy = 0; oy < gy.h; ++oy)
          for (int ox = 0; ox < gy.w; ++ox, ++oi) {
            const uint8_t code = argmax[oi];
            gx.at(n, c, 2 * oz + code / 4, 2 * oy + (code / 2) % 2,
                  2 * ox + code % 2) = gy.data[oi];
          }
  return gx;
}

template <class T>
Tensor5<T> upsample3(const Tensor5<T>& x) {
  Tensor5<T> y(x.n, x.c, 2 * x.d, 2 * x.h, 2 * x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int z = 0; z < x.d; ++z)
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx) {
            const T v = x.at(n, c, z, yy, xx);
            for (int dz = 0; dz < 2; ++dz)
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                  y.at(n, c, 2 * z + dz, 2 * yy + dy, 2 * xx + dx) = v;
          }
  return y;
}

template <class T>
Tensor5<T> upsample3_backward(const Tensor5<T>& gy) {
  require(gy.d % 2 == 0 && gy.h % 2 == 0 && gy.w % 2 == 0, Err::ShapeMismatch,
          "upsample3_backward: odd grad dims");
  Tensor5<T> gx(gy.n, gy.c, gy.d / 2, gy.h / 2, gy.w / 2);
  for (int n = 0; n < gx.n; ++n)
    for (int c = 0; c < gx.c; ++c)
      for (int z = 0; z < gx.d; ++z)
        for (int yy = 0; yy < gx.h; ++yy)
          for (int xx = 0; xx < gx.w; ++xx) {
            T acc = T(0);
            for (int dz = 0; dz < 2; ++dz)
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                  acc += gy.at(n, c, 2 * z + dz, 2 * yy + dy, 2 * xx + dx);
            gx.at(n, c, z, yy, xx) = acc;
          }
  return gx;
}

template <class T>
Tensor5<T> concat_channels(const Tensor5<T>& a, const Tensor5<T>& b) {
  require(a.n == b.n && a.d == b.d && a.h == b.h && a.w == b.w, Err::ShapeMismatch,
          "concat_channels: spatial/batch mismatch");
  Tensor5<T> out(a.n, a.c + b.c, a.d, a.h, a.w);
  for (int n = 0; n < a.n; ++n) {
    std::copy(a.sample(n), a.sample(n) + a.sample_size(), out.sample(n));
    std::copy(b.sample(n), b.sample(n) + b.sample_size(),
              out.sample(n) + a.sample_size());
  }
  return out;
}

template <class T>
std::pair<Tensor5<T>, Tensor5<T>> split_channels(const Tensor5<T>& g, int ca) {
  require(ca >= 0 && ca <= g.c, Err::ShapeMismatch, "split_channels: bad split point");
  Tensor5<T> ga(g.n, ca, g.d, g.h, g.w);
  Tensor5<T> gb(g.n, g.c - ca, g.d, g.h, g.w);
  for (int n = 0; n < g.n; ++n) {
    std::copy(g.sample(n), g.sample(n) + ga.sample_size(), ga.sample(n));
    std::copy(g.sample(n) + ga.sample_size(), g.sample(n) + g.sample_size(),
              gb.sample(n));
  }
  return {std::move(ga), std::move(gb)};
}

template <class T>
Tensor5<T> activation(const Tensor5<T>& x, Act kind) {
  Tensor5<T> y(x.n, x.c, x.d, x.h, x.w);
  const size_t n = x.size();
  if constexpr (std::is_same_v<T, float>) {
    const auto& k = kernels::active_backend();
    switch (kind) {
      case Act::ReLU: k.relu_fwd(x.data.data(), y.data.data(), n); break;
      case Act::Sigmoid: k.sigmoid_fwd(x.data.data(), y.data.data(), n); break;
      case Act::Tanh: k.tanh_fwd(x.data.data(), y.data.data(), n); break;
    }
  } else {
    switch (kind) {
      case Act::ReLU: kernels::generic::relu_fwd(x.data.data(), y.data.data(), n); break;
      case Act::Sigmoid: kernels::generic::sigmoid_fwd(x.data.data(), y.data.data(), n); break;
      case Act::Tanh: kernels::generic::tanh_fwd(x.data.data(), y.data.data(), n); break;
    }
  }
  return y;
}

template <class T>
Tensor5<T> activation_backward(const Tensor5<T>& y, const Tensor5<T>& g, Act kind) {
  require(y.same_shape(g), Err::ShapeMismatch, "activation_backward: shape");
  Tensor5<T> gx(y.n, y.c, y.d, y.h, y.w);
  const size_t n = y.size();
  if constexpr (std::is_same_v<T, float>) {
    const auto& k = kernels::active_backend();
    switch (kind) {
      case Act::ReLU: k.relu_bwd_from_y(y.data.data(), g.data.data(), gx.data.data(), n); break;
      case Act::Sigmoid: k.sigmoid_bwd_from_y(y.data.data(), g.data.data(), gx.data.data(), n); break;
      case Act::Tanh: k.tanh_bwd_from_y(y.data.data(), g.data.data(), gx.data.data(), n); break;
    }
  } else {
    switch (kind) {
      case Act::ReLU: kernels::generic::relu_bwd_from_y(y.data.data(), g.data.data(), gx.data.data(), n); break;
      case Act::Sigmoid: kernels::generic::sigmoid_bwd_from_y(y.data.data(), g.data.data(), gx.data.data(), n); break;
      case Act::Tanh: kernels::generic::tanh_bwd_from_y(y.data.data(), g.data.data(), gx.data.data(), n); break;
    }
  }
  return gx;
}

template <class T>
double bce_loss(const Tensor5<T>& pred, const Tensor5<T>& target) {
  require(pred.same_shape(target), Err::ShapeMismatch, "bce_loss: shape");
  require(pred.size() > 0, Err::ShapeMismatch, "bce_loss: empty tensors");
  double s;
  if constexpr (std::is_same_v<T, float>) {
    s = kernels::active_backend().bce_sum(pred.data.data(), target.data.data(),
                                          pred.size());
  } else {
    s = kernels::generic::bce_sum(pred.data.data(), target.data.data(), pred.size());
  }
  return s / double(pred.size());
}

template <class T>
Tensor5<T> bce_sum_backward(const Tensor5<T>& pred, const Tensor5<T>& target,
                            double scale) {
  require(pred.same_shape(target), Err::ShapeMismatch, "bce_loss_backward: shape");
  Tensor5<T> g(pred.n, pred.c, pred.d, pred.h, pred.w);
  if constexpr (std::is_same_v<T, float>) {
    kernels::active_backend().bce_grad(pred.data.data(), target.data.data(),
                                       float(scale), g.data.data(), pred.size());
  } else {
    kernels::generic::bce_grad(pred.data.data(), target.data.data(), T(scale),
                               g.data.data(), pred.size());
  }
  return g;
}

template <class T>
Tensor5<T> bce_loss_backward(const Tensor5<T>& pred, const Tensor5<T>& target) {
  return bce_sum_backward(pred, target, 1.0 / double(pred.size()));
}

template <class T>
void xavier_init(ConvParams<T>& p, Rng& rng) {
  const double fan_in = double(p.cin) * 27.0;
  const double fan_out = double(p.cout) * 27.0;
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : p.w) v = T((2.0 * rng.uniform01() - 1.0) * bound);
  std::fill(p.b.begin(), p.b.end(), T(0));
}

template <class T>
void normal_init(ConvParams<T>& p, Rng& rng, double stddev) {
  for (auto& v : p.w) v = T(rng.gaussian(0.0, stddev));
  std::fill(p.b.begin(), p.b.end(), T(0));
}

template <class T>
void adam_step_array(T* p, const T* g, T* m, T* v, size_t n, const AdamHyper& h,
                     int64_t step_index) {
  require(step_index >= 1, Err::UsageError, "adam step index starts at 1");
  const double bc1 = 1.0 - std::pow(h.beta1, double(step_index));
  const double bc2 = 1.0 - std::pow(h.beta2, double(step_index));
  if constexpr (std::is_same_v<T, float>) {
    kernels::active_backend().adam_step(p, g, m, v, n, float(h.lr), float(h.beta1),
                                        float(h.beta2), float(h.eps),
                                        float(1.0 / bc1), float(1.0 / bc2));
  } else {
    kernels::generic::adam_step(p, g, m, v, n, T(h.lr), T(h.beta1), T(h.beta2),
                                T(h.eps), T(1.0 / bc1), T(1.0 / bc2));
  }
}

#define YNET_INSTANTIATE_OPS(T)                                                   \
  template Tensor5<T> conv3d(const Tensor5<T>&, const ConvParams<T>&, int);      \
  template void conv3d_backward(const Tensor5<T>&, const ConvParams<T>&,         \
                                const Tensor5<T>&, Tensor5<T>*, ConvParams<T>*,  \
                                int);                                            \
  template Tensor5<T> conv3d_s2(const Tensor5<T>&, const ConvParams<T>&);        \
  template void conv3d_s2_backward(const Tensor5<T>&, const ConvParams<T>&,      \
                                   const Tensor5<T>&, Tensor5<T>*,               \
                                   ConvParams<T>*);                              \
  template Tensor5<T> tconv3d_s2(const Tensor5<T>&, const ConvParams<T>&);       \
  template void tconv3d_s2_backward(const Tensor5<T>&, const ConvParams<T>&,     \
                                    const Tensor5<T>&, Tensor5<T>*,              \
                                    ConvParams<T>*);                             \
  template PoolResult<T> maxpool3d(const Tensor5<T>&);                           \
  template Tensor5<T> maxpool3d_backward(const Tensor5<T>&,                      \
                                         const std::vector<uint8_t>&);           \
  template Tensor5<T> upsample3(const Tensor5<T>&);                              \
  template Tensor5<T> upsample3_backward(const Tensor5<T>&);                     \
  template Tensor5<T> concat_channels(const Tensor5<T>&, const Tensor5<T>&);     \
  template std::pair<Tensor5<T>, Tensor5<T>> split_channels(const Tensor5<T>&,   \
                                                            int);                \
  template Tensor5<T> activation(const Tensor5<T>&, Act);                        \
  template Tensor5<T> activation_backward(const Tensor5<T>&, const Tensor5<T>&,  \
                                          Act);                                  \
  template double bce_loss(const Tensor5<T>&, const Tensor5<T>&);                \
  template Tensor5<T> bce_loss_backward(const Tensor5<T>&, const Tensor5<T>&);   \
  template Tensor5<T> bce_sum_backward(const Tensor5<T>&, const Tensor5<T>&,     \
                                       double);                                  \
  template void xavier_init(ConvParams<T>&, Rng&);                               \
  template void normal_init(ConvParams<T>&, Rng&, double);                       \
  template void adam_step_array(T*, const T*, T*, T*, size_t, const AdamHyper&,  \
                                int64_t);

YNET_INSTANTIATE_OPS(float)
YNET_INSTANTIATE_OPS(double)

#undef YNET_INSTANTIATE_OPS

}  // namespace ynet::ops
