#pragma once

#include <cstddef>
#include <vector>

#include "ynet/common.hpp"

namespace ynet {

// Batched 5-axis feature array, (n, c, d, h, w) with w fastest. Patches map
// into it as d=z, h=y, w=x relative to the source volume.
template <class T>
struct Tensor5 {
  int n = 0, c = 0, d = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor5() = default;
  Tensor5(int n_, int c_, int d_, int h_, int w_)
      : n(n_), c(c_), d(d_), h(h_), w(w_),
        data(size_t(n_) * c_ * d_ * h_ * w_, T(0)) {}

  size_t size() const { return data.size(); }
  size_t spatial() const { return size_t(d) * h * w; }
  size_t sample_size() const { return size_t(c) * spatial(); }

  size_t index(int in, int ic, int id, int ih, int iw) const {
    return (((size_t(in) * c + ic) * d + id) * h + ih) * w + iw;
  }
  T& at(int in, int ic, int id, int ih, int iw) { return data[index(in, ic, id, ih, iw)]; }
  const T& at(int in, int ic, int id, int ih, int iw) const { return data[index(in, ic, id, ih, iw)]; }

  T* sample(int in) { return data.data() + size_t(in) * sample_size(); }
  const T* sample(int in) const { return data.data() + size_t(in) * sample_size(); }
  T* channel(int in, int ic) { return sample(in) + size_t(ic) * spatial(); }
  const T* channel(int in, int ic) const { return sample(in) + size_t(ic) * spatial(); }

  bool same_shape(const Tensor5& o) const {
    return n == o.n && c == o.c && d == o.d && h == o.h && w == o.w;
  }
};

using Tensor5f = Tensor5<float>;
using Tensor5d = Tensor5<double>;

}  // namespace ynet
