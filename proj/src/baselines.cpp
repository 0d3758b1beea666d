#include "ynet/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "ynet/kernels.hpp"
#include "ynet/predictor.hpp"

namespace ynet {

void Histogram256::add(double value) {
  const double c = std::clamp(value, 0.0, 1.0);
  int bin = int(c * 256.0);
  if (bin > 255) bin = 255;
  ++counts[size_t(bin)];
  ++total;
}

Histogram256 Histogram256::of(const Volume3D& v) {
  Histogram256 h;
  for (float x : v.data) h.add(double(x));
  return h;
}

namespace {

int first_nonzero(const Histogram256& h) {
  for (int i = 0; i < 256; ++i)
    if (h.counts[size_t(i)] > 0) return i;
  return -1;
}

int last_nonzero(const Histogram256& h) {
  for (int i = 255; i >= 0; --i)
    if (h.counts[size_t(i)] > 0) return i;
  return -1;
}

void check_histogram(const Histogram256& h) {
  int nonzero = 0;
  for (auto c : h.counts) nonzero += c > 0;
  require(nonzero >= 2, Err::DegenerateHistogram,
          "need at least two nonempty bins");
}

}  // namespace

int renyi_threshold_alpha(const Histogram256& h, double alpha) {
  require(alpha > 0, Err::UsageError, "alpha must be positive");
  check_histogram(h);
  const int first = first_nonzero(h), last = last_nonzero(h);

  std::array<double, 256> p{};
  for (int i = 0; i < 256; ++i)
    p[size_t(i)] = double(h.counts[size_t(i)]) / double(h.total);

  double best = -std::numeric_limits<double>::infinity();
  int best_t = first;
  double P = 0.0;
  for (int t = first; t < last; ++t) {
    P += p[size_t(t)];
    const double Q = 1.0 - P;
    if (P <= 0.0 || Q <= 0.0) continue;
    double ha = 0.0, hb = 0.0;
    if (std::abs(alpha - 1.0) < 1e-12) {
      for (int i = first; i <= t; ++i) {
        if (p[size_t(i)] <= 0) continue;
        const double r = p[size_t(i)] / P;
        ha -= r * std::log(r);
      }
      for (int i = t + 1; i <= last; ++i) {
        if (p[size_t(i)] <= 0) continue;
        const double r = p[size_t(i)] / Q;
        hb -= r * std::log(r);
      }
    } else {
      double sa = 0.0, sb = 0.0;
      for (int i = first; i <= t; ++i)
        if (p[size_t(i)] > 0) sa += std::pow(p[size_t(i)] / P, alpha);
      for (int i = t + 1; i <= last; ++i)
        if (p[size_t(i)] > 0) sb += std::pow(p[size_t(i)] / Q, alpha);
      ha = std::log(sa) / (1.0 - alpha);
      hb = std::log(sb) / (1.0 - alpha);
    }
    const double tot = ha + hb;
    if (tot >= best) {  // ties resolve toward the higher cut
      best = tot;
      best_t = t;
    }
  }
  return best_t;
}

int renyi_threshold(const Histogram256& h) {
  check_histogram(h);
  int ts[3] = {renyi_threshold_alpha(h, 0.5), renyi_threshold_alpha(h, 1.0),
               renyi_threshold_alpha(h, 2.0)};
  std::sort(ts, ts + 3);
  const int t1 = ts[0], t2 = ts[1], t3 = ts[2];

  // Kapur-Sahoo-Wong weighting, as in the ImageJ auto-threshold toolkit.
  int b1, b2, b3;
  if (std::abs(t1 - t2) <= 5) {
    if (std::abs(t2 - t3) <= 5) {
      b1 = 1; b2 = 2; b3 = 1;
    } else {
      b1 = 0; b2 = 1; b3 = 3;
    }
  } else {
    if (std::abs(t2 - t3) <= 5) {
      b1 = 3; b2 = 1; b3 = 0;
    } else {
      b1 = 1; b2 = 2; b3 = 1;
    }
  }

  std::array<double, 256> P1{};
  double acc = 0.0;
  for (int i = 0; i < 256; ++i) {
    acc += double(h.counts[size_t(i)]) / double(h.total);
    P1[size_t(i)] = acc;
  }
  const double omega = P1[size_t(t3)] - P1[size_t(t1)];
  const double thr = double(t1) * (P1[size_t(t1)] + 0.25 * omega * double(b1)) +
                     0.25 * double(t2) * omega * double(b2) +
                     double(t3) * ((1.0 - P1[size_t(t3)]) + 0.25 * omega * double(b3));
  return std::clamp(int(thr), 0, 255);
}

void local_mean_std(const Volume3D& v, int radius, Volume3D& mean, Volume3D& stddev) {
  require(radius >= 1, Err::UsageError, "window radius must be >= 1");
  const int nx = v.nx, ny = v.ny, nz = v.nz;
  mean = Volume3D(nx, ny, nz, VolumeKind::Intensity, 0.f);
  stddev = Volume3D(nx, ny, nz, VolumeKind::Intensity, 0.f);

  // inclusive prefix sums with a one-cell zero border
  const size_t sx = size_t(nx) + 1, sy = size_t(ny) + 1, sz = size_t(nz) + 1;
  std::vector<double> S(sx * sy * sz, 0.0), SS(sx * sy * sz, 0.0);
  auto sidx = [&](size_t x, size_t y, size_t z) { return (z * sy + y) * sx + x; };
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const double val = double(v.at(x, y, z));
        const size_t i = sidx(size_t(x) + 1, size_t(y) + 1, size_t(z) + 1);
        S[i] = val + S[sidx(x, y + 1, z + 1)] + S[sidx(x + 1, y, z + 1)] +
               S[sidx(x + 1, y + 1, z)] - S[sidx(x, y, z + 1)] -
               S[sidx(x, y + 1, z)] - S[sidx(x + 1, y, z)] + S[sidx(x, y, z)];
        SS[i] = val * val + SS[sidx(x, y + 1, z + 1)] + SS[sidx(x + 1, y, z + 1)] +
                SS[sidx(x + 1, y + 1, z)] - SS[sidx(x, y, z + 1)] -
                SS[sidx(x, y + 1, z)] - SS[sidx(x + 1, y, z)] + SS[sidx(x, y, z)];
      }

  auto box = [&](const std::vector<double>& A, int x0, int x1, int y0, int y1,
                 int z0, int z1) {
    // sums over [x0,x1] x [y0,y1] x [z0,z1], all inclusive
    const size_t a = size_t(x0), b = size_t(x1) + 1;
    const size_t c = size_t(y0), d = size_t(y1) + 1;
    const size_t e = size_t(z0), f = size_t(z1) + 1;
    return A[sidx(b, d, f)] - A[sidx(a, d, f)] - A[sidx(b, c, f)] -
           A[sidx(b, d, e)] + A[sidx(a, c, f)] + A[sidx(a, d, e)] +
           A[sidx(b, c, e)] - A[sidx(a, c, e)];
  };

  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const int x0 = std::max(0, x - radius), x1 = std::min(nx - 1, x + radius);
        const int y0 = std::max(0, y - radius), y1 = std::min(ny - 1, y + radius);
        const int z0 = std::max(0, z - radius), z1 = std::min(nz - 1, z + radius);
        const double n = double(x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1);
        const double m = box(S, x0, x1, y0, y1, z0, z1) / n;
        const double var = std::max(0.0, box(SS, x0, x1, y0, y1, z0, z1) / n - m * m);
        mean.at(x, y, z) = float(m);
        stddev.at(x, y, z) = float(std::sqrt(var));
      }
}

Volume3D phansalkar_threshold(const Volume3D& v, int window_radius, double k,
                              double r, double p, double q) {
  Volume3D mean, stddev;
  local_mean_std(v, window_radius, mean, stddev);
  Volume3D out(v.nx, v.ny, v.nz, VolumeKind::Label, 0.f);
  for (size_t i = 0; i < v.size(); ++i) {
    const double m = double(mean.data[i]);
    const double s = double(stddev.data[i]);
    const double t = m * (1.0 + p * std::exp(-q * m) + k * ((s / r) - 1.0));
    out.data[i] = double(v.data[i]) > t ? 1.f : 0.f;
  }
  return out;
}

namespace {

// Characteristic-cubic roots via the trigonometric method (double precision).
void eig3x3_analytic(const double a[6], double w[3]) {
  const double a00 = a[0], a01 = a[1], a02 = a[2], a11 = a[3], a12 = a[4],
               a22 = a[5];
  const double de = a01 * a12;
  const double dd = a01 * a01, ee = a12 * a12, ff = a02 * a02;
  const double m = a00 + a11 + a22;
  const double c1 = (a00 * a11 + a00 * a22 + a11 * a22) - (dd + ee + ff);
  const double c0 =
      a22 * dd + a00 * ee + a11 * ff - a00 * a11 * a22 - 2.0 * a02 * de;

  const double pp = m * m - 3.0 * c1;
  const double qq = m * (pp - 1.5 * c1) - 13.5 * c0;
  const double sqrt_p = std::sqrt(std::abs(pp));
  double phi = 27.0 * (0.25 * c1 * c1 * (pp - c1) + c0 * (qq + 6.75 * c0));
  phi = (1.0 / 3.0) * std::atan2(std::sqrt(std::abs(phi)), qq);

  const double c = sqrt_p * std::cos(phi);
  const double s = (1.0 / std::sqrt(3.0)) * sqrt_p * std::sin(phi);
  w[1] = (1.0 / 3.0) * (m - c);
  w[2] = w[1] + s;
  w[0] = w[1] + c;
  w[1] -= s;
}

// Cyclic Jacobi sweeps; robust for degenerate spectra.
void eig3x3_jacobi(const double a[6], double w[3]) {
  double A[3][3] = {{a[0], a[1], a[2]}, {a[1], a[3], a[4]}, {a[2], a[4], a[5]}};
  for (int sweep = 0; sweep < 32; ++sweep) {
    const double off = std::abs(A[0][1]) + std::abs(A[0][2]) + std::abs(A[1][2]);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        const double apq = A[p][q];
        if (apq == 0.0) continue;
        const double theta = (A[q][q] - A[p][p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        A[p][p] -= t * apq;
        A[q][q] += t * apq;
        A[p][q] = A[q][p] = 0.0;
        for (int i = 0; i < 3; ++i) {
          if (i == p || i == q) continue;
          const double aip = A[i][p], aiq = A[i][q];
          A[i][p] = A[p][i] = c * aip - s * aiq;
          A[i][q] = A[q][i] = s * aip + c * aiq;
        }
      }
  }
  w[0] = A[0][0];
  w[1] = A[1][1];
  w[2] = A[2][2];
}

}  // namespace

void eig3x3_sym(const double a[6], double out[3]) {
  // Discriminant of the characteristic cubic, normalized by the matrix scale;
  // near-degenerate spectra go through Jacobi.
  double scale = 0.0;
  for (int i = 0; i < 6; ++i) scale = std::max(scale, std::abs(a[i]));
  if (scale == 0.0) {
    out[0] = out[1] = out[2] = 0.0;
    return;
  }
  const double a00 = a[0], a01 = a[1], a02 = a[2], a11 = a[3], a12 = a[4],
               a22 = a[5];
  const double b = -(a00 + a11 + a22);
  const double c = a00 * a11 + a00 * a22 + a11 * a22 - a01 * a01 - a02 * a02 -
                   a12 * a12;
  const double d = -(a00 * a11 * a22 + 2.0 * a01 * a02 * a12 - a00 * a12 * a12 -
                     a11 * a02 * a02 - a22 * a01 * a01);
  const double disc = 18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c -
                      4.0 * c * c * c - 27.0 * d * d;
  const double s2 = scale * scale;
  const double norm = s2 * s2 * s2;  // disc has degree 6 in the entries

  double w[3];
  if (std::abs(disc) / norm < 1e-12)
    eig3x3_jacobi(a, w);
  else
    eig3x3_analytic(a, w);
  std::sort(w, w + 3);
  out[0] = w[0];
  out[1] = w[1];
  out[2] = w[2];
}

namespace {

struct GaussianKernels {
  std::vector<float> g0, g1, g2;
  int radius = 0;
};

GaussianKernels derivative_kernels(double sigma) {
  GaussianKernels k;
  k.radius = std::max(1, int(std::ceil(4.0 * sigma)));
  const int n = 2 * k.radius + 1;
  std::vector<double> g(static_cast<size_t>(n));
  double sum = 0.0;
  for (int i = -k.radius; i <= k.radius; ++i) {
    g[size_t(i + k.radius)] = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
    sum += g[size_t(i + k.radius)];
  }
  for (auto& v : g) v /= sum;

  k.g0.resize(size_t(n));
  k.g1.resize(size_t(n));
  k.g2.resize(size_t(n));
  double g2sum = 0.0;
  for (int i = -k.radius; i <= k.radius; ++i) {
    const double gv = g[size_t(i + k.radius)];
    k.g0[size_t(i + k.radius)] = float(gv);
    k.g1[size_t(i + k.radius)] = float(-double(i) / (sigma * sigma) * gv);
    const double g2v = (double(i) * double(i) - sigma * sigma) /
                       (sigma * sigma * sigma * sigma) * gv;
    k.g2[size_t(i + k.radius)] = float(g2v);
    g2sum += g2v;
  }
  // remove the residual DC so constant inputs stay constant
  const float corr = float(g2sum / double(n));
  for (auto& v : k.g2) v -= corr;
  return k;
}

// orders: derivative order (0,1,2) along x, y, z
Volume3D gaussian_derivative(const Volume3D& v, const GaussianKernels& k, int ox,
                             int oy, int oz) {
  const auto& kb = kernels::active_backend();
  auto pick = [&](int order) -> const std::vector<float>& {
    return order == 0 ? k.g0 : order == 1 ? k.g1 : k.g2;
  };
  Volume3D a(v.nx, v.ny, v.nz, VolumeKind::Intensity, 0.f);
  Volume3D b(v.nx, v.ny, v.nz, VolumeKind::Intensity, 0.f);
  kb.conv1d_axis(v.data.data(), a.data.data(), v.nx, v.ny, v.nz, 0,
                 pick(ox).data(), k.radius);
  kb.conv1d_axis(a.data.data(), b.data.data(), v.nx, v.ny, v.nz, 1,
                 pick(oy).data(), k.radius);
  kb.conv1d_axis(b.data.data(), a.data.data(), v.nx, v.ny, v.nz, 2,
                 pick(oz).data(), k.radius);
  return a;
}

}  // namespace

void hessian_eigenvalues(const Volume3D& v, double sigma, Volume3D& l1,
                         Volume3D& l2, Volume3D& l3) {
  require(sigma > 0, Err::UsageError, "sigma must be positive");
  const GaussianKernels k = derivative_kernels(sigma);
  const Volume3D hxx = gaussian_derivative(v, k, 2, 0, 0);
  const Volume3D hyy = gaussian_derivative(v, k, 0, 2, 0);
  const Volume3D hzz = gaussian_derivative(v, k, 0, 0, 2);
  const Volume3D hxy = gaussian_derivative(v, k, 1, 1, 0);
  const Volume3D hxz = gaussian_derivative(v, k, 1, 0, 1);
  const Volume3D hyz = gaussian_derivative(v, k, 0, 1, 1);

  l1 = Volume3D(v.nx, v.ny, v.nz, VolumeKind::Intensity, 0.f);
  l2 = l1;
  l3 = l1;
  const double s2 = sigma * sigma;
  for (size_t i = 0; i < v.size(); ++i) {
    const double a[6] = {s2 * hxx.data[i], s2 * hxy.data[i], s2 * hxz.data[i],
                         s2 * hyy.data[i], s2 * hyz.data[i], s2 * hzz.data[i]};
    double w[3];
    eig3x3_sym(a, w);
    std::sort(w, w + 3, [](double x, double y) { return std::abs(x) < std::abs(y); });
    l1.data[i] = float(w[0]);
    l2.data[i] = float(w[1]);
    l3.data[i] = float(w[2]);
  }
}

Volume3D frangi_vesselness(const Volume3D& v, const FrangiParams& params) {
  require(!params.scales.empty(), Err::UsageError, "no scales");
  for (size_t i = 0; i < params.scales.size(); ++i) {
    require(params.scales[i] > 0, Err::UsageError, "scales must be positive");
    if (i) require(params.scales[i] > params.scales[i - 1], Err::UsageError,
                   "scales must ascend");
  }
  require(params.bright_on_dark, Err::UsageError,
          "only bright-on-dark vessels are supported");

  Volume3D out(v.nx, v.ny, v.nz, VolumeKind::Probability, 0.f);
  Volume3D l1, l2, l3;
  const double a2 = 2.0 * params.alpha * params.alpha;
  const double b2 = 2.0 * params.beta * params.beta;

  for (double sigma : params.scales) {
    hessian_eigenvalues(v, sigma, l1, l2, l3);
    double smax = 0.0;
    std::vector<float> s_val(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      const double s = std::sqrt(double(l1.data[i]) * l1.data[i] +
                                 double(l2.data[i]) * l2.data[i] +
                                 double(l3.data[i]) * l3.data[i]);
      s_val[i] = float(s);
      smax = std::max(smax, s);
    }
    if (params.c <= 0 && smax < 1e-12) continue;  // flat volume, no response
    const double c = params.c > 0 ? params.c : smax / 2.0;
    const double c2 = 2.0 * c * c;

    for (size_t i = 0; i < v.size(); ++i) {
      const double e2 = double(l2.data[i]);
      const double e3 = double(l3.data[i]);
      if (e2 > 0.0 || e3 > 0.0) continue;  // bright tubes need both negative
      const double ae2 = std::abs(e2), ae3 = std::abs(e3);
      if (ae3 == 0.0) continue;
      const double e1 = double(l1.data[i]);
      const double ra = ae2 / ae3;
      const double rb2_den = ae2 * ae3;
      const double rb = rb2_den > 0.0 ? std::abs(e1) / std::sqrt(rb2_den) : 0.0;
      const double s = double(s_val[i]);
      const double vx = (1.0 - std::exp(-(ra * ra) / a2)) *
                        std::exp(-(rb * rb) / b2) *
                        (1.0 - std::exp(-(s * s) / c2));
      if (float(vx) > out.data[i]) out.data[i] = float(vx);
    }
  }
  return out;
}

Volume3D run_baseline(const Volume3D& v, BaselineKind which,
                      const BaselineParams& params) {
  switch (which) {
    case BaselineKind::Renyi: {
      const int t = renyi_threshold(Histogram256::of(v));
      const double cut = bin_upper_value(t);
      Volume3D out(v.nx, v.ny, v.nz, VolumeKind::Label, 0.f);
      for (size_t i = 0; i < v.size(); ++i)
        out.data[i] = double(v.data[i]) >= cut ? 1.f : 0.f;
      return out;
    }
    case BaselineKind::Phansalkar:
      return phansalkar_threshold(v, params.phansalkar_radius);
    case BaselineKind::Frangi: {
      const Volume3D ves = frangi_vesselness(v, params.frangi);
      return binarize(ves, params.frangi_threshold);
    }
  }
  fail(Err::UsageError, "unknown baseline");
}

}  // namespace ynet
