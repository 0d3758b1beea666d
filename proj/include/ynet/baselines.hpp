#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ynet/volume.hpp"

namespace ynet {

// 256-bin histogram over [0,1]; bin b covers [b/256, (b+1)/256), values
// clamped into range.
struct Histogram256 {
  std::array<uint64_t, 256> counts{};
  uint64_t total = 0;

  static Histogram256 of(const Volume3D& v);
  void add(double value);
};

// Single-order Renyi entropy criterion: the cut t maximizing H_A + H_B over
// the class-renormalized bin probabilities, alpha=1 taking the Shannon
// (Kapur) limit. Ties resolve toward the higher cut. Returns the bin index;
// foreground is everything strictly above bin t.
int renyi_threshold_alpha(const Histogram256& h, double alpha);

// Three-threshold combination (alpha -> 1, 0.5, 2) with the Kapur-Sahoo-Wong
// weighting as used in the ImageJ auto-threshold implementation.
int renyi_threshold(const Histogram256& h);

inline double bin_upper_value(int bin) { return double(bin + 1) / 256.0; }

// Windowed mean and population standard deviation over an edge-clipped cube
// of half-width radius.
void local_mean_std(const Volume3D& v, int radius, Volume3D& mean, Volume3D& stddev);

// T = m * (1 + p*exp(-q*m) + k*((s/r) - 1)); voxel = 1 iff value > T.
Volume3D phansalkar_threshold(const Volume3D& v, int window_radius, double k = 0.25,
                              double r = 0.5, double p = 2.0, double q = 10.0);

// Ascending eigenvalues of a symmetric 3x3 matrix given as
// (a00, a01, a02, a11, a12, a22). Analytic solve with a Jacobi fallback when
// the characteristic discriminant is numerically degenerate.
void eig3x3_sym(const double a[6], double out[3]);

// Gaussian-derivative Hessian at scale sigma (sigma^2-normalized), one
// eigenvalue volume per output, sorted by |l1| <= |l2| <= |l3|.
void hessian_eigenvalues(const Volume3D& v, double sigma, Volume3D& l1,
                         Volume3D& l2, Volume3D& l3);

struct FrangiParams {
  std::vector<double> scales{1.0, 2.0, 3.0, 4.0};
  double alpha = 0.5;
  double beta = 0.5;
  double c = 0.0;  // 0 -> half the maximum Hessian norm, per scale
  bool bright_on_dark = true;
};

// Max over scales of the tubularity response; zero wherever l2 > 0 or l3 > 0.
Volume3D frangi_vesselness(const Volume3D& v, const FrangiParams& params);

enum class BaselineKind { Renyi, Phansalkar, Frangi };

struct BaselineParams {
  int phansalkar_radius = 3;
  FrangiParams frangi;
  double frangi_threshold = 0.5;
};

Volume3D run_baseline(const Volume3D& v, BaselineKind which,
                      const BaselineParams& params);

}  // namespace ynet
