#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ynet/volume.hpp"

namespace ynet {

// One tube: a piecewise-linear centerline with the radius interpolated
// linearly along cumulative arc length. A voxel is inside when its center is
// within radius(t) of the closest point of some segment.
struct TubeSpec {
  std::vector<std::array<double, 3>> control_points;  // voxel units
  double radius_start = 2.0;
  double radius_end = 2.0;
  double intensity = 0.7;  // foreground level in (0, 1]
};

struct PhantomSpec {
  Dims3 dims{64, 64, 64};
  std::vector<TubeSpec> tubes;
  double background_level = 0.1;
  double noise_sigma = 0.05;
  double psf_sigma = 0.6;
  uint64_t seed = 0;
};

struct VolumePair {
  std::string name;
  uint64_t seed = 0;
  Volume3D image;
  Volume3D label;
};

// Rasterizes the tubes into an exact binary label, then builds the intensity
// volume: foreground voxels take their tube level (max when tubes overlap),
// Gaussian blur by psf_sigma, Gaussian noise(0, noise_sigma) added in linear
// voxel order, clipped to [0,1]. Deterministic for a given spec.
std::pair<Volume3D, Volume3D> generate_phantom(const PhantomSpec& spec);

// Exact binary rasterization only.
Volume3D rasterize_tubes(const PhantomSpec& spec);

struct Dataset {
  std::vector<VolumePair> train, val, test;
  std::vector<PhantomSpec> specs;  // one per volume, train then val then test
};

// Random smooth-tube volumes of 64^3 with 3-6 tubes (one bifurcating pair),
// radii in [1.5, 4], foreground fraction kept inside [0.002, 0.03] by
// deterministic re-draws. Per-volume seeds are derived from the base seed and
// the global volume index, so no two volumes share one.
Dataset default_dataset(uint64_t seed, int n_train, int n_val, int n_test);

double foreground_fraction(const Volume3D& label);

// Manifest I/O for datasets written as <name>.img.yvol / <name>.lbl.yvol.
struct ManifestEntry {
  std::string name, role, img, lbl;
  uint64_t seed = 0;
  double foreground = 0.0;
};
struct Manifest {
  uint64_t seed = 0;
  Dims3 dims{};
  std::vector<ManifestEntry> volumes;
};
void write_manifest(const Manifest& m, const std::string& path);
Manifest read_manifest(const std::string& path);

}  // namespace ynet
