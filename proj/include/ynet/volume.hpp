#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ynet/common.hpp"

namespace ynet {

enum class VolumeKind : uint8_t { Intensity = 0, Probability = 1, Label = 2 };

// Scalar 3D grid with voxel spacing. Linear order is x-fastest (x, then y,
// then z) everywhere in this project.
struct Volume3D {
  int nx = 0, ny = 0, nz = 0;
  float sx = 1.f, sy = 1.f, sz = 1.f;
  VolumeKind kind = VolumeKind::Intensity;
  std::vector<float> data;

  Volume3D() = default;
  Volume3D(int nx_, int ny_, int nz_, VolumeKind kind_, float fill = 0.f)
      : nx(nx_), ny(ny_), nz(nz_), kind(kind_),
        data(size_t(nx_) * ny_ * nz_, fill) {}

  size_t size() const { return size_t(nx) * ny * nz; }
  size_t index(int x, int y, int z) const { return (size_t(z) * ny + y) * nx + x; }
  float& at(int x, int y, int z) { return data[index(x, y, z)]; }
  const float& at(int x, int y, int z) const { return data[index(x, y, z)]; }
  Dims3 dims() const { return {nx, ny, nz}; }
  bool same_dims(const Volume3D& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }

  // Checks the kind-dependent value invariants (Probability in [0,1],
  // Label in {0,1}) and the size invariant.
  void validate() const;
};

// YVOL container, little-endian:
//   magic "YVOL" | u32 version=1 | u32 nx,ny,nz | f32 sx,sy,sz | u8 kind |
//   3 zero bytes | nx*ny*nz f32 payload, x-fastest.
// The fixed header is 36 bytes.
Volume3D read_volume(const std::string& path);
void write_volume(const Volume3D& v, const std::string& path);

// Percentile clipping to [p_lo, p_hi] then affine mapping to [0,1].
// Percentiles use linear interpolation on the sorted values.
Volume3D normalize_intensity(const Volume3D& v, double p_lo, double p_hi);

struct Image8 {
  int w = 0, h = 0;
  std::vector<uint8_t> pix;
  uint8_t& at(int x, int y) { return pix[size_t(y) * w + x]; }
  const uint8_t& at(int x, int y) const { return pix[size_t(y) * w + x]; }
};

enum class Axis { X, Y, Z };

// Maximum intensity projection along one axis; values are clamped to [0,1]
// and rescaled to [0,255] with rounding. Output axes:
//   Z -> (w=nx, h=ny), Y -> (w=nx, h=nz), X -> (w=ny, h=nz).
Image8 render_mip(const Volume3D& v, Axis axis);

// Binary PGM (P5), maxval 255.
void write_pgm(const Image8& img, const std::string& path);

}  // namespace ynet
