#include "ynet/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ynet {

namespace {

constexpr char kMagic[4] = {'Y', 'V', 'O', 'L'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderBytes = 36;

void put_u32(std::string& buf, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.append(b, 4);
}

void put_f32(std::string& buf, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.append(b, 4);
}

uint32_t get_u32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

float get_f32(const char* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

void Volume3D::validate() const {
  require(nx > 0 && ny > 0 && nz > 0, Err::DimMismatch, "non-positive dims");
  require(data.size() == size(), Err::DimMismatch, "data length != nx*ny*nz");
  if (kind == VolumeKind::Probability) {
    for (float v : data)
      require(v >= 0.f && v <= 1.f, Err::OutOfBounds, "probability outside [0,1]");
  } else if (kind == VolumeKind::Label) {
    for (float v : data)
      require(v == 0.f || v == 1.f, Err::OutOfBounds, "label not in {0,1}");
  }
}

void write_volume(const Volume3D& v, const std::string& path) {
  require(v.data.size() == v.size(), Err::DimMismatch, "data length != dims");
  std::string header;
  header.reserve(kHeaderBytes);
  header.append(kMagic, 4);
  put_u32(header, kVersion);
  put_u32(header, uint32_t(v.nx));
  put_u32(header, uint32_t(v.ny));
  put_u32(header, uint32_t(v.nz));
  put_f32(header, v.sx);
  put_f32(header, v.sy);
  put_f32(header, v.sz);
  header.push_back(char(uint8_t(v.kind)));
  header.append(3, '\0');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open for writing: " + path);
  out.write(header.data(), std::streamsize(header.size()));
  out.write(reinterpret_cast<const char*>(v.data.data()),
            std::streamsize(v.data.size() * sizeof(float)));
  out.flush();
  if (!out) fail(Err::IoFailure, "write failed: " + path);
}

Volume3D read_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open: " + path);
  in.seekg(0, std::ios::end);
  const auto file_size = size_t(in.tellg());
  in.seekg(0, std::ios::beg);

  if (file_size < kHeaderBytes) fail(Err::TruncatedPayload, "file shorter than header: " + path);
  char hdr[kHeaderBytes];
  in.read(hdr, kHeaderBytes);
  if (!in) fail(Err::IoFailure, "header read failed: " + path);
  if (std::memcmp(hdr, kMagic, 4) != 0) fail(Err::BadMagic, "bad magic in " + path);
  const uint32_t version = get_u32(hdr + 4);
  if (version != kVersion) fail(Err::BadMagic, "unsupported YVOL version");

  Volume3D v;
  v.nx = int(get_u32(hdr + 8));
  v.ny = int(get_u32(hdr + 12));
  v.nz = int(get_u32(hdr + 16));
  v.sx = get_f32(hdr + 20);
  v.sy = get_f32(hdr + 24);
  v.sz = get_f32(hdr + 28);
  const uint8_t kind_code = uint8_t(hdr[32]);
  if (kind_code > 2) fail(Err::InvalidKindCode, "kind code " + std::to_string(kind_code));
  v.kind = VolumeKind(kind_code);
  require(v.nx > 0 && v.ny > 0 && v.nz > 0, Err::DimMismatch, "non-positive dims in header");

  const size_t payload_bytes = file_size - kHeaderBytes;
  if (payload_bytes % sizeof(float) != 0)
    fail(Err::TruncatedPayload, "payload not a whole number of f32 values");
  const size_t count = payload_bytes / sizeof(float);
  if (count != v.size())
    fail(Err::DimMismatch, "header dims want " + std::to_string(v.size()) +
                               " values, payload has " + std::to_string(count));
  v.data.resize(count);
  in.read(reinterpret_cast<char*>(v.data.data()), std::streamsize(payload_bytes));
  if (!in) fail(Err::TruncatedPayload, "payload read failed: " + path);
  return v;
}

namespace {

// p in [0,100]; linear interpolation between order statistics.
double percentile_sorted(const std::vector<float>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double rank = p / 100.0 * double(n - 1);
  const size_t lo = size_t(std::floor(rank));
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = rank - double(lo);
  return double(sorted[lo]) * (1.0 - frac) + double(sorted[hi]) * frac;
}

}  // namespace

Volume3D normalize_intensity(const Volume3D& v, double p_lo, double p_hi) {
  require(v.kind == VolumeKind::Intensity, Err::UsageError,
          "normalize_intensity expects an intensity volume");
  require(p_lo >= 0 && p_lo < p_hi && p_hi <= 100, Err::UsageError,
          "need 0 <= p_lo < p_hi <= 100");
  std::vector<float> sorted(v.data);
  std::sort(sorted.begin(), sorted.end());
  const double lo = percentile_sorted(sorted, p_lo);
  const double hi = percentile_sorted(sorted, p_hi);
  if (!(hi > lo)) fail(Err::DegenerateRange, "percentile range is empty");

  Volume3D out = v;
  const double scale = 1.0 / (hi - lo);
  for (auto& x : out.data) {
    const double c = std::clamp(double(x), lo, hi);
    x = float((c - lo) * scale);
  }
  return out;
}

Image8 render_mip(const Volume3D& v, Axis axis) {
  require(v.kind != VolumeKind::Label, Err::UsageError,
          "render_mip expects intensity or probability");
  require(v.data.size() == v.size() && v.size() > 0, Err::DimMismatch, "bad volume");
  Image8 img;
  auto project = [&](int w, int h, auto&& value_at) {
    img.w = w;
    img.h = h;
    img.pix.assign(size_t(w) * h, 0);
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) {
        const float m = value_at(i, j);
        const double c = std::clamp(double(m), 0.0, 1.0);
        img.at(i, j) = uint8_t(std::lround(c * 255.0));
      }
  };
  switch (axis) {
    case Axis::Z:
      project(v.nx, v.ny, [&](int x, int y) {
        float m = v.at(x, y, 0);
        for (int z = 1; z < v.nz; ++z) m = std::max(m, v.at(x, y, z));
        return m;
      });
      break;
    case Axis::Y:
      project(v.nx, v.nz, [&](int x, int z) {
        float m = v.at(x, 0, z);
        for (int y = 1; y < v.ny; ++y) m = std::max(m, v.at(x, y, z));
        return m;
      });
      break;
    case Axis::X:
      project(v.ny, v.nz, [&](int y, int z) {
        float m = v.at(0, y, z);
        for (int x = 1; x < v.nx; ++x) m = std::max(m, v.at(x, y, z));
        return m;
      });
      break;
  }
  return img;
}

void write_pgm(const Image8& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open for writing: " + path);
  out << "P5\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pix.data()),
            std::streamsize(img.pix.size()));
  out.flush();
  if (!out) fail(Err::IoFailure, "write failed: " + path);
}

}  // namespace ynet
