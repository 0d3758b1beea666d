#include "ynet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "ynet/kernels.hpp"
#include "ynet/rng.hpp"

namespace ynet {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n < 1e-12) return {1, 0, 0};
  return scale(a, 1.0 / n);
}

void check_tube(const TubeSpec& t, const Dims3& dims) {
  require(t.control_points.size() >= 2, Err::BadConfig, "tube needs >= 2 control points");
  require(t.radius_start > 0 && t.radius_end > 0, Err::BadConfig, "tube radius <= 0");
  require(t.radius_start <= 8 && t.radius_end <= 8, Err::BadConfig, "tube radius > 8");
  require(t.intensity > 0 && t.intensity <= 1, Err::BadConfig, "tube intensity outside (0,1]");
  for (const auto& p : t.control_points) {
    const bool inside = p[0] >= 0 && p[0] <= dims.x - 1 && p[1] >= 0 &&
                        p[1] <= dims.y - 1 && p[2] >= 0 && p[2] <= dims.z - 1;
    if (!inside) fail(Err::TubeOutOfBounds, "control point outside volume");
  }
}

// Stamps one tube into label (0/1) and level (per-voxel foreground level,
// max over covering tubes). Voxel centers sit at integer coordinates.
void stamp_tube(const TubeSpec& t, const Dims3& dims, std::vector<float>& label,
                std::vector<float>& level) {
  const auto& cp = t.control_points;
  std::vector<double> cum(cp.size(), 0.0);
  for (size_t i = 1; i < cp.size(); ++i)
    cum[i] = cum[i - 1] + norm(sub(cp[i], cp[i - 1]));
  const double total = std::max(cum.back(), 1e-12);

  auto radius_at = [&](double s) {
    return t.radius_start + (t.radius_end - t.radius_start) * (s / total);
  };
  auto index = [&](int x, int y, int z) {
    return (size_t(z) * dims.y + y) * dims.x + x;
  };

  for (size_t i = 0; i + 1 < cp.size(); ++i) {
    const Vec3 p0 = cp[i], p1 = cp[i + 1];
    const Vec3 d = sub(p1, p0);
    const double len2 = dot(d, d);
    const double slen = std::sqrt(len2);
    const double rmax = std::max(radius_at(cum[i]), radius_at(cum[i] + slen));

    const int x0 = std::max(0, int(std::floor(std::min(p0[0], p1[0]) - rmax)));
    const int x1 = std::min(dims.x - 1, int(std::ceil(std::max(p0[0], p1[0]) + rmax)));
    const int y0 = std::max(0, int(std::floor(std::min(p0[1], p1[1]) - rmax)));
    const int y1 = std::min(dims.y - 1, int(std::ceil(std::max(p0[1], p1[1]) + rmax)));
    const int z0 = std::max(0, int(std::floor(std::min(p0[2], p1[2]) - rmax)));
    const int z1 = std::min(dims.z - 1, int(std::ceil(std::max(p0[2], p1[2]) + rmax)));

    for (int z = z0; z <= z1; ++z)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const Vec3 v{double(x), double(y), double(z)};
          const Vec3 vp = sub(v, p0);
          const double tt = len2 > 0 ? std::clamp(dot(vp, d) / len2, 0.0, 1.0) : 0.0;
          const Vec3 closest = add(p0, scale(d, tt));
          const Vec3 diff = sub(v, closest);
          const double r = radius_at(cum[i] + tt * slen);
          if (dot(diff, diff) <= r * r) {
            const size_t idx = index(x, y, z);
            label[idx] = 1.f;
            level[idx] = std::max(level[idx], float(t.intensity));
          }
        }
  }
}

std::vector<float> gaussian_kernel(double sigma, int radius) {
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
    k[size_t(i + radius)] = float(v);
    sum += v;
  }
  for (auto& v : k) v = float(double(v) / sum);
  return k;
}

}  // namespace

Volume3D rasterize_tubes(const PhantomSpec& spec) {
  Volume3D label(spec.dims.x, spec.dims.y, spec.dims.z, VolumeKind::Label, 0.f);
  std::vector<float> level(label.size(), 0.f);
  for (const auto& t : spec.tubes) {
    check_tube(t, spec.dims);
    stamp_tube(t, spec.dims, label.data, level);
  }
  return label;
}

std::pair<Volume3D, Volume3D> generate_phantom(const PhantomSpec& spec) {
  require(spec.dims.x > 0 && spec.dims.y > 0 && spec.dims.z > 0, Err::BadConfig,
          "phantom dims must be positive");
  require(spec.background_level >= 0 && spec.background_level < 1, Err::BadConfig,
          "background level outside [0,1)");
  require(spec.noise_sigma >= 0 && spec.psf_sigma >= 0, Err::BadConfig,
          "negative sigma");

  Volume3D label(spec.dims.x, spec.dims.y, spec.dims.z, VolumeKind::Label, 0.f);
  std::vector<float> level(label.size(), 0.f);
  for (const auto& t : spec.tubes) {
    check_tube(t, spec.dims);
    stamp_tube(t, spec.dims, label.data, level);
  }

  Volume3D img(spec.dims.x, spec.dims.y, spec.dims.z, VolumeKind::Intensity, 0.f);
  for (size_t i = 0; i < img.size(); ++i)
    img.data[i] = label.data[i] > 0.f ? level[i] : float(spec.background_level);

  if (spec.psf_sigma > 0) {
    const int radius = int(std::ceil(4.0 * spec.psf_sigma));
    const auto k = gaussian_kernel(spec.psf_sigma, radius);
    const auto& kb = kernels::active_backend();
    std::vector<float> tmp(img.size());
    kb.conv1d_axis(img.data.data(), tmp.data(), img.nx, img.ny, img.nz, 0, k.data(), radius);
    kb.conv1d_axis(tmp.data(), img.data.data(), img.nx, img.ny, img.nz, 1, k.data(), radius);
    kb.conv1d_axis(img.data.data(), tmp.data(), img.nx, img.ny, img.nz, 2, k.data(), radius);
    img.data.swap(tmp);
  }

  if (spec.noise_sigma > 0) {
    Rng rng(derive_seed(spec.seed, seed_tag::kNoise));
    for (auto& v : img.data) v = float(double(v) + rng.gaussian(0.0, spec.noise_sigma));
  }
  for (auto& v : img.data) v = std::clamp(v, 0.f, 1.f);
  return {std::move(img), std::move(label)};
}

double foreground_fraction(const Volume3D& label) {
  size_t count = 0;
  for (float v : label.data) count += v > 0.f;
  return double(count) / double(label.size());
}

namespace {

Vec3 random_unit(Rng& rng) {
  return normalized({rng.gaussian(0, 1), rng.gaussian(0, 1), rng.gaussian(0, 1)});
}

Vec3 clamp_into(const Vec3& p, const Dims3& dims, double margin) {
  return {std::clamp(p[0], margin, double(dims.x - 1) - margin),
          std::clamp(p[1], margin, double(dims.y - 1) - margin),
          std::clamp(p[2], margin, double(dims.z - 1) - margin)};
}

std::vector<Vec3> make_path(Rng& rng, const Dims3& dims, Vec3 start, Vec3 dir,
                            double length, int npts) {
  const double margin = 3.0;
  const double seg = length / double(npts - 1);
  const Vec3 center{(dims.x - 1) / 2.0, (dims.y - 1) / 2.0, (dims.z - 1) / 2.0};
  std::vector<Vec3> pts{clamp_into(start, dims, margin)};
  Vec3 p = pts[0];
  for (int k = 1; k < npts; ++k) {
    dir = normalized(add(dir, scale(random_unit(rng), 0.45)));
    Vec3 cand = add(p, scale(dir, seg));
    const bool outside = cand[0] < margin || cand[0] > dims.x - 1 - margin ||
                         cand[1] < margin || cand[1] > dims.y - 1 - margin ||
                         cand[2] < margin || cand[2] > dims.z - 1 - margin;
    if (outside) {
      dir = normalized(add(dir, scale(normalized(sub(center, p)), 1.4)));
      cand = add(p, scale(dir, seg));
    }
    p = clamp_into(cand, dims, margin);
    pts.push_back(p);
  }
  return pts;
}

double path_arclen(const std::vector<Vec3>& pts, std::vector<double>* cum = nullptr) {
  double s = 0;
  if (cum) cum->assign(pts.size(), 0.0);
  for (size_t i = 1; i < pts.size(); ++i) {
    s += norm(sub(pts[i], pts[i - 1]));
    if (cum) (*cum)[i] = s;
  }
  return s;
}

// Point and tangent at arc-length fraction f of a polyline.
void point_at(const std::vector<Vec3>& pts, double f, Vec3* point, Vec3* tangent) {
  std::vector<double> cum;
  const double total = path_arclen(pts, &cum);
  const double target = std::clamp(f, 0.0, 1.0) * total;
  for (size_t i = 1; i < pts.size(); ++i) {
    if (target <= cum[i] || i + 1 == pts.size()) {
      const double seg = cum[i] - cum[i - 1];
      const double t = seg > 0 ? (target - cum[i - 1]) / seg : 0.0;
      *point = add(pts[i - 1], scale(sub(pts[i], pts[i - 1]), t));
      *tangent = normalized(sub(pts[i], pts[i - 1]));
      return;
    }
  }
  *point = pts.back();
  *tangent = normalized(sub(pts.back(), pts[pts.size() - 2]));
}

PhantomSpec make_random_spec(uint64_t spec_seed, const Dims3& dims) {
  Rng rng(spec_seed);
  PhantomSpec spec;
  spec.dims = dims;
  spec.seed = spec_seed;

  const int n_tubes = 3 + int(rng.uniform_below(4));
  const double budget = rng.uniform(95.0, 140.0);
  // trunk is longest, the bifurcating child shortest
  std::vector<double> weights(n_tubes, 1.0);
  weights[0] = 1.3;
  weights[1] = 0.7;
  double wsum = 0;
  for (double w : weights) wsum += w;

  auto draw_radii = [&](double cap) {
    const double rs = rng.uniform(1.5, cap);
    const double re = std::clamp(rs + rng.uniform(-0.8, 0.8), 1.5, cap);
    return std::pair<double, double>{rs, re};
  };

  // trunk
  {
    TubeSpec t;
    const Vec3 start{rng.uniform(6, dims.x - 7), rng.uniform(6, dims.y - 7),
                     rng.uniform(6, dims.z - 7)};
    t.control_points = make_path(rng, dims, start, random_unit(rng),
                                 budget * weights[0] / wsum, 4);
    std::tie(t.radius_start, t.radius_end) = draw_radii(4.0);
    spec.tubes.push_back(std::move(t));
  }
  // bifurcating child: starts on the trunk centerline
  {
    TubeSpec t;
    Vec3 origin, tangent;
    point_at(spec.tubes[0].control_points, rng.uniform(0.35, 0.65), &origin, &tangent);
    const Vec3 dir = normalized(add(tangent, scale(random_unit(rng), 0.9)));
    t.control_points = make_path(rng, dims, origin, dir, budget * weights[1] / wsum, 3);
    const double parent_r = 0.5 * (spec.tubes[0].radius_start + spec.tubes[0].radius_end);
    t.radius_start = std::clamp(parent_r * rng.uniform(0.6, 0.9), 1.5, 4.0);
    t.radius_end = std::clamp(t.radius_start + rng.uniform(-0.6, 0.2), 1.5, 4.0);
    spec.tubes.push_back(std::move(t));
  }
  for (int i = 2; i < n_tubes; ++i) {
    TubeSpec t;
    const Vec3 start{rng.uniform(6, dims.x - 7), rng.uniform(6, dims.y - 7),
                     rng.uniform(6, dims.z - 7)};
    t.control_points = make_path(rng, dims, start, random_unit(rng),
                                 budget * weights[size_t(i)] / wsum, 4);
    std::tie(t.radius_start, t.radius_end) = draw_radii(3.2);
    spec.tubes.push_back(std::move(t));
  }
  return spec;
}

}  // namespace

Dataset default_dataset(uint64_t seed, int n_train, int n_val, int n_test) {
  require(n_train >= 1 && n_val >= 1 && n_test >= 1, Err::BadConfig,
          "train/val/test counts must be >= 1");
  const Dims3 dims{64, 64, 64};
  const uint64_t base = derive_seed(seed, seed_tag::kPhantom);

  Dataset ds;
  int global = 0;
  auto emit = [&](const std::string& role, int count, std::vector<VolumePair>& out) {
    for (int i = 0; i < count; ++i, ++global) {
      const uint64_t vol_seed = derive_seed(base, uint64_t(global));
      PhantomSpec spec;
      Volume3D img, lbl;
      bool ok = false;
      for (uint64_t attempt = 0; attempt < 32 && !ok; ++attempt) {
        spec = make_random_spec(derive_seed(vol_seed, attempt), dims);
        auto pair = generate_phantom(spec);
        const double frac = foreground_fraction(pair.second);
        if (frac >= 0.002 && frac <= 0.03) {
          img = std::move(pair.first);
          lbl = std::move(pair.second);
          ok = true;
        }
      }
      require(ok, Err::BadConfig, "could not reach target foreground fraction");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s_%03d", role.c_str(), i);
      out.push_back(VolumePair{buf, spec.seed, std::move(img), std::move(lbl)});
      ds.specs.push_back(std::move(spec));
    }
  };
  emit("train", n_train, ds.train);
  emit("val", n_val, ds.val);
  emit("test", n_test, ds.test);
  return ds;
}

void write_manifest(const Manifest& m, const std::string& path) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["dims"] = {m.dims.x, m.dims.y, m.dims.z};
  j["volumes"] = nlohmann::json::array();
  for (const auto& e : m.volumes) {
    j["volumes"].push_back({{"name", e.name},
                            {"role", e.role},
                            {"img", e.img},
                            {"lbl", e.lbl},
                            {"seed", e.seed},
                            {"foreground", e.foreground}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoFailure, "cannot read manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(Err::BadConfig, std::string("manifest parse: ") + e.what());
  }
  Manifest m;
  m.seed = j.value("seed", uint64_t(0));
  if (j.contains("dims")) {
    m.dims.x = j["dims"][0];
    m.dims.y = j["dims"][1];
    m.dims.z = j["dims"][2];
  }
  for (const auto& e : j.value("volumes", nlohmann::json::array())) {
    ManifestEntry me;
    me.name = e.value("name", "");
    me.role = e.value("role", "");
    me.img = e.value("img", "");
    me.lbl = e.value("lbl", "");
    me.seed = e.value("seed", uint64_t(0));
    me.foreground = e.value("foreground", 0.0);
    m.volumes.push_back(std::move(me));
  }
  return m;
}

}  // namespace ynet
