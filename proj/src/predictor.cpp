#include "ynet/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "ynet/patches.hpp"

namespace ynet {

namespace {

constexpr int kPredictBatch = 32;

std::vector<Coord3> tiling_origins(Dims3 dims, int patch) {
  const auto xs = grid_origins(dims.x, patch, patch / 2, 0);
  const auto ys = grid_origins(dims.y, patch, patch / 2, 0);
  const auto zs = grid_origins(dims.z, patch, patch / 2, 0);
  std::vector<Coord3> out;
  out.reserve(xs.size() * ys.size() * zs.size());
  for (int z : zs)
    for (int y : ys)
      for (int x : xs) out.push_back({x, y, z});
  return out;
}

}  // namespace

Volume3D coverage_map(Dims3 dims, int patch_size) {
  Volume3D cov(dims.x, dims.y, dims.z, VolumeKind::Intensity, 0.f);
  for (const Coord3& o : tiling_origins(dims, patch_size))
    for (int z = 0; z < patch_size; ++z)
      for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
          cov.at(o.x + x, o.y + y, o.z + z) += 1.f;
  return cov;
}

Volume3D predict_volume(const PatchFn& fn, const Volume3D& vol, int patch_size,
                        int threads) {
  require(vol.nx >= patch_size && vol.ny >= patch_size && vol.nz >= patch_size,
          Err::VolumeTooSmall, "volume smaller than one patch");
  const auto origins = tiling_origins(vol.dims(), patch_size);

  Volume3D sum(vol.nx, vol.ny, vol.nz, VolumeKind::Intensity, 0.f);
  Volume3D cov(vol.nx, vol.ny, vol.nz, VolumeKind::Intensity, 0.f);

  const Dims3 vd = vol.dims();
  for (size_t at = 0; at < origins.size(); at += kPredictBatch) {
    const size_t end = std::min(origins.size(), at + kPredictBatch);
    const int b = int(end - at);
    Tensor5f batch(b, 1, patch_size, patch_size, patch_size);
    std::vector<Coord3> os(origins.begin() + std::ptrdiff_t(at),
                           origins.begin() + std::ptrdiff_t(end));
    std::vector<Dims3> ds(size_t(b), vd);
    for (int n = 0; n < b; ++n) {
      const Coord3 o = os[size_t(n)];
      float* dst = batch.sample(n);
      for (int z = 0; z < patch_size; ++z)
        for (int y = 0; y < patch_size; ++y) {
          const float* row = &vol.at(o.x, o.y + y, o.z + z);
          std::copy(row, row + patch_size, dst);
          dst += patch_size;
        }
    }
    const Tensor5f out = fn(batch, os, ds);
    require(out.same_shape(batch), Err::ShapeMismatch,
            "patch predictor changed the batch shape");
    for (int n = 0; n < b; ++n) {
      const Coord3 o = os[size_t(n)];
      const float* src = out.sample(n);
      for (int z = 0; z < patch_size; ++z)
        for (int y = 0; y < patch_size; ++y) {
          float* srow = &sum.at(o.x, o.y + y, o.z + z);
          float* crow = &cov.at(o.x, o.y + y, o.z + z);
          for (int x = 0; x < patch_size; ++x) {
            srow[x] += src[x];
            crow[x] += 1.f;
          }
          src += patch_size;
        }
    }
  }

  Volume3D prob(vol.nx, vol.ny, vol.nz, VolumeKind::Probability, 0.f);
  prob.sx = vol.sx;
  prob.sy = vol.sy;
  prob.sz = vol.sz;
  for (size_t i = 0; i < prob.size(); ++i) {
    require(cov.data[i] >= 1.f, Err::OutOfBounds, "uncovered voxel in tiling");
    prob.data[i] = sum.data[i] / cov.data[i];
  }
  (void)threads;
  return prob;
}

Volume3D predict_volume(const YNetModel& m, const Volume3D& vol, int threads) {
  PatchFn fn = [&](const Tensor5f& batch, const std::vector<Coord3>& os,
                   const std::vector<Dims3>& ds) {
    return m.forward(batch, os, ds, nullptr, threads);
  };
  return predict_volume(fn, vol, m.config.patch_size, threads);
}

double choose_threshold(
    const std::vector<std::pair<const Volume3D*, const Volume3D*>>& prob_label_pairs,
    double grid_step) {
  require(!prob_label_pairs.empty(), Err::UsageError, "no calibration pairs");
  const int cells = int(std::lround(1.0 / grid_step));
  require(cells >= 1 && std::abs(cells * grid_step - 1.0) < 1e-9, Err::UsageError,
          "grid_step must divide 1");
  std::vector<double> grid(size_t(cells) + 1);
  for (int k = 0; k <= cells; ++k) grid[size_t(k)] = double(k) * grid_step;

  // counts of (probability cell, truth) over all pairs; cell k holds
  // probabilities in [grid[k], grid[k+1])
  std::vector<uint64_t> fg(size_t(cells) + 1, 0), bg(size_t(cells) + 1, 0);
  for (const auto& [prob, label] : prob_label_pairs) {
    require(prob->same_dims(*label), Err::DimMismatch, "prob/label dims differ");
    for (size_t i = 0; i < prob->size(); ++i) {
      const double p = double(prob->data[i]);
      int c = std::clamp(int(std::floor(p / grid_step)), 0, cells);
      while (c < cells && p >= grid[size_t(c) + 1]) ++c;
      while (c > 0 && p < grid[size_t(c)]) --c;
      (label->data[i] > 0.f ? fg : bg)[size_t(c)] += 1;
    }
  }

  uint64_t fg_total = 0, bg_total = 0;
  for (int k = 0; k <= cells; ++k) {
    fg_total += fg[size_t(k)];
    bg_total += bg[size_t(k)];
  }
  const double total = double(fg_total + bg_total);

  // predicted-positive counts for threshold grid[k] are the suffix sums
  uint64_t fg_suffix = 0, bg_suffix = 0;
  std::vector<double> acc(size_t(cells) + 1, 0.0);
  for (int k = cells; k >= 0; --k) {
    fg_suffix += fg[size_t(k)];
    bg_suffix += bg[size_t(k)];
    const uint64_t tp = fg_suffix;
    const uint64_t tn = bg_total - bg_suffix;
    acc[size_t(k)] = double(tp + tn) / total;
  }
  int best = 0;
  for (int k = 1; k <= cells; ++k)
    if (acc[size_t(k)] > acc[size_t(best)]) best = k;  // ties keep smaller t
  return grid[size_t(best)];
}

double calibrate_threshold(const YNetModel& m,
                           const std::vector<const VolumePair*>& val_pairs,
                           double grid_step, int threads) {
  require(!val_pairs.empty(), Err::UsageError, "no validation pairs");
  std::vector<Volume3D> probs;
  probs.reserve(val_pairs.size());
  for (const VolumePair* p : val_pairs)
    probs.push_back(predict_volume(m, p->image, threads));
  std::vector<std::pair<const Volume3D*, const Volume3D*>> pairs;
  for (size_t i = 0; i < probs.size(); ++i)
    pairs.emplace_back(&probs[i], &val_pairs[i]->label);
  return choose_threshold(pairs, grid_step);
}

Volume3D binarize(const Volume3D& prob, double threshold) {
  require(threshold >= 0.0 && threshold <= 1.0, Err::UsageError,
          "threshold outside [0,1]");
  Volume3D out(prob.nx, prob.ny, prob.nz, VolumeKind::Label, 0.f);
  out.sx = prob.sx;
  out.sy = prob.sy;
  out.sz = prob.sz;
  for (size_t i = 0; i < prob.size(); ++i)
    out.data[i] = double(prob.data[i]) >= threshold ? 1.f : 0.f;
  return out;
}

namespace {

Volume3D cross_op(const Volume3D& in, bool dilate) {
  Volume3D out(in.nx, in.ny, in.nz, VolumeKind::Label, 0.f);
  auto get = [&](int x, int y, int z) -> float {
    if (x < 0 || y < 0 || z < 0 || x >= in.nx || y >= in.ny || z >= in.nz)
      return 0.f;
    return in.at(x, y, z);
  };
  for (int z = 0; z < in.nz; ++z)
    for (int y = 0; y < in.ny; ++y)
      for (int x = 0; x < in.nx; ++x) {
        const float vals[7] = {get(x, y, z),     get(x - 1, y, z), get(x + 1, y, z),
                               get(x, y - 1, z), get(x, y + 1, z), get(x, y, z - 1),
                               get(x, y, z + 1)};
        bool any = false, all = true;
        for (float v : vals) {
          any |= v > 0.f;
          all &= v > 0.f;
        }
        out.at(x, y, z) = (dilate ? any : all) ? 1.f : 0.f;
      }
  return out;
}

}  // namespace

Volume3D morphology(const Volume3D& lbl, Morphology op) {
  require(lbl.kind == VolumeKind::Label, Err::UsageError,
          "morphology expects a label volume");
  switch (op) {
    case Morphology::None: return lbl;
    case Morphology::Closing: return cross_op(cross_op(lbl, true), false);
    case Morphology::Opening: return cross_op(cross_op(lbl, false), true);
  }
  return lbl;
}

}  // namespace ynet
