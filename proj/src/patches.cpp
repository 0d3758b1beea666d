#include "ynet/patches.hpp"

#include <algorithm>
#include <cmath>

#include "ynet/rng.hpp"

namespace ynet {

std::vector<int> grid_origins(int dim, int patch, int stride, int offset) {
  require(dim >= patch, Err::VolumeTooSmall,
          "dim " + std::to_string(dim) + " < patch " + std::to_string(patch));
  require(stride >= 1 && offset >= 0, Err::UsageError, "bad stride/offset");
  std::vector<int> origins;
  for (int o = offset; o + patch <= dim; o += stride) origins.push_back(o);
  if (origins.empty() || origins.back() != dim - patch)
    origins.push_back(dim - patch);
  return origins;
}

namespace {

void copy_window(const Volume3D& v, Coord3 o, int patch, std::vector<float>& out) {
  out.resize(size_t(patch) * patch * patch);
  size_t i = 0;
  for (int z = 0; z < patch; ++z)
    for (int y = 0; y < patch; ++y) {
      const float* row = &v.at(o.x, o.y + y, o.z + z);
      std::copy(row, row + patch, out.begin() + std::ptrdiff_t(i));
      i += size_t(patch);
    }
}

bool window_has_positive(const Volume3D& lbl, Coord3 o, int patch) {
  for (int z = 0; z < patch; ++z)
    for (int y = 0; y < patch; ++y) {
      const float* row = &lbl.at(o.x, o.y + y, o.z + z);
      for (int x = 0; x < patch; ++x)
        if (row[x] > 0.f) return true;
    }
  return false;
}

std::vector<PatchRecord> extract_pass(const Volume3D& img, const Volume3D& lbl,
                                      int patch, int stride, int offset,
                                      int source_id, bool want_positive) {
  require(img.same_dims(lbl), Err::DimMismatch, "image/label dims differ");
  require(img.nx >= patch && img.ny >= patch && img.nz >= patch,
          Err::VolumeTooSmall, "volume smaller than patch");
  const auto xs = grid_origins(img.nx, patch, stride, offset);
  const auto ys = grid_origins(img.ny, patch, stride, offset);
  const auto zs = grid_origins(img.nz, patch, stride, offset);
  std::vector<PatchRecord> out;
  for (int z : zs)
    for (int y : ys)
      for (int x : xs) {
        const Coord3 o{x, y, z};
        if (window_has_positive(lbl, o, patch) != want_positive) continue;
        PatchRecord r;
        r.origin = o;
        r.source_id = source_id;
        copy_window(img, o, patch, r.image);
        copy_window(lbl, o, patch, r.label);
        out.push_back(std::move(r));
      }
  return out;
}

}  // namespace

std::vector<PatchRecord> extract_positive(const Volume3D& img, const Volume3D& lbl,
                                          int patch, int stride, int offset,
                                          int source_id) {
  return extract_pass(img, lbl, patch, stride, offset, source_id, true);
}

std::vector<PatchRecord> extract_negative(const Volume3D& img, const Volume3D& lbl,
                                          int patch, int stride, int offset,
                                          int source_id) {
  return extract_pass(img, lbl, patch, stride, offset, source_id, false);
}

size_t count_grid_candidates(Dims3 dims, int patch, int stride, int offset) {
  return grid_origins(dims.x, patch, stride, offset).size() *
         grid_origins(dims.y, patch, stride, offset).size() *
         grid_origins(dims.z, patch, stride, offset).size();
}

int estimate_negative_stride(size_t n_positive_kept, size_t n_grid_candidates,
                             int stride_pos) {
  if (n_positive_kept == 0)
    fail(Err::NoPositives, "cannot balance a volume with no positive patches");
  const double ratio = double(n_grid_candidates) / double(n_positive_kept);
  const long s = std::lround(double(stride_pos) * std::cbrt(ratio));
  return std::max<long>(stride_pos, s);
}

Batch pack_batch(const std::vector<const PatchRecord*>& records,
                 const std::vector<Dims3>& dims_by_source, int patch) {
  require(!records.empty(), Err::UsageError, "empty batch");
  const int b = int(records.size());
  Batch batch;
  batch.images = Tensor5f(b, 1, patch, patch, patch);
  batch.labels = Tensor5f(b, 1, patch, patch, patch);
  batch.origins.reserve(records.size());
  batch.vol_dims.reserve(records.size());
  batch.source_ids.reserve(records.size());
  for (int n = 0; n < b; ++n) {
    const PatchRecord& r = *records[size_t(n)];
    require(r.image.size() == batch.images.sample_size() &&
                r.label.size() == r.image.size(),
            Err::ShapeMismatch, "patch record size mismatch");
    std::copy(r.image.begin(), r.image.end(), batch.images.sample(n));
    std::copy(r.label.begin(), r.label.end(), batch.labels.sample(n));
    batch.origins.push_back(r.origin);
    batch.vol_dims.push_back(dims_by_source.at(size_t(r.source_id)));
    batch.source_ids.push_back(r.source_id);
  }
  return batch;
}

void epoch_batches(const std::vector<const VolumePair*>& dataset, int epoch,
                   const SamplingPlan& plan, uint64_t seed,
                   const std::function<void(Batch&&)>& sink) {
  require(!dataset.empty(), Err::UsageError, "empty dataset");
  require(plan.stride_pos >= 1 && plan.batch_cap >= 1, Err::BadConfig,
          "bad sampling plan");
  const int offset = epoch % plan.stride_pos;

  std::vector<Dims3> dims_by_source(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i)
    dims_by_source[i] = dataset[i]->image.dims();

  Rng rng(derive_seed(derive_seed(seed, seed_tag::kEpoch), uint64_t(epoch)));
  std::vector<int> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  rng.shuffle(order);

  for (int vi : order) {
    const VolumePair& vol = *dataset[size_t(vi)];
    auto pos = extract_positive(vol.image, vol.label, plan.patch_size,
                                plan.stride_pos, offset, vi);
    const size_t candidates =
        count_grid_candidates(vol.image.dims(), plan.patch_size, plan.stride_pos, offset);
    const int stride_neg =
        pos.empty() ? plan.stride_pos
                    : estimate_negative_stride(pos.size(), candidates, plan.stride_pos);
    auto neg = extract_negative(vol.image, vol.label, plan.patch_size, stride_neg,
                                offset, vi);

    std::vector<const PatchRecord*> all;
    all.reserve(pos.size() + neg.size());
    for (const auto& r : pos) all.push_back(&r);
    for (const auto& r : neg) all.push_back(&r);
    rng.shuffle(all);

    for (size_t at = 0; at < all.size(); at += size_t(plan.batch_cap)) {
      const size_t end = std::min(all.size(), at + size_t(plan.batch_cap));
      std::vector<const PatchRecord*> chunk(all.begin() + std::ptrdiff_t(at),
                                            all.begin() + std::ptrdiff_t(end));
      sink(pack_batch(chunk, dims_by_source, plan.patch_size));
    }
  }
}

std::vector<Batch> epoch_batches_vec(const std::vector<const VolumePair*>& dataset,
                                     int epoch, const SamplingPlan& plan,
                                     uint64_t seed) {
  std::vector<Batch> out;
  epoch_batches(dataset, epoch, plan, seed, [&](Batch&& b) { out.push_back(std::move(b)); });
  return out;
}

AsyncEpochStream::AsyncEpochStream(const std::vector<const VolumePair*>& dataset,
                                   int epoch, const SamplingPlan& plan,
                                   uint64_t seed, size_t queue_cap)
    : queue_(queue_cap) {
  producer_ = std::thread([this, dataset, epoch, plan, seed] {
    try {
      epoch_batches(dataset, epoch, plan, seed,
                    [this](Batch&& b) { queue_.push(std::move(b)); });
    } catch (...) {
      // surfaced as a short stream; the consumer re-extracts synchronously
      // if it needs the error
    }
    queue_.close();
  });
}

AsyncEpochStream::~AsyncEpochStream() {
  queue_.close();
  if (producer_.joinable()) producer_.join();
}

bool AsyncEpochStream::next(Batch& out) { return queue_.pop(out); }

}  // namespace ynet
