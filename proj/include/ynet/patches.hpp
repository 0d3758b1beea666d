#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <thread>
#include <vector>

#include "ynet/phantom.hpp"
#include "ynet/tensor.hpp"

namespace ynet {

struct PatchRecord {
  std::vector<float> image, label;  // patch^3 each, x-fastest
  Coord3 origin;                    // minimum corner in the source volume
  int source_id = -1;
};

struct SamplingPlan {
  int patch_size = 16;
  int stride_pos = 20;
  int batch_cap = 2048;
};

// Grid origins along one axis: offset, offset+stride, ... while the window
// fits, with a final origin snapped to dim-patch so the last window ends at
// the volume edge.
std::vector<int> grid_origins(int dim, int patch, int stride, int offset);

// Positive pass: keep windows whose label patch contains at least one 1.
std::vector<PatchRecord> extract_positive(const Volume3D& img, const Volume3D& lbl,
                                          int patch, int stride, int offset,
                                          int source_id = -1);
// Negative pass: keep all-zero-label windows on the (coarser) grid.
std::vector<PatchRecord> extract_negative(const Volume3D& img, const Volume3D& lbl,
                                          int patch, int stride, int offset,
                                          int source_id = -1);

size_t count_grid_candidates(Dims3 dims, int patch, int stride, int offset);

// stride_neg = max(stride_pos, round(stride_pos * (candidates/kept)^(1/3))).
int estimate_negative_stride(size_t n_positive_kept, size_t n_grid_candidates,
                             int stride_pos);

struct Batch {
  Tensor5f images;  // (B, 1, p, p, p)
  Tensor5f labels;
  std::vector<Coord3> origins;
  std::vector<Dims3> vol_dims;
  std::vector<int> source_ids;
  int size() const { return images.n; }
};

Batch pack_batch(const std::vector<const PatchRecord*>& records,
                 const std::vector<Dims3>& dims_by_source, int patch);

// Canonical per-epoch batch order: offset = epoch mod stride_pos, volume
// order shuffled by a seeded permutation, per volume the positive+negative
// union shuffled and cut into batches of at most batch_cap. The sink receives
// batches in this order. Volumes whose label is empty skip balancing and use
// stride_pos for the negative pass.
void epoch_batches(const std::vector<const VolumePair*>& dataset, int epoch,
                   const SamplingPlan& plan, uint64_t seed,
                   const std::function<void(Batch&&)>& sink);

std::vector<Batch> epoch_batches_vec(const std::vector<const VolumePair*>& dataset,
                                     int epoch, const SamplingPlan& plan,
                                     uint64_t seed);

template <class T>
class BoundedQueue {
public:
  explicit BoundedQueue(size_t cap) : cap_(cap) {}

  bool push(T&& item) {
    std::unique_lock<std::mutex> lk(m_);
    not_full_.wait(lk, [&] { return q_.size() < cap_ || closed_; });
    if (closed_) return false;
    q_.push(std::move(item));
    lk.unlock();
    not_empty_.notify_one();
    return true;
  }

  bool pop(T& out) {
    std::unique_lock<std::mutex> lk(m_);
    not_empty_.wait(lk, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return false;
    out = std::move(q_.front());
    q_.pop();
    lk.unlock();
    not_full_.notify_one();
    return true;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(m_);
      closed_ = true;
    }
    not_full_.notify_all();
    not_empty_.notify_all();
  }

private:
  size_t cap_;
  bool closed_ = false;
  std::queue<T> q_;
  std::mutex m_;
  std::condition_variable not_full_, not_empty_;
};

// Producer thread fills a bounded queue with the canonical batch order, so
// extraction of batch k+1 overlaps consumption of batch k; the delivered
// sequence equals epoch_batches_vec exactly.
class AsyncEpochStream {
public:
  AsyncEpochStream(const std::vector<const VolumePair*>& dataset, int epoch,
                   const SamplingPlan& plan, uint64_t seed, size_t queue_cap = 2);
  ~AsyncEpochStream();

  AsyncEpochStream(const AsyncEpochStream&) = delete;
  AsyncEpochStream& operator=(const AsyncEpochStream&) = delete;

  bool next(Batch& out);

private:
  BoundedQueue<Batch> queue_;
  std::thread producer_;
};

}  // namespace ynet
