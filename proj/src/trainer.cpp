#include "ynet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ynet {

namespace {

// Batches are processed in fixed sub-chunks to bound activation memory; the
// gradient is still the whole-batch mean, so chunking does not change the
// optimization.
constexpr int kChunk = 32;

Batch slice_batch(const Batch& b, int a, int e) {
  Batch out;
  const int n = e - a;
  const int p = b.images.d;
  out.images = Tensor5f(n, 1, p, p, p);
  out.labels = Tensor5f(n, 1, p, p, p);
  for (int i = 0; i < n; ++i) {
    std::copy(b.images.sample(a + i), b.images.sample(a + i) + b.images.sample_size(),
              out.images.sample(i));
    std::copy(b.labels.sample(a + i), b.labels.sample(a + i) + b.labels.sample_size(),
              out.labels.sample(i));
  }
  auto sub = [&](const auto& v) {
    return std::decay_t<decltype(v)>(v.begin() + a, v.begin() + e);
  };
  out.origins = sub(b.origins);
  out.vol_dims = sub(b.vol_dims);
  out.source_ids = sub(b.source_ids);
  return out;
}

// Returns the BCE sum over the batch; accumulates parameter gradients of
// (batch BCE sum) * scale into grad_acc when it is non-null.
double batch_pass(const YNetModel& m, const Batch& batch, double scale,
                  std::vector<ops::ConvParamsF>* grad_acc, int threads) {
  double loss_sum = 0.0;
  const int b = batch.size();
  for (int at = 0; at < b; at += kChunk) {
    const int end = std::min(b, at + kChunk);
    const Batch chunk = slice_batch(batch, at, end);
    YNetModel::Cache cache;
    const Tensor5f out = m.forward(chunk.images, chunk.origins, chunk.vol_dims,
                                   grad_acc ? &cache : nullptr, threads);
    loss_sum += ops::bce_loss(out, chunk.labels) * double(out.size());
    if (grad_acc) {
      const Tensor5f g = ops::bce_sum_backward(out, chunk.labels, scale);
      auto grads = m.backward(cache, g, threads);
      for (size_t l = 0; l < grads.size(); ++l) {
        for (size_t i = 0; i < grads[l].w.size(); ++i)
          (*grad_acc)[l].w[i] += grads[l].w[i];
        for (size_t i = 0; i < grads[l].b.size(); ++i)
          (*grad_acc)[l].b[i] += grads[l].b[i];
      }
    }
  }
  return loss_sum;
}

}  // namespace

double validation_loss(const YNetModel& m,
                       const std::vector<const VolumePair*>& val_set,
                       const SamplingPlan& plan, int threads) {
  require(!val_set.empty(), Err::UsageError, "empty validation set");
  std::vector<Dims3> dims_by_source(val_set.size());
  for (size_t i = 0; i < val_set.size(); ++i)
    dims_by_source[i] = val_set[i]->image.dims();

  double loss_sum = 0.0;
  size_t voxels = 0;
  for (size_t vi = 0; vi < val_set.size(); ++vi) {
    const VolumePair& vol = *val_set[vi];
    auto pos = extract_positive(vol.image, vol.label, plan.patch_size,
                                plan.stride_pos, 0, int(vi));
    const size_t candidates =
        count_grid_candidates(vol.image.dims(), plan.patch_size, plan.stride_pos, 0);
    const int stride_neg =
        pos.empty() ? plan.stride_pos
                    : estimate_negative_stride(pos.size(), candidates, plan.stride_pos);
    auto neg = extract_negative(vol.image, vol.label, plan.patch_size, stride_neg,
                                0, int(vi));
    std::vector<const PatchRecord*> all;
    for (const auto& r : pos) all.push_back(&r);
    for (const auto& r : neg) all.push_back(&r);
    if (all.empty()) continue;
    const Batch batch = pack_batch(all, dims_by_source, plan.patch_size);
    loss_sum += batch_pass(m, batch, 0.0, nullptr, threads);
    voxels += batch.images.size();
  }
  require(voxels > 0, Err::UsageError, "validation produced no patches");
  return loss_sum / double(voxels);
}

TrainResult train(const YNetModel& init,
                  const std::vector<const VolumePair*>& train_set,
                  const std::vector<const VolumePair*>& val_set,
                  const TrainSchedule& sched, const SamplingPlan& plan,
                  int threads, const TrainHooks* hooks) {
  require(!train_set.empty() && !val_set.empty(), Err::UsageError,
          "train and validation sets must be non-empty");
  require(sched.validate_every >= 1, Err::BadConfig, "validate_every >= 1");
  const int epochs_total =
      sched.epochs_total > 0 ? sched.epochs_total : 30 * plan.stride_pos;

  YNetModel model = init;
  ops::Adam<float> adam(model.params, sched.adam);
  std::vector<ops::ConvParamsF> grad_acc;
  grad_acc.reserve(model.params.size());
  for (const auto& p : model.params) grad_acc.emplace_back(p.cout, p.cin);

  TrainResult result;
  result.best = model;
  TrainLog& log = result.log;
  int stale_checks = 0;

  for (int epoch = 1; epoch <= epochs_total; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    size_t voxels = 0;

    auto train_on = [&](Batch&& batch) {
      for (auto& g : grad_acc) g.set_zero();
      const double scale = 1.0 / double(batch.images.size());
      loss_sum += batch_pass(model, batch, scale, &grad_acc, threads);
      voxels += batch.images.size();
      adam.step(model.params, grad_acc);
    };
    if (threads > 1) {
      AsyncEpochStream stream(train_set, epoch - 1, plan, sched.seed);
      Batch b;
      while (stream.next(b)) train_on(std::move(b));
    } else {
      epoch_batches(train_set, epoch - 1, plan, sched.seed,
                    [&](Batch&& b) { train_on(std::move(b)); });
    }
    require(voxels > 0, Err::UsageError, "epoch produced no patches");

    EpochLogRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / double(voxels);
    if (!std::isfinite(row.train_loss))
      fail(Err::DivergedLoss, "training loss is not finite at epoch " +
                                  std::to_string(epoch));

    const bool do_val = epoch % sched.validate_every == 0 || epoch == epochs_total;
    bool stop = false;
    if (do_val) {
      row.has_val = true;
      row.val_loss = validation_loss(model, val_set, plan, threads);
      if (!std::isfinite(row.val_loss))
        fail(Err::DivergedLoss, "validation loss is not finite at epoch " +
                                    std::to_string(epoch));
      const double prev_best = log.best_val_loss;
      if (row.val_loss < prev_best) {
        log.best_val_loss = row.val_loss;
        log.best_epoch = epoch;
        result.best = model;
        if (hooks && hooks->on_improved)
          hooks->on_improved(result.best, epoch, row.val_loss);
      }
      const bool meaningful =
          !std::isfinite(prev_best) ||
          prev_best - row.val_loss > sched.min_improve_rel * std::abs(prev_best);
      if (meaningful) {
        stale_checks = 0;
      } else if (++stale_checks >= sched.early_stop_checks &&
                 sched.early_stop_checks > 0) {
        log.early_stopped = true;
        stop = true;
      }
    }
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.rows.push_back(row);
    log.epochs_run = epoch;
    if (hooks && hooks->on_epoch) hooks->on_epoch(row);
    if (stop) break;
  }
  return result;
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot write train log: " + path);
  out << "epoch,train_loss,val_loss,seconds\n";
  char buf[160];
  for (const auto& r : log.rows) {
    if (r.has_val)
      std::snprintf(buf, sizeof buf, "%d,%.8f,%.8f,%.3f\n", r.epoch, r.train_loss,
                    r.val_loss, r.seconds);
    else
      std::snprintf(buf, sizeof buf, "%d,%.8f,,%.3f\n", r.epoch, r.train_loss,
                    r.seconds);
    out << buf;
  }
}

std::vector<const VolumePair*> dataset_view(const std::vector<VolumePair>& v) {
  std::vector<const VolumePair*> out;
  out.reserve(v.size());
  for (const auto& p : v) out.push_back(&p);
  return out;
}

}  // namespace ynet
