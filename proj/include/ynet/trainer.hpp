#pragma once

#include <functional>
#include <limits>
#include <string>

#include "ynet/model.hpp"
#include "ynet/patches.hpp"

namespace ynet {

struct TrainSchedule {
  int epochs_total = 0;  // 0 -> 30 * stride_pos
  int validate_every = 5;
  uint64_t seed = 7;
  ops::AdamHyper adam;
  // Early exit after this many consecutive validation checks without a
  // meaningful improvement; 0 disables early exit.
  int early_stop_checks = 10;
  double min_improve_rel = 1e-3;
};

struct EpochLogRow {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  bool has_val = false;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLogRow> rows;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  bool early_stopped = false;
};

struct TrainResult {
  YNetModel best;
  TrainLog log;
};

struct TrainHooks {
  // Fires whenever validation improves on the best so far (the retained
  // checkpoint); used to save the model.
  std::function<void(const YNetModel&, int epoch, double val_loss)> on_improved;
  std::function<void(const EpochLogRow&)> on_epoch;
};

// One Adam step per delivered batch; BCE is the per-voxel mean over the
// batch. Validation runs every validate_every epochs and at the final epoch;
// the checkpoint with the lowest validation loss is retained. Throws
// DivergedLoss if any loss becomes non-finite.
TrainResult train(const YNetModel& init,
                  const std::vector<const VolumePair*>& train_set,
                  const std::vector<const VolumePair*>& val_set,
                  const TrainSchedule& sched, const SamplingPlan& plan,
                  int threads = 1, const TrainHooks* hooks = nullptr);

// Mean per-voxel BCE over all patches extracted at offset 0 (positive pass
// plus balanced negative pass); does not mutate the model.
double validation_loss(const YNetModel& m,
                       const std::vector<const VolumePair*>& val_set,
                       const SamplingPlan& plan, int threads = 1);

// CSV: epoch,train_loss,val_loss,seconds with val_loss blank on epochs
// without validation.
void write_train_log_csv(const TrainLog& log, const std::string& path);

std::vector<const VolumePair*> dataset_view(const std::vector<VolumePair>& v);

}  // namespace ynet
