#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ynet/model.hpp"
#include "ynet/phantom.hpp"
#include "ynet/volume.hpp"

namespace ynet {

// Patch-level predictor: (B,1,p,p,p) batch plus per-patch origin/volume dims
// in, same-shape probabilities out. Lets tests drive the assembly with stubs.
using PatchFn = std::function<Tensor5f(const Tensor5f&, const std::vector<Coord3>&,
                                       const std::vector<Dims3>&)>;

// Half-overlap tiling (stride = patch/2, final origin snapped to dim-patch),
// per-voxel mean over covering patches.
Volume3D predict_volume(const PatchFn& fn, const Volume3D& vol, int patch_size,
                        int threads = 1);
Volume3D predict_volume(const YNetModel& m, const Volume3D& vol, int threads = 1);

// Coverage counts of the tiling grid, for conservation checks.
Volume3D coverage_map(Dims3 dims, int patch_size);

// Scans thresholds {0, step, ..., 1} and returns the one maximizing voxel
// accuracy pooled over the pairs; ties go to the smaller threshold.
double choose_threshold(
    const std::vector<std::pair<const Volume3D*, const Volume3D*>>& prob_label_pairs,
    double grid_step = 0.01);

// Predicts every validation image, then choose_threshold against its label.
double calibrate_threshold(const YNetModel& m,
                           const std::vector<const VolumePair*>& val_pairs,
                           double grid_step = 0.01, int threads = 1);

// voxel = 1 iff p >= t
Volume3D binarize(const Volume3D& prob, double threshold);

// 6-connectivity cross structuring element; outside the volume counts as 0.
Volume3D morphology(const Volume3D& lbl, Morphology op);

}  // namespace ynet
