#pragma once

#include <cstdint>
#include <string>

#include "ynet/volume.hpp"

namespace ynet {

struct EvalReport {
  uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0, sensitivity = 0, specificity = 0, precision = 0, dsc = 0;
  bool excellent = false;  // dsc > 0.7

  uint64_t total() const { return tp + fp + fn + tn; }
};

// Voxelwise confusion counts and the five derived metrics. Conventions for
// empty denominators: if both volumes are all-zero, dsc = sensitivity =
// precision = 1; if only one side is empty the affected ratios are 0.
EvalReport evaluate(const Volume3D& pred, const Volume3D& truth);

// One CSV row: model,accuracy,sensitivity,specificity,precision,dsc
std::string eval_csv_header();
std::string eval_csv_row(const std::string& model, const EvalReport& r);

}  // namespace ynet
