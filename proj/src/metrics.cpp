#include "ynet/metrics.hpp"

#include <cstdio>

namespace ynet {

EvalReport evaluate(const Volume3D& pred, const Volume3D& truth) {
  require(pred.same_dims(truth), Err::DimMismatch, "pred/truth dims differ");
  require(pred.kind == VolumeKind::Label && truth.kind == VolumeKind::Label,
          Err::UsageError, "evaluate expects label volumes");

  EvalReport r;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] > 0.f;
    const bool t = truth.data[i] > 0.f;
    if (p && t)
      ++r.tp;
    else if (p && !t)
      ++r.fp;
    else if (!p && t)
      ++r.fn;
    else
      ++r.tn;
  }

  const double total = double(r.total());
  r.accuracy = double(r.tp + r.tn) / total;
  const uint64_t truth_pos = r.tp + r.fn;
  const uint64_t truth_neg = r.tn + r.fp;
  const uint64_t pred_pos = r.tp + r.fp;
  const bool both_empty = truth_pos == 0 && pred_pos == 0;
  r.sensitivity = truth_pos > 0 ? double(r.tp) / double(truth_pos)
                                : (both_empty ? 1.0 : 0.0);
  r.specificity = truth_neg > 0 ? double(r.tn) / double(truth_neg)
                                : (pred_pos == uint64_t(total) ? 1.0 : 0.0);
  r.precision = pred_pos > 0 ? double(r.tp) / double(pred_pos)
                             : (both_empty ? 1.0 : 0.0);
  const uint64_t dsc_den = 2 * r.tp + r.fp + r.fn;
  r.dsc = dsc_den > 0 ? 2.0 * double(r.tp) / double(dsc_den) : 1.0;
  r.excellent = r.dsc > 0.7;
  return r;
}

std::string eval_csv_header() {
  return "model,accuracy,sensitivity,specificity,precision,dsc";
}

std::string eval_csv_row(const std::string& model, const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%.5f,%.5f,%.5f,%.5f,%.5f", model.c_str(),
                r.accuracy, r.sensitivity, r.specificity, r.precision, r.dsc);
  return buf;
}

}  // namespace ynet
