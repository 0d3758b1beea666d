#pragma once

#include <string>

#include "ynet/baselines.hpp"
#include "ynet/model.hpp"
#include "ynet/patches.hpp"
#include "ynet/trainer.hpp"

namespace ynet {

struct PhantomConfig {
  int n_train = 8, n_val = 2, n_test = 1;
};

// Every tunable of the pipeline with its default. JSON round-trips through
// load_run_config / save_run_config; unknown keys are rejected by name.
struct RunConfig {
  uint64_t seed = 7;
  int threads = 0;  // 0 = all hardware threads
  YNetConfig model;
  SamplingPlan sampling{16, 8, 2048};  // desk-scale stride; 30*stride epochs
  TrainSchedule schedule;
  PhantomConfig phantom;
  BaselineParams baseline;

  // keeps the dependent fields consistent (sampling patch = model patch,
  // schedule seed = run seed)
  void finalize();
};

RunConfig default_run_config();
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& c, const std::string& path);

}  // namespace ynet
