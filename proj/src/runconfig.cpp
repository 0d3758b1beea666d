#include "ynet/runconfig.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace ynet {

using nlohmann::json;

void RunConfig::finalize() {
  sampling.patch_size = model.patch_size;
  schedule.seed = seed;
}

RunConfig default_run_config() {
  RunConfig c;
  c.finalize();
  return c;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key))
      fail(Err::BadConfig, "unknown config key: " + prefix + key);
    (void)value;
  }
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_model(const json& j, YNetConfig& m) {
  reject_unknown(j,
                 {"activation", "n_levels", "base_kernels", "downsample",
                  "upsample", "position_site", "init", "patch_size",
                  "morphology_post"},
                 "model.");
  if (j.contains("activation")) m.activation = act_from_string(j.at("activation"));
  get_if(j, "n_levels", m.n_levels);
  get_if(j, "base_kernels", m.base_kernels);
  if (j.contains("downsample")) m.downsample = downsample_from_string(j.at("downsample"));
  if (j.contains("upsample")) m.upsample = upsample_from_string(j.at("upsample"));
  if (j.contains("position_site"))
    m.position_site = position_site_from_string(j.at("position_site"));
  if (j.contains("init")) m.init = init_from_string(j.at("init"));
  get_if(j, "patch_size", m.patch_size);
  if (j.contains("morphology_post"))
    m.morphology_post = morphology_from_string(j.at("morphology_post"));
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoFailure, "cannot read config: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(Err::BadConfig, std::string("config parse: ") + e.what());
  }

  RunConfig c = default_run_config();
  reject_unknown(j, {"seed", "threads", "model", "sampling", "schedule",
                     "phantom", "baseline"},
                 "");
  get_if(j, "seed", c.seed);
  get_if(j, "threads", c.threads);
  if (j.contains("model")) parse_model(j.at("model"), c.model);
  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    reject_unknown(s, {"stride_pos", "batch_cap"}, "sampling.");
    get_if(s, "stride_pos", c.sampling.stride_pos);
    get_if(s, "batch_cap", c.sampling.batch_cap);
  }
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    reject_unknown(s,
                   {"epochs_total", "validate_every", "lr", "beta1", "beta2",
                    "eps", "early_stop_checks", "min_improve_rel"},
                   "schedule.");
    get_if(s, "epochs_total", c.schedule.epochs_total);
    get_if(s, "validate_every", c.schedule.validate_every);
    get_if(s, "lr", c.schedule.adam.lr);
    get_if(s, "beta1", c.schedule.adam.beta1);
    get_if(s, "beta2", c.schedule.adam.beta2);
    get_if(s, "eps", c.schedule.adam.eps);
    get_if(s, "early_stop_checks", c.schedule.early_stop_checks);
    get_if(s, "min_improve_rel", c.schedule.min_improve_rel);
  }
  if (j.contains("phantom")) {
    const json& s = j.at("phantom");
    reject_unknown(s, {"n_train", "n_val", "n_test"}, "phantom.");
    get_if(s, "n_train", c.phantom.n_train);
    get_if(s, "n_val", c.phantom.n_val);
    get_if(s, "n_test", c.phantom.n_test);
  }
  if (j.contains("baseline")) {
    const json& s = j.at("baseline");
    reject_unknown(s,
                   {"phansalkar_radius", "frangi_scales", "frangi_alpha",
                    "frangi_beta", "frangi_c", "frangi_threshold"},
                   "baseline.");
    get_if(s, "phansalkar_radius", c.baseline.phansalkar_radius);
    if (s.contains("frangi_scales"))
      c.baseline.frangi.scales = s.at("frangi_scales").get<std::vector<double>>();
    get_if(s, "frangi_alpha", c.baseline.frangi.alpha);
    get_if(s, "frangi_beta", c.baseline.frangi.beta);
    get_if(s, "frangi_c", c.baseline.frangi.c);
    get_if(s, "frangi_threshold", c.baseline.frangi_threshold);
  }
  c.finalize();
  c.model.validate();
  return c;
}

void save_run_config(const RunConfig& c, const std::string& path) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["model"] = {{"activation", to_string(c.model.activation)},
                {"n_levels", c.model.n_levels},
                {"base_kernels", c.model.base_kernels},
                {"downsample", to_string(c.model.downsample)},
                {"upsample", to_string(c.model.upsample)},
                {"position_site", to_string(c.model.position_site)},
                {"init", to_string(c.model.init)},
                {"patch_size", c.model.patch_size},
                {"morphology_post", to_string(c.model.morphology_post)}};
  j["sampling"] = {{"stride_pos", c.sampling.stride_pos},
                   {"batch_cap", c.sampling.batch_cap}};
  j["schedule"] = {{"epochs_total", c.schedule.epochs_total},
                   {"validate_every", c.schedule.validate_every},
                   {"lr", c.schedule.adam.lr},
                   {"beta1", c.schedule.adam.beta1},
                   {"beta2", c.schedule.adam.beta2},
                   {"eps", c.schedule.adam.eps},
                   {"early_stop_checks", c.schedule.early_stop_checks},
                   {"min_improve_rel", c.schedule.min_improve_rel}};
  j["phantom"] = {{"n_train", c.phantom.n_train},
                  {"n_val", c.phantom.n_val},
                  {"n_test", c.phantom.n_test}};
  j["baseline"] = {{"phansalkar_radius", c.baseline.phansalkar_radius},
                   {"frangi_scales", c.baseline.frangi.scales},
                   {"frangi_alpha", c.baseline.frangi.alpha},
                   {"frangi_beta", c.baseline.frangi.beta},
                   {"frangi_c", c.baseline.frangi.c},
                   {"frangi_threshold", c.baseline.frangi_threshold}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot write config: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace ynet
