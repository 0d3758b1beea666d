// Command-line surface: phantom, train, predict, baseline, eval, mip.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "ynet/baselines.hpp"
#include "ynet/kernels.hpp"
#include "ynet/metrics.hpp"
#include "ynet/model.hpp"
#include "ynet/parallel.hpp"
#include "ynet/patches.hpp"
#include "ynet/phantom.hpp"
#include "ynet/predictor.hpp"
#include "ynet/runconfig.hpp"
#include "ynet/trainer.hpp"
#include "ynet/volume.hpp"

namespace fs = std::filesystem;
using namespace ynet;

namespace {

std::string stem_of(const std::string& path) {
  std::string s = fs::path(path).filename().string();
  for (const char* suffix : {".yvol", ".img", ".lbl", ".prob", ".pred"}) {
    if (s.size() > std::strlen(suffix) &&
        s.compare(s.size() - std::strlen(suffix), std::string::npos, suffix) == 0)
      s.resize(s.size() - std::strlen(suffix));
  }
  return s;
}

Dataset load_dataset(const std::string& dir) {
  const Manifest m = read_manifest((fs::path(dir) / "manifest.json").string());
  Dataset ds;
  for (const auto& e : m.volumes) {
    VolumePair p;
    p.name = e.name;
    p.seed = e.seed;
    p.image = read_volume((fs::path(dir) / e.img).string());
    p.label = read_volume((fs::path(dir) / e.lbl).string());
    if (e.role == "train")
      ds.train.push_back(std::move(p));
    else if (e.role == "val")
      ds.val.push_back(std::move(p));
    else if (e.role == "test")
      ds.test.push_back(std::move(p));
    else
      fail(Err::BadConfig, "manifest role: " + e.role);
  }
  return ds;
}

void write_mips(const Volume3D& v, const fs::path& dir, const std::string& stem) {
  Volume3D view = v;
  if (view.kind == VolumeKind::Label) view.kind = VolumeKind::Intensity;
  write_pgm(render_mip(view, Axis::X), (dir / (stem + "_x.pgm")).string());
  write_pgm(render_mip(view, Axis::Y), (dir / (stem + "_y.pgm")).string());
  write_pgm(render_mip(view, Axis::Z), (dir / (stem + "_z.pgm")).string());
}

void cmd_phantom(const RunConfig& cfg, const std::string& out_dir, bool force) {
  const fs::path out(out_dir);
  if (fs::exists(out) && !fs::is_empty(out) && !force)
    fail(Err::UsageError, "output directory exists and is not empty (use --force)");
  fs::create_directories(out);

  const Dataset ds = default_dataset(cfg.seed, cfg.phantom.n_train,
                                     cfg.phantom.n_val, cfg.phantom.n_test);
  Manifest m;
  m.seed = cfg.seed;
  m.dims = {64, 64, 64};
  auto emit = [&](const std::vector<VolumePair>& list, const char* role) {
    for (const auto& p : list) {
      ManifestEntry e;
      e.name = p.name;
      e.role = role;
      e.seed = p.seed;
      e.img = p.name + ".img.yvol";
      e.lbl = p.name + ".lbl.yvol";
      e.foreground = foreground_fraction(p.label);
      write_volume(p.image, (out / e.img).string());
      write_volume(p.label, (out / e.lbl).string());
      m.volumes.push_back(std::move(e));
    }
  };
  emit(ds.train, "train");
  emit(ds.val, "val");
  emit(ds.test, "test");
  write_manifest(m, (out / "manifest.json").string());
  save_run_config(cfg, (out / "effective_config.json").string());
  std::cout << "wrote " << m.volumes.size() << " phantom pairs to " << out_dir
            << "\n";
}

void cmd_train(const RunConfig& cfg, const std::string& data_dir,
               const std::string& out_dir) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const Dataset ds = load_dataset(data_dir);
  require(!ds.train.empty() && !ds.val.empty(), Err::UsageError,
          "dataset needs train and val volumes");

  const int threads = effective_threads(cfg.threads);
  YNetModel model = build_model<float>(cfg.model, cfg.seed);
  std::cout << "model parameters: " << model.parameter_count() << "\n";

  const std::string ckpt = (out / "best.ynet").string();
  TrainHooks hooks;
  hooks.on_improved = [&](const YNetModel& m, int epoch, double val) {
    save_checkpoint(m, ckpt);
    std::cout << "epoch " << epoch << ": validation improved to " << val
              << ", checkpoint saved\n";
  };
  hooks.on_epoch = [&](const EpochLogRow& r) {
    std::printf("epoch %d: train %.6f%s%s (%.1fs)\n", r.epoch, r.train_loss,
                r.has_val ? " val " : "",
                r.has_val ? std::to_string(r.val_loss).c_str() : "", r.seconds);
    std::fflush(stdout);
  };

  const TrainResult result =
      train(model, dataset_view(ds.train), dataset_view(ds.val), cfg.schedule,
            cfg.sampling, threads, &hooks);
  write_train_log_csv(result.log, (out / "train_log.csv").string());
  save_run_config(cfg, (out / "effective_config.json").string());
  std::cout << "best epoch " << result.log.best_epoch << " validation loss "
            << result.log.best_val_loss << "\n";
}

void cmd_predict(const std::string& checkpoint, const std::string& in_path,
                 const std::string& out_dir, std::optional<double> threshold,
                 const std::string& data_dir, std::optional<Morphology> morph_override,
                 int threads_requested) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const YNetModel model = load_checkpoint(checkpoint);
  const Volume3D vol = read_volume(in_path);
  const int threads = effective_threads(threads_requested);

  double t;
  std::string source;
  if (threshold) {
    require(*threshold >= 0 && *threshold <= 1, Err::UsageError,
            "threshold outside [0,1]");
    t = *threshold;
    source = "flag";
  } else {
    require(!data_dir.empty(), Err::UsageError,
            "need --threshold or --data with validation pairs");
    const Dataset ds = load_dataset(data_dir);
    require(!ds.val.empty(), Err::UsageError, "dataset has no validation pairs");
    t = calibrate_threshold(model, dataset_view(ds.val), 0.01, threads);
    source = "calibrated";
  }

  const Volume3D prob = predict_volume(model, vol, threads);
  Volume3D pred = binarize(prob, t);
  const Morphology morph =
      morph_override ? *morph_override : model.config.morphology_post;
  pred = morphology(pred, morph);

  const std::string stem = stem_of(in_path);
  write_volume(prob, (out / (stem + ".prob.yvol")).string());
  write_volume(pred, (out / (stem + ".pred.yvol")).string());
  write_mips(prob, out, stem + ".prob");
  write_mips(pred, out, stem + ".pred");

  nlohmann::json j{{"threshold", t},
                   {"source", source},
                   {"morphology", to_string(morph)},
                   {"input", in_path}};
  std::ofstream side((out / (stem + ".threshold.json")).string(), std::ios::trunc);
  side << j.dump(2) << "\n";
  std::cout << "threshold " << t << " (" << source << ")\n";
}

void cmd_baseline(const RunConfig& cfg, const std::string& in_path,
                  const std::string& which, const std::string& out_dir,
                  std::optional<double> threshold, const std::string& data_dir) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const Volume3D vol = read_volume(in_path);
  const std::string stem = stem_of(in_path);
  nlohmann::json side{{"method", which}, {"input", in_path}};

  Volume3D label;
  if (which == "renyi") {
    const int bin = renyi_threshold(Histogram256::of(vol));
    BaselineParams p = cfg.baseline;
    label = run_baseline(vol, BaselineKind::Renyi, p);
    side["bin"] = bin;
    side["cut"] = bin_upper_value(bin);
  } else if (which == "phansalkar") {
    label = run_baseline(vol, BaselineKind::Phansalkar, cfg.baseline);
    side["window_radius"] = cfg.baseline.phansalkar_radius;
  } else if (which == "frangi") {
    const Volume3D ves = frangi_vesselness(vol, cfg.baseline.frangi);
    write_volume(ves, (out / (stem + ".frangi.prob.yvol")).string());
    double t;
    if (threshold) {
      t = *threshold;
      side["threshold_source"] = "flag";
    } else if (!data_dir.empty()) {
      const Dataset ds = load_dataset(data_dir);
      require(!ds.val.empty(), Err::UsageError, "dataset has no validation pairs");
      std::vector<Volume3D> maps;
      maps.reserve(ds.val.size());
      for (const auto& p : ds.val)
        maps.push_back(frangi_vesselness(p.image, cfg.baseline.frangi));
      std::vector<std::pair<const Volume3D*, const Volume3D*>> pairs;
      for (size_t i = 0; i < maps.size(); ++i)
        pairs.emplace_back(&maps[i], &ds.val[i].label);
      t = choose_threshold(pairs, 0.01);
      side["threshold_source"] = "calibrated";
    } else {
      t = cfg.baseline.frangi_threshold;
      side["threshold_source"] = "default";
    }
    label = binarize(ves, t);
    side["threshold"] = t;
  } else {
    fail(Err::UsageError, "unknown baseline: " + which);
  }
  write_volume(label, (out / (stem + "." + which + ".yvol")).string());
  std::ofstream sidef((out / (stem + "." + which + ".json")).string(),
                      std::ios::trunc);
  sidef << side.dump(2) << "\n";
  std::cout << "wrote " << which << " baseline for " << stem << "\n";
}

void cmd_eval(const std::string& pred_path, const std::string& truth_path,
              const std::string& model_name, const std::string& out_file) {
  const Volume3D pred = read_volume(pred_path);
  const Volume3D truth = read_volume(truth_path);
  require(pred.same_dims(truth), Err::UsageError, "pred/truth dims differ");
  require(pred.kind == VolumeKind::Label && truth.kind == VolumeKind::Label,
          Err::UsageError, "eval expects label volumes");
  const EvalReport r = evaluate(pred, truth);
  const std::string header = eval_csv_header();
  const std::string row = eval_csv_row(model_name, r);
  std::cout << header << "\n" << row << "\n";
  if (r.excellent) std::cout << "# dsc > 0.7: excellent agreement\n";
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::trunc);
    if (!out) fail(Err::IoFailure, "cannot write: " + out_file);
    out << header << "\n" << row << "\n";
  }
}

void cmd_mip(const std::string& in_path, const std::string& out_dir,
             const std::string& axis) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const Volume3D vol = read_volume(in_path);
  Volume3D view = vol;
  if (view.kind == VolumeKind::Label) view.kind = VolumeKind::Intensity;
  const std::string stem = stem_of(in_path);
  auto one = [&](Axis a, const char* suffix) {
    write_pgm(render_mip(view, a), (out / (stem + "_" + suffix + ".pgm")).string());
  };
  if (axis == "all" || axis == "x") one(Axis::X, "x");
  if (axis == "all" || axis == "y") one(Axis::Y, "y");
  if (axis == "all" || axis == "z") one(Axis::Z, "z");
  require(axis == "all" || axis == "x" || axis == "y" || axis == "z",
          Err::UsageError, "axis must be x, y, z or all");
}

struct FlagBag {
  std::string config_path;
  uint64_t seed = 0;
  int threads = -1;
  int stride = 0, batch_cap = 0, epochs = -1, levels = 0, base_kernels = 0;
  int early_stop = -1;
  int train_n = 0, val_n = 0, test_n = 0;
  double lr = 0;
  std::string activation, position_site, downsample, upsample, init, morphology;
  bool no_simd = false;
};

void add_common_flags(CLI::App* cmd, FlagBag& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "top-level seed");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--no-simd", f.no_simd, "force the scalar kernel backend");
}

bool provided(const CLI::App* cmd, const std::string& name) {
  const CLI::Option* o = cmd->get_option_no_throw(name);
  return o && o->count() > 0;
}

RunConfig resolve_config(const CLI::App* cmd, const FlagBag& f) {
  RunConfig cfg = f.config_path.empty() ? default_run_config()
                                        : load_run_config(f.config_path);
  if (provided(cmd, "--seed")) cfg.seed = f.seed;
  if (provided(cmd, "--threads")) cfg.threads = f.threads;
  if (provided(cmd, "--stride")) cfg.sampling.stride_pos = f.stride;
  if (provided(cmd, "--batch-cap")) cfg.sampling.batch_cap = f.batch_cap;
  if (provided(cmd, "--epochs")) cfg.schedule.epochs_total = f.epochs;
  if (provided(cmd, "--levels")) cfg.model.n_levels = f.levels;
  if (provided(cmd, "--base-kernels")) cfg.model.base_kernels = f.base_kernels;
  if (provided(cmd, "--early-stop-checks")) cfg.schedule.early_stop_checks = f.early_stop;
  if (provided(cmd, "--lr")) cfg.schedule.adam.lr = f.lr;
  if (provided(cmd, "--activation")) cfg.model.activation = act_from_string(f.activation);
  if (provided(cmd, "--position-site"))
    cfg.model.position_site = position_site_from_string(f.position_site);
  if (provided(cmd, "--downsample"))
    cfg.model.downsample = downsample_from_string(f.downsample);
  if (provided(cmd, "--upsample")) cfg.model.upsample = upsample_from_string(f.upsample);
  if (provided(cmd, "--init")) cfg.model.init = init_from_string(f.init);
  if (provided(cmd, "--morphology"))
    cfg.model.morphology_post = morphology_from_string(f.morphology);
  if (provided(cmd, "--train")) cfg.phantom.n_train = f.train_n;
  if (provided(cmd, "--val")) cfg.phantom.n_val = f.val_n;
  if (provided(cmd, "--test")) cfg.phantom.n_test = f.test_n;
  if (f.no_simd) kernels::set_force_scalar(true);
  cfg.finalize();
  cfg.model.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-based 3D vessel segmentation"};
  app.require_subcommand(1);

  // phantom
  auto fp = std::make_shared<FlagBag>();
  std::string phantom_out;
  bool phantom_force = false;
  auto* p = app.add_subcommand("phantom", "generate a synthetic tube dataset");
  add_common_flags(p, *fp);
  p->add_option("--out", phantom_out, "output directory")->required();
  p->add_option("--train", fp->train_n, "training volumes");
  p->add_option("--val", fp->val_n, "validation volumes");
  p->add_option("--test", fp->test_n, "test volumes");
  p->add_flag("--force", phantom_force, "write into a non-empty directory");
  p->callback([p, fp, &phantom_out, &phantom_force] {
    cmd_phantom(resolve_config(p, *fp), phantom_out, phantom_force);
  });

  // train
  auto ft = std::make_shared<FlagBag>();
  std::string train_data, train_out;
  auto* t = app.add_subcommand("train", "train on a phantom dataset");
  add_common_flags(t, *ft);
  t->add_option("--data", train_data, "dataset directory (manifest.json)")->required();
  t->add_option("--out", train_out, "output directory")->required();
  t->add_option("--stride", ft->stride, "positive-pass stride");
  t->add_option("--batch-cap", ft->batch_cap, "max patches per batch");
  t->add_option("--epochs", ft->epochs, "epoch cap (0 = 30*stride)");
  t->add_option("--levels", ft->levels, "pool stages");
  t->add_option("--base-kernels", ft->base_kernels, "first-layer kernel count");
  t->add_option("--early-stop-checks", ft->early_stop,
                "stale validation checks before early exit (0 = off)");
  t->add_option("--lr", ft->lr, "Adam learning rate");
  t->add_option("--activation", ft->activation, "relu|tanh|sigmoid");
  t->add_option("--position-site", ft->position_site,
                "encoder_first|encoder_last|decoder_last|none");
  t->add_option("--downsample", ft->downsample, "maxpool|strided_conv");
  t->add_option("--upsample", ft->upsample, "neighbor_pad_conv|strided_deconv");
  t->add_option("--init", ft->init, "xavier|normal_random");
  t->add_option("--morphology", ft->morphology, "none|closing|opening");
  t->callback([t, ft, &train_data, &train_out] {
    cmd_train(resolve_config(t, *ft), train_data, train_out);
  });

  // predict
  std::string pr_ckpt, pr_in, pr_out, pr_data, pr_morph;
  double pr_threshold = -1;
  int pr_threads = 0;
  bool pr_no_simd = false;
  auto* pr = app.add_subcommand("predict", "segment a volume with a checkpoint");
  pr->add_option("--checkpoint", pr_ckpt, "YNET checkpoint")->required()
      ->check(CLI::ExistingFile);
  pr->add_option("--in", pr_in, "input YVOL volume")->required()
      ->check(CLI::ExistingFile);
  pr->add_option("--out", pr_out, "output directory")->required();
  pr->add_option("--threshold", pr_threshold, "binarization threshold");
  pr->add_option("--data", pr_data, "dataset directory for calibration");
  pr->add_option("--morphology", pr_morph, "override post-prediction morphology");
  pr->add_option("--threads", pr_threads, "worker threads (0 = all cores)");
  pr->add_flag("--no-simd", pr_no_simd, "force the scalar kernel backend");
  pr->callback([&, pr] {
    if (pr_no_simd) kernels::set_force_scalar(true);
    std::optional<double> thr;
    if (pr->count("--threshold")) thr = pr_threshold;
    std::optional<Morphology> morph;
    if (pr->count("--morphology")) morph = morphology_from_string(pr_morph);
    cmd_predict(pr_ckpt, pr_in, pr_out, thr, pr_data, morph, pr_threads);
  });

  // baseline
  auto fb = std::make_shared<FlagBag>();
  std::string b_in, b_which, b_out, b_data;
  double b_threshold = -1;
  int b_radius = 0;
  auto* b = app.add_subcommand("baseline", "classical segmentation methods");
  add_common_flags(b, *fb);
  b->add_option("--in", b_in, "input YVOL volume")->required()
      ->check(CLI::ExistingFile);
  b->add_option("--which", b_which, "renyi|phansalkar|frangi")->required();
  b->add_option("--out", b_out, "output directory")->required();
  b->add_option("--threshold", b_threshold, "frangi binarization threshold");
  b->add_option("--data", b_data, "dataset directory for frangi calibration");
  b->add_option("--window-radius", b_radius, "phansalkar window radius");
  b->callback([b, fb, &b_in, &b_which, &b_out, &b_threshold, &b_data, &b_radius] {
    RunConfig cfg = resolve_config(b, *fb);
    if (b->count("--window-radius")) cfg.baseline.phansalkar_radius = b_radius;
    std::optional<double> thr;
    if (b->count("--threshold")) thr = b_threshold;
    cmd_baseline(cfg, b_in, b_which, b_out, thr, b_data);
  });

  // eval
  std::string e_pred, e_truth, e_name = "model", e_out;
  auto* e = app.add_subcommand("eval", "confusion metrics between two labels");
  e->add_option("--pred", e_pred, "predicted label YVOL")->required()
      ->check(CLI::ExistingFile);
  e->add_option("--truth", e_truth, "ground-truth label YVOL")->required()
      ->check(CLI::ExistingFile);
  e->add_option("--model-name", e_name, "name for the CSV row");
  e->add_option("--out", e_out, "also write the CSV here");
  e->callback([&] { cmd_eval(e_pred, e_truth, e_name, e_out); });

  // mip
  std::string m_in, m_out, m_axis = "all";
  auto* mi = app.add_subcommand("mip", "maximum intensity projections");
  mi->add_option("--in", m_in, "input YVOL volume")->required()
      ->check(CLI::ExistingFile);
  mi->add_option("--out", m_out, "output directory")->required();
  mi->add_option("--axis", m_axis, "x|y|z|all");
  mi->callback([&] { cmd_mip(m_in, m_out, m_axis); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e2) {
    return app.exit(e2);
  } catch (const CLI::ParseError& e2) {
    app.exit(e2);
    return 2;
  } catch (const Error& e2) {
    std::cerr << "error: " << e2.what() << "\n";
    return e2.kind() == Err::UsageError || e2.kind() == Err::BadConfig ? 2 : 1;
  } catch (const std::exception& e2) {
    std::cerr << "error: " << e2.what() << "\n";
    return 1;
  }
  return 0;
}
