#include "ynet/model.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "ynet/rng.hpp"

namespace ynet {

void YNetConfig::validate() const {
  require(n_levels >= 1, Err::BadConfig, "n_levels must be >= 1");
  require(base_kernels >= 1, Err::BadConfig, "base_kernels must be >= 1");
  require(patch_size >= 2, Err::BadConfig, "patch_size must be >= 2");
  int p = patch_size;
  for (int l = 0; l < n_levels; ++l) {
    require(p % 2 == 0, Err::BadConfig, "patch_size not divisible by 2^n_levels");
    p /= 2;
  }
  require(p >= 1, Err::BadConfig, "patch collapses below 1 voxel");
}

std::string to_string(ops::Act a) {
  switch (a) {
    case ops::Act::ReLU: return "relu";
    case ops::Act::Tanh: return "tanh";
    case ops::Act::Sigmoid: return "sigmoid";
  }
  return "relu";
}
std::string to_string(Downsample d) {
  return d == Downsample::MaxPool ? "maxpool" : "strided_conv";
}
std::string to_string(Upsample u) {
  return u == Upsample::NeighborPadConv ? "neighbor_pad_conv" : "strided_deconv";
}
std::string to_string(PositionSite p) {
  switch (p) {
    case PositionSite::EncoderFirst: return "encoder_first";
    case PositionSite::EncoderLast: return "encoder_last";
    case PositionSite::DecoderLast: return "decoder_last";
    case PositionSite::None: return "none";
  }
  return "none";
}
std::string to_string(InitKind i) {
  return i == InitKind::Xavier ? "xavier" : "normal_random";
}
std::string to_string(Morphology m) {
  switch (m) {
    case Morphology::None: return "none";
    case Morphology::Closing: return "closing";
    case Morphology::Opening: return "opening";
  }
  return "none";
}

ops::Act act_from_string(const std::string& s) {
  if (s == "relu") return ops::Act::ReLU;
  if (s == "tanh") return ops::Act::Tanh;
  if (s == "sigmoid") return ops::Act::Sigmoid;
  fail(Err::BadConfig, "unknown activation: " + s);
}
Downsample downsample_from_string(const std::string& s) {
  if (s == "maxpool") return Downsample::MaxPool;
  if (s == "strided_conv") return Downsample::StridedConv;
  fail(Err::BadConfig, "unknown downsample: " + s);
}
Upsample upsample_from_string(const std::string& s) {
  if (s == "neighbor_pad_conv") return Upsample::NeighborPadConv;
  if (s == "strided_deconv") return Upsample::StridedDeconv;
  fail(Err::BadConfig, "unknown upsample: " + s);
}
PositionSite position_site_from_string(const std::string& s) {
  if (s == "encoder_first") return PositionSite::EncoderFirst;
  if (s == "encoder_last") return PositionSite::EncoderLast;
  if (s == "decoder_last") return PositionSite::DecoderLast;
  if (s == "none") return PositionSite::None;
  fail(Err::BadConfig, "unknown position_site: " + s);
}
InitKind init_from_string(const std::string& s) {
  if (s == "xavier") return InitKind::Xavier;
  if (s == "normal_random") return InitKind::NormalRandom;
  fail(Err::BadConfig, "unknown init: " + s);
}
Morphology morphology_from_string(const std::string& s) {
  if (s == "none") return Morphology::None;
  if (s == "closing") return Morphology::Closing;
  if (s == "opening") return Morphology::Opening;
  fail(Err::BadConfig, "unknown morphology: " + s);
}

template <class T>
Tensor5<T> position_channels(Coord3 origin, Dims3 vol_dims, int patch_size,
                             int d, int h, int w) {
  require(origin.x >= 0 && origin.y >= 0 && origin.z >= 0 &&
              origin.x + patch_size <= vol_dims.x &&
              origin.y + patch_size <= vol_dims.y &&
              origin.z + patch_size <= vol_dims.z,
          Err::OutOfBounds, "patch does not fit inside its volume");
  const double half = double(patch_size) / 2.0;
  const double c[3] = {(double(origin.x) + half) / double(vol_dims.x),
                       (double(origin.y) + half) / double(vol_dims.y),
                       (double(origin.z) + half) / double(vol_dims.z)};
  Tensor5<T> out(1, 3, d, h, w);
  for (int ch = 0; ch < 3; ++ch) {
    T* dst = out.channel(0, ch);
    std::fill(dst, dst + out.spatial(), T(c[ch]));
  }
  return out;
}

template Tensor5<float> position_channels(Coord3, Dims3, int, int, int, int);
template Tensor5<double> position_channels(Coord3, Dims3, int, int, int, int);

namespace {

// "random with normal distribution" leaves the spread open; fixed here.
constexpr double kNormalInitStd = 0.05;

template <class T>
void init_params(ops::ConvParams<T>& p, InitKind kind, Rng& rng) {
  if (kind == InitKind::Xavier)
    ops::xavier_init(p, rng);
  else
    ops::normal_init(p, rng, kNormalInitStd);
}

template <class T>
Tensor5<T> batch_position_channels(const std::vector<Coord3>& origins,
                                   const std::vector<Dims3>& vol_dims,
                                   int patch_size, int b, int d, int h, int w) {
  require(int(origins.size()) == b && int(vol_dims.size()) == b, Err::ShapeMismatch,
          "position path needs one origin and volume dim per sample");
  Tensor5<T> out(b, 3, d, h, w);
  for (int n = 0; n < b; ++n) {
    Tensor5<T> one = position_channels<T>(origins[size_t(n)], vol_dims[size_t(n)],
                                          patch_size, d, h, w);
    std::copy(one.data.begin(), one.data.end(), out.sample(n));
  }
  return out;
}

}  // namespace

template <class T>
YNetModelT<T> build_model(const YNetConfig& config, uint64_t seed) {
  config.validate();
  YNetModelT<T> m;
  m.config = config;
  Rng rng(derive_seed(seed, seed_tag::kInit));

  auto add_conv = [&](StepKind kind, int cout, int cin) {
    ops::ConvParams<T> p(cout, cin);
    init_params(p, config.init, rng);
    m.params.push_back(std::move(p));
    m.steps.push_back(Step{kind, int(m.params.size()) - 1, -1, -1});
  };
  auto add = [&](StepKind kind, int slot = -1, int aux = -1) {
    m.steps.push_back(Step{kind, -1, slot, aux});
  };

  const int L = config.n_levels;
  const int K = config.base_kernels;
  int cur = 1;

  if (config.position_site == PositionSite::EncoderFirst) {
    add(StepKind::ConcatPos, -1, cur);
    cur += 3;
  }
  std::vector<int> skip_channels(size_t(L), 0);
  for (int l = 0; l < L; ++l) {
    const int k = K << l;
    add_conv(StepKind::Conv, k, cur);
    add(StepKind::Act);
    add_conv(StepKind::Conv, k, k);
    add(StepKind::Act);
    skip_channels[size_t(l)] = k;
    add(StepKind::SaveSkip, l);
    if (config.downsample == Downsample::MaxPool)
      add(StepKind::Pool);
    else
      add_conv(StepKind::ConvS2, k, k);
    cur = k;
  }
  if (config.position_site == PositionSite::EncoderLast) {
    add(StepKind::ConcatPos, -1, cur);
    cur += 3;
  }
  const int bottleneck = 2 * (K << (L - 1));
  add_conv(StepKind::Conv, bottleneck, cur);
  add(StepKind::Act);
  cur = bottleneck;

  for (int l = L - 1; l >= 0; --l) {
    if (config.upsample == Upsample::NeighborPadConv)
      add(StepKind::Up);
    else
      add_conv(StepKind::TConvS2, cur, cur);
    add(StepKind::ConcatSkip, l, cur);
    cur += skip_channels[size_t(l)];
    const int k = K << l;
    add_conv(StepKind::Conv, k, cur);
    add(StepKind::Act);
    add_conv(StepKind::Conv, k, k);
    add(StepKind::Act);
    cur = k;
  }
  if (config.position_site == PositionSite::DecoderLast) {
    add(StepKind::ConcatPos, -1, cur);
    cur += 3;
  }
  add_conv(StepKind::Conv, 1, cur);
  add(StepKind::HeadSigmoid);
  return m;
}

template YNetModelT<float> build_model(const YNetConfig&, uint64_t);
template YNetModelT<double> build_model(const YNetConfig&, uint64_t);

template <class T>
Tensor5<T> YNetModelT<T>::forward(const Tensor5<T>& batch,
                                  const std::vector<Coord3>& origins,
                                  const std::vector<Dims3>& vol_dims, Cache* cache,
                                  int threads, const SkipTap* skip_tap) const {
  require(batch.c == 1 && batch.d == config.patch_size &&
              batch.h == config.patch_size && batch.w == config.patch_size,
          Err::ShapeMismatch, "forward: batch must be (B,1,p,p,p)");
  require(batch.n >= 1, Err::ShapeMismatch, "forward: empty batch");

  if (cache) {
    cache->input = batch;
    cache->outputs.assign(steps.size(), Tensor5<T>());
    cache->argmax.assign(steps.size(), {});
  }
  std::vector<Tensor5<T>> skips(size_t(config.n_levels));
  Tensor5<T> cur = batch;
  for (size_t i = 0; i < steps.size(); ++i) {
    const Step& st = steps[i];
    switch (st.kind) {
      case StepKind::Conv:
        cur = ops::conv3d(cur, params[size_t(st.param)], threads);
        break;
      case StepKind::ConvS2:
        cur = ops::conv3d_s2(cur, params[size_t(st.param)]);
        break;
      case StepKind::TConvS2:
        cur = ops::tconv3d_s2(cur, params[size_t(st.param)]);
        break;
      case StepKind::Act:
        cur = ops::activation(cur, config.activation);
        break;
      case StepKind::HeadSigmoid:
        cur = ops::activation(cur, ops::Act::Sigmoid);
        break;
      case StepKind::Pool: {
        auto r = ops::maxpool3d(cur);
        cur = std::move(r.y);
        if (cache) cache->argmax[i] = std::move(r.argmax);
        break;
      }
      case StepKind::Up:
        cur = ops::upsample3(cur);
        break;
      case StepKind::SaveSkip:
        skips[size_t(st.slot)] = cur;
        if (skip_tap) (*skip_tap)(st.slot, skips[size_t(st.slot)]);
        break;
      case StepKind::ConcatSkip:
        cur = ops::concat_channels(cur, skips[size_t(st.slot)]);
        break;
      case StepKind::ConcatPos: {
        const Tensor5<T> pos = batch_position_channels<T>(
            origins, vol_dims, config.patch_size, cur.n, cur.d, cur.h, cur.w);
        cur = ops::concat_channels(cur, pos);
        break;
      }
    }
    if (cache) cache->outputs[i] = cur;
  }
  return cur;
}

template <class T>
std::vector<ops::ConvParams<T>> YNetModelT<T>::backward(const Cache& cache,
                                                        const Tensor5<T>& grad_out,
                                                        int threads) const {
  require(cache.outputs.size() == steps.size(), Err::ShapeMismatch,
          "backward: cache does not match model");
  std::vector<ops::ConvParams<T>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.emplace_back(p.cout, p.cin);

  // First parameterized step; its input gradient is never needed.
  size_t first_param_step = steps.size();
  for (size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].param >= 0) {
      first_param_step = i;
      break;
    }
  }

  std::vector<Tensor5<T>> skip_grad(size_t(config.n_levels));
  Tensor5<T> g = grad_out;
  for (size_t ii = steps.size(); ii-- > 0;) {
    const Step& st = steps[ii];
    const Tensor5<T>& in = ii == 0 ? cache.input : cache.outputs[ii - 1];
    switch (st.kind) {
      case StepKind::Conv: {
        Tensor5<T> gx;
        const bool need_gx = ii > first_param_step;
        ops::conv3d_backward(in, params[size_t(st.param)], g,
                             need_gx ? &gx : nullptr, &grads[size_t(st.param)],
                             threads);
        g = need_gx ? std::move(gx) : Tensor5<T>();
        break;
      }
      case StepKind::ConvS2: {
        Tensor5<T> gx;
        const bool need_gx = ii > first_param_step;
        ops::conv3d_s2_backward(in, params[size_t(st.param)], g,
                                need_gx ? &gx : nullptr, &grads[size_t(st.param)]);
        g = need_gx ? std::move(gx) : Tensor5<T>();
        break;
      }
      case StepKind::TConvS2: {
        Tensor5<T> gx;
        const bool need_gx = ii > first_param_step;
        ops::tconv3d_s2_backward(in, params[size_t(st.param)], g,
                                 need_gx ? &gx : nullptr, &grads[size_t(st.param)]);
        g = need_gx ? std::move(gx) : Tensor5<T>();
        break;
      }
      case StepKind::Act:
        g = ops::activation_backward(cache.outputs[ii], g, config.activation);
        break;
      case StepKind::HeadSigmoid:
        g = ops::activation_backward(cache.outputs[ii], g, ops::Act::Sigmoid);
        break;
      case StepKind::Pool:
        g = ops::maxpool3d_backward(g, cache.argmax[ii]);
        break;
      case StepKind::Up:
        g = ops::upsample3_backward(g);
        break;
      case StepKind::SaveSkip: {
        Tensor5<T>& sg = skip_grad[size_t(st.slot)];
        require(sg.size() == g.size(), Err::ShapeMismatch,
                "backward: missing skip gradient");
        for (size_t k = 0; k < g.data.size(); ++k) g.data[k] += sg.data[k];
        sg = Tensor5<T>();
        break;
      }
      case StepKind::ConcatSkip: {
        auto [gmain, gskip] = ops::split_channels(g, st.aux);
        skip_grad[size_t(st.slot)] = std::move(gskip);
        g = std::move(gmain);
        break;
      }
      case StepKind::ConcatPos:
        g = ops::split_channels(g, st.aux).first;  // position grads unused
        break;
    }
    if (ii <= first_param_step) break;  // everything upstream is parameter-free
  }
  return grads;
}

template struct YNetModelT<float>;
template struct YNetModelT<double>;

namespace {

constexpr char kCkptMagic[4] = {'Y', 'N', 'E', 'T'};
constexpr uint32_t kCkptVersion = 1;

nlohmann::json config_to_json(const YNetConfig& c) {
  return {
      {"activation", to_string(c.activation)},
      {"n_levels", c.n_levels},
      {"base_kernels", c.base_kernels},
      {"downsample", to_string(c.downsample)},
      {"upsample", to_string(c.upsample)},
      {"position_site", to_string(c.position_site)},
      {"init", to_string(c.init)},
      {"patch_size", c.patch_size},
      {"morphology_post", to_string(c.morphology_post)},
  };
}

YNetConfig config_from_json(const nlohmann::json& j) {
  YNetConfig c;
  c.activation = act_from_string(j.at("activation").get<std::string>());
  c.n_levels = j.at("n_levels").get<int>();
  c.base_kernels = j.at("base_kernels").get<int>();
  c.downsample = downsample_from_string(j.at("downsample").get<std::string>());
  c.upsample = upsample_from_string(j.at("upsample").get<std::string>());
  c.position_site = position_site_from_string(j.at("position_site").get<std::string>());
  c.init = init_from_string(j.at("init").get<std::string>());
  c.patch_size = j.at("patch_size").get<int>();
  c.morphology_post = morphology_from_string(j.at("morphology_post").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const YNetModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open for writing: " + path);
  out.write(kCkptMagic, 4);
  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  put_u32(kCkptVersion);
  const std::string cfg = config_to_json(m.config).dump();
  put_u32(uint32_t(cfg.size()));
  out.write(cfg.data(), std::streamsize(cfg.size()));
  for (const auto& layer : m.params) {
    put_u32(uint32_t(layer.w.size()));
    out.write(reinterpret_cast<const char*>(layer.w.data()),
              std::streamsize(layer.w.size() * 4));
    put_u32(uint32_t(layer.b.size()));
    out.write(reinterpret_cast<const char*>(layer.b.data()),
              std::streamsize(layer.b.size() * 4));
  }
  out.flush();
  if (!out) fail(Err::IoFailure, "write failed: " + path);
}

YNetModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
    fail(Err::BadMagic, "not a YNET checkpoint: " + path);
  auto get_u32 = [&]() {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) fail(Err::TruncatedPayload, "checkpoint truncated: " + path);
    return v;
  };
  const uint32_t version = get_u32();
  if (version != kCkptVersion) fail(Err::BadMagic, "unsupported checkpoint version");
  const uint32_t json_len = get_u32();
  std::string cfg_str(json_len, '\0');
  in.read(cfg_str.data(), json_len);
  if (!in) fail(Err::TruncatedPayload, "checkpoint truncated in config: " + path);
  YNetConfig config;
  try {
    config = config_from_json(nlohmann::json::parse(cfg_str));
  } catch (const nlohmann::json::exception& e) {
    fail(Err::BadConfig, std::string("checkpoint config: ") + e.what());
  }

  YNetModel m = build_model<float>(config, 0);
  for (auto& layer : m.params) {
    const uint32_t wn = get_u32();
    if (wn != layer.w.size())
      fail(Err::ConfigMismatch, "weight array size does not match config");
    in.read(reinterpret_cast<char*>(layer.w.data()), std::streamsize(wn * 4));
    if (!in) fail(Err::TruncatedPayload, "checkpoint truncated in weights: " + path);
    const uint32_t bn = get_u32();
    if (bn != layer.b.size())
      fail(Err::ConfigMismatch, "bias array size does not match config");
    in.read(reinterpret_cast<char*>(layer.b.data()), std::streamsize(bn * 4));
    if (!in) fail(Err::TruncatedPayload, "checkpoint truncated in bias: " + path);
  }
  char extra;
  if (in.read(&extra, 1)) fail(Err::ConfigMismatch, "checkpoint has trailing bytes");
  return m;
}

}  // namespace ynet
