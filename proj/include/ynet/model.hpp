#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ynet/ops.hpp"

namespace ynet {

enum class Downsample { MaxPool, StridedConv };
enum class Upsample { NeighborPadConv, StridedDeconv };
enum class PositionSite { EncoderFirst, EncoderLast, DecoderLast, None };
enum class InitKind { Xavier, NormalRandom };
enum class Morphology { None, Closing, Opening };

struct YNetConfig {
  ops::Act activation = ops::Act::ReLU;
  int n_levels = 2;
  int base_kernels = 16;
  Downsample downsample = Downsample::MaxPool;
  Upsample upsample = Upsample::NeighborPadConv;
  PositionSite position_site = PositionSite::EncoderLast;
  InitKind init = InitKind::Xavier;
  int patch_size = 16;
  Morphology morphology_post = Morphology::None;

  bool operator==(const YNetConfig&) const = default;
  void validate() const;  // throws BadConfig
};

std::string to_string(ops::Act a);
std::string to_string(Downsample d);
std::string to_string(Upsample u);
std::string to_string(PositionSite p);
std::string to_string(InitKind i);
std::string to_string(Morphology m);
ops::Act act_from_string(const std::string& s);
Downsample downsample_from_string(const std::string& s);
Upsample upsample_from_string(const std::string& s);
PositionSite position_site_from_string(const std::string& s);
InitKind init_from_string(const std::string& s);
Morphology morphology_from_string(const std::string& s);

// Three constant channels holding the normalized patch center
// ((origin + patch/2) / volume_dim per axis), replicated over (d, h, w).
template <class T>
Tensor5<T> position_channels(Coord3 origin, Dims3 vol_dims, int patch_size,
                             int d, int h, int w);

enum class StepKind {
  Conv,        // stride-1 conv, params[param]
  ConvS2,      // stride-2 conv (downsample alternative)
  TConvS2,     // transposed stride-2 conv (upsample alternative)
  Act,         // configured activation
  Pool,        // 2^3 max pool
  Up,          // nearest-neighbor x2
  SaveSkip,    // stash current tensor in slot
  ConcatSkip,  // concat [current | skip(slot)]; aux = channels before concat
  ConcatPos,   // concat [current | position channels]; aux = channels before
  HeadSigmoid,
};

struct Step {
  StepKind kind;
  int param = -1;
  int slot = -1;
  int aux = -1;
};

template <class T>
struct YNetModelT {
  YNetConfig config;
  std::vector<Step> steps;
  std::vector<ops::ConvParams<T>> params;

  size_t parameter_count() const {
    size_t n = 0;
    for (const auto& p : params) n += p.param_count();
    return n;
  }

  struct Cache {
    Tensor5<T> input;
    std::vector<Tensor5<T>> outputs;           // one per step
    std::vector<std::vector<uint8_t>> argmax;  // pool steps only
  };

  // Test instrumentation: mutates the tensor saved at a SaveSkip step, which
  // is what the decoder-side concat later consumes.
  using SkipTap = std::function<void(int slot, Tensor5<T>&)>;

  // batch must be (B, 1, patch, patch, patch); origins/vol_dims give each
  // patch's min corner and source volume dims (unused when the position path
  // is disabled). Output has the input shape, values in (0,1).
  Tensor5<T> forward(const Tensor5<T>& batch, const std::vector<Coord3>& origins,
                     const std::vector<Dims3>& vol_dims, Cache* cache = nullptr,
                     int threads = 1, const SkipTap* skip_tap = nullptr) const;

  // Parameter gradients of sum(grad_out . forward); input gradients are not
  // produced.
  std::vector<ops::ConvParams<T>> backward(const Cache& cache,
                                           const Tensor5<T>& grad_out,
                                           int threads = 1) const;
};

using YNetModel = YNetModelT<float>;
using YNetModelD = YNetModelT<double>;

template <class T>
YNetModelT<T> build_model(const YNetConfig& config, uint64_t seed);

// YNET checkpoint: magic "YNET" | u32 version | u32 json length | config JSON
// | per layer in build order: u32 count + f32 weights, u32 count + f32 bias.
void save_checkpoint(const YNetModel& m, const std::string& path);
YNetModel load_checkpoint(const std::string& path);

}  // namespace ynet
