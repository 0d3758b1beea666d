#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ynet {

// Error kinds surfaced by the library. The CLI maps UsageError and BadConfig
// to exit code 2, everything else to exit code 1.
enum class Err {
  BadMagic,
  TruncatedPayload,
  DimMismatch,
  InvalidKindCode,
  IoFailure,
  DegenerateRange,
  TubeOutOfBounds,
  ShapeMismatch,
  OddSpatialDim,
  BadConfig,
  OutOfBounds,
  ConfigMismatch,
  VolumeTooSmall,
  NoPositives,
  DivergedLoss,
  DegenerateHistogram,
  UsageError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
  Error(Err kind, const std::string& msg);
  Err kind() const { return kind_; }

private:
  Err kind_;
};

[[noreturn]] void fail(Err kind, const std::string& msg);

inline void require(bool cond, Err kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

struct Coord3 {
  int x = 0, y = 0, z = 0;
  bool operator==(const Coord3&) const = default;
};

struct Dims3 {
  int x = 0, y = 0, z = 0;
  bool operator==(const Dims3&) const = default;
};

}  // namespace ynet
