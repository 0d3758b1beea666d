#include "ynet/common.hpp"

namespace ynet {

const char* err_name(Err e) {
  switch (e) {
    case Err::BadMagic: return "BadMagic";
    case Err::TruncatedPayload: return "TruncatedPayload";
    case Err::DimMismatch: return "DimMismatch";
    case Err::InvalidKindCode: return "InvalidKindCode";
    case Err::IoFailure: return "IoFailure";
    case Err::DegenerateRange: return "DegenerateRange";
    case Err::TubeOutOfBounds: return "TubeOutOfBounds";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::OddSpatialDim: return "OddSpatialDim";
    case Err::BadConfig: return "BadConfig";
    case Err::OutOfBounds: return "OutOfBounds";
    case Err::ConfigMismatch: return "ConfigMismatch";
    case Err::VolumeTooSmall: return "VolumeTooSmall";
    case Err::NoPositives: return "NoPositives";
    case Err::DivergedLoss: return "DivergedLoss";
    case Err::DegenerateHistogram: return "DegenerateHistogram";
    case Err::UsageError: return "UsageError";
  }
  return "UnknownError";
}

Error::Error(Err kind, const std::string& msg)
    : std::runtime_error(std::string(err_name(kind)) + ": " + msg), kind_(kind) {}

void fail(Err kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace ynet
