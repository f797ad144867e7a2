#include "speckle/error.hpp"

namespace speckle {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::LatticeTooCoarse: return "LatticeTooCoarse";
    case ErrorKind::FresnelRegime: return "FresnelRegime";
    case ErrorKind::FovTooSmall: return "FovTooSmall";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonpositiveMean: return "NonpositiveMean";
    case ErrorKind::EmptyStack: return "EmptyStack";
    case ErrorKind::InsufficientFrames: return "InsufficientFrames";
    case ErrorKind::ZeroMeanLane: return "ZeroMeanLane";
    case ErrorKind::InsufficientSpan: return "InsufficientSpan";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace speckle
