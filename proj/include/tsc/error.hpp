#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsc {

enum class ErrorKind {
  ZeroVector,
  NonOrthonormalBasis,
  NonFinite,
  InvalidK,
  QTooLarge,
  TooFewPoints,
  InvalidDims,
  LengthMismatch,
  BadMagic,
  DimMismatch,
  TruncatedFile,
  InsufficientImages,
  Io,
  Config,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NonOrthonormalBasis: return "NonOrthonormalBasis";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::QTooLarge: return "QTooLarge";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::InvalidDims: return "InvalidDims";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::InsufficientImages: return "InsufficientImages";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tsc
