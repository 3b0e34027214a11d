#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mzsel {

enum class Errc {
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  InvariantViolation,
  IoError,
  KindMismatch,
  SizeMismatch,
  InvalidArgument,
  DegenerateMatrix,
  ConstantRow,
  DegenerateRanking,
  NoSurvivingClass,
  SolverNonConvergence,
  NonConvergence,
  AllEigenvaluesFloored,
  ZeroRangeResidual,
  Divergence,
  DuplicateModel,
  InsufficientGroundTruth,
  MissingInput,
  ManifestError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::IoError: return "IoError";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DegenerateMatrix: return "DegenerateMatrix";
    case Errc::ConstantRow: return "ConstantRow";
    case Errc::DegenerateRanking: return "DegenerateRanking";
    case Errc::NoSurvivingClass: return "NoSurvivingClass";
    case Errc::SolverNonConvergence: return "SolverNonConvergence";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::AllEigenvaluesFloored: return "AllEigenvaluesFloored";
    case Errc::ZeroRangeResidual: return "ZeroRangeResidual";
    case Errc::Divergence: return "Divergence";
    case Errc::DuplicateModel: return "DuplicateModel";
    case Errc::InsufficientGroundTruth: return "InsufficientGroundTruth";
    case Errc::MissingInput: return "MissingInput";
    case Errc::ManifestError: return "ManifestError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code. `index` holds the
/// offending row for validation errors and the byte offset for truncation.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace mzsel
