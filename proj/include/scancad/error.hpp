#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scancad {

enum class ErrorCode {
  kInvalidArgument,
  kZeroAreaMesh,
  kEmptyCloud,
  kDegenerateCloud,
  kDimensionMismatch,
  kManifestInvalid,
  kMissingAsset,
  kDepthDecodeError,
  kMeshParseError,
  kNoVisibleFrames,
  kEmptySegmentation,
  kUnknownClass,
  kUnknownModel,
  kDegenerateModel,
  kEmptySelection,
  kNoOverlap,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` carries the
// machine-readable kind, `what()` names the offending entry.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scancad
