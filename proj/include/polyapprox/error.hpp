// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace polyapprox {

// All library failures carry a short machine-readable code next to the
// human-readable message. The CLI forwards both as a JSON error object.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace errc {
inline constexpr const char* kShapeMismatch = "shape_mismatch";
inline constexpr const char* kInvalidArgument = "invalid_argument";
inline constexpr const char* kStaleCache = "stale_cache";
inline constexpr const char* kDiverged = "diverged";
inline constexpr const char* kInvalidScheme = "invalid_scheme";
inline constexpr const char* kGeometryMismatch = "geometry_mismatch";
inline constexpr const char* kUncalibratedWidth = "uncalibrated_width";
inline constexpr const char* kBadMagic = "bad_magic";
inline constexpr const char* kTruncated = "truncated";
inline constexpr const char* kCountMismatch = "count_mismatch";
inline constexpr const char* kCorruptContainer = "corrupt_container";
inline constexpr const char* kInvalidConfig = "invalid_config";
inline constexpr const char* kMissingDataset = "missing_dataset";
inline constexpr const char* kIo = "io_error";
}  // namespace errc

}  // namespace polyapprox
