#pragma once

#include "thalbench/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace thalbench::nifti {

/// Datatype codes of the supported NIfTI-1 subset.
enum class Datatype : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kUint16 = 512,
};

enum class ByteOrder { kNative, kLittle, kBig };

struct WriteOptions {
  /// Unset picks uint8 when every label fits, otherwise uint16.
  std::optional<Datatype> datatype;
  ByteOrder byte_order = ByteOrder::kNative;
};

inline constexpr Label kMaxWritableLabel = 65535;
inline constexpr double kFloatLabelTolerance = 1e-3;

/// Parses a single-file NIfTI-1 image ("n+1" magic, uncompressed).
/// scl_slope/scl_inter are ignored: stored values are taken as labels.
/// Float data must lie within 1e-3 of a non-negative integer.
LabelVolume decode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode(const LabelVolume& v, const WriteOptions& opts = {});

LabelVolume read_volume(const std::filesystem::path& path);
void write_volume(const LabelVolume& v, const std::filesystem::path& path,
                  const WriteOptions& opts = {});

}  // namespace thalbench::nifti

namespace thalbench {
using nifti::read_volume;
using nifti::write_volume;
}  // namespace thalbench
