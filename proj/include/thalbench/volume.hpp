#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace thalbench {

using Label = std::uint32_t;
using Index3 = Eigen::Array<std::int64_t, 3, 1>;

/// Grid dimensions (voxels per axis) and spacing (mm per voxel per axis).
struct VolumeGeometry {
  std::array<std::int64_t, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  VolumeGeometry() = default;
  VolumeGeometry(std::array<std::int64_t, 3> d, std::array<double, 3> s);

  std::int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

  std::int64_t linear_index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
  std::int64_t linear_index(const Index3& c) const { return linear_index(c[0], c[1], c[2]); }
  Index3 coord(std::int64_t linear) const;
  bool contains(const Index3& c) const;

  /// Same grid. Spacing compared exactly: inputs are expected to share a grid
  /// produced by the same upstream resampling.
  bool same_grid(const VolumeGeometry& other) const;
  bool operator==(const VolumeGeometry& other) const = default;
};

/// Orientation fields carried through from a NIfTI header verbatim. They are
/// never interpreted by the toolkit.
struct Orientation {
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float qfac = 1.0f;
  std::array<float, 3> quatern{0.0f, 0.0f, 0.0f};
  std::array<float, 3> qoffset{0.0f, 0.0f, 0.0f};
  std::array<float, 12> srow{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};

  bool operator==(const Orientation& other) const = default;
};

/// Dense 3D label grid in x-fastest order; 0 is background.
class LabelVolume {
 public:
  LabelVolume() = default;
  explicit LabelVolume(VolumeGeometry geometry, Label fill = 0);
  LabelVolume(VolumeGeometry geometry, std::vector<Label> labels, Orientation orientation = {});

  const VolumeGeometry& geometry() const { return geometry_; }
  const Orientation& orientation() const { return orientation_; }
  void set_orientation(const Orientation& o) { orientation_ = o; }

  std::span<const Label> labels() const { return labels_; }
  std::span<Label> labels() { return labels_; }

  Label at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return labels_[static_cast<std::size_t>(geometry_.linear_index(x, y, z))];
  }
  Label& at(std::int64_t x, std::int64_t y, std::int64_t z) {
    return labels_[static_cast<std::size_t>(geometry_.linear_index(x, y, z))];
  }
  Label max_label() const;

  bool operator==(const LabelVolume& other) const = default;

 private:
  VolumeGeometry geometry_;
  std::vector<Label> labels_;
  Orientation orientation_;
};

/// Set of voxel coordinates on a grid, stored as strictly increasing linear
/// indices.
class VoxelSet {
 public:
  VoxelSet() = default;
  VoxelSet(VolumeGeometry geometry, std::vector<std::int64_t> sorted_linear);
  /// Builds from arbitrary coordinates; duplicates and out-of-bounds
  /// coordinates are rejected.
  static VoxelSet from_coords(const VolumeGeometry& geometry, std::span<const Index3> coords);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const std::int64_t> linear() const { return linear_; }
  std::size_t size() const { return linear_.size(); }
  bool empty() const { return linear_.empty(); }
  Index3 coord(std::size_t i) const { return geometry_.coord(linear_[i]); }
  std::vector<Index3> coords() const;

  bool operator==(const VoxelSet& other) const = default;

 private:
  VolumeGeometry geometry_;
  std::vector<std::int64_t> linear_;
};

VoxelSet voxel_set(const LabelVolume& v, Label label);
double label_volume_mm3(const LabelVolume& v, Label label);
std::int64_t label_voxel_count(const LabelVolume& v, Label label);

}  // namespace thalbench
