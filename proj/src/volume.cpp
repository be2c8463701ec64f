#include "thalbench/volume.hpp"

#include "thalbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace thalbench {

VolumeGeometry::VolumeGeometry(std::array<std::int64_t, 3> d, std::array<double, 3> s)
    : dims(d), spacing(s) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw DomainError("volume dimension must be >= 1");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw DomainError("voxel spacing must be positive and finite");
  }
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (dims[0] > kMax / dims[1] || dims[0] * dims[1] > kMax / dims[2])
    throw DomainError("volume voxel count overflows");
  if (static_cast<std::uint64_t>(voxel_count()) >
      std::numeric_limits<std::size_t>::max() / sizeof(Label))
    throw DomainError("volume too large for address space");
}

Index3 VolumeGeometry::coord(std::int64_t linear) const {
  Index3 c;
  c[0] = linear % dims[0];
  linear /= dims[0];
  c[1] = linear % dims[1];
  c[2] = linear / dims[1];
  return c;
}

bool VolumeGeometry::contains(const Index3& c) const {
  for (int a = 0; a < 3; ++a)
    if (c[a] < 0 || c[a] >= dims[a]) return false;
  return true;
}

bool VolumeGeometry::same_grid(const VolumeGeometry& other) const { return *this == other; }

LabelVolume::LabelVolume(VolumeGeometry geometry, Label fill)
    : geometry_(geometry), labels_(static_cast<std::size_t>(geometry.voxel_count()), fill) {}

LabelVolume::LabelVolume(VolumeGeometry geometry, std::vector<Label> labels, Orientation orientation)
    : geometry_(geometry), labels_(std::move(labels)), orientation_(orientation) {
  if (static_cast<std::int64_t>(labels_.size()) != geometry_.voxel_count())
    throw DomainError("label array length " + std::to_string(labels_.size()) +
                      " does not match voxel count " + std::to_string(geometry_.voxel_count()));
}

Label LabelVolume::max_label() const {
  if (labels_.empty()) return 0;
  return *std::max_element(labels_.begin(), labels_.end());
}

VoxelSet::VoxelSet(VolumeGeometry geometry, std::vector<std::int64_t> sorted_linear)
    : geometry_(geometry), linear_(std::move(sorted_linear)) {
  const auto n = geometry_.voxel_count();
  for (std::size_t i = 0; i < linear_.size(); ++i) {
    if (linear_[i] < 0 || linear_[i] >= n) throw DomainError("voxel index out of bounds");
    if (i > 0 && linear_[i] <= linear_[i - 1])
      throw DomainError("voxel indices must be strictly increasing");
  }
}

VoxelSet VoxelSet::from_coords(const VolumeGeometry& geometry, std::span<const Index3> coords) {
  std::vector<std::int64_t> lin;
  lin.reserve(coords.size());
  for (const auto& c : coords) {
    if (!geometry.contains(c)) throw DomainError("voxel coordinate out of bounds");
    lin.push_back(geometry.linear_index(c));
  }
  std::sort(lin.begin(), lin.end());
  if (std::adjacent_find(lin.begin(), lin.end()) != lin.end())
    throw DomainError("duplicate voxel coordinate");
  return VoxelSet(geometry, std::move(lin));
}

std::vector<Index3> VoxelSet::coords() const {
  std::vector<Index3> out;
  out.reserve(linear_.size());
  for (auto l : linear_) out.push_back(geometry_.coord(l));
  return out;
}

VoxelSet voxel_set(const LabelVolume& v, Label label) {
  std::vector<std::int64_t> lin;
  const auto labels = v.labels();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) lin.push_back(static_cast<std::int64_t>(i));
  return VoxelSet(v.geometry(), std::move(lin));
}

std::int64_t label_voxel_count(const LabelVolume& v, Label label) {
  const auto labels = v.labels();
  return std::count(labels.begin(), labels.end(), label);
}

double label_volume_mm3(const LabelVolume& v, Label label) {
  return static_cast<double>(label_voxel_count(v, label)) * v.geometry().voxel_volume_mm3();
}

}  // namespace thalbench
