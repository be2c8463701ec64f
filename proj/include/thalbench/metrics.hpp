#pragma once

#include "thalbench/harmonize.hpp"
#include "thalbench/volume.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace thalbench {

/// Dice overlap with the integer counts it came from.
struct OverlapResult {
  double dice = 1.0;
  std::int64_t intersection_count = 0;
  std::int64_t size_x = 0;
  std::int64_t size_y = 0;
};

/// Directed average distances and their maximum, in the requested units.
struct DistanceResult {
  double d_ab = 0.0;
  double d_ba = 0.0;
  double ahd = 0.0;
};

/// Voxel index units are the default. Millimetre units weight each axis by
/// the voxel spacing.
enum class DistanceUnits { kVoxels, kMillimetres };

/// Half-open box of voxel coordinates.
struct Box {
  Index3 lo = Index3::Zero();
  Index3 hi = Index3::Zero();
  bool empty() const { return (hi <= lo).any(); }
  Box merged(const Box& other) const;
};

Box bounding_box(const VoxelSet& s);

/// Distance from every voxel of a region to the nearest voxel of a target
/// set. Exact in voxel units (integer squared distances).
class DistanceField {
 public:
  DistanceField(const VoxelSet& target, const Box& region, DistanceUnits units = DistanceUnits::kVoxels);

  /// Distance at a full-grid linear index lying inside the region.
  double distance_at(std::int64_t linear) const;
  /// Mean distance over `from`, summed in ascending linear-index order.
  double mean_over(const VoxelSet& from) const;

 private:
  VolumeGeometry geometry_;
  Box region_;
  std::array<std::int64_t, 3> region_dims_{};
  std::vector<double> squared_;
};

OverlapResult dice(const VoxelSet& x, const VoxelSet& y);

/// (1/|a|) sum over a of min distance to b. Throws EmptySetError on an empty
/// operand.
double directed_avg_distance(const VoxelSet& a, const VoxelSet& b,
                             DistanceUnits units = DistanceUnits::kVoxels);

/// max(d(a,b), d(b,a)). Throws EmptySetError if either set is empty.
DistanceResult average_hausdorff(const VoxelSet& a, const VoxelSet& b,
                                 DistanceUnits units = DistanceUnits::kVoxels);
/// As average_hausdorff, but an empty operand yields std::nullopt ("absent").
std::optional<DistanceResult> try_average_hausdorff(const VoxelSet& a, const VoxelSet& b,
                                                    DistanceUnits units = DistanceUnits::kVoxels);

/// Voxel sets for harmonized codes 1..20 from one pass over the volume.
/// Index 0 of the result is unused.
std::vector<VoxelSet> nucleus_voxel_sets(const LabelVolume& v);

/// Per-nucleus Dice and AHD of a segmentation against a reference.
struct NucleusMetrics {
  OverlapResult overlap;
  std::optional<DistanceResult> distance;  // nullopt when either side is absent
};

std::array<NucleusMetrics, kNucleusCount> nucleus_metrics(
    const LabelVolume& seg, const LabelVolume& ref, DistanceUnits units = DistanceUnits::kVoxels);

using NucleusMatrix = Eigen::Matrix<double, kNucleusCount, kNucleusCount>;

/// Row i = segmentation nucleus code i+1, column j = reference nucleus j+1.
/// Absent entries (either nucleus missing) hold NaN.
struct CrossNucleusMatrix {
  NucleusMatrix ahd;
  NucleusMatrix d_seg_ref;
  NucleusMatrix d_ref_seg;
  NucleusMatrix dice;

  bool absent(int i, int j) const;
};

CrossNucleusMatrix cross_nucleus_matrix(const LabelVolume& seg, const LabelVolume& ref,
                                        DistanceUnits units = DistanceUnits::kVoxels,
                                        std::size_t workers = 1);

/// Per-voxel, per-nucleus occurrence counts across a group of subjects,
/// stored over the bounding box of all labelled voxels.
class ProbAtlas {
 public:
  const VolumeGeometry& geometry() const { return geometry_; }
  int n_subjects() const { return n_subjects_; }
  const Box& support() const { return box_; }

  /// Subjects labelling the voxel with `code` (1..20).
  int count(std::int64_t linear, Label code) const;
  double frequency(std::int64_t linear, Label code) const {
    return static_cast<double>(count(linear, code)) / n_subjects_;
  }

  friend ProbAtlas build_prob_atlas(std::span<const LabelVolume> volumes);

 private:
  VolumeGeometry geometry_;
  int n_subjects_ = 0;
  Box box_;
  std::array<std::int64_t, 3> box_dims_{};
  std::vector<std::uint16_t> counts_;  // box voxel * 20 + (code - 1)

  std::int64_t box_offset(std::int64_t linear) const;
};

/// Throws InputError on an empty list or mismatched geometry.
ProbAtlas build_prob_atlas(std::span<const LabelVolume> volumes);

inline constexpr double kDefaultAtlasThreshold = 0.25;

/// Voxel gets the nucleus whose frequency is >= threshold; among several,
/// the highest frequency wins, then the lowest code.
LabelVolume binarize_atlas(const ProbAtlas& atlas, double threshold = kDefaultAtlasThreshold);

}  // namespace thalbench
