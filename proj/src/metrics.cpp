#include "thalbench/metrics.hpp"

#include "thalbench/edt.hpp"
#include "thalbench/error.hpp"
#include "thalbench/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thalbench {
namespace {

void require_same_grid(const VolumeGeometry& a, const VolumeGeometry& b) {
  if (!a.same_grid(b)) throw GeometryMismatch("operands are on different voxel grids");
}

std::int64_t intersection_size(std::span<const std::int64_t> x, std::span<const std::int64_t> y) {
  std::int64_t n = 0;
  auto i = x.begin();
  auto j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Box Box::merged(const Box& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  return {lo.min(other.lo), hi.max(other.hi)};
}

Box bounding_box(const VoxelSet& s) {
  Box b;
  if (s.empty()) return b;
  b.lo = s.coord(0);
  b.hi = b.lo;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = s.coord(i);
    b.lo = b.lo.min(c);
    b.hi = b.hi.max(c);
  }
  b.hi += 1;
  return b;
}

DistanceField::DistanceField(const VoxelSet& target, const Box& region, DistanceUnits units)
    : geometry_(target.geometry()), region_(region) {
  if (target.empty()) throw EmptySetError("distance field of an empty set");
  const auto tb = bounding_box(target);
  if ((tb.lo < region.lo).any() || (tb.hi > region.hi).any())
    throw DomainError("distance field region must contain the target set");
  for (int a = 0; a < 3; ++a) region_dims_[a] = region.hi[a] - region.lo[a];

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(region_dims_[0] * region_dims_[1] * region_dims_[2]), 0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    const Index3 c = target.coord(i) - region.lo;
    mask[static_cast<std::size_t>(c[0] + region_dims_[0] * (c[1] + region_dims_[1] * c[2]))] = 1;
  }

  if (units == DistanceUnits::kVoxels) {
    const auto sq = edt::squared_distance_transform<std::int64_t>(mask, region_dims_, {1, 1, 1});
    squared_.assign(sq.begin(), sq.end());
  } else {
    const auto& sp = geometry_.spacing;
    squared_ = edt::squared_distance_transform<double>(
        mask, region_dims_, {sp[0] * sp[0], sp[1] * sp[1], sp[2] * sp[2]});
  }
}

double DistanceField::distance_at(std::int64_t linear) const {
  const Index3 c = geometry_.coord(linear) - region_.lo;
  if ((c < 0).any() || c[0] >= region_dims_[0] || c[1] >= region_dims_[1] || c[2] >= region_dims_[2])
    throw DomainError("query voxel outside distance field region");
  return std::sqrt(squared_[static_cast<std::size_t>(c[0] + region_dims_[0] * (c[1] + region_dims_[1] * c[2]))]);
}

double DistanceField::mean_over(const VoxelSet& from) const {
  if (from.empty()) throw EmptySetError("mean distance over an empty set");
  double sum = 0.0;
  for (auto l : from.linear()) sum += distance_at(l);
  return sum / static_cast<double>(from.size());
}

OverlapResult dice(const VoxelSet& x, const VoxelSet& y) {
  require_same_grid(x.geometry(), y.geometry());
  OverlapResult r;
  r.size_x = static_cast<std::int64_t>(x.size());
  r.size_y = static_cast<std::int64_t>(y.size());
  r.intersection_count = intersection_size(x.linear(), y.linear());
  const auto denom = r.size_x + r.size_y;
  r.dice = denom == 0 ? 1.0 : static_cast<double>(2 * r.intersection_count) / static_cast<double>(denom);
  return r;
}

double directed_avg_distance(const VoxelSet& a, const VoxelSet& b, DistanceUnits units) {
  require_same_grid(a.geometry(), b.geometry());
  if (a.empty() || b.empty()) throw EmptySetError("directed distance with an empty operand");
  const DistanceField field(b, bounding_box(a).merged(bounding_box(b)), units);
  return field.mean_over(a);
}

DistanceResult average_hausdorff(const VoxelSet& a, const VoxelSet& b, DistanceUnits units) {
  require_same_grid(a.geometry(), b.geometry());
  if (a.empty() || b.empty()) throw EmptySetError("average Hausdorff distance with an absent structure");
  const Box region = bounding_box(a).merged(bounding_box(b));
  DistanceResult r;
  r.d_ab = DistanceField(b, region, units).mean_over(a);
  r.d_ba = DistanceField(a, region, units).mean_over(b);
  r.ahd = std::max(r.d_ab, r.d_ba);
  return r;
}

std::optional<DistanceResult> try_average_hausdorff(const VoxelSet& a, const VoxelSet& b, DistanceUnits units) {
  require_same_grid(a.geometry(), b.geometry());
  if (a.empty() || b.empty()) return std::nullopt;
  return average_hausdorff(a, b, units);
}

std::vector<VoxelSet> nucleus_voxel_sets(const LabelVolume& v) {
  std::vector<std::vector<std::int64_t>> buckets(kNucleusCount + 1);
  const auto labels = v.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = labels[i];
    if (l >= 1 && l <= kNucleusCount) buckets[l].push_back(static_cast<std::int64_t>(i));
  }
  std::vector<VoxelSet> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.emplace_back(v.geometry(), std::move(b));
  return out;
}

std::array<NucleusMetrics, kNucleusCount> nucleus_metrics(const LabelVolume& seg, const LabelVolume& ref,
                                                          DistanceUnits units) {
  require_same_grid(seg.geometry(), ref.geometry());
  const auto s = nucleus_voxel_sets(seg);
  const auto r = nucleus_voxel_sets(ref);
  std::array<NucleusMetrics, kNucleusCount> out;
  for (int c = 1; c <= kNucleusCount; ++c) {
    out[c - 1].overlap = dice(s[c], r[c]);
    out[c - 1].distance = try_average_hausdorff(s[c], r[c], units);
  }
  return out;
}

bool CrossNucleusMatrix::absent(int i, int j) const { return std::isnan(ahd(i, j)); }

CrossNucleusMatrix cross_nucleus_matrix(const LabelVolume& seg, const LabelVolume& ref, DistanceUnits units,
                                        std::size_t workers) {
  require_same_grid(seg.geometry(), ref.geometry());
  const auto s = nucleus_voxel_sets(seg);
  const auto r = nucleus_voxel_sets(ref);

  Box region;
  for (int c = 1; c <= kNucleusCount; ++c) region = region.merged(bounding_box(s[c])).merged(bounding_box(r[c]));

  // Fields 0..19 for segmentation nuclei, 20..39 for reference nuclei.
  std::vector<std::optional<DistanceField>> fields(2 * kNucleusCount);
  parallel_for(fields.size(), workers, [&](std::size_t k) {
    const auto& set = k < kNucleusCount ? s[k + 1] : r[k - kNucleusCount + 1];
    if (!set.empty()) fields[k].emplace(set, region, units);
  });

  CrossNucleusMatrix m;
  m.ahd.setConstant(kNaN);
  m.d_seg_ref.setConstant(kNaN);
  m.d_ref_seg.setConstant(kNaN);
  parallel_for(kNucleusCount, workers, [&](std::size_t i) {
    for (int j = 0; j < kNucleusCount; ++j) {
      m.dice(i, j) = dice(s[i + 1], r[j + 1]).dice;
      const auto& seg_field = fields[i];
      const auto& ref_field = fields[kNucleusCount + j];
      if (!seg_field || !ref_field) continue;
      m.d_seg_ref(i, j) = ref_field->mean_over(s[i + 1]);
      m.d_ref_seg(i, j) = seg_field->mean_over(r[j + 1]);
      m.ahd(i, j) = std::max(m.d_seg_ref(i, j), m.d_ref_seg(i, j));
    }
  });
  return m;
}

std::int64_t ProbAtlas::box_offset(std::int64_t linear) const {
  const Index3 c = geometry_.coord(linear) - box_.lo;
  if ((c < 0).any() || c[0] >= box_dims_[0] || c[1] >= box_dims_[1] || c[2] >= box_dims_[2]) return -1;
  return c[0] + box_dims_[0] * (c[1] + box_dims_[1] * c[2]);
}

int ProbAtlas::count(std::int64_t linear, Label code) const {
  if (code < 1 || code > kNucleusCount) throw DomainError("atlas nucleus code out of range");
  const auto off = box_offset(linear);
  if (off < 0) return 0;
  return counts_[static_cast<std::size_t>(off * kNucleusCount + (code - 1))];
}

ProbAtlas build_prob_atlas(std::span<const LabelVolume> volumes) {
  if (volumes.empty()) throw InputError("probabilistic atlas needs at least one subject");
  if (volumes.size() > std::numeric_limits<std::uint16_t>::max())
    throw InputError("probabilistic atlas supports at most 65535 subjects");
  const auto& g = volumes.front().geometry();
  for (const auto& v : volumes) require_same_grid(g, v.geometry());

  ProbAtlas atlas;
  atlas.geometry_ = g;
  atlas.n_subjects_ = static_cast<int>(volumes.size());

  Index3 lo = Index3::Constant(std::numeric_limits<std::int64_t>::max());
  Index3 hi = Index3::Constant(-1);
  for (const auto& v : volumes) {
    const auto labels = v.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 1 || labels[i] > kNucleusCount) continue;
      const auto c = g.coord(static_cast<std::int64_t>(i));
      lo = lo.min(c);
      hi = hi.max(c);
    }
  }
  if (hi[0] < 0) return atlas;  // nothing labelled anywhere
  atlas.box_ = {lo, hi + 1};
  for (int a = 0; a < 3; ++a) atlas.box_dims_[a] = atlas.box_.hi[a] - atlas.box_.lo[a];
  atlas.counts_.assign(
      static_cast<std::size_t>(atlas.box_dims_[0] * atlas.box_dims_[1] * atlas.box_dims_[2] * kNucleusCount), 0);

  for (const auto& v : volumes) {
    const auto labels = v.labels();
    for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
      for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
        for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
          const auto lin = g.linear_index(x, y, z);
          const auto l = labels[static_cast<std::size_t>(lin)];
          if (l < 1 || l > kNucleusCount) continue;
          ++atlas.counts_[static_cast<std::size_t>(atlas.box_offset(lin) * kNucleusCount + (l - 1))];
        }
  }
  return atlas;
}

LabelVolume binarize_atlas(const ProbAtlas& atlas, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("atlas threshold must lie in (0, 1]");
  LabelVolume out(atlas.geometry());
  const auto& box = atlas.support();
  if (box.empty()) return out;
  const auto& g = atlas.geometry();
  for (std::int64_t z = box.lo[2]; z < box.hi[2]; ++z)
    for (std::int64_t y = box.lo[1]; y < box.hi[1]; ++y)
      for (std::int64_t x = box.lo[0]; x < box.hi[0]; ++x) {
        const auto lin = g.linear_index(x, y, z);
        Label best = 0;
        double best_f = -1.0;
        for (Label c = 1; c <= kNucleusCount; ++c) {
          const double f = atlas.frequency(lin, c);
          if (f >= threshold && f > best_f) {
            best = c;
            best_f = f;
          }
        }
        out.at(x, y, z) = best;
      }
  return out;
}

}  // namespace thalbench
