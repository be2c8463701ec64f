#pragma once

#include "thalbench/cohort.hpp"
#include "thalbench/volume.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace thalbench::phantom {

/// Axis-aligned ellipsoid in voxel coordinates.
struct Ellipsoid {
  Label label = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();
};

struct Translate {
  Index3 offset = Index3::Zero();
};
struct Dilate {
  int k = 1;
};
struct Erode {
  int k = 1;
};
using Perturbation = std::variant<Translate, Dilate, Erode>;

struct LabelPerturbation {
  Label label = 0;
  Perturbation op;
};

/// `jitter` > 0 displaces each center by an independent uniform offset in
/// [-jitter, jitter] per axis, drawn from `seed`; with jitter 0 the seed has
/// no effect. Perturbations run in order after rasterization.
struct PhantomSpec {
  VolumeGeometry geometry;
  std::vector<Ellipsoid> shapes;
  std::uint64_t seed = 0;
  double jitter = 0.0;
  std::vector<LabelPerturbation> perturbations;
};

/// A voxel takes a shape's label iff its center satisfies
/// sum(((p - c) / r)^2) <= 1. Throws DomainError when two shapes claim the
/// same voxel or a shape is invalid.
LabelVolume gen_phantom_volume(const PhantomSpec& spec);

/// Twenty disjoint ellipsoids, one per harmonized nucleus code, on a
/// 48 x 48 x 32 grid. Jitter up to 1 voxel keeps shapes disjoint.
PhantomSpec default_thalamus_phantom(std::uint64_t seed = 0, double jitter = 0.0);

/// Applies `op` to the voxels of `label` only, 6-connectivity for morphology.
/// Translation throws DomainError when a voxel leaves the grid or lands on
/// another label; dilation throws DomainError when it would grow into
/// another label. Dilation is clipped at the grid border and erosion treats
/// outside the grid as background.
LabelVolume perturb(const LabelVolume& v, const Perturbation& op, Label label);

struct CovariateEffects {
  double age = 0.0;        // per year, centered at 72.5
  double sex = 0.0;        // male indicator
  double education = 0.0;  // per year, centered at 14
  double etiv = 0.0;       // per SD (1.5e5 mm3), centered at 1.5e6
};

/// Synthetic cohort. volume = baseline * factor[group] *
/// exp(covariate linear term) * (1 + N(0, noise_sd)). Covariates:
/// age ~ U(55, 90), education ~ U(8, 20), eTIV ~ N(1.5e6, 1.5e5), sex by a
/// fair coin. Subjects are generated group by group in HC, EMCI, LMCI, AD
/// order from one seeded engine.
struct CohortSpec {
  std::array<int, kGroupCount> counts{100, 100, 100, 100};
  std::array<double, kNucleusCount> baseline = default_baseline();
  std::array<std::array<double, kNucleusCount>, kGroupCount> factors = unit_factors();
  CovariateEffects effects;
  double noise_sd = 0.03;
  std::uint64_t seed = 0;

  static std::array<double, kNucleusCount> default_baseline();
  static std::array<std::array<double, kNucleusCount>, kGroupCount> unit_factors();
  /// Throws DomainError if counts < 2, noise_sd < 0 or a factor/baseline <= 0.
  void validate() const;
};

CohortTable gen_cohort(const CohortSpec& spec);

/// JSON spec documents. A document's "type" is "phantom" or "cohort".
std::string spec_type(std::string_view json_text);
PhantomSpec parse_phantom_spec(std::string_view json_text);
CohortSpec parse_cohort_spec(std::string_view json_text);
std::string phantom_spec_json(const PhantomSpec& spec);
std::string cohort_spec_json(const CohortSpec& spec);

}  // namespace thalbench::phantom
