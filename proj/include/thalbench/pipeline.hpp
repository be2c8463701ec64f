#pragma once

#include "thalbench/bench.hpp"
#include "thalbench/cohort.hpp"
#include "thalbench/harmonize.hpp"
#include "thalbench/metrics.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thalbench {

/// Report format version written into every JSON report.
inline constexpr const char* kReportVersion = "1.0.0";

/// One segmentation source: a label map plus files per subject.
struct MethodInputs {
  std::string name;
  std::string label_map = "identity";
  std::map<std::string, std::filesystem::path> subject_space;
  std::map<std::string, std::filesystem::path> mni_space;
};

/// The reference has one subject-space file per subject and a single
/// group-level MNI-space file (key "" in mni_space).
struct Manifest {
  MethodInputs reference;
  std::vector<MethodInputs> methods;
  std::vector<std::string> subjects;  // sorted
  /// Directory that relative label-map paths resolve against.
  std::filesystem::path base_dir;
  bool has_mni() const;
};

/// Relative paths resolve against `base_dir`. Throws FormatError on schema
/// violations and InputError when methods cover different subjects.
Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

struct BenchmarkConfig {
  double threshold = kDefaultAtlasThreshold;
  double alpha = 0.05;
  int family_size = 6;
  std::uint64_t seed = 20240901;
  std::size_t workers = 1;
  DistanceUnits units = DistanceUnits::kVoxels;
  /// Validates threshold in (0, 1], alpha in (0, 1), family size and workers >= 1.
  void validate() const;
};

struct SubjectMetrics {
  std::array<NucleusMetrics, kNucleusCount> nuclei;
};

struct NucleusAnova {
  Nucleus nucleus = Nucleus::AV;
  std::size_t subjects_used = 0;
  std::optional<stats::AnovaResult> result;
};

struct MethodMni {
  CrossNucleusMatrix matrix;
  std::int64_t atlas_subjects = 0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<std::string> methods;
  std::vector<std::string> subjects;
  std::string reference_label_map;
  std::vector<std::string> method_label_maps;
  /// metrics[method][subject]
  std::vector<std::vector<SubjectMetrics>> metrics;
  /// Source-label voxel totals mapped to background, per method (reference last).
  std::vector<DropTally> drop_tallies;

  /// Indexed by code - 1; empty when fewer than two subjects are available.
  std::vector<std::optional<bench::RankRow>> dice_ranks;
  std::vector<std::optional<bench::RankRow>> ahd_ranks;
  std::vector<NucleusAnova> dice_anova;  // 10 nuclei
  std::vector<NucleusAnova> ahd_anova;

  std::vector<MethodMni> mni;  // empty when the manifest has no MNI inputs
  std::vector<std::optional<bench::BestMethodDecision>> best;  // by code - 1
  std::vector<std::string> warnings;
};

BenchmarkReport run_benchmark(const Manifest& manifest, const BenchmarkConfig& config);

/// Writes CSV tables, report.json and SVG heatmaps into `dir` (created if
/// needed). Output bytes depend only on the report. Throws InputError if
/// there are no methods or the directory cannot be written.
void emit_report(const BenchmarkReport& report, const std::filesystem::path& dir);

struct ClinicalConfig {
  double alpha = 0.05;
  std::uint64_t seed = 20240901;
  std::int64_t draws = 1'000'000;
  std::size_t workers = 1;
  bool adjusted_d = true;
  void validate() const;
};

struct CohortAnalysis {
  std::string name;
  std::size_t subjects = 0;
  bench::EffectMap effects;
  std::vector<bench::AucResult> auc;  // targets EMCI, LMCI, AD x modes nuclei, whole thalamus
};

struct ClinicalReport {
  ClinicalConfig config;
  std::vector<CohortAnalysis> cohorts;
};

ClinicalReport run_clinical(const std::vector<std::pair<std::string, CohortTable>>& cohorts,
                            const ClinicalConfig& config);
void emit_clinical_report(const ClinicalReport& report, const std::filesystem::path& dir);

/// Method or cohort name made safe for a file name; throws InputError if
/// empty.
std::string file_stem(std::string_view name);

}  // namespace thalbench
