#pragma once

#include "thalbench/cohort.hpp"
#include "thalbench/stats.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thalbench::bench {

enum class AgreementClass { kNone, kSlight, kFair, kModerate, kSubstantial, kAlmostPerfect };

/// 0 none, (0, 0.2) slight, [0.2, 0.4) fair, [0.4, 0.6) moderate,
/// [0.6, 0.8) substantial, [0.8, 1] almost perfect. Throws DomainError
/// outside [0, 1].
AgreementClass classify_agreement(double dice);
std::string_view agreement_name(AgreementClass c);

enum class Direction { kHigherIsBetter, kLowerIsBetter };

struct PairwiseComparison {
  int a = 0;
  int b = 0;
  stats::TTestResult test;  // on values(:, a) - values(:, b)
  /// Index of the significantly better method, or -1.
  int better = -1;
};

/// Ranking of methods for one nucleus.
struct RankRow {
  Eigen::VectorXd means;
  std::vector<int> ranks;
  /// Method indices sorted best-first by mean (ties keep index order).
  std::vector<int> order;
  std::vector<PairwiseComparison> pairs;

  bool significantly_better(int i, int j) const;
  const PairwiseComparison& pair(int i, int j) const;
};

/// `values` is subjects x methods. Every pair gets a paired t-test with
/// Bonferroni adjustment over `family_size`; a method's rank is one plus the
/// number of methods significantly better than it (competition ranking).
RankRow rank_methods(const Eigen::MatrixXd& values, Direction better, int family_size, double alpha = 0.05);

struct RankSummary {
  double mean = 0.0;
  double sd_population = 0.0;
  double sd_sample = 0.0;  // NaN for a single rank
};

RankSummary summarize_ranks(std::span<const int> ranks);

enum class BestOutcome { kSingle, kJoint, kNone };
std::string_view best_outcome_name(BestOutcome o);

struct BestMethodDecision {
  BestOutcome outcome = BestOutcome::kNone;
  std::vector<int> winners;  // ascending method index
  int mni_best = -1;
  std::vector<std::string> trace;
};

/// Best-method selection from subject-space Dice rankings and MNI-space Dice.
///
/// M* is the method with the highest MNI Dice (lowest index on ties). If M*
/// is significantly better than every other method at subject level it wins
/// alone. Otherwise a method X joins M* when (a) X and M* do not differ
/// significantly and the subject-space mean ordering disagrees with the MNI
/// ordering (an MNI tie counts as disagreement), or (b) X is significantly
/// better than M* at subject level although M* has the higher MNI Dice.
/// One qualifier is a single winner, two are joint winners, more is none.
BestMethodDecision select_best(const RankRow& subject_dice, std::span<const double> mni_dice);

struct EffectOptions {
  double alpha = 0.05;
  stats::DunnettOptions dunnett;
  /// Report covariate-adjusted Cohen's d (true) or raw d as the headline.
  bool adjusted_d = true;
  std::size_t workers = 1;
};

struct ComparisonEffect {
  Group treatment = Group::AD;
  double estimate = 0.0;  // adjusted mean(treatment) - adjusted mean(control)
  double se = 0.0;
  double t = 0.0;
  double p_dunnett = 1.0;
  double d_adjusted = 0.0;  // control minus treatment; positive means atrophy
  double d_raw = 0.0;
  double d = 0.0;  // the headline convention
  bool shown = false;
};

struct NucleusEffect {
  Label code = 0;
  double f = 0.0;
  double df_group = 0.0;
  double df_residual = 0.0;
  double p_ancova = 1.0;
  std::vector<double> adjusted_means;  // control first, then treatments
  std::vector<ComparisonEffect> comparisons;
};

struct EffectMap {
  Group control = Group::HC;
  std::vector<Group> treatments;
  double alpha = 0.05;
  double critical_value = 0.0;
  double df = 0.0;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
  bool adjusted_d = true;
  std::vector<NucleusEffect> nuclei;  // codes 1..20
};

/// Per nucleus: ANCOVA of volume on group + age, sex, education, eTIV;
/// Dunnett control-vs-treatment comparisons; Cohen's d. An effect is shown
/// only when the ANCOVA group p and the Dunnett familywise p are both below
/// alpha. All nuclei share one Monte Carlo reference distribution.
EffectMap atrophy_effect_map(const CohortTable& cohort, Group control, std::span<const Group> treatments,
                             const EffectOptions& opts = {});

enum class FeatureMode { kNuclei, kWholeThalamus };
std::string_view feature_mode_name(FeatureMode m);

struct AucResult {
  Group control = Group::HC;
  Group target = Group::AD;
  FeatureMode mode = FeatureMode::kNuclei;
  double auc = 0.5;
  std::size_t n_control = 0;
  std::size_t n_target = 0;
  bool converged = false;
  Eigen::VectorXd coefficients;  // on standardized adjusted features
  std::vector<stats::RocPoint> curve;
};

/// Features are volumes adjusted for age and eTIV by residualizing on
/// coefficients estimated in the control group, then standardized. Nuclei
/// mode uses all 20 volumes; whole-thalamus mode uses the sum of all 20.
/// The logistic model is fit and scored in-sample.
AucResult discrimination_auc(const CohortTable& cohort, Group control, Group target, FeatureMode mode,
                             const stats::LogisticOptions& opts = {});

/// Adjusted features used by discrimination_auc, one row per subject in
/// `rows`; exposed for inspection and testing.
Eigen::MatrixXd adjusted_features(const CohortTable& cohort, std::span<const std::size_t> rows,
                                  std::span<const std::size_t> reference_rows, FeatureMode mode);

}  // namespace thalbench::bench
