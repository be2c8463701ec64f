#pragma once

#include <Eigen/Core>

#include <string>

namespace thalbench::stats {

/// Balanced subject x A x B design. Row s holds subject s; column
/// a * levels_b + b holds cell (a, b).
struct RepeatedMeasures2 {
  Eigen::MatrixXd cells;
  int levels_a = 0;
  int levels_b = 0;

  RepeatedMeasures2() = default;
  RepeatedMeasures2(Eigen::MatrixXd c, int a, int b) : cells(std::move(c)), levels_a(a), levels_b(b) {}

  Eigen::Index subjects() const { return cells.rows(); }
  double& operator()(Eigen::Index s, int a, int b) { return cells(s, a * levels_b + b); }
  double operator()(Eigen::Index s, int a, int b) const { return cells(s, a * levels_b + b); }
};

struct AnovaEffect {
  double ss = 0.0;
  double ss_error = 0.0;
  double F = 0.0;
  double df_num = 0.0;  // Greenhouse-Geisser corrected
  double df_den = 0.0;
  double df_num_uncorrected = 0.0;
  double df_den_uncorrected = 0.0;
  double epsilon = 1.0;
  double p = 1.0;
  double ges = 0.0;  // generalized eta-squared
};

struct AnovaResult {
  AnovaEffect a;
  AnovaEffect b;
  AnovaEffect ab;
  double ss_subjects = 0.0;
};

/// Two-way within-subjects ANOVA. Each effect is tested against its own
/// effect-by-subject error term with Greenhouse-Geisser corrected df.
/// Generalized eta-squared divides the effect SS by itself plus every error
/// SS, subjects included.
AnovaResult rm_anova_2way(const RepeatedMeasures2& data);

/// Orthonormal Helmert contrasts: k x (k-1), columns orthogonal to ones.
Eigen::MatrixXd helmert_contrasts(int k);

/// Greenhouse-Geisser epsilon for the covariance of transformed scores
/// (columns already orthonormal contrasts).
double greenhouse_geisser_epsilon(const Eigen::MatrixXd& covariance);

}  // namespace thalbench::stats
