#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace thalbench::stats {

/// OLS fit of y ~ group + covariates, treatment coded against `reference`.
///
/// Coefficient layout: [intercept, one dummy per non-reference group in
/// ascending group order, covariates in column order].
struct AncovaResult {
  int n_groups = 0;
  int reference = 0;
  Eigen::Index n = 0;

  double f_group = 0.0;
  double df_group = 0.0;
  double df_residual = 0.0;
  double p_group = 1.0;

  double residual_variance = 0.0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd xtx_inverse;      // (X'X)^-1, depends on the design only
  Eigen::MatrixXd beta_covariance;  // residual_variance * xtx_inverse
  Eigen::VectorXd covariate_coefficients;
  Eigen::VectorXd covariate_means;

  /// Least-squares means at the covariate means, and their standard errors.
  Eigen::VectorXd adjusted_means;
  Eigen::VectorXd adjusted_se;
  std::vector<Eigen::Index> group_sizes;

  Eigen::MatrixXd design;
  Eigen::VectorXd residuals;

  /// Row of the design giving the adjusted mean of group g.
  Eigen::RowVectorXd mean_contrast(int g) const;
};

/// `group[i]` is in [0, n_groups). Throws DomainError for groups with fewer
/// than two subjects, too few observations, or a rank-deficient design.
AncovaResult fit_ancova(const Eigen::VectorXd& y, std::span<const int> group, int n_groups,
                        const Eigen::MatrixXd& covariates, int reference = 0);

/// Monte Carlo distribution of max_i |T_i| for a multivariate t vector with
/// correlation R and df degrees of freedom.
///
/// Draws are generated in fixed chunks, each seeded from (seed, chunk index),
/// so results are identical for any worker count.
class MaxAbsTDistribution {
 public:
  static constexpr std::int64_t kChunk = 1 << 16;

  MaxAbsTDistribution(const Eigen::MatrixXd& correlation, double df, std::int64_t draws,
                      std::uint64_t seed, std::size_t workers = 1);

  /// Fraction of draws with max |T| >= |t|.
  double upper_tail(double t) const;
  /// Smallest draw value c with P(max |T| <= c) >= prob.
  double quantile(double prob) const;

  const Eigen::MatrixXd& correlation() const { return correlation_; }
  double df() const { return df_; }
  std::int64_t draws() const { return static_cast<std::int64_t>(sorted_.size()); }
  std::uint64_t seed() const { return seed_; }

 private:
  Eigen::MatrixXd correlation_;
  double df_;
  std::uint64_t seed_;
  std::vector<double> sorted_;
};

struct DunnettOptions {
  std::int64_t draws = 1'000'000;
  std::uint64_t seed = 20240901;
  std::size_t workers = 1;
};

struct DunnettComparison {
  int treatment = 0;
  double estimate = 0.0;  // adjusted mean(treatment) - adjusted mean(control)
  double se = 0.0;
  double t = 0.0;
  double p_familywise = 1.0;
};

struct DunnettResult {
  int control = 0;
  double alpha = 0.05;
  double critical_value = 0.0;
  double df = 0.0;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
  std::vector<DunnettComparison> comparisons;
};

/// Correlation matrix of the control-vs-treatment estimates.
Eigen::MatrixXd dunnett_correlation(const AncovaResult& fit, int control);

DunnettResult dunnett_test(const AncovaResult& fit, int control, double alpha,
                           const DunnettOptions& opts = {});
/// Reuses a precomputed reference distribution; its correlation must match
/// the fit's comparisons.
DunnettResult dunnett_test(const AncovaResult& fit, int control, double alpha,
                           const MaxAbsTDistribution& reference);

}  // namespace thalbench::stats
