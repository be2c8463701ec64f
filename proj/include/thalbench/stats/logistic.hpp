#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace thalbench::stats {

struct LogisticOptions {
  double ridge = 1e-6;  // applied to non-intercept coefficients only
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

struct LogisticModel {
  Eigen::VectorXd coefficients;  // intercept first
  int iterations = 0;
  bool converged = false;
  double penalized_log_likelihood = 0.0;

  /// Linear predictor for each row of `features` (no intercept column).
  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& features) const;
};

/// Penalized log-likelihood sum(y*eta - log(1 + e^eta)) - ridge/2 * |beta[1:]|^2
/// for a design that already contains the intercept column.
double logistic_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                          const Eigen::VectorXd& beta, double ridge);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                                  const Eigen::VectorXd& beta, double ridge);

/// Damped Newton maximum-likelihood fit. Labels must be 0/1 with both
/// classes present; features must be finite.
LogisticModel fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                           const LogisticOptions& opts = {});

struct RocPoint {
  double threshold = 0.0;  // predict positive when score >= threshold
  double sensitivity = 0.0;
  double specificity = 1.0;
};

struct RocResult {
  double auc = 0.5;
  std::vector<RocPoint> curve;
  Eigen::VectorXd coefficients;  // empty unless produced through a logistic fit
};

/// AUC = (concordant + ties/2) / (n_pos * n_neg), plus the empirical curve.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace thalbench::stats
