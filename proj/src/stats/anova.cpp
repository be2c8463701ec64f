#include "thalbench/stats/anova.hpp"

#include "thalbench/error.hpp"
#include "thalbench/stats/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thalbench::stats {
namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

// Sums of squares at or below `noise` are rounding residue of exactly
// constant data and are snapped to zero.
AnovaEffect test_effect(const Eigen::MatrixXd& cells, const Eigen::MatrixXd& contrast, double noise) {
  const auto n = static_cast<double>(cells.rows());
  const Eigen::MatrixXd z = cells * contrast;
  const Eigen::RowVectorXd zbar = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - zbar;

  AnovaEffect e;
  const double df = static_cast<double>(contrast.cols());
  e.ss = n * zbar.squaredNorm();
  e.ss_error = centered.squaredNorm();
  if (e.ss <= noise) e.ss = 0.0;
  if (e.ss_error <= noise) e.ss_error = 0.0;
  e.df_num_uncorrected = df;
  e.df_den_uncorrected = df * (n - 1.0);
  e.epsilon = contrast.cols() == 1 || e.ss_error == 0.0
                  ? 1.0
                  : greenhouse_geisser_epsilon(centered.transpose() * centered / (n - 1.0));
  e.df_num = df * e.epsilon;
  e.df_den = e.df_den_uncorrected * e.epsilon;

  if (e.ss_error == 0.0) {
    e.F = e.ss == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    e.F = (e.ss / e.df_num_uncorrected) / (e.ss_error / e.df_den_uncorrected);
  }
  e.p = f_upper_tail(e.F, e.df_num, e.df_den);
  return e;
}

}  // namespace

Eigen::MatrixXd helmert_contrasts(int k) {
  if (k < 2) throw DomainError("contrasts need at least two levels");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k - 1);
  for (int j = 1; j < k; ++j) {
    const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
    h.col(j - 1).head(j).setConstant(1.0 / norm);
    h(j, j - 1) = -static_cast<double>(j) / norm;
  }
  return h;
}

double greenhouse_geisser_epsilon(const Eigen::MatrixXd& covariance) {
  const auto df = static_cast<double>(covariance.rows());
  const double tr = covariance.trace();
  const double tr2 = (covariance * covariance).trace();
  if (!(tr2 > 0.0)) return 1.0;
  return std::clamp(tr * tr / (df * tr2), 1.0 / df, 1.0);
}

AnovaResult rm_anova_2way(const RepeatedMeasures2& data) {
  const int la = data.levels_a, lb = data.levels_b;
  if (la < 2 || lb < 2) throw DomainError("two-way ANOVA needs at least two levels per factor");
  if (data.cells.cols() != static_cast<Eigen::Index>(la) * lb)
    throw DomainError("ANOVA cell matrix does not match factor levels (unbalanced design)");
  if (data.subjects() < 2) throw DomainError("ANOVA needs at least two subjects");
  if (!data.cells.allFinite()) throw DomainError("ANOVA design has missing cells");

  const Eigen::MatrixXd ha = helmert_contrasts(la);
  const Eigen::MatrixXd hb = helmert_contrasts(lb);
  const Eigen::MatrixXd mean_a = Eigen::VectorXd::Constant(la, 1.0 / std::sqrt(static_cast<double>(la)));
  const Eigen::MatrixXd mean_b = Eigen::VectorXd::Constant(lb, 1.0 / std::sqrt(static_cast<double>(lb)));

  const double scale = data.cells.cwiseAbs().maxCoeff();
  const double noise = static_cast<double>(data.cells.size()) *
                       std::pow(16.0 * std::numeric_limits<double>::epsilon() * scale, 2);

  AnovaResult r;
  r.a = test_effect(data.cells, kron(ha, mean_b), noise);
  r.b = test_effect(data.cells, kron(mean_a, hb), noise);
  r.ab = test_effect(data.cells, kron(ha, hb), noise);

  const Eigen::VectorXd subject_means = data.cells.rowwise().mean();
  r.ss_subjects = static_cast<double>(la * lb) * (subject_means.array() - subject_means.mean()).square().sum();
  if (r.ss_subjects <= noise) r.ss_subjects = 0.0;

  const double error_total = r.ss_subjects + r.a.ss_error + r.b.ss_error + r.ab.ss_error;
  for (AnovaEffect* e : {&r.a, &r.b, &r.ab}) {
    const double denom = e->ss + error_total;
    e->ges = denom > 0.0 ? e->ss / denom : 0.0;
  }
  return r;
}

}  // namespace thalbench::stats
