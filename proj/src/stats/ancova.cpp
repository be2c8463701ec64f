#include "thalbench/stats/ancova.hpp"

#include "thalbench/error.hpp"
#include "thalbench/parallel.hpp"
#include "thalbench/stats/distributions.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace thalbench::stats {
namespace {

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inverse;
  double rss = 0.0;
};

// Column-equilibrated, pivoted QR so that raw-scale covariates (eTIV in mm^3
// next to 0/1 dummies) do not distort rank detection.
OlsFit ordinary_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd norms = x.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(norms[j] > 0.0)) throw DomainError("rank-deficient design: all-zero column");
  const Eigen::MatrixXd xs = x * norms.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs.rows(), xs.cols());
  qr.setThreshold(1e-10);
  qr.compute(xs);
  if (qr.rank() < p) throw DomainError("rank-deficient design (collinear group or covariate columns)");

  OlsFit fit;
  fit.beta = qr.solve(y).cwiseQuotient(norms);
  fit.residuals = y - x * fit.beta;
  fit.rss = fit.residuals.squaredNorm();

  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd scaled_inv = perm * (r_inv * r_inv.transpose()) * perm.transpose();
  fit.xtx_inverse = norms.cwiseInverse().asDiagonal() * scaled_inv * norms.cwiseInverse().asDiagonal();
  return fit;
}

std::uint32_t low32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t high32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Eigen::RowVectorXd AncovaResult::mean_contrast(int g) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(beta.size());
  row[0] = 1.0;
  if (g != reference) row[1 + (g < reference ? g : g - 1)] = 1.0;
  row.tail(covariate_means.size()) = covariate_means.transpose();
  return row;
}

AncovaResult fit_ancova(const Eigen::VectorXd& y, std::span<const int> group, int n_groups,
                        const Eigen::MatrixXd& covariates, int reference) {
  const Eigen::Index n = y.size();
  if (static_cast<Eigen::Index>(group.size()) != n || covariates.rows() != n)
    throw DomainError("ANCOVA inputs have inconsistent lengths");
  if (n_groups < 2) throw DomainError("ANCOVA needs at least two groups");
  if (reference < 0 || reference >= n_groups) throw DomainError("ANCOVA reference group out of range");
  if (!y.allFinite() || !covariates.allFinite()) throw DomainError("ANCOVA inputs contain non-finite values");

  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(n_groups), 0);
  for (int g : group) {
    if (g < 0 || g >= n_groups) throw DomainError("ANCOVA group index out of range");
    ++sizes[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < n_groups; ++g)
    if (sizes[static_cast<std::size_t>(g)] < 2)
      throw DomainError("ANCOVA group " + std::to_string(g) + " has fewer than two subjects");

  const Eigen::Index c = covariates.cols();
  const Eigen::Index p = 1 + (n_groups - 1) + c;
  if (n <= p) throw DomainError("ANCOVA needs more observations than parameters");

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  x.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = group[static_cast<std::size_t>(i)];
    if (g != reference) x(i, 1 + (g < reference ? g : g - 1)) = 1.0;
  }
  x.rightCols(c) = covariates;

  const OlsFit full = ordinary_least_squares(x, y);
  Eigen::MatrixXd xr(n, 1 + c);
  xr.col(0).setOnes();
  xr.rightCols(c) = covariates;
  const OlsFit reduced = ordinary_least_squares(xr, y);

  AncovaResult r;
  r.n_groups = n_groups;
  r.reference = reference;
  r.n = n;
  r.df_group = n_groups - 1;
  r.df_residual = static_cast<double>(n - p);
  r.residual_variance = full.rss / r.df_residual;
  r.beta = full.beta;
  r.xtx_inverse = full.xtx_inverse;
  r.beta_covariance = r.residual_variance * full.xtx_inverse;
  r.covariate_coefficients = full.beta.tail(c);
  r.covariate_means = covariates.colwise().mean().transpose();
  r.group_sizes = sizes;
  r.design = x;
  r.residuals = full.residuals;

  const double extra = std::max(0.0, reduced.rss - full.rss);
  if (full.rss == 0.0) {
    r.f_group = extra == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    r.f_group = (extra / r.df_group) / r.residual_variance;
  }
  r.p_group = f_upper_tail(r.f_group, r.df_group, r.df_residual);

  r.adjusted_means.resize(n_groups);
  r.adjusted_se.resize(n_groups);
  for (int g = 0; g < n_groups; ++g) {
    const Eigen::RowVectorXd l = r.mean_contrast(g);
    r.adjusted_means[g] = l * r.beta;
    r.adjusted_se[g] = std::sqrt(std::max(0.0, (l * r.beta_covariance * l.transpose())(0, 0)));
  }
  return r;
}

MaxAbsTDistribution::MaxAbsTDistribution(const Eigen::MatrixXd& correlation, double df, std::int64_t draws,
                                         std::uint64_t seed, std::size_t workers)
    : correlation_(correlation), df_(df), seed_(seed) {
  if (correlation.rows() < 1 || correlation.rows() != correlation.cols())
    throw DomainError("correlation matrix must be square and nonempty");
  if (!(df > 0.0)) throw DomainError("multivariate t needs df > 0");
  if (draws < 1) throw DomainError("Monte Carlo needs at least one draw");

  const Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success) throw DomainError("comparison correlation matrix is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  const Eigen::Index k = correlation.rows();

  sorted_.resize(static_cast<std::size_t>(draws));
  const std::int64_t chunks = (draws + kChunk - 1) / kChunk;
  parallel_for(static_cast<std::size_t>(chunks), workers, [&](std::size_t chunk) {
    std::seed_seq seq{low32(seed), high32(seed), static_cast<std::uint32_t>(chunk)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(df);
    Eigen::VectorXd z(k);
    const std::int64_t begin = static_cast<std::int64_t>(chunk) * kChunk;
    const std::int64_t end = std::min(draws, begin + kChunk);
    for (std::int64_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) z[j] = normal(rng);
      const double scale = std::sqrt(chi2(rng) / df);
      sorted_[static_cast<std::size_t>(i)] = (lower * z).cwiseAbs().maxCoeff() / scale;
    }
  });
  std::sort(sorted_.begin(), sorted_.end());
}

double MaxAbsTDistribution::upper_tail(double t) const {
  const double a = std::fabs(t);
  if (std::isnan(a)) return std::numeric_limits<double>::quiet_NaN();
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), a);
  return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
}

double MaxAbsTDistribution::quantile(double prob) const {
  if (!(prob > 0.0 && prob <= 1.0)) throw DomainError("quantile probability must lie in (0, 1]");
  const auto n = static_cast<double>(sorted_.size());
  const auto idx = static_cast<std::size_t>(std::max(1.0, std::ceil(prob * n))) - 1;
  return sorted_[std::min(idx, sorted_.size() - 1)];
}

Eigen::MatrixXd dunnett_correlation(const AncovaResult& fit, int control) {
  if (control < 0 || control >= fit.n_groups) throw DomainError("Dunnett control group out of range");
  const Eigen::RowVectorXd base = fit.mean_contrast(control);
  Eigen::MatrixXd l(fit.n_groups - 1, fit.beta.size());
  Eigen::Index row = 0;
  for (int g = 0; g < fit.n_groups; ++g)
    if (g != control) l.row(row++) = fit.mean_contrast(g) - base;
  const Eigen::MatrixXd cov = l * fit.beta_covariance * l.transpose();
  const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

DunnettResult dunnett_test(const AncovaResult& fit, int control, double alpha, const MaxAbsTDistribution& reference) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const Eigen::MatrixXd corr = dunnett_correlation(fit, control);
  if (corr.rows() != reference.correlation().rows() || reference.df() != fit.df_residual ||
      !corr.isApprox(reference.correlation(), 1e-9))
    throw DomainError("reference distribution does not match this design");

  DunnettResult r;
  r.control = control;
  r.alpha = alpha;
  r.df = fit.df_residual;
  r.draws = reference.draws();
  r.seed = reference.seed();
  r.critical_value = reference.quantile(1.0 - alpha);

  const Eigen::RowVectorXd base = fit.mean_contrast(control);
  for (int g = 0; g < fit.n_groups; ++g) {
    if (g == control) continue;
    const Eigen::RowVectorXd l = fit.mean_contrast(g) - base;
    DunnettComparison c;
    c.treatment = g;
    c.estimate = l * fit.beta;
    c.se = std::sqrt((l * fit.beta_covariance * l.transpose())(0, 0));
    c.t = c.se > 0.0 ? c.estimate / c.se : (c.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, c.estimate));
    c.p_familywise = reference.upper_tail(c.t);
    r.comparisons.push_back(c);
  }
  return r;
}

DunnettResult dunnett_test(const AncovaResult& fit, int control, double alpha, const DunnettOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const MaxAbsTDistribution dist(dunnett_correlation(fit, control), fit.df_residual, opts.draws, opts.seed,
                                 opts.workers);
  return dunnett_test(fit, control, alpha, dist);
}

}  // namespace thalbench::stats
