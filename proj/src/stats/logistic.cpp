#include "thalbench/stats/logistic.hpp"

#include "thalbench/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace thalbench::stats {
namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd x(features.rows(), features.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(features.cols()) = features;
  return x;
}

}  // namespace

Eigen::VectorXd LogisticModel::linear_predictor(const Eigen::MatrixXd& features) const {
  if (features.cols() + 1 != coefficients.size()) throw DomainError("feature count does not match model");
  return (features * coefficients.tail(features.cols())).array() + coefficients[0];
}

double logistic_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels, const Eigen::VectorXd& beta,
                          double ridge) {
  const Eigen::VectorXd eta = design * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += labels[i] * eta[i] - softplus(eta[i]);
  return ll - 0.5 * ridge * beta.tail(beta.size() - 1).squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                                  const Eigen::VectorXd& beta, double ridge) {
  const Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = labels[i] - sigmoid(eta[i]);
  Eigen::VectorXd g = design.transpose() * resid;
  g.tail(g.size() - 1) -= ridge * beta.tail(beta.size() - 1);
  return g;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                           const LogisticOptions& opts) {
  if (features.rows() == 0 || features.cols() == 0) throw DomainError("logistic regression needs n > 0, p >= 1");
  if (features.rows() != labels.size()) throw DomainError("feature and label counts differ");
  if (!features.allFinite()) throw DomainError("logistic regression features must be finite");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0.0)
      has0 = true;
    else if (labels[i] == 1.0)
      has1 = true;
    else
      throw DomainError("logistic labels must be 0 or 1");
  }
  if (!has0 || !has1) throw DomainError("logistic regression needs both classes present");

  const Eigen::MatrixXd x = with_intercept(features);
  const Eigen::Index p = x.cols();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, opts.ridge);
  penalty[0] = 0.0;

  LogisticModel m;
  m.coefficients = Eigen::VectorXd::Zero(p);
  double objective = logistic_objective(x, labels, m.coefficients, opts.ridge);
  for (m.iterations = 0; m.iterations < opts.max_iterations; ++m.iterations) {
    const Eigen::VectorXd g = logistic_gradient(x, labels, m.coefficients, opts.ridge);
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) {
      m.converged = true;
      break;
    }
    const Eigen::VectorXd eta = x * m.coefficients;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double s = sigmoid(eta[i]);
      w[i] = s * (1.0 - s);
    }
    Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    h.diagonal() += penalty;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) {
      // Fully saturated weights: fall back to a gradient step.
      step = g;
    }

    // Near the optimum the objective change falls below rounding; there a
    // step is accepted when it shrinks the gradient instead.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(objective));
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd trial = m.coefficients + t * step;
      const double obj = logistic_objective(x, labels, trial, opts.ridge);
      const bool flat = std::fabs(obj - objective) <= noise;
      if ((obj >= objective && !flat) ||
          (flat && logistic_gradient(x, labels, trial, opts.ridge).lpNorm<Eigen::Infinity>() < gnorm)) {
        m.coefficients = trial;
        objective = obj;
        improved = true;
        break;
      }
    }
    if (!improved) break;  // no ascent possible at machine precision
  }
  if (!m.converged)
    m.converged =
        logistic_gradient(x, labels, m.coefficients, opts.ridge).lpNorm<Eigen::Infinity>() < opts.gradient_tolerance;
  m.penalized_log_likelihood = objective;
  return m;
}

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DomainError("score and label counts differ");
  std::int64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1)
      ++n_pos;
    else if (labels[i] == 0)
      ++n_neg;
    else
      throw DomainError("ROC labels must be 0 or 1");
    if (std::isnan(scores[i])) throw DomainError("ROC scores must not be NaN");
  }
  if (n_pos == 0 || n_neg == 0) throw DomainError("ROC analysis needs both classes present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult r;
  r.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  // Walk score groups from high to low; 2*(concordant) + ties counted exactly.
  std::int64_t tp = 0, fp = 0, twice_numerator = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::int64_t pos = 0, neg = 0;
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? pos : neg) += 1;
    // Positives in this group beat negatives with lower scores and tie with
    // negatives in the group.
    twice_numerator += pos * (2 * (n_neg - fp - neg) + neg);
    tp += pos;
    fp += neg;
    r.curve.push_back({s, static_cast<double>(tp) / n_pos, 1.0 - static_cast<double>(fp) / n_neg});
  }
  r.auc = static_cast<double>(twice_numerator) / static_cast<double>(2 * n_pos * n_neg);
  return r;
}

}  // namespace thalbench::stats
