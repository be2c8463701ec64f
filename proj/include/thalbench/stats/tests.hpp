#pragma once

#include "thalbench/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace thalbench::stats {

enum class TTestOutcome {
  kRegular,
  /// Differences have zero variance but nonzero mean: t is +/-infinity, p = 0.
  kInfiniteT,
  /// Every difference is exactly zero: t = 0, p = 1 by convention.
  kAllZero,
};

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;  // equals p_raw until a family correction is applied
  double mean_diff = 0.0;
  TTestOutcome outcome = TTestOutcome::kRegular;
};

/// Paired two-sided t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

template <typename DerivedA, typename DerivedB>
TTestResult paired_t_test(const Eigen::DenseBase<DerivedA>& a, const Eigen::DenseBase<DerivedB>& b) {
  const Eigen::VectorXd va = a.template cast<double>();
  const Eigen::VectorXd vb = b.template cast<double>();
  return paired_t_test(std::span<const double>(va.data(), va.size()),
                       std::span<const double>(vb.data(), vb.size()));
}

double bonferroni_adjust(double p, int family_size);
std::vector<double> bonferroni_adjust(std::span<const double> p_values, int family_size);

/// (mean_a - mean_b) / pooled SD. Positive when group a is larger.
template <typename DerivedA, typename DerivedB>
double cohens_d(const Eigen::DenseBase<DerivedA>& group_a, const Eigen::DenseBase<DerivedB>& group_b) {
  const auto na = group_a.size(), nb = group_b.size();
  if (na < 2 || nb < 2) throw DomainError("Cohen's d needs at least two values per group");
  const Eigen::ArrayXd a = group_a.template cast<double>().array();
  const Eigen::ArrayXd b = group_b.template cast<double>().array();
  const double ma = a.mean(), mb = b.mean();
  const double ssa = (a - ma).square().sum(), ssb = (b - mb).square().sum();
  const double pooled = std::sqrt((ssa + ssb) / static_cast<double>(na + nb - 2));
  if (!(pooled > 0.0)) throw DomainError("Cohen's d undefined: zero pooled variance");
  return (ma - mb) / pooled;
}

}  // namespace thalbench::stats
