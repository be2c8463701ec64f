#include "thalbench/stats/tests.hpp"

#include "thalbench/stats/distributions.hpp"

#include <algorithm>
#include <limits>

namespace thalbench::stats {

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw DomainError("paired t-test needs at least two pairs");
  const auto n = static_cast<double>(a.size());

  Eigen::ArrayXd d(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) d[static_cast<Eigen::Index>(i)] = a[i] - b[i];

  TTestResult r;
  r.df = n - 1.0;
  r.mean_diff = d.mean();
  if ((d == 0.0).all()) {
    r.outcome = TTestOutcome::kAllZero;
    r.mean_diff = 0.0;
    return r;
  }
  const double var = (d - r.mean_diff).square().sum() / (n - 1.0);
  if (var == 0.0) {
    r.outcome = TTestOutcome::kInfiniteT;
    r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean_diff);
    r.p_raw = r.p_adjusted = 0.0;
    return r;
  }
  r.t = r.mean_diff / std::sqrt(var / n);
  r.p_raw = r.p_adjusted = student_t_two_sided_p(r.t, r.df);
  return r;
}

double bonferroni_adjust(double p, int family_size) {
  if (family_size < 1) throw DomainError("Bonferroni family size must be >= 1");
  return std::min(1.0, p * family_size);
}

std::vector<double> bonferroni_adjust(std::span<const double> p_values, int family_size) {
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(bonferroni_adjust(p, family_size));
  return out;
}

}  // namespace thalbench::stats
