#include "thalbench/bench.hpp"

#include "thalbench/error.hpp"
#include "thalbench/format.hpp"
#include "thalbench/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace thalbench::bench {

AgreementClass classify_agreement(double dice) {
  if (!(dice >= 0.0 && dice <= 1.0)) throw DomainError("Dice must lie in [0, 1], got " + format_number(dice));
  if (dice == 0.0) return AgreementClass::kNone;
  if (dice < 0.2) return AgreementClass::kSlight;
  if (dice < 0.4) return AgreementClass::kFair;
  if (dice < 0.6) return AgreementClass::kModerate;
  if (dice < 0.8) return AgreementClass::kSubstantial;
  return AgreementClass::kAlmostPerfect;
}

std::string_view agreement_name(AgreementClass c) {
  switch (c) {
    case AgreementClass::kNone: return "none";
    case AgreementClass::kSlight: return "slight";
    case AgreementClass::kFair: return "fair";
    case AgreementClass::kModerate: return "moderate";
    case AgreementClass::kSubstantial: return "substantial";
    case AgreementClass::kAlmostPerfect: return "almost_perfect";
  }
  return "?";
}

bool RankRow::significantly_better(int i, int j) const { return pair(i, j).better == i; }

const PairwiseComparison& RankRow::pair(int i, int j) const {
  for (const auto& p : pairs)
    if ((p.a == i && p.b == j) || (p.a == j && p.b == i)) return p;
  throw DomainError("no comparison between methods " + std::to_string(i) + " and " + std::to_string(j));
}

RankRow rank_methods(const Eigen::MatrixXd& values, Direction better, int family_size, double alpha) {
  const auto m = static_cast<int>(values.cols());
  if (m < 2) throw DomainError("ranking needs at least two methods");
  if (values.rows() < 2) throw DomainError("ranking needs at least two subjects");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!values.allFinite()) throw DomainError("ranking input contains non-finite values");

  RankRow row;
  row.means = values.colwise().mean().transpose();
  const double sign = better == Direction::kHigherIsBetter ? 1.0 : -1.0;
  row.order.resize(m);
  std::iota(row.order.begin(), row.order.end(), 0);
  std::stable_sort(row.order.begin(), row.order.end(),
                   [&](int i, int j) { return sign * row.means[i] > sign * row.means[j]; });

  std::vector<int> beaten_by(m, 0);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      PairwiseComparison p;
      p.a = a;
      p.b = b;
      p.test = stats::paired_t_test(values.col(a), values.col(b));
      p.test.p_adjusted = stats::bonferroni_adjust(p.test.p_raw, family_size);
      if (p.test.p_adjusted < alpha && p.test.mean_diff != 0.0) {
        p.better = sign * p.test.mean_diff > 0.0 ? a : b;
        ++beaten_by[p.better == a ? b : a];
      }
      row.pairs.push_back(p);
    }
  row.ranks.resize(m);
  for (int i = 0; i < m; ++i) row.ranks[i] = 1 + beaten_by[i];
  return row;
}

RankSummary summarize_ranks(std::span<const int> ranks) {
  if (ranks.empty()) throw DomainError("no ranks to summarize");
  const auto n = static_cast<double>(ranks.size());
  RankSummary s;
  s.mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / n;
  double ss = 0.0;
  for (int r : ranks) ss += (r - s.mean) * (r - s.mean);
  s.sd_population = std::sqrt(ss / n);
  s.sd_sample = ranks.size() > 1 ? std::sqrt(ss / (n - 1.0)) : std::numeric_limits<double>::quiet_NaN();
  return s;
}

std::string_view best_outcome_name(BestOutcome o) {
  switch (o) {
    case BestOutcome::kSingle: return "single";
    case BestOutcome::kJoint: return "joint";
    case BestOutcome::kNone: return "none";
  }
  return "?";
}

BestMethodDecision select_best(const RankRow& subject_dice, std::span<const double> mni_dice) {
  const auto m = static_cast<int>(subject_dice.means.size());
  if (static_cast<int>(mni_dice.size()) != m) throw DomainError("subject and MNI evidence cover different methods");
  for (double d : mni_dice)
    if (!std::isfinite(d)) throw DomainError("MNI Dice must be finite");

  BestMethodDecision out;
  const int best = static_cast<int>(std::max_element(mni_dice.begin(), mni_dice.end()) - mni_dice.begin());
  out.mni_best = best;
  out.trace.push_back("highest MNI Dice: method " + std::to_string(best) + " (" + format_number(mni_dice[best]) +
                      ")");

  bool dominates = true;
  std::vector<int> qualified{best};
  for (int x = 0; x < m; ++x) {
    if (x == best) continue;
    const auto& p = subject_dice.pair(best, x);
    if (p.better == best) {
      out.trace.push_back("method " + std::to_string(best) + " significantly better than " + std::to_string(x) +
                          " at subject level");
      continue;
    }
    dominates = false;
    const bool mni_tie = mni_dice[x] == mni_dice[best];
    if (p.better == x) {
      // Rule (b): subject-level significance points the other way from MNI.
      const std::string why = mni_tie ? "MNI Dice tied" : "MNI Dice favours " + std::to_string(best);
      out.trace.push_back("rule b: method " + std::to_string(x) + " significantly better than " +
                          std::to_string(best) + " at subject level; " + why);
      qualified.push_back(x);
    } else if (subject_dice.means[x] > subject_dice.means[best] || mni_tie) {
      // Rule (a): no significant difference and opposite directions.
      out.trace.push_back("rule a: methods " + std::to_string(best) + " and " + std::to_string(x) +
                          " not significantly different; subject mean favours " +
                          std::to_string(subject_dice.means[x] > subject_dice.means[best] ? x : best) +
                          (mni_tie ? ", MNI Dice tied" : ", MNI Dice favours " + std::to_string(best)));
      qualified.push_back(x);
    } else {
      out.trace.push_back("method " + std::to_string(x) + " not significantly different from " +
                          std::to_string(best) + " but subject and MNI directions agree");
    }
  }
  std::sort(qualified.begin(), qualified.end());
  if (dominates) {
    out.outcome = BestOutcome::kSingle;
    out.winners = {best};
    out.trace.push_back("single winner: highest MNI Dice and significantly best at subject level");
  } else if (qualified.size() == 1) {
    out.outcome = BestOutcome::kSingle;
    out.winners = qualified;
    out.trace.push_back("single winner: no other method meets the joint criteria");
  } else if (qualified.size() == 2) {
    out.outcome = BestOutcome::kJoint;
    out.winners = qualified;
    out.trace.push_back("joint winners");
  } else {
    out.outcome = BestOutcome::kNone;
    out.trace.push_back(std::to_string(qualified.size()) + " methods meet the joint criteria: no best method");
  }
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_cohens_d(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  try {
    return stats::cohens_d(a, b);
  } catch (const DomainError&) {
    return kNaN;
  }
}

// Treatment comparisons for a fit with zero residual variance: every
// nonzero difference is exact.
stats::DunnettResult exact_dunnett(const stats::AncovaResult& fit, double alpha) {
  stats::DunnettResult r;
  r.alpha = alpha;
  r.df = fit.df_residual;
  for (int g = 1; g < fit.n_groups; ++g) {
    stats::DunnettComparison c;
    c.treatment = g;
    c.estimate = fit.adjusted_means[g] - fit.adjusted_means[0];
    c.se = 0.0;
    c.t = c.estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
    c.p_familywise = c.estimate == 0.0 ? 1.0 : 0.0;
    r.comparisons.push_back(c);
  }
  return r;
}

}  // namespace

EffectMap atrophy_effect_map(const CohortTable& cohort, Group control, std::span<const Group> treatments,
                             const EffectOptions& opts) {
  if (treatments.empty()) throw DomainError("atrophy map needs at least one treatment group");
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  std::vector<Group> groups{control};
  for (Group g : treatments) {
    if (std::find(groups.begin(), groups.end(), g) != groups.end())
      throw DomainError("treatment groups must be distinct from each other and the control");
    groups.push_back(g);
  }
  for (Group g : groups)
    if (cohort.count(g) < 2)
      throw InputError("group " + std::string(group_name(g)) + " needs at least two subjects, found " +
                       std::to_string(cohort.count(g)));

  const auto rows = rows_in(cohort, groups);
  const auto n = static_cast<Eigen::Index>(rows.size());
  std::vector<int> gidx(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    gidx[i] = static_cast<int>(std::find(groups.begin(), groups.end(), cohort.subjects[rows[i]].group) -
                               groups.begin());
  const Eigen::MatrixXd cov = covariate_matrix(cohort, rows);
  auto volumes = [&](Label code) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = cohort.subjects[rows[i]].volumes[code - 1];
    return y;
  };

  // The comparison correlation depends only on the design, so one reference
  // distribution serves every nucleus. Unit residual variance stands in for
  // the covariance scale.
  auto design_fit = stats::fit_ancova(volumes(1), gidx, static_cast<int>(groups.size()), cov, 0);
  design_fit.beta_covariance = design_fit.xtx_inverse;
  const stats::MaxAbsTDistribution reference(stats::dunnett_correlation(design_fit, 0), design_fit.df_residual,
                                             opts.dunnett.draws, opts.dunnett.seed, opts.dunnett.workers);

  EffectMap map;
  map.control = control;
  map.treatments.assign(treatments.begin(), treatments.end());
  map.alpha = opts.alpha;
  map.critical_value = reference.quantile(1.0 - opts.alpha);
  map.df = design_fit.df_residual;
  map.draws = reference.draws();
  map.seed = reference.seed();
  map.adjusted_d = opts.adjusted_d;
  map.nuclei.resize(kNucleusCount);

  parallel_for(kNucleusCount, opts.workers, [&](std::size_t k) {
    const Label code = static_cast<Label>(k + 1);
    const Eigen::VectorXd y = volumes(code);
    const auto fit = stats::fit_ancova(y, gidx, static_cast<int>(groups.size()), cov, 0);
    const auto dunnett =
        fit.residual_variance > 0.0 ? stats::dunnett_test(fit, 0, opts.alpha, reference) : exact_dunnett(fit, opts.alpha);

    // Covariate-adjusted values: remove the pooled within-group covariate fit.
    const Eigen::VectorXd adjusted =
        y - (cov.rowwise() - fit.covariate_means.transpose()) * fit.covariate_coefficients;

    NucleusEffect& e = map.nuclei[k];
    e.code = code;
    e.f = fit.f_group;
    e.df_group = fit.df_group;
    e.df_residual = fit.df_residual;
    e.p_ancova = fit.p_group;
    e.adjusted_means.assign(fit.adjusted_means.data(), fit.adjusted_means.data() + fit.adjusted_means.size());
    for (const auto& c : dunnett.comparisons) {
      auto pick = [&](const Eigen::VectorXd& v, int g) {
        std::vector<double> out;
        for (Eigen::Index i = 0; i < n; ++i)
          if (gidx[i] == g) out.push_back(v[i]);
        return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())).eval();
      };
      ComparisonEffect ce;
      ce.treatment = groups[c.treatment];
      ce.estimate = c.estimate;
      ce.se = c.se;
      ce.t = c.t;
      ce.p_dunnett = c.p_familywise;
      ce.d_adjusted = safe_cohens_d(pick(adjusted, 0), pick(adjusted, c.treatment));
      ce.d_raw = safe_cohens_d(pick(y, 0), pick(y, c.treatment));
      ce.d = opts.adjusted_d ? ce.d_adjusted : ce.d_raw;
      ce.shown = fit.p_group < opts.alpha && c.p_familywise < opts.alpha;
      e.comparisons.push_back(ce);
    }
  });
  return map;
}

std::string_view feature_mode_name(FeatureMode m) { return m == FeatureMode::kNuclei ? "nuclei" : "whole_thalamus"; }

Eigen::MatrixXd adjusted_features(const CohortTable& cohort, std::span<const std::size_t> rows,
                                  std::span<const std::size_t> reference_rows, FeatureMode mode) {
  if (reference_rows.size() < 4) throw DomainError("adjustment needs at least four reference subjects");
  auto raw = [&](std::span<const std::size_t> rs) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rs.size()), mode == FeatureMode::kNuclei ? kNucleusCount : 1);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto& s = cohort.subjects[rs[i]];
      if (mode == FeatureMode::kNuclei)
        for (int c = 0; c < kNucleusCount; ++c) v(static_cast<Eigen::Index>(i), c) = s.volumes[c];
      else
        v(static_cast<Eigen::Index>(i), 0) = s.whole_thalamus();
    }
    return v;
  };
  // Age and eTIV design, centred and scaled for conditioning.
  auto design = [&](std::span<const std::size_t> rs) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rs.size()), 3);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto& s = cohort.subjects[rs[i]];
      x.row(static_cast<Eigen::Index>(i)) << 1.0, (s.age - 72.5) / 10.0, (s.etiv_mm3 - 1.5e6) / 1.5e5;
    }
    return x;
  };
  const Eigen::MatrixXd xr = design(reference_rows);
  const auto qr = xr.colPivHouseholderQr();
  if (qr.rank() < 3) throw DomainError("age and eTIV are collinear in the reference group");
  const Eigen::MatrixXd coef = qr.solve(raw(reference_rows));

  const Eigen::MatrixXd x = design(rows);
  Eigen::MatrixXd f = raw(rows) - x.rightCols(2) * coef.bottomRows(2);
  // Standardize each feature over the analysed subjects.
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    const double mean = f.col(c).mean();
    const double sd = std::sqrt((f.col(c).array() - mean).square().sum() / std::max<Eigen::Index>(1, f.rows() - 1));
    f.col(c).array() -= mean;
    if (sd > 0.0) f.col(c) /= sd;
  }
  return f;
}

AucResult discrimination_auc(const CohortTable& cohort, Group control, Group target, FeatureMode mode,
                             const stats::LogisticOptions& opts) {
  if (control == target) throw DomainError("control and target groups must differ");
  const Group pair[] = {control, target};
  const auto rows = rows_in(cohort, pair);
  const Group only_control[] = {control};
  const auto control_rows = rows_in(cohort, only_control);

  AucResult r;
  r.control = control;
  r.target = target;
  r.mode = mode;
  r.n_control = control_rows.size();
  r.n_target = rows.size() - control_rows.size();
  if (r.n_control == 0 || r.n_target == 0)
    throw InputError("discrimination needs both " + std::string(group_name(control)) + " and " +
                     std::string(group_name(target)) + " subjects");

  const Eigen::MatrixXd features = adjusted_features(cohort, rows, control_rows, mode);
  Eigen::VectorXd labels(static_cast<Eigen::Index>(rows.size()));
  std::vector<int> ilabels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ilabels[i] = cohort.subjects[rows[i]].group == target ? 1 : 0;
    labels[static_cast<Eigen::Index>(i)] = ilabels[i];
  }
  const auto model = stats::fit_logistic(features, labels, opts);
  const Eigen::VectorXd scores = model.linear_predictor(features);
  auto roc = stats::roc_auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), ilabels);
  r.auc = roc.auc;
  r.curve = std::move(roc.curve);
  r.coefficients = model.coefficients;
  r.converged = model.converged;
  return r;
}

}  // namespace thalbench::bench
