#pragma once

namespace thalbench::stats {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation to
/// about 1e-14 relative.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value P(|T| >= |t|) for Student t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Upper tail P(F >= f) of the F distribution.
double f_upper_tail(double f, double df_num, double df_den);

double normal_cdf(double z);

}  // namespace thalbench::stats
