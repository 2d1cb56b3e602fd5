#pragma once

namespace piecehaz {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x),
// by power series for x < a + 1 and Lentz continued fraction otherwise.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Upper tail P(X >= statistic) of a chi-square variable with df degrees of freedom.
double chi_square_upper_tail(double statistic, double df);

// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

}  // namespace piecehaz
