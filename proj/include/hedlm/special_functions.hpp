#pragma once

namespace hedlm::stats {

double normal_cdf(double z);
double normal_sf(double z);

/// P(a, x): lower regularized incomplete gamma.
double regularized_gamma_p(double a, double x);

/// I_x(a, b): regularized incomplete beta by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

double chi_square_sf(double x, int df);

/// Upper tail of Student's t with df degrees of freedom.
double student_t_sf(double t, double df);

/// Upper tail of the F distribution.
double f_sf(double f, double d1, double d2);

/// Upper tail of the studentized range distribution with k groups and
/// infinite degrees of freedom, by numerical quadrature over the range
/// density (no closed form exists). Absolute accuracy ~1e-8.
double studentized_range_sf(double q, int k);

}  // namespace hedlm::stats
