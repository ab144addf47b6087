#pragma once

namespace rqbench {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
/// (modified Lentz) to an absolute tolerance of 1e-12.
double regularized_incomplete_beta(double a, double b, double x);

/// P(F <= f) for the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double f, double d1, double d2);

/// Upper tail P(F > f), evaluated without cancellation.
double f_survival(double f, double d1, double d2);

}  // namespace rqbench
