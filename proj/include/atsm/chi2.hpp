#pragma once

namespace atsm {

/// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

/// P(X > w) for X ~ chi-square with df degrees of freedom.
double chi2_survival(double w, int df);

} // namespace atsm
