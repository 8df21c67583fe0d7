#pragma once

#include "atsm/types.hpp"

namespace atsm {

/// Batch-means estimate of the asymptotic variance in the Markov-chain CLT
/// sqrt(n) (xbar - mu) -> N(0, sigma_inf^2): batches of size floor(sqrt(n)),
/// sigma_inf^2 ~= b * Var(batch means).  Requires n >= 100.
double batch_means_asymptotic_variance(const Vector& series);

/// Variance of the chain mean: asymptotic variance / n.
double batch_means_variance_of_mean(const Vector& series);

/// Multivariate version for contrast vectors: columns of `series` are the
/// component chains; returns the batch-means estimate of n * Cov(mean).
Matrix batch_means_asymptotic_covariance(const Matrix& series);

} // namespace atsm
