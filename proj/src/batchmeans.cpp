#include "atsm/batchmeans.hpp"

#include <cmath>

namespace atsm {

Matrix batch_means_asymptotic_covariance(const Matrix& series) {
    const int n = static_cast<int>(series.rows());
    const int dim = static_cast<int>(series.cols());
    if (n < 100) throw std::invalid_argument("batch_means: need at least 100 draws");
    const int b = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
    const int a = n / b;
    Matrix means(a, dim);
    for (int k = 0; k < a; ++k)
        means.row(k) = series.middleRows(k * b, b).colwise().mean();
    Eigen::RowVectorXd grand = series.topRows(a * b).colwise().mean();
    Matrix centered = means.rowwise() - grand;
    Matrix cov = (centered.transpose() * centered) * (static_cast<double>(b) / (a - 1));
    return 0.5 * (cov + cov.transpose());
}

double batch_means_asymptotic_variance(const Vector& series) {
    Matrix m(series.size(), 1);
    m.col(0) = series;
    return batch_means_asymptotic_covariance(m)(0, 0);
}

double batch_means_variance_of_mean(const Vector& series) {
    return batch_means_asymptotic_variance(series) / static_cast<double>(series.size());
}

} // namespace atsm
