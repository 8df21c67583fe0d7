#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace atsm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a computation fails for numerical reasons (singular system,
/// Riccati blow-up, non-stationary dynamics) as opposed to API misuse.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace atsm
