#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace smilecal {

struct LmOptions {
    int max_iterations = 200;
    // Stop once an accepted step changes the sum of squares by less than this fraction.
    double relative_tolerance = 1e-10;
    double absolute_tolerance = 1e-30;
    double initial_damping = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double sse = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Fills residuals (size m) and, when the pointer is non-null, the m x p Jacobian.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian)>;

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling).
LmResult levenberg_marquardt(const ResidualFunction& fn, Eigen::VectorXd start, std::size_t residual_count,
                             const LmOptions& options = {});

}  // namespace smilecal
