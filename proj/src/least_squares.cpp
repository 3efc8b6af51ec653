#include "smilecal/least_squares.hpp"

#include <cmath>

namespace smilecal {

LmResult levenberg_marquardt(const ResidualFunction& fn, Eigen::VectorXd start, std::size_t residual_count,
                             const LmOptions& options) {
    const auto m = static_cast<Eigen::Index>(residual_count);
    const Eigen::Index p = start.size();

    LmResult out;
    out.params = std::move(start);
    out.residuals.resize(m);
    out.jacobian.resize(m, p);
    fn(out.params, out.residuals, &out.jacobian);
    out.sse = out.residuals.squaredNorm();

    double lambda = options.initial_damping;
    Eigen::VectorXd trial_r(m);
    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
        if (out.sse <= options.absolute_tolerance) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
        const Eigen::VectorXd grad = out.jacobian.transpose() * out.residuals;
        Eigen::VectorXd scale = jtj.diagonal();
        for (Eigen::Index i = 0; i < p; ++i) {
            if (!(scale[i] > 0.0)) scale[i] = 1e-300;
        }

        bool accepted = false;
        while (!accepted && lambda < 1e20) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * scale;
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = out.params + step;
            fn(trial, trial_r, nullptr);
            const double trial_sse = trial_r.allFinite() ? trial_r.squaredNorm() : INFINITY;
            if (trial_sse < out.sse) {
                const double change = (out.sse - trial_sse) / out.sse;
                out.params = trial;
                out.sse = trial_sse;
                fn(out.params, out.residuals, &out.jacobian);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                if (change < options.relative_tolerance) {
                    out.converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) {
            // No descent left at machine precision: a stationary point unless the gradient says otherwise.
            const double gnorm = grad.lpNorm<Eigen::Infinity>();
            out.converged = gnorm <= 1e-8 * std::max(1.0, std::sqrt(out.sse)) * std::sqrt(scale.maxCoeff());
            break;
        }
        if (out.converged) {
            ++out.iterations;
            break;
        }
    }
    return out;
}

}  // namespace smilecal
