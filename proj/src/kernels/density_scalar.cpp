#include "smilecal/detail/density_math.hpp"
#include "smilecal/kernels.hpp"

namespace smilecal::kernels::scalar {

void smile_density(const SmileParams& params, UniformGrid grid, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = detail::smile_density_point(params.g, params.chi, params.n, params.maturity, grid.at(i));
    }
}

void gaussian_density(double vol, double maturity, UniformGrid grid, std::span<double> out) {
    const double variance = vol * vol * maturity;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = detail::gaussian_point(variance, grid.at(i));
    }
}

}  // namespace smilecal::kernels::scalar
