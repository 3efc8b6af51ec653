#pragma once

#include "smilecal/smile_model.hpp"

#include <span>
#include <string_view>

namespace smilecal::kernels {

/// Instruction set used by the grid kernels. `automatic` picks the best one
/// the running CPU supports.
enum class Isa { automatic, scalar, avx2 };

bool available(Isa isa);
Isa resolve(Isa requested);
std::string_view name(Isa isa);
/// Parses "auto", "scalar" or "avx2"; throws DomainError otherwise.
Isa parse_isa(std::string_view text);

struct UniformGrid {
    double lo = 0.0;
    double step = 0.0;

    double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
};

/// Return density of the smile at out.size() points of the grid.
void smile_density(const SmileParams& params, UniformGrid grid, std::span<double> out, Isa isa = Isa::automatic);

/// Smile-free Gaussian return density at out.size() grid points.
void gaussian_density(double vol, double maturity, UniformGrid grid, std::span<double> out,
                      Isa isa = Isa::automatic);

namespace scalar {
void smile_density(const SmileParams& params, UniformGrid grid, std::span<double> out);
void gaussian_density(double vol, double maturity, UniformGrid grid, std::span<double> out);
}  // namespace scalar

#ifdef SMILECAL_HAVE_AVX2
namespace avx2 {
void smile_density(const SmileParams& params, UniformGrid grid, std::span<double> out);
void gaussian_density(double vol, double maturity, UniformGrid grid, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace smilecal::kernels
