#include "smilecal/errors.hpp"
#include "smilecal/kernels.hpp"

namespace smilecal::kernels {

bool available(Isa isa) {
    switch (isa) {
    case Isa::automatic:
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(SMILECAL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

Isa resolve(Isa requested) {
    if (requested == Isa::automatic) {
        return available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
    }
    if (!available(requested)) {
        throw DomainError("requested instruction set is not available on this CPU");
    }
    return requested;
}

std::string_view name(Isa isa) {
    switch (isa) {
    case Isa::automatic: return "auto";
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "?";
}

Isa parse_isa(std::string_view text) {
    if (text == "auto") return Isa::automatic;
    if (text == "scalar") return Isa::scalar;
    if (text == "avx2") return Isa::avx2;
    throw DomainError("unknown instruction set '" + std::string(text) + "'");
}

void smile_density(const SmileParams& params, UniformGrid grid, std::span<double> out, Isa isa) {
    switch (resolve(isa)) {
#ifdef SMILECAL_HAVE_AVX2
    case Isa::avx2:
        avx2::smile_density(params, grid, out);
        return;
#endif
    default:
        scalar::smile_density(params, grid, out);
        return;
    }
}

void gaussian_density(double vol, double maturity, UniformGrid grid, std::span<double> out, Isa isa) {
    switch (resolve(isa)) {
#ifdef SMILECAL_HAVE_AVX2
    case Isa::avx2:
        avx2::gaussian_density(vol, maturity, grid, out);
        return;
#endif
    default:
        scalar::gaussian_density(vol, maturity, grid, out);
        return;
    }
}

}  // namespace smilecal::kernels
