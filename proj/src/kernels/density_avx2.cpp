// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "smilecal/detail/density_math.hpp"
#include "smilecal/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <array>

namespace smilecal::kernels::avx2 {
namespace {

// exp(x) for x <= 709: 2^k * p(r), |r| <= ln2/2, degree-13 Taylor polynomial.
// Inputs below -708 flush to zero (the scalar libm result there is < 4e-308).
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d lower = _mm256_set1_pd(-708.0);
    const __m256d upper = _mm256_set1_pd(709.0);

    const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lower), upper);

    const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    static constexpr std::array<double, 14> coeff = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
        1.0 / 40320.0,      1.0 / 5040.0,      1.0 / 720.0,      1.0 / 120.0,     1.0 / 24.0,
        1.0 / 6.0,          0.5,               1.0,              1.0};
    __m256d poly = _mm256_set1_pd(coeff[0]);
    for (std::size_t i = 1; i < coeff.size(); ++i) {
        poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(coeff[i]));
    }

    const __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i bits = _mm256_cvtepi32_epi64(k32);
    bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
    bits = _mm256_slli_epi64(bits, 52);
    const __m256d scale = _mm256_castsi256_pd(bits);

    return _mm256_andnot_pd(underflow, _mm256_mul_pd(poly, scale));
}

inline __m256d gaussian_pd(__m256d variance, __m256d x) {
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d z = _mm256_add_pd(x, _mm256_mul_pd(half, variance));
    const __m256d z2 = _mm256_mul_pd(z, z);
    const __m256d arg = _mm256_div_pd(z2, _mm256_mul_pd(_mm256_set1_pd(2.0), variance));
    const __m256d e = exp_pd(_mm256_xor_pd(arg, _mm256_set1_pd(-0.0)));
    return _mm256_div_pd(_mm256_mul_pd(e, _mm256_set1_pd(detail::kInvSqrt2Pi)), _mm256_sqrt_pd(variance));
}

inline __m256d grid_x(UniformGrid grid, std::size_t base) {
    const double b = static_cast<double>(base);
    const __m256d idx = _mm256_set_pd(b + 3.0, b + 2.0, b + 1.0, b);
    return _mm256_add_pd(_mm256_set1_pd(grid.lo), _mm256_mul_pd(idx, _mm256_set1_pd(grid.step)));
}

// Mirrors detail::smile_density_point operation for operation (no contraction).
inline __m256d smile_pd(const SmileParams& p, __m256d x) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d g = _mm256_set1_pd(p.g);
    const __m256d n = _mm256_set1_pd(p.n);
    const __m256d t = _mm256_set1_pd(p.maturity);
    const __m256d chim1 = _mm256_set1_pd(p.chi - 1.0);
    const __m256d shift = _mm256_set1_pd(0.5 * p.g * p.g * p.maturity);
    const __m256d amp = _mm256_set1_pd(p.g * (p.chi - 1.0));

    const __m256d u = _mm256_add_pd(x, shift);
    const __m256d u2 = _mm256_mul_pd(u, u);
    const __m256d q = _mm256_add_pd(u2, n);
    const __m256d q2 = _mm256_mul_pd(q, q);
    const __m256d sigma = _mm256_mul_pd(g, _mm256_add_pd(one, _mm256_div_pd(_mm256_mul_pd(chim1, u2), q)));
    const __m256d d1 = _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(two, amp), u), n), q2);
    const __m256d n3u2 = _mm256_sub_pd(n, _mm256_mul_pd(_mm256_set1_pd(3.0), u2));
    const __m256d d2 =
        _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(two, amp), n), n3u2), _mm256_mul_pd(q2, q));

    const __m256d lin = _mm256_sub_pd(one, _mm256_mul_pd(_mm256_div_pd(d1, sigma), x));
    const __m256d cross = _mm256_mul_pd(_mm256_mul_pd(d1, sigma), t);
    const __m256d factor = _mm256_add_pd(
        _mm256_sub_pd(_mm256_mul_pd(lin, lin), _mm256_mul_pd(_mm256_set1_pd(0.25), _mm256_mul_pd(cross, cross))),
        _mm256_mul_pd(_mm256_mul_pd(sigma, d2), t));
    const __m256d variance = _mm256_mul_pd(_mm256_mul_pd(sigma, sigma), t);
    return _mm256_mul_pd(gaussian_pd(variance, x), factor);
}

template <class Body>
void for_each_block(std::span<double> out, Body body) {
    const std::size_t full = out.size() / 4 * 4;
    for (std::size_t i = 0; i < full; i += 4) {
        _mm256_storeu_pd(out.data() + i, body(i));
    }
    if (full < out.size()) {
        alignas(32) std::array<double, 4> tail{};
        _mm256_store_pd(tail.data(), body(full));
        std::copy_n(tail.begin(), out.size() - full, out.begin() + static_cast<std::ptrdiff_t>(full));
    }
}

}  // namespace

void smile_density(const SmileParams& params, UniformGrid grid, std::span<double> out) {
    for_each_block(out, [&](std::size_t i) { return smile_pd(params, grid_x(grid, i)); });
}

void gaussian_density(double vol, double maturity, UniformGrid grid, std::span<double> out) {
    const __m256d variance = _mm256_set1_pd(vol * vol * maturity);
    for_each_block(out, [&](std::size_t i) { return gaussian_pd(variance, grid_x(grid, i)); });
}

}  // namespace smilecal::kernels::avx2
