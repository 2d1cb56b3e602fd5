// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "piecehaz/kernels/loglik_kernel.hpp"
#include "observation.hpp"

namespace piecehaz::kernels {

namespace {

// Cephes-style exp: Pade approximant on [-ln2/2, ln2/2] scaled by 2^n.
// Inputs are clamped to [-708.39, 709], which keeps 2^n a normal number.
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000009e0);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);

    x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.39)), _mm256_set1_pd(709.0));
    const __m256d n =
        _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(n, c1, x);
    x = _mm256_fnmadd_pd(n, c2, x);

    const __m256d xx = _mm256_mul_pd(x, x);
    const __m256d px = _mm256_mul_pd(x, _mm256_fmadd_pd(_mm256_fmadd_pd(p0, xx, p1), xx, p2));
    const __m256d qx =
        _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_fmadd_pd(q0, xx, q1), xx, q2), xx, q3);
    const __m256d r = _mm256_fmadd_pd(two, _mm256_div_pd(px, _mm256_sub_pd(qx, px)), one);

    __m256i bits = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(bits));
}

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double loglik_avx2(const PreparedData& data, const PhaseTerms& terms) {
    const std::size_t width = terms.p + 1;
    const std::size_t phases = terms.phases;
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d all = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));

    __m256d acc = zero;
    std::size_t i = 0;
    for (; i + 4 <= data.n; i += 4) {
        const __m256d y = _mm256_loadu_pd(data.time.data() + i);
        const __m256d ly = _mm256_loadu_pd(data.log_time.data() + i);
        const __m256d ev = _mm256_loadu_pd(data.event.data() + i);

        __m256d cumulative = zero;
        __m256d kap = zero, log_kap = zero, eta_seg = zero, rate_seg = zero, start = zero;
        __m256d open = all;  // lanes whose segment index is >= m

        for (std::size_t m = 0; m < phases; ++m) {
            const double* row = terms.coefficients.data() + m * width;
            __m256d eta = _mm256_set1_pd(row[0]);
            for (std::size_t k = 0; k < terms.p; ++k) {
                eta = _mm256_fmadd_pd(_mm256_set1_pd(row[k + 1]),
                                      _mm256_loadu_pd(data.column(k) + i), eta);
            }
            const __m256d rate = exp_pd(_mm256_sub_pd(zero, eta));

            __m256d inside = open;
            __m256d beyond = zero;
            if (m + 1 < phases) {
                beyond = _mm256_cmp_pd(y, _mm256_set1_pd(terms.changepoints[m]), _CMP_GE_OQ);
                inside = _mm256_andnot_pd(beyond, open);
                cumulative = _mm256_add_pd(
                    cumulative,
                    _mm256_and_pd(beyond,
                                  _mm256_mul_pd(rate, _mm256_set1_pd(terms.segment_increment[m]))));
            }
            kap = _mm256_blendv_pd(kap, _mm256_set1_pd(terms.shape[m]), inside);
            log_kap = _mm256_blendv_pd(log_kap, _mm256_set1_pd(terms.log_shape[m]), inside);
            eta_seg = _mm256_blendv_pd(eta_seg, eta, inside);
            rate_seg = _mm256_blendv_pd(rate_seg, rate, inside);
            start = _mm256_blendv_pd(start, _mm256_set1_pd(terms.start_power[m]), inside);

            open = beyond;
            if (_mm256_movemask_pd(open) == 0) break;
        }

        const __m256d tk = exp_pd(_mm256_mul_pd(kap, ly));
        cumulative = _mm256_fmadd_pd(rate_seg, _mm256_sub_pd(tk, start), cumulative);
        const __m256d log_hazard =
            _mm256_fmadd_pd(_mm256_sub_pd(kap, one), ly, _mm256_sub_pd(log_kap, eta_seg));
        acc = _mm256_add_pd(acc, _mm256_fmsub_pd(ev, log_hazard, cumulative));
    }

    double total = horizontal_sum(acc);
    for (; i < data.n; ++i) total += detail::observation_loglik(data, terms, i);
    return total;
}

}  // namespace piecehaz::kernels
