// Compiled with -mavx2 -mfma; only reached after the runtime CPU check.
#include "pchaos/simd.hpp"

#include <immintrin.h>

#include <vector>

namespace pchaos::simd::avx2 {

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_complex(cplx* z, const double* f, std::size_t n) {
    double* zd = reinterpret_cast<double*>(z);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d fv = _mm256_set_pd(f[i + 1], f[i + 1], f[i], f[i]);
        _mm256_storeu_pd(zd + 2 * i, _mm256_mul_pd(_mm256_loadu_pd(zd + 2 * i), fv));
    }
    for (; i < n; ++i) z[i] *= f[i];
}

static inline __m256d cmul(__m256d a, __m256d b) {
    const __m256d ar = _mm256_movedup_pd(a);
    const __m256d ai = _mm256_permute_pd(a, 0xF);
    const __m256d bs = _mm256_permute_pd(b, 0x5);
    return _mm256_fmaddsub_pd(ar, b, _mm256_mul_pd(ai, bs));
}

void csr_gather(const std::int64_t* row, const std::int32_t* col, const cplx* coef, const cplx* x, cplx* y,
                std::size_t rows) {
    const double* xd = reinterpret_cast<const double*>(x);
    const double* cd = reinterpret_cast<const double*>(coef);
    for (std::size_t r = 0; r < rows; ++r) {
        __m256d acc = _mm256_setzero_pd();
        std::int64_t e = row[r];
        const std::int64_t end = row[r + 1];
        for (; e + 2 <= end; e += 2) {
            const __m128d lo = _mm_loadu_pd(xd + 2 * static_cast<std::size_t>(col[e]));
            const __m128d hi = _mm_loadu_pd(xd + 2 * static_cast<std::size_t>(col[e + 1]));
            const __m256d xv = _mm256_insertf128_pd(_mm256_castpd128_pd256(lo), hi, 1);
            acc = _mm256_add_pd(acc, cmul(_mm256_loadu_pd(cd + 2 * e), xv));
        }
        __m128d s = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
        double out[2];
        _mm_storeu_pd(out, s);
        for (; e < end; ++e) {
            const cplx c = coef[e];
            const cplx v = x[col[e]];
            out[0] += c.real() * v.real() - c.imag() * v.imag();
            out[1] += c.real() * v.imag() + c.imag() * v.real();
        }
        y[r] = cplx(out[0], out[1]);
    }
}

namespace {

inline __m256d gather(const double* base, __m128i idx) { return _mm256_i32gather_pd(base, idx, 8); }

inline double hsum(__m256d v) {
    __m128d s = _mm_add_pd(_mm256_castpd256_pd128(v), _mm256_extractf128_pd(v, 1));
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void pair_drift(const PairKernel& k, const double* pos, std::size_t N, double scale, double* drift) {
    const int d = k.d;
    const int n = k.n;
    std::vector<double> xs(N), ys(d == 2 ? N : 0);
    for (std::size_t j = 0; j < N; ++j) {
        xs[j] = pos[j * d];
        if (d == 2) ys[j] = pos[j * d + 1];
    }
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d nv = _mm256_set1_pd(static_cast<double>(n));
    const __m128i nmax = _mm_set1_epi32(n - 1);
    const __m128i nint = _mm_set1_epi32(n);
    const __m128i onei = _mm_set1_epi32(1);
    const __m128i zeroi = _mm_setzero_si128();
    const bool blob = k.delta > 0.0 && d == 2;
    const __m256d del2 = _mm256_set1_pd(k.delta * k.delta);

    for (std::size_t i = 0; i < N; ++i) {
        const __m256d xi = _mm256_set1_pd(xs[i]);
        const __m256d yi = d == 2 ? _mm256_set1_pd(ys[i]) : _mm256_setzero_pd();
        __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
        double tail[2] = {0.0, 0.0};
        std::size_t j = 0;
        for (; j + 4 <= N; j += 4) {
            __m256d wx = _mm256_sub_pd(xi, _mm256_loadu_pd(&xs[j]));
            wx = _mm256_sub_pd(wx, _mm256_floor_pd(wx));
            __m256d keep = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
            if (i >= j && i < j + 4) {
                alignas(32) std::int64_t m[4] = {-1, -1, -1, -1};
                m[i - j] = 0;
                keep = _mm256_castsi256_pd(_mm256_load_si256(reinterpret_cast<const __m256i*>(m)));
            }
            __m256d wy = _mm256_setzero_pd();
            if (d == 2) {
                wy = _mm256_sub_pd(yi, _mm256_loadu_pd(&ys[j]));
                wy = _mm256_sub_pd(wy, _mm256_floor_pd(wy));
            }
            if (blob) {
                const __m256d sx = _mm256_sub_pd(wx, _mm256_and_pd(_mm256_cmp_pd(wx, half, _CMP_GE_OQ), one));
                const __m256d sy = _mm256_sub_pd(wy, _mm256_and_pd(_mm256_cmp_pd(wy, half, _CMP_GE_OQ), one));
                const __m256d r2 = _mm256_fmadd_pd(sx, sx, _mm256_mul_pd(sy, sy));
                const __m256d near = _mm256_and_pd(_mm256_cmp_pd(r2, del2, _CMP_LT_OQ), keep);
                const int mask = _mm256_movemask_pd(near);
                if (mask) {
                    for (int l = 0; l < 4; ++l) {
                        if (!(mask & (1 << l))) continue;
                        double r[2] = {xs[i] - xs[j + l], ys[i] - ys[j + l]}, v[2];
                        scalar::pair_value(k, r, v);
                        tail[0] += v[0];
                        tail[1] += v[1];
                    }
                    keep = _mm256_andnot_pd(near, keep);
                }
            }
            const __m256d u = _mm256_mul_pd(wx, nv);
            const __m256d uf = _mm256_floor_pd(u);
            __m128i i0 = _mm_min_epi32(_mm256_cvttpd_epi32(uf), nmax);
            const __m256d fx = _mm256_sub_pd(u, _mm256_cvtepi32_pd(i0));
            __m128i i1 = _mm_add_epi32(i0, onei);
            i1 = _mm_blendv_epi8(i1, zeroi, _mm_cmpeq_epi32(i1, nint));
            if (d == 1) {
                const __m256d a = gather(k.comp[0], i0), b = gather(k.comp[0], i1);
                const __m256d val = _mm256_fmadd_pd(fx, _mm256_sub_pd(b, a), a);
                acc0 = _mm256_add_pd(acc0, _mm256_and_pd(val, keep));
            } else {
                const __m256d v = _mm256_mul_pd(wy, nv);
                __m128i j0 = _mm_min_epi32(_mm256_cvttpd_epi32(_mm256_floor_pd(v)), nmax);
                const __m256d fy = _mm256_sub_pd(v, _mm256_cvtepi32_pd(j0));
                __m128i j1 = _mm_add_epi32(j0, onei);
                j1 = _mm_blendv_epi8(j1, zeroi, _mm_cmpeq_epi32(j1, nint));
                const __m128i r0 = _mm_mullo_epi32(i0, nint), r1 = _mm_mullo_epi32(i1, nint);
                const __m128i p00 = _mm_add_epi32(r0, j0), p01 = _mm_add_epi32(r0, j1);
                const __m128i p10 = _mm_add_epi32(r1, j0), p11 = _mm_add_epi32(r1, j1);
                const __m256d gx = _mm256_sub_pd(one, fx), gy = _mm256_sub_pd(one, fy);
                const __m256d w00 = _mm256_mul_pd(gx, gy), w01 = _mm256_mul_pd(gx, fy);
                const __m256d w10 = _mm256_mul_pd(fx, gy), w11 = _mm256_mul_pd(fx, fy);
                for (int c = 0; c < 2; ++c) {
                    const double* K = k.comp[c];
                    __m256d val = _mm256_mul_pd(w00, gather(K, p00));
                    val = _mm256_fmadd_pd(w01, gather(K, p01), val);
                    val = _mm256_fmadd_pd(w10, gather(K, p10), val);
                    val = _mm256_fmadd_pd(w11, gather(K, p11), val);
                    val = _mm256_and_pd(val, keep);
                    if (c == 0) acc0 = _mm256_add_pd(acc0, val);
                    else acc1 = _mm256_add_pd(acc1, val);
                }
            }
        }
        for (; j < N; ++j) {
            if (j == i) continue;
            double r[2], v[2];
            r[0] = xs[i] - xs[j];
            if (d == 2) r[1] = ys[i] - ys[j];
            scalar::pair_value(k, r, v);
            for (int a = 0; a < d; ++a) tail[a] += v[a];
        }
        drift[i * d] = scale * (hsum(acc0) + tail[0]);
        if (d == 2) drift[i * d + 1] = scale * (hsum(acc1) + tail[1]);
    }
}

}  // namespace pchaos::simd::avx2
