#include "pchaos/simd.hpp"

#include <cmath>
#include <numbers>

namespace pchaos::simd::scalar {

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_complex(cplx* z, const double* f, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] *= f[i];
}

void csr_gather(const std::int64_t* row, const std::int32_t* col, const cplx* coef, const cplx* x, cplx* y,
                std::size_t rows) {
    for (std::size_t r = 0; r < rows; ++r) {
        double re = 0.0, im = 0.0;
        for (std::int64_t e = row[r]; e < row[r + 1]; ++e) {
            const cplx c = coef[e];
            const cplx v = x[col[e]];
            re += c.real() * v.real() - c.imag() * v.imag();
            im += c.real() * v.imag() + c.imag() * v.real();
        }
        y[r] = cplx(re, im);
    }
}

void pair_value(const PairKernel& k, const double* r, double* out) {
    double w[2] = {0.0, 0.0};
    for (int a = 0; a < k.d; ++a) w[a] = r[a] - std::floor(r[a]);
    if (k.delta > 0.0 && k.d == 2) {
        const double s0 = w[0] >= 0.5 ? w[0] - 1.0 : w[0];
        const double s1 = w[1] >= 0.5 ? w[1] - 1.0 : w[1];
        const double r2 = s0 * s0 + s1 * s1;
        if (r2 < k.delta * k.delta) {
            if (r2 == 0.0) {
                out[0] = out[1] = 0.0;
                return;
            }
            const double g = (1.0 - std::exp(-r2 / (2.0 * k.sigma * k.sigma))) / (2.0 * std::numbers::pi * r2);
            out[0] = -s1 * g;
            out[1] = s0 * g;
            return;
        }
    }
    const int n = k.n;
    if (k.d == 1) {
        const double u = w[0] * n;
        int i0 = static_cast<int>(u);
        if (i0 >= n) i0 = n - 1;
        const double f = u - i0;
        const int i1 = i0 + 1 == n ? 0 : i0 + 1;
        out[0] = (1.0 - f) * k.comp[0][i0] + f * k.comp[0][i1];
        return;
    }
    const double u = w[0] * n, v = w[1] * n;
    int i0 = static_cast<int>(u), j0 = static_cast<int>(v);
    if (i0 >= n) i0 = n - 1;
    if (j0 >= n) j0 = n - 1;
    const double fx = u - i0, fy = v - j0;
    const int i1 = i0 + 1 == n ? 0 : i0 + 1;
    const int j1 = j0 + 1 == n ? 0 : j0 + 1;
    const double w00 = (1.0 - fx) * (1.0 - fy), w01 = (1.0 - fx) * fy, w10 = fx * (1.0 - fy), w11 = fx * fy;
    for (int c = 0; c < 2; ++c) {
        const double* K = k.comp[c];
        out[c] = w00 * K[i0 * n + j0] + w01 * K[i0 * n + j1] + w10 * K[i1 * n + j0] + w11 * K[i1 * n + j1];
    }
}

void pair_drift(const PairKernel& k, const double* pos, std::size_t N, double scale, double* drift) {
    const int d = k.d;
    for (std::size_t i = 0; i < N; ++i) {
        double acc[2] = {0.0, 0.0};
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            double r[2], v[2];
            for (int a = 0; a < d; ++a) r[a] = pos[i * d + a] - pos[j * d + a];
            pair_value(k, r, v);
            for (int a = 0; a < d; ++a) acc[a] += v[a];
        }
        for (int a = 0; a < d; ++a) drift[i * d + a] = scale * acc[a];
    }
}

}  // namespace pchaos::simd::scalar
