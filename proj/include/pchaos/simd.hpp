#pragma once

// Hot-loop kernels with a scalar reference and an AVX2+FMA variant chosen at runtime.

#include <complex>
#include <cstddef>
#include <cstdint>

namespace pchaos::simd {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

Isa active_isa();
// Forces a dispatch target (tests use this to compare variants); returns false if unsupported.
bool force_isa(Isa isa);
const char* isa_name(Isa isa);
bool cpu_has_avx2();

// Kernel grid for pair-force evaluation: d ∈ {1,2}, components sampled on n^d nodes.
struct PairKernel {
    int d = 1;
    int n = 2;
    const double* comp[2] = {nullptr, nullptr};
    // Near-field blob: for |nearest-image r| < delta use K'(r)(1 - exp(-|r|²/(2σ²))) instead of the grid.
    double delta = 0.0;
    double sigma = 0.0;
};

// Signatures shared by every variant.
struct Table {
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    void (*scale_complex)(cplx* z, const double* f, std::size_t n);
    // y[r] = Σ_{e ∈ [row[r], row[r+1])} coef[e]·x[col[e]]
    void (*csr_gather)(const std::int64_t* row, const std::int32_t* col, const cplx* coef, const cplx* x,
                       cplx* y, std::size_t rows);
    // drift[i] = scale · Σ_{j≠i} K(pos_i − pos_j), positions interleaved (N×d).
    void (*pair_drift)(const PairKernel& k, const double* pos, std::size_t N, double scale, double* drift);
};

const Table& table();
const Table& table_for(Isa isa);

inline void mul(const double* a, const double* b, double* out, std::size_t n) { table().mul(a, b, out, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }
inline void scale_complex(cplx* z, const double* f, std::size_t n) { table().scale_complex(z, f, n); }
inline void csr_gather(const std::int64_t* row, const std::int32_t* col, const cplx* coef, const cplx* x, cplx* y,
                       std::size_t rows) {
    table().csr_gather(row, col, coef, x, y, rows);
}
inline void pair_drift(const PairKernel& k, const double* pos, std::size_t N, double scale, double* drift) {
    table().pair_drift(k, pos, N, scale, drift);
}

namespace scalar {
void mul(const double* a, const double* b, double* out, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale_complex(cplx* z, const double* f, std::size_t n);
void csr_gather(const std::int64_t* row, const std::int32_t* col, const cplx* coef, const cplx* x, cplx* y,
                std::size_t rows);
void pair_drift(const PairKernel& k, const double* pos, std::size_t N, double scale, double* drift);
// Single pair evaluation shared by both variants for near-field lanes.
void pair_value(const PairKernel& k, const double* r, double* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void mul(const double* a, const double* b, double* out, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale_complex(cplx* z, const double* f, std::size_t n);
void csr_gather(const std::int64_t* row, const std::int32_t* col, const cplx* coef, const cplx* x, cplx* y,
                std::size_t rows);
void pair_drift(const PairKernel& k, const double* pos, std::size_t N, double scale, double* drift);
}  // namespace avx2
#endif

}  // namespace pchaos::simd
