#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pchaos/grid.hpp"

namespace pchaos {

enum class KernelTag { biot_savart, fourier_series, explicit_grid };

const char* tag_name(KernelTag t);

// One term c·e^{2πik·x} of a kernel given as a finite Fourier series (c has d components).
struct FourierTerm {
    std::vector<int> k;
    std::vector<cplx> coef;
};

// K = ∇·V + K2 sampled on a d-dimensional grid; K1 caches the sampled singular velocity.
struct KernelSpec {
    int d = 1;
    TorusGrid grid;
    std::optional<MatrixField> V;
    std::optional<VectorField> K1;
    std::optional<VectorField> K2;
    KernelTag tag = KernelTag::explicit_grid;
    // Exact sparse representation of the full kernel when tag == fourier_series.
    std::vector<FourierTerm> series;
    double epsilon = 0.0;

    bool has_singular() const { return V.has_value() || K1.has_value(); }
    VectorField singular() const;
    VectorField bounded() const;
    VectorField total() const;
};

enum class SpectralWindow { sharp, raised_cosine };

// Periodic Biot–Savart velocity kernel on T² from its Fourier symbol i(k₂,−k₁)/(2π|k|²),
// tapered by a radial window reaching zero at |k| = mode_cutoff.
KernelSpec biot_savart(const TorusGrid& g, int mode_cutoff, SpectralWindow window = SpectralWindow::raised_cosine);

// Bounded matrix field (1/2π)·diag(arctan(x₂/x₁), −arctan(x₁/x₂)) on the nearest-image cell, whose
// divergence is the free-space Biot–Savart kernel away from the coordinate axes. On the axes the
// arctan of ±∞ is ±π/2 and the origin maps to 0. `half_offset` samples at node + h/2 instead.
MatrixField v_matrix(const TorusGrid& g, bool half_offset = false);

KernelSpec mollify(const KernelSpec& spec, double eps);

KernelSpec fourier_series_kernel(const TorusGrid& g, std::vector<FourierTerm> terms);
KernelSpec explicit_kernel(const TorusGrid& g, std::optional<MatrixField> V, std::optional<VectorField> K2);
KernelSpec zero_kernel(const TorusGrid& g);

// K_α = Σ_β ∂_β V_βα, spectrally.
VectorField matrix_divergence(const MatrixField& V);

struct DecompositionReport {
    double div_v_residual = 0.0;  // max |∇·V − K1|
    double div_k1_residual = 0.0; // max |∇·K1|
    double scale = 1.0;
    bool vacuous = false;
    bool pass = true;
};
DecompositionReport check_decomposition(const KernelSpec& spec);

// sup over the listed densities and grid nodes of ∫|V(x−y)|² m(dy).
double mv_constant(const MatrixField& V, const std::vector<DensityField>& densities);

// Pointwise Euclidean (Frobenius) sup norms.
double sup_norm(const MatrixField& V);
double sup_norm(const VectorField& K);
// (∫|V|² dm)^{1/2}
double l2_norm(const MatrixField& V, const DensityField& m);

}  // namespace pchaos
