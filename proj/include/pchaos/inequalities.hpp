#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pchaos/grid.hpp"

namespace pchaos {

double c_jw();

// Real function φ(x, y) on T^d × T^d sampled on an n^{2d} grid (x axes first).
struct PairFunction {
    int d = 1;
    TorusGrid grid;  // dim = 2d
    std::vector<double> values;

    PairFunction() = default;
    PairFunction(int d_, int n);
    double& operator()(std::size_t x, std::size_t y) { return values[x * inner() + y]; }
    double operator()(std::size_t x, std::size_t y) const { return values[x * inner() + y]; }
    std::size_t inner() const { return ipow(static_cast<std::size_t>(grid.n), d); }
    double sup() const;
};

struct CenteringReport {
    double row = 0.0;   // max_x |∫φ(x,·)dm|
    double col = 0.0;   // max_x |∫φ(·,x)dm|
    double diag = 0.0;  // max_x |φ(x,x)|
    bool ok(double tol = 1e-10) const { return row <= tol && col <= tol && diag <= tol; }
};

CenteringReport centering(const PairFunction& phi, const DensityField& m);

enum class ScaleMode { per_k, per_N };
enum class EvalMethod { quadrature, monte_carlo };

struct MomentRow {
    int r = 0;
    double lhs = 0.0, rhs = 0.0;
    double ci = 0.0;  // half-width (Monte Carlo rows)
    std::string branch;  // "4r>k" | "4r<=k"
    EvalMethod method = EvalMethod::quadrature;
    bool pass = false;
};

struct ConcentrationReport {
    int k = 0, N = 0;
    ScaleMode scale = ScaleMode::per_k;
    double phi_sup = 0.0;
    double gamma = 0.0;
    CenteringReport centering;
    bool hypotheses_ok = false;
    std::string hypothesis_note;
    double value = 0.0;  // log ∫ exp(s Σ_{i,j} φ(x^i,x^j)) dm^{⊗k}, s = 1/k or 1/N
    double ci = 0.0;     // delta-method half-width on the log (Monte Carlo)
    double bound = 0.0;  // 6γ or 6γk²/N²
    EvalMethod method = EvalMethod::quadrature;
    bool asserted = false;  // a bound was asserted (hypotheses held)
    bool pass = false;
};

struct McOptions {
    std::uint64_t seed = 1;
    std::size_t samples = 1000000;
    double z = 2.576;  // two-sided 99%
};

// k ≤ 3 (d = 1): exact tensor quadrature on the grid; otherwise Monte Carlo over grid nodes drawn from m.
ConcentrationReport exp_moment_check(const PairFunction& phi, const DensityField& m, int k, ScaleMode scale,
                                     int N = 0, const McOptions& mc = {});

// Rows r = 1..r_max of the counting estimate (r_max ≤ 6).
std::vector<MomentRow> moment_table(const PairFunction& phi, const DensityField& m, int k, int r_max,
                                    const McOptions& mc = {});

enum class TransportMode { entropy, l2 };

struct TransportGap {
    double lhs = 0.0, rhs = 0.0;
    bool pass() const { return lhs <= rhs + 1e-8; }
};

// |⟨∇·V, m1 − m2⟩| against the entropy or L² right-hand side; V uses Frobenius norms.
TransportGap transport_gap(const MatrixField& V, const DensityField& m1, const DensityField& m2, TransportMode mode);

enum class InnerLemma { cs_crude, cs_fine, ibp };

struct LemmaReport {
    InnerLemma lemma = InnerLemma::cs_crude;
    int p = 1;
    double lhs = 0.0, rhs = 0.0;
    std::vector<std::pair<std::string, double>> terms;
    bool pass = false;
    std::string variant() const;
};

// h on T^k (d = 1), exchangeable, ∫h dm^{⊗k} = 1. U is the bounded pair field for the Cauchy–Schwarz
// lemma (i = 1); for the ibp lemma it is φ (centered, zero diagonal) and N enters the right side.
LemmaReport inner_lemma_check(InnerLemma lemma, int p, const Field& h, const DensityField& m, const PairFunction& U,
                              double eps, int N = 0);

// Random instances (deterministic given the engine state).
using Rng = std::mt19937_64;
DensityField random_density(const TorusGrid& g, Rng& rng, int modes = 2, double amplitude = 0.5);
// Fourier series in (x−y) and in (x,y), projected onto centering + zero diagonal, scaled to sup = amplitude.
PairFunction random_centered_phi(int n, const DensityField& m, double amplitude, Rng& rng);
PairFunction random_pair_field(int n, Rng& rng, double amplitude = 1.0);
// exp of a symmetric trigonometric polynomial on T^k, normalized against m^{⊗k}.
Field random_exchangeable_h(int n, int k, const DensityField& m, Rng& rng, double amplitude = 0.5);
// One or two Fourier modes per entry.
MatrixField random_matrix_field(const TorusGrid& g, Rng& rng);

}  // namespace pchaos
