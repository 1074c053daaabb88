#pragma once

#include <ostream>
#include <vector>

#include "pchaos/grid.hpp"

namespace pchaos {

// (1+u)·log(1+u) − u, accurate for small |u|; the pointwise integrand of H against m2 when u = m1/m2 − 1.
double entropy_density(double u);

double relative_entropy(const DensityField& m1, const DensityField& m2);
double chi_square(const DensityField& m1, const DensityField& m2);
double fisher_information(const DensityField& m1, const DensityField& m2);
double dirichlet_energy(const DensityField& m1, const DensityField& m2);

struct LadderLevel {
    int k = 0;
    double H = 0.0, I = 0.0, D = 0.0, E = 0.0;
};

struct DivergenceLadder {
    double t = 0.0;
    std::vector<LadderLevel> levels;
};

// Maximum over adjacent particle transpositions of max|joint∘τ − joint| / max|joint|.
double exchangeability_residual(const Field& joint, int d);

// Ladder of H, I, D, E between m^{N,k} and m^{⊗k} for k = 1..k_max (k_max = joint.dim/d).
DivergenceLadder divergence_ladder(const DensityField& joint, const DensityField& m, double t = 0.0,
                                   double exch_tol = 1e-9);

struct ToweringIdentity {
    double lhs = 0.0, rhs = 0.0, residual = 0.0;
};

struct ToweringReport {
    int k = 0;
    ToweringIdentity H, I, D, E;
    double excluded_mass = 0.0;
    double scale = 0.0;
    double max_residual = 0.0;
    bool pass = false;
};

// Conditional-density sides of the four towering identities for a joint on T^{(k+1)d}.
ToweringReport towering_check(const DensityField& joint, const DensityField& m);

// H³ − 2H² + H¹ from a ladder with at least three levels (advisory chain-rule quantity).
double entropy_second_difference(const DivergenceLadder& ladder);

void write_ladder_csv(std::ostream& os, const std::vector<DivergenceLadder>& ladders, bool header = true);

}  // namespace pchaos
