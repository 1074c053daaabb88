#pragma once

#include <string>
#include <vector>

#include "pchaos/grid.hpp"
#include "pchaos/kernels.hpp"
#include "pchaos/meanfield.hpp"

namespace pchaos {

enum class LiouvilleScheme {
    automatic,    // galerkin for d=1 Fourier-series kernels, collocation otherwise
    collocation,  // pseudo-spectral on the full T^{Nd} grid, same stepping as the mean-field solver
    galerkin      // exchangeable Fourier–Galerkin on sorted multi-indices (d=1, fourier_series kernels)
};

struct LiouvilleOptions {
    double T = 0.0;
    double dt = 1e-4;
    std::vector<double> output_times;
    LiouvilleScheme scheme = LiouvilleScheme::automatic;
    bool dealias = true;
    std::size_t cap = kDefaultMemoryCap;
};

struct JointTrajectory {
    int N = 0;
    int d = 1;
    TorusGrid grid;
    std::vector<double> times;
    std::vector<DensityField> joints;
    std::vector<double> exchangeability;  // transposition residual per stored time
    double coupling = 0.0;                // 1/(N−1)
    double dt = 0.0;
    std::string scheme;

    // Index of the stored time equal to t (within dt/100), or -1.
    int find(double t) const;
};

JointTrajectory solve_liouville(const KernelSpec& K, const DensityField& m0, int N, const LiouvilleOptions& opt);

// t + j·dt for j = −2..2 around each check time (for 4th-order central differences).
std::vector<double> stencil_times(const std::vector<double>& check_times, double dt);

struct BbgkyResidual {
    double residual = 0.0;   // ‖∂_t m^{N,k} − RHS‖_{L¹}
    double dt_norm = 0.0;    // ‖∂_t m^{N,k}‖_{L¹}
    double relative() const { return dt_norm > 0.0 ? residual / dt_norm : residual; }
};

BbgkyResidual bbgky_residual(const JointTrajectory& traj, const KernelSpec& K, int k, double t);

struct IdentityTerms {
    double lhs = 0.0;  // (1/p) dD_p^k/dt by central differences
    double E = 0.0, A1 = 0.0, A2 = 0.0, B1 = 0.0, B2 = 0.0;
    double rhs = 0.0;  // −E + A1 + A2 + B1 + B2
    double abs_residual = 0.0;
    double residual = 0.0;  // |lhs − rhs| / max(|lhs|, |E|+|A1|+|A2|+|B1|+|B2|)
    double excluded_mass = 0.0;
};

IdentityTerms evolution_identity_check(const JointTrajectory& traj, const FlowTrajectory& mf, const KernelSpec& K,
                                       int k, int p, double t);

// D_p(m1|m2): relative entropy for p = 1, χ² for p = 2.
double divergence_p(const DensityField& m1, const DensityField& m2, int p);

namespace detail {
JointTrajectory solve_liouville_galerkin(const KernelSpec& K, const DensityField& m0, int N,
                                         const LiouvilleOptions& opt);
}

}  // namespace pchaos
