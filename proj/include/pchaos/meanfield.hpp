#pragma once

#include <string>
#include <vector>

#include "pchaos/grid.hpp"
#include "pchaos/kernels.hpp"

namespace pchaos {

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<DensityField> states;
    // |∫m − 1| of each stored state before renormalization.
    std::vector<double> mass_residual;
    double dt = 0.0;
    std::string scheme;
    // Heuristic explicit-transport limit 1/(2π k_max sup|K⋆m0|) reported at t = 0.
    double stability_dt = 0.0;
};

struct MeanFieldOptions {
    double T = 0.0;
    double dt = 1e-4;
    // Extra times to store besides 0 and T (rounded to the step grid).
    std::vector<double> output_times;
    bool dealias = true;
};

// ∂_t m = Δm − ∇·(m (K⋆m)) on T^d.
FlowTrajectory solve_mckean_vlasov(const KernelSpec& K, const DensityField& m0, const MeanFieldOptions& opt);

struct LogRegularity {
    double g2 = 0.0;  // sup |∇ log m|²
    double h = 0.0;   // sup ‖∇² log m‖₂
};

LogRegularity log_regularity(const DensityField& m);

struct DecayFit {
    double M_m = 0.0;
    double eta_hat = 0.0;
    int samples = 0;
};

// Least-squares fit of log(g2 + h) against t over stored states with t ≥ burn_in.
DecayFit decay_fit(const FlowTrajectory& traj, double burn_in = 0.02);

}  // namespace pchaos
