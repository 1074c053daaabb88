#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "pchaos/grid.hpp"
#include "pchaos/kernels.hpp"

namespace pchaos {

// SplitMix64; also used to derive independent per-replica streams from (seed, replica).
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t state) : state_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()();

    // Stream seed for replica r: two mixing rounds over seed and replica index.
    static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replica);

private:
    std::uint64_t state_;
};

struct ParticleState {
    int N = 0;
    int d = 1;
    int R = 1;
    double t = 0.0;
    std::vector<double> pos;           // R×N×d, reduced mod 1
    std::vector<double> displacement;  // R×N×d lifted displacement since t = 0
    std::uint64_t seed = 0;

    double& at(int r, int i, int a) { return pos[(static_cast<std::size_t>(r) * N + i) * d + a]; }
    double at(int r, int i, int a) const { return pos[(static_cast<std::size_t>(r) * N + i) * d + a]; }
};

struct SimConfig {
    double dt = 1e-3;
    double T = 0.0;
    // Blob cutoff; negative selects the default 2/n of the kernel grid (only used for singular d=2 kernels).
    double delta = -1.0;
    KernelSpec kernel;
    DensityField m0;
    std::uint64_t seed = 0;
    std::vector<double> snapshot_times;  // besides t = 0 and T
};

struct ParticleRun {
    std::vector<ParticleState> snapshots;
    double delta = 0.0;
    double sigma = 0.0;
};

// Euler–Maruyama for dX^i = (1/(N−1)) Σ_{j≠i} K(X^i − X^j) dt + √2 dW^i, replicas independent.
ParticleRun simulate(const SimConfig& cfg, int N, int R);

// Optional explicit initial positions (R×N×d) instead of sampling m0.
ParticleRun simulate_from(const SimConfig& cfg, ParticleState init);

// Normalized histogram on bins^d cells [j/bins, (j+1)/bins).
DensityField empirical_marginal(const ParticleState& s, int bins);

struct WeakError {
    double l1 = 0.0;
    double noise_floor = 0.0;  // √(bins^d/(R·N))
    int bins = 0;
};

// L¹ distance between the histogram and the cell averages of the PDE density.
WeakError weak_error(const ParticleState& s, const DensityField& pde, int bins);

void write_snapshot_csv(std::ostream& os, const ParticleState& s);

}  // namespace pchaos
