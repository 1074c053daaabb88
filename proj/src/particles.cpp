#include "pchaos/particles.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>

#include "pchaos/simd.hpp"

namespace pchaos {

namespace {

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Samples from the cell-averaged (piecewise constant) version of m0.
class CellSampler {
public:
    explicit CellSampler(const DensityField& m) : grid_(m.grid) {
        const Field avg = cell_average(m, m.grid.n);
        cdf_.resize(avg.values.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < avg.values.size(); ++i) {
            acc += std::max(avg.values[i], 0.0);
            cdf_[i] = acc;
        }
        for (double& c : cdf_) c /= acc;
    }

    void draw(SplitMix64& rng, double* x) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double p = u(rng);
        std::size_t cell = static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), p) - cdf_.begin());
        cell = std::min(cell, cdf_.size() - 1);
        const int n = grid_.n;
        for (int a = grid_.dim - 1; a >= 0; --a) {
            const std::size_t j = cell % n;
            cell /= n;
            x[a] = (static_cast<double>(j) + u(rng)) / n;
            if (x[a] >= 1.0) x[a] -= 1.0;
        }
    }

private:
    TorusGrid grid_;
    std::vector<double> cdf_;
};

}  // namespace

SplitMix64::result_type SplitMix64::operator()() {
    state_ += kGolden;
    return mix(state_);
}

std::uint64_t SplitMix64::stream_seed(std::uint64_t seed, std::uint64_t replica) {
    return mix(mix(seed) ^ (replica + 1) * kGolden);
}

ParticleRun simulate(const SimConfig& cfg, int N, int R) {
    if (N < 2) throw GridError("simulate needs N >= 2");
    if (R < 1) throw GridError("simulate needs R >= 1");
    if (!(cfg.m0.grid.dim == cfg.kernel.d)) throw GridError("initial density and kernel dimensions differ");
    ParticleState init;
    init.N = N;
    init.d = cfg.kernel.d;
    init.R = R;
    init.seed = cfg.seed;
    init.pos.resize(static_cast<std::size_t>(R) * N * init.d);
    const CellSampler sampler(cfg.m0);
    for (int r = 0; r < R; ++r) {
        // Initial positions use a stream disjoint from the Brownian one.
        SplitMix64 rng(SplitMix64::stream_seed(cfg.seed ^ 0x5eedULL, static_cast<std::uint64_t>(r)));
        for (int i = 0; i < N; ++i) sampler.draw(rng, &init.at(r, i, 0));
    }
    return simulate_from(cfg, std::move(init));
}

ParticleRun simulate_from(const SimConfig& cfg, ParticleState s) {
    const int N = s.N, d = s.d, R = s.R;
    if (N < 2) throw GridError("simulate needs N >= 2");
    if (!(cfg.dt > 0.0)) throw GridError("dt must be positive");
    if (cfg.delta >= 0.25) throw GridError("blob cutoff must be < 0.25");
    if (d != cfg.kernel.d || s.pos.size() != static_cast<std::size_t>(R) * N * d)
        throw GridError("initial state does not match the kernel dimension");
    s.seed = cfg.seed;
    s.t = 0.0;
    s.displacement.assign(s.pos.size(), 0.0);
    for (double& x : s.pos) x -= std::floor(x);

    ParticleRun run;
    const VectorField Kt = cfg.kernel.total();
    simd::PairKernel pk;
    pk.d = d;
    pk.n = cfg.kernel.grid.n;
    for (int c = 0; c < d; ++c) pk.comp[c] = Kt.comp[c].data();
    if (d == 2 && cfg.kernel.tag == KernelTag::biot_savart) {
        pk.delta = cfg.delta >= 0.0 ? cfg.delta : 2.0 / pk.n;
        pk.sigma = cfg.kernel.epsilon > 0.0 ? cfg.kernel.epsilon : 0.5 * pk.delta;
    }
    run.delta = pk.delta;
    run.sigma = pk.sigma;
    bool interacting = false;
    for (const auto& c : Kt.comp)
        for (double v : c) interacting = interacting || v != 0.0;

    const long nsteps = std::lround(cfg.T / cfg.dt);
    std::vector<long> store{0, nsteps};
    for (double t : cfg.snapshot_times) {
        const long st = std::lround(t / cfg.dt);
        if (st < 0 || st > nsteps) throw GridError("snapshot time outside [0, T]");
        store.push_back(st);
    }
    std::sort(store.begin(), store.end());
    store.erase(std::unique(store.begin(), store.end()), store.end());

    std::vector<SplitMix64> rngs;
    for (int r = 0; r < R; ++r) rngs.emplace_back(SplitMix64::stream_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double noise = std::sqrt(2.0 * cfg.dt);
    const double scale = 1.0 / (N - 1);
    const std::size_t block = static_cast<std::size_t>(N) * d;
    std::vector<double> drift(block);

    std::size_t next = 0;
    for (long st = 0; st <= nsteps; ++st) {
        if (next < store.size() && store[next] == st) {
            s.t = st * cfg.dt;
            run.snapshots.push_back(s);
            ++next;
        }
        if (st == nsteps) break;
        for (int r = 0; r < R; ++r) {
            double* p = s.pos.data() + r * block;
            double* disp = s.displacement.data() + r * block;
            if (interacting) simd::pair_drift(pk, p, static_cast<std::size_t>(N), scale, drift.data());
            for (std::size_t e = 0; e < block; ++e) {
                const double dx = drift[e] * cfg.dt + noise * gauss(rngs[static_cast<std::size_t>(r)]);
                if (!std::isfinite(dx)) throw GridError("NaN particle position");
                disp[e] += dx;
                double x = p[e] + dx;
                x -= std::floor(x);
                p[e] = x >= 1.0 ? 0.0 : x;
            }
        }
    }
    return run;
}

DensityField empirical_marginal(const ParticleState& s, int bins) {
    if (bins < 1 || bins > 256) throw GridError("bins must lie in [1, 256]");
    const TorusGrid g{s.d, bins};
    std::vector<double> v(g.size(), 0.0);
    const std::size_t count = static_cast<std::size_t>(s.R) * s.N;
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t idx = 0;
        for (int a = 0; a < s.d; ++a) {
            int j = static_cast<int>(s.pos[p * s.d + a] * bins);
            j = std::clamp(j, 0, bins - 1);
            idx = idx * bins + static_cast<std::size_t>(j);
        }
        v[idx] += 1.0;
    }
    return DensityField::normalized(g, std::move(v));
}

WeakError weak_error(const ParticleState& s, const DensityField& pde, int bins) {
    if (pde.grid.dim != s.d) throw GridError("particle and PDE dimensions differ");
    const DensityField hist = empirical_marginal(s, bins);
    const Field ref = cell_average(pde, bins);
    WeakError w;
    w.bins = bins;
    for (std::size_t i = 0; i < ref.values.size(); ++i) w.l1 += std::abs(hist.values[i] - ref.values[i]);
    w.l1 *= hist.grid.cell_volume();
    w.noise_floor = std::sqrt(static_cast<double>(ipow(static_cast<std::size_t>(bins), s.d)) /
                              (static_cast<double>(s.R) * s.N));
    return w;
}

void write_snapshot_csv(std::ostream& os, const ParticleState& s) {
    os << "replica,particle";
    for (int a = 0; a < s.d; ++a) os << ",x" << a + 1;
    os << '\n' << std::setprecision(17);
    for (int r = 0; r < s.R; ++r)
        for (int i = 0; i < s.N; ++i) {
            os << r << ',' << i;
            for (int a = 0; a < s.d; ++a) os << ',' << s.at(r, i, a);
            os << '\n';
        }
}

}  // namespace pchaos
