// Exchangeable Fourier–Galerkin solver for the Liouville equation on T^N (d = 1).
//
// The joint density is symmetric, so its Fourier coefficients only depend on the multiset of
// wavenumbers. We store one coefficient per sorted multi-index k_0 ≤ … ≤ k_{N−1} with |k_a| ≤ M,
// ranked in the combinatorial number system, and evolve them with a sparse transport matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>

#include "pchaos/divergences.hpp"
#include "pchaos/liouville.hpp"
#include "pchaos/simd.hpp"
#include "spectral_step.hpp"

namespace pchaos::detail {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class MultisetIndex {
public:
    MultisetIndex(int N, int box) : N_(N), box_(box) {
        const int top = box + N;
        binom_.assign(static_cast<std::size_t>(top + 1) * (N + 1), 0);
        for (int x = 0; x <= top; ++x) {
            at(x, 0) = 1;
            for (int r = 1; r <= std::min(x, N); ++r) at(x, r) = at(x - 1, r - 1) + (r <= x - 1 ? at(x - 1, r) : 0);
        }
        count_ = at(box + N - 1, N);
    }

    std::int64_t count() const { return count_; }

    // a must be sorted, entries in [0, box).
    std::int64_t rank(const int* a) const {
        std::int64_t r = 0;
        for (int i = 0; i < N_; ++i) r += binom(a[i] + i, i + 1);
        return r;
    }

    std::int64_t binom(int x, int r) const { return x < r ? 0 : binom_[static_cast<std::size_t>(x) * (N_ + 1) + r]; }

private:
    std::int64_t& at(int x, int r) { return binom_[static_cast<std::size_t>(x) * (N_ + 1) + r]; }

    int N_, box_;
    std::int64_t count_ = 0;
    std::vector<std::int64_t> binom_;
};

}  // namespace

JointTrajectory solve_liouville_galerkin(const KernelSpec& K, const DensityField& m0, int N,
                                         const LiouvilleOptions& opt) {
    const int n = m0.grid.n;
    const int M = n / 2 - 1;
    const int box = 2 * M + 1;
    if (M < 1) throw GridError("grid too coarse for the Galerkin scheme");
    const TorusGrid g = make_grid(N, n, opt.cap);
    const MultisetIndex index(N, box);
    const std::int64_t C = index.count();
    if (static_cast<std::size_t>(C) * static_cast<std::size_t>(N) > opt.cap)
        throw GridError("Galerkin state exceeds the memory cap");

    // Enumerate sorted multi-indices (offset by M) at their rank.
    std::vector<int> modes(static_cast<std::size_t>(C) * N);
    {
        std::vector<int> a(static_cast<std::size_t>(N), 0);
        while (true) {
            const std::int64_t r = index.rank(a.data());
            for (int i = 0; i < N; ++i) modes[static_cast<std::size_t>(r) * N + i] = a[i] - M;
            int p = N - 1;
            while (p >= 0 && a[p] == box - 1) --p;
            if (p < 0) break;
            ++a[p];
            for (int q = p + 1; q < N; ++q) a[q] = a[p];
        }
    }

    // Effective coefficients of the real kernel Re Σ c_q e^{2πiqx}.
    std::map<int, cplx> coef;
    for (const auto& t : K.series) {
        coef[t.k[0]] += 0.5 * t.coef[0];
        coef[-t.k[0]] += 0.5 * std::conj(t.coef[0]);
    }
    auto c_of = [&](int q) {
        const auto it = coef.find(q);
        return it == coef.end() ? cplx(0.0) : it->second;
    };

    std::vector<std::int64_t> row(static_cast<std::size_t>(C) + 1, 0);
    std::vector<std::int32_t> col;
    std::vector<cplx> val;
    std::vector<double> e_full(static_cast<std::size_t>(C)), e_half(static_cast<std::size_t>(C));
    {
        const cplx pre(0.0, -kTwoPi / (N - 1));
        const double heat = -4.0 * std::numbers::pi * std::numbers::pi;
        std::vector<std::pair<std::int32_t, cplx>> entries;
        std::vector<int> tgt(static_cast<std::size_t>(N));
        for (std::int64_t r = 0; r < C; ++r) {
            const int* k = modes.data() + r * N;
            double k2 = 0.0;
            for (int a = 0; a < N; ++a) k2 += static_cast<double>(k[a]) * k[a];
            e_full[r] = std::exp(heat * k2 * opt.dt);
            e_half[r] = std::exp(heat * k2 * opt.dt * 0.5);
            entries.clear();
            for (int i = 0; i < N; ++i) {
                for (int j = i + 1; j < N; ++j) {
                    for (const auto& [q, cq] : coef) {
                        const cplx w = pre * (static_cast<double>(k[i]) * cq + static_cast<double>(k[j]) * c_of(-q));
                        if (w == cplx(0.0)) continue;
                        bool inside = true;
                        for (int a = 0; a < N; ++a) {
                            int v = k[a];
                            if (a == i) v -= q;
                            if (a == j) v += q;
                            if (std::abs(v) > M) inside = false;
                            tgt[a] = v + M;
                        }
                        if (!inside) continue;
                        std::sort(tgt.begin(), tgt.end());
                        entries.emplace_back(static_cast<std::int32_t>(index.rank(tgt.data())), w);
                    }
                }
            }
            std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
            for (std::size_t e = 0; e < entries.size(); ++e) {
                if (!col.empty() && static_cast<std::int64_t>(col.size()) > row[r] && col.back() == entries[e].first)
                    val.back() += entries[e].second;
                else {
                    col.push_back(entries[e].first);
                    val.push_back(entries[e].second);
                }
            }
            row[r + 1] = static_cast<std::int64_t>(col.size());
        }
    }

    // Initial coefficients Π f̂(k_a).
    const Spectrum f0 = forward(m0);
    auto fhat = [&](int q) { return q >= 0 ? f0.data[static_cast<std::size_t>(q)] : std::conj(f0.data[static_cast<std::size_t>(-q)]); };
    std::vector<cplx> x(static_cast<std::size_t>(C));
    std::int64_t zero_rank = 0;
    {
        std::vector<int> mid(static_cast<std::size_t>(N), M);
        zero_rank = index.rank(mid.data());
    }
    for (std::int64_t r = 0; r < C; ++r) {
        cplx p = 1.0;
        for (int a = 0; a < N; ++a) p *= fhat(modes[static_cast<std::size_t>(r) * N + a]);
        x[r] = p;
    }

    auto expand = [&](const std::vector<cplx>& coefs) {
        Spectrum s;
        s.grid = g;
        s.data.assign(ipow(static_cast<std::size_t>(n), N - 1) * static_cast<std::size_t>(n / 2 + 1), cplx(0.0));
        std::vector<int> key(static_cast<std::size_t>(N));
        for_each_mode(g, [&](std::size_t lin, const int* k) {
            for (int a = 0; a < N; ++a) {
                if (std::abs(k[a]) > M) return;
                key[a] = k[a] + M;
            }
            std::sort(key.begin(), key.end());
            s.data[lin] = coefs[static_cast<std::size_t>(index.rank(key.data()))];
        });
        return s;
    };

    JointTrajectory traj;
    traj.N = N;
    traj.d = 1;
    traj.grid = g;
    traj.coupling = 1.0 / (N - 1);
    traj.dt = opt.dt;
    traj.scheme = "galerkin";

    const long nsteps = std::lround(opt.T / opt.dt);
    const std::vector<long> store = schedule_steps(opt.output_times, opt.dt, nsteps);
    std::vector<cplx> n0(x.size()), mid(x.size());
    std::size_t next = 0;
    for (long s = 0; s <= nsteps; ++s) {
        if (next < store.size() && store[next] == s) {
            Field f = inverse(expand(x));
            traj.times.push_back(s * opt.dt);
            traj.exchangeability.push_back(exchangeability_residual(f, 1));
            traj.joints.push_back(DensityField::normalized(g, std::move(f.values)));
            ++next;
        }
        if (s == nsteps) break;
        simd::csr_gather(row.data(), col.data(), val.data(), x.data(), n0.data(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mid[i] = x[i] + 0.5 * opt.dt * n0[i];
        simd::scale_complex(mid.data(), e_half.data(), mid.size());
        simd::csr_gather(row.data(), col.data(), val.data(), mid.data(), n0.data(), x.size());
        simd::scale_complex(x.data(), e_full.data(), x.size());
        simd::scale_complex(n0.data(), e_half.data(), n0.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += opt.dt * n0[i];
        x[static_cast<std::size_t>(zero_rank)] = 1.0;
        if (!std::isfinite(std::abs(x[0]))) throw BlowUp("blow-up detected in Galerkin coefficients");
    }
    return traj;
}

}  // namespace pchaos::detail
