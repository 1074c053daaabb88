#include "pchaos/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pchaos/divergences.hpp"
#include "spectral_step.hpp"

namespace pchaos {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Row-major digit odometer over n^D nodes.
struct Odometer {
    int n, D;
    std::vector<int> dig;
    Odometer(int n_, int D_) : n(n_), D(D_), dig(static_cast<std::size_t>(D_), 0) {}
    void next() {
        for (int a = D - 1; a >= 0; --a) {
            if (++dig[a] < n) return;
            dig[a] = 0;
        }
    }
};

// Node index in the d-dimensional kernel grid of the difference between particle blocks.
inline std::size_t diff_index(const int* a, const int* b, int d, int n) {
    std::size_t idx = 0;
    for (int c = 0; c < d; ++c) {
        int v = a[c] - b[c];
        if (v < 0) v += n;
        idx = idx * n + static_cast<std::size_t>(v);
    }
    return idx;
}

// Σ_{x*} K_c(x_i − x*) m^{k+1}(x, x*) h^d for every x ∈ T^{kd}, particle i, component c.
std::vector<std::vector<double>> outer_field(const DensityField& mk1, const VectorField& K, int k, int d) {
    const int n = mk1.grid.n;
    const std::size_t inner = ipow(static_cast<std::size_t>(n), d);
    const std::size_t outer = ipow(static_cast<std::size_t>(n), k * d);
    const double hd = std::pow(1.0 / n, d);
    std::vector<std::vector<double>> F(static_cast<std::size_t>(k * d), std::vector<double>(outer, 0.0));
    Odometer od(n, k * d);
    Odometer star(n, d);
    for (std::size_t o = 0; o < outer; ++o, od.next()) {
        const double* row = mk1.values.data() + o * inner;
        for (int i = 0; i < k; ++i) {
            std::fill(star.dig.begin(), star.dig.end(), 0);
            double acc[2] = {0.0, 0.0};
            for (std::size_t s = 0; s < inner; ++s, star.next()) {
                const std::size_t ki = diff_index(od.dig.data() + i * d, star.dig.data(), d, n);
                for (int c = 0; c < d; ++c) acc[c] += K.comp[c][ki] * row[s];
            }
            for (int c = 0; c < d; ++c) F[static_cast<std::size_t>(i * d + c)][o] = acc[c] * hd;
        }
    }
    return F;
}

// m^{N,j} at stored index `idx` (joint itself when j == N).
DensityField marginal_at(const JointTrajectory& traj, int idx, int j) {
    return marginalize(traj.joints[static_cast<std::size_t>(idx)], traj.d, j);
}

std::vector<int> stencil_indices(const JointTrajectory& traj, double t) {
    std::vector<int> ids;
    for (int j = -2; j <= 2; ++j) {
        const int id = traj.find(t + j * traj.dt);
        if (id < 0) throw GridError("time-difference stencil not stored around t = " + std::to_string(t));
        ids.push_back(id);
    }
    return ids;
}

double central4(const double* f, double h) { return (-f[4] + 8.0 * f[3] - 8.0 * f[1] + f[0]) / (12.0 * h); }

JointTrajectory solve_collocation(const KernelSpec& K, const DensityField& m0, int N, const LiouvilleOptions& opt) {
    const int d = m0.grid.dim;
    const int n = m0.grid.n;
    const TorusGrid g = make_grid(N * d, n, opt.cap);
    const long nsteps = std::lround(opt.T / opt.dt);
    const std::vector<long> store = detail::schedule_steps(opt.output_times, opt.dt, nsteps);
    const VectorField Kt = K.total();
    const double coupling = 1.0 / (N - 1);

    const std::size_t nc = ipow(static_cast<std::size_t>(n), N * d - 1) * static_cast<std::size_t>(n / 2 + 1);
    std::vector<std::vector<double>> kvec(static_cast<std::size_t>(N * d), std::vector<double>(nc));
    for_each_mode(g, [&](std::size_t lin, const int* k) {
        for (int a = 0; a < N * d; ++a) kvec[a][lin] = (n % 2 == 0 && std::abs(k[a]) == n / 2) ? 0.0 : k[a];
    });

    std::vector<double> prod(g.size());
    detail::TransportFn transport = [&](const Spectrum&, const std::vector<double>& m, Spectrum& out) {
        std::fill(out.data.begin(), out.data.end(), cplx(0.0));
        for (int i = 0; i < N; ++i) {
            for (int c = 0; c < d; ++c) {
                Odometer od(n, N * d);
                for (std::size_t x = 0; x < g.size(); ++x, od.next()) {
                    double b = 0.0;
                    for (int j = 0; j < N; ++j) {
                        if (j == i) continue;
                        b += Kt.comp[c][diff_index(od.dig.data() + i * d, od.dig.data() + j * d, d, n)];
                    }
                    prod[x] = m[x] * b * coupling;
                }
                const Spectrum f = forward(g, prod.data());
                const std::vector<double>& kv = kvec[static_cast<std::size_t>(i * d + c)];
                for (std::size_t q = 0; q < nc; ++q) out.data[q] += cplx(0.0, -kTwoPi * kv[q]) * f.data[q];
            }
        }
    };

    JointTrajectory traj;
    traj.N = N;
    traj.d = d;
    traj.grid = g;
    traj.coupling = coupling;
    traj.dt = opt.dt;
    traj.scheme = "collocation";
    const DensityField j0 = tensorize(m0, N, opt.cap);
    Spectrum mhat = forward(j0);
    detail::IfMidpoint stepper(g, opt.dt, opt.dealias);
    std::size_t next = 0;
    for (long s = 0; s <= nsteps; ++s) {
        if (next < store.size() && store[next] == s) {
            Field f = inverse(mhat);
            traj.times.push_back(s * opt.dt);
            traj.exchangeability.push_back(exchangeability_residual(f, d));
            traj.joints.push_back(DensityField::normalized(g, std::move(f.values)));
            ++next;
        }
        if (s == nsteps) break;
        stepper.step(mhat, transport);
    }
    return traj;
}

}  // namespace

int JointTrajectory::find(double t) const {
    const double tol = std::max(dt, 1e-12) * 1e-2;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= tol) return static_cast<int>(i);
    return -1;
}

JointTrajectory solve_liouville(const KernelSpec& K, const DensityField& m0, int N, const LiouvilleOptions& opt) {
    if (N < 2) throw GridError("Liouville solver needs N >= 2");
    if (!(m0.grid == K.grid)) throw GridError("kernel and initial density live on different grids");
    if (!(opt.dt > 0.0) || !(opt.T >= 0.0)) throw GridError("need dt > 0 and T >= 0");
    make_grid(N * m0.grid.dim, m0.grid.n, opt.cap);
    LiouvilleScheme scheme = opt.scheme;
    const bool galerkin_ok = m0.grid.dim == 1 && K.tag == KernelTag::fourier_series && !K.has_singular();
    if (scheme == LiouvilleScheme::automatic)
        scheme = galerkin_ok ? LiouvilleScheme::galerkin : LiouvilleScheme::collocation;
    if (scheme == LiouvilleScheme::galerkin) {
        if (!galerkin_ok) throw GridError("Galerkin scheme needs d = 1 and a Fourier-series kernel");
        return detail::solve_liouville_galerkin(K, m0, N, opt);
    }
    return solve_collocation(K, m0, N, opt);
}

std::vector<double> stencil_times(const std::vector<double>& check_times, double dt) {
    std::vector<double> out;
    for (double t : check_times)
        for (int j = -2; j <= 2; ++j) out.push_back(t + j * dt);
    return out;
}

BbgkyResidual bbgky_residual(const JointTrajectory& traj, const KernelSpec& K, int k, double t) {
    const int N = traj.N, d = traj.d;
    if (k < 1 || k >= N) throw GridError("bbgky_residual needs 1 <= k < N");
    const std::vector<int> ids = stencil_indices(traj, t);
    std::vector<DensityField> mk;
    for (int id : ids) mk.push_back(marginal_at(traj, id, k));
    const DensityField mk1 = marginal_at(traj, ids[2], k + 1);
    const DensityField& cur = mk[2];
    const TorusGrid& g = cur.grid;
    const int n = g.n;
    const VectorField Kt = K.total();
    const double coupling = 1.0 / (N - 1);
    const double outer_w = static_cast<double>(N - k) / (N - 1);

    Field rhs = laplacian(cur);
    const auto F = outer_field(mk1, Kt, k, d);
    for (int i = 0; i < k; ++i) {
        for (int c = 0; c < d; ++c) {
            Field G(g);
            Odometer od(n, k * d);
            for (std::size_t x = 0; x < g.size(); ++x, od.next()) {
                double b = 0.0;
                for (int j = 0; j < k; ++j) {
                    if (j == i) continue;
                    b += Kt.comp[c][diff_index(od.dig.data() + i * d, od.dig.data() + j * d, d, n)];
                }
                G.values[x] = coupling * b * cur.values[x] + outer_w * F[static_cast<std::size_t>(i * d + c)][x];
            }
            const Field dG = derivative(G, i * d + c);
            for (std::size_t x = 0; x < g.size(); ++x) rhs.values[x] -= dG.values[x];
        }
    }
    BbgkyResidual r;
    const double vol = g.cell_volume();
    for (std::size_t x = 0; x < g.size(); ++x) {
        double f[5];
        for (int s = 0; s < 5; ++s) f[s] = mk[s].values[x];
        const double dtm = central4(f, traj.dt);
        r.residual += std::abs(dtm - rhs.values[x]);
        r.dt_norm += std::abs(dtm);
    }
    r.residual *= vol;
    r.dt_norm *= vol;
    return r;
}

double divergence_p(const DensityField& m1, const DensityField& m2, int p) {
    if (p == 1) return relative_entropy(m1, m2);
    if (p == 2) return chi_square(m1, m2);
    throw GridError("p must be 1 or 2");
}

IdentityTerms evolution_identity_check(const JointTrajectory& traj, const FlowTrajectory& mf, const KernelSpec& K,
                                       int k, int p, double t) {
    if (p != 1 && p != 2) throw GridError("p must be 1 or 2");
    const int N = traj.N, d = traj.d;
    if (k < 1 || k >= N) throw GridError("evolution identity needs 1 <= k < N");
    const std::vector<int> ids = stencil_indices(traj, t);
    auto mf_at = [&](double tt) -> const DensityField& {
        const double tol = traj.dt * 1e-2;
        for (std::size_t i = 0; i < mf.times.size(); ++i)
            if (std::abs(mf.times[i] - tt) <= tol) return mf.states[i];
        throw GridError("mean-field trajectory lacks time " + std::to_string(tt));
    };

    IdentityTerms out;
    double Dvals[5];
    for (int s = 0; s < 5; ++s) {
        const DensityField mks = marginal_at(traj, ids[s], k);
        const DensityField ref = tensorize(mf_at(traj.times[static_cast<std::size_t>(ids[s])]), k);
        Dvals[s] = divergence_p(mks, ref, p);
    }
    out.lhs = central4(Dvals, traj.dt) / p;

    const DensityField& m = mf_at(t);
    const DensityField mk = marginal_at(traj, ids[2], k);
    const DensityField mk1 = marginal_at(traj, ids[2], k + 1);
    const DensityField ref = tensorize(m, k);
    const TorusGrid& g = mk.grid;
    const int n = g.n;
    const double vol = g.cell_volume();
    const double rfloor = ref.floor_value();
    const double mkfloor = mk.floor_value();

    Field h(g);
    for (std::size_t x = 0; x < g.size(); ++x) h.values[x] = mk.values[x] / std::max(ref.values[x], rfloor);
    const VectorField gh = gradient(h);

    for (std::size_t x = 0; x < g.size(); ++x) {
        double s = 0.0;
        for (int a = 0; a < k * d; ++a) s += gh.comp[a][x] * gh.comp[a][x];
        out.E += (p == 1 ? s / std::max(h.values[x], kDensityFloor) : s) * ref.values[x];
    }
    out.E *= vol;

    const double coupling = 1.0 / (N - 1);
    const double outer_w = static_cast<double>(N - k) / (N - 1);
    for (int part = 1; part <= 2; ++part) {
        if (part == 1 && !K.has_singular()) continue;
        if (part == 2 && !K.K2) continue;
        const VectorField Ka = part == 1 ? K.singular() : K.bounded();
        const VectorField conv = convolve(Ka, m);
        const auto F = outer_field(mk1, Ka, k, d);
        double A = 0.0, B = 0.0;
        Odometer od(n, k * d);
        const std::vector<int> origin(static_cast<std::size_t>(d), 0);
        for (std::size_t x = 0; x < g.size(); ++x, od.next()) {
            const double w = (p == 1 ? 1.0 : h.values[x]) * ref.values[x];
            const bool row_ok = mk.values[x] >= mkfloor;
            for (int i = 0; i < k; ++i) {
                const std::size_t self = diff_index(od.dig.data() + i * d, origin.data(), d, n);
                for (int c = 0; c < d; ++c) {
                    const double gi = gh.comp[static_cast<std::size_t>(i * d + c)][x];
                    const double cm = conv.comp[c][self];
                    double inner = 0.0;
                    for (int j = 0; j < k; ++j) {
                        if (j == i) continue;
                        inner += Ka.comp[c][diff_index(od.dig.data() + i * d, od.dig.data() + j * d, d, n)] - cm;
                    }
                    A += w * gi * inner;
                    if (row_ok) B += w * gi * (F[static_cast<std::size_t>(i * d + c)][x] / mk.values[x] - cm);
                }
            }
            if (!row_ok) out.excluded_mass += mk.values[x] * vol;
        }
        A *= coupling * vol;
        B *= outer_w * vol;
        if (part == 1) {
            out.A1 = A;
            out.B1 = B;
        } else {
            out.A2 = A;
            out.B2 = B;
        }
    }
    out.rhs = -out.E + out.A1 + out.A2 + out.B1 + out.B2;
    out.abs_residual = std::abs(out.lhs - out.rhs);
    const double scale = std::max(std::abs(out.lhs),
                                  std::abs(out.E) + std::abs(out.A1) + std::abs(out.A2) + std::abs(out.B1) +
                                      std::abs(out.B2));
    out.residual = scale > 0.0 ? out.abs_residual / scale : out.abs_residual;
    return out;
}

}  // namespace pchaos
