#include "pchaos/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spectral_step.hpp"

namespace pchaos {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

FlowTrajectory solve_mckean_vlasov(const KernelSpec& K, const DensityField& m0, const MeanFieldOptions& opt) {
    if (!(m0.grid == K.grid)) throw GridError("kernel and initial density live on different grids");
    if (!(opt.dt > 0.0) || !(opt.T >= 0.0)) throw GridError("need dt > 0 and T >= 0");
    const TorusGrid g = m0.grid;
    const int d = g.dim;
    const long nsteps = std::lround(opt.T / opt.dt);
    const std::vector<long> store = detail::schedule_steps(opt.output_times, opt.dt, nsteps);

    const VectorField Kt = K.total();
    std::vector<Spectrum> khat;
    for (int c = 0; c < d; ++c) khat.push_back(forward(g, Kt.comp[c].data()));

    std::vector<std::vector<double>> kvec(static_cast<std::size_t>(d));
    for (auto& v : kvec) v.resize(khat[0].data.size());
    for_each_mode(g, [&](std::size_t lin, const int* k) {
        for (int a = 0; a < d; ++a) kvec[a][lin] = (g.n % 2 == 0 && std::abs(k[a]) == g.n / 2) ? 0.0 : k[a];
    });

    const std::size_t nc = khat[0].data.size();
    Spectrum uhat{g, std::vector<cplx>(nc)};
    std::vector<double> u(g.size()), prod(g.size());
    detail::TransportFn transport = [&](const Spectrum& mhat, const std::vector<double>& m, Spectrum& out) {
        std::fill(out.data.begin(), out.data.end(), cplx(0.0));
        for (int c = 0; c < d; ++c) {
            for (std::size_t i = 0; i < nc; ++i) uhat.data[i] = khat[c].data[i] * mhat.data[i];
            inverse_into(uhat, u.data());
            simd::mul(m.data(), u.data(), prod.data(), prod.size());
            const Spectrum f = forward(g, prod.data());
            for (std::size_t i = 0; i < nc; ++i) out.data[i] += cplx(0.0, -kTwoPi * kvec[c][i]) * f.data[i];
        }
    };

    FlowTrajectory traj;
    traj.dt = opt.dt;
    traj.scheme = "if-midpoint-dealiased";
    {
        double umax = 0.0;
        const VectorField u0 = convolve(Kt, m0);
        umax = sup_norm(u0);
        const double kmax = opt.dealias ? std::floor((g.n - 1) / 3.0) : g.n / 2.0;
        traj.stability_dt = umax > 0.0 ? 1.0 / (kTwoPi * kmax * umax) : INFINITY;
    }

    detail::IfMidpoint stepper(g, opt.dt, opt.dealias);
    Spectrum mhat = forward(m0);
    std::size_t next = 0;
    auto record = [&](long s) {
        Field m = inverse(mhat);
        const double mass = integrate(m);
        traj.times.push_back(s * opt.dt);
        traj.mass_residual.push_back(std::abs(mass - 1.0));
        traj.states.push_back(DensityField::normalized(g, std::move(m.values)));
    };
    for (long s = 0; s <= nsteps; ++s) {
        if (next < store.size() && store[next] == s) {
            record(s);
            ++next;
        }
        if (s == nsteps) break;
        stepper.step(mhat, transport);
    }
    return traj;
}

LogRegularity log_regularity(const DensityField& m) {
    const int d = m.grid.dim;
    if (d > 2) throw GridError("log_regularity supports d <= 2");
    const double fl = m.floor_value();
    Field L(m.grid);
    for (std::size_t i = 0; i < L.values.size(); ++i) {
        if (m.values[i] < fl) throw GridError("density below floor in log_regularity");
        L.values[i] = std::log(m.values[i]);
    }
    LogRegularity r;
    const VectorField g = gradient(L);
    for (std::size_t i = 0; i < L.values.size(); ++i) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += g.comp[a][i] * g.comp[a][i];
        r.g2 = std::max(r.g2, s);
    }
    if (d == 1) {
        const Field h = derivative(Field(m.grid, g.comp[0]), 0);
        for (double x : h.values) r.h = std::max(r.h, std::abs(x));
    } else {
        const Field a = derivative(Field(m.grid, g.comp[0]), 0);
        const Field b = derivative(Field(m.grid, g.comp[0]), 1);
        const Field c = derivative(Field(m.grid, g.comp[1]), 1);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const double mean = 0.5 * (a.values[i] + c.values[i]);
            const double rad = std::hypot(0.5 * (a.values[i] - c.values[i]), b.values[i]);
            r.h = std::max(r.h, std::max(std::abs(mean + rad), std::abs(mean - rad)));
        }
    }
    return r;
}

DecayFit decay_fit(const FlowTrajectory& traj, double burn_in) {
    std::vector<double> ts, ys;
    bool any_positive = false;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.times[i] < burn_in) continue;
        const LogRegularity r = log_regularity(traj.states[i]);
        const double v = r.g2 + r.h;
        if (v > 0.0) any_positive = true;
        ts.push_back(traj.times[i]);
        ys.push_back(v);
    }
    if (ts.size() < 5) throw GridError("decay_fit needs at least 5 samples past burn-in");
    if (!any_positive) throw GridError("identically zero regularity");
    for (double& y : ys) {
        if (!(y > 0.0)) throw GridError("nonpositive regularity value: fit undefined");
        y = std::log(y);
    }
    const double nn = static_cast<double>(ts.size());
    double st = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
    }
    const double tm = st / nn, ym = sy / nn;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxx += (ts[i] - tm) * (ts[i] - tm);
        sxy += (ts[i] - tm) * (ys[i] - ym);
    }
    const double slope = sxy / sxx;
    DecayFit f;
    f.eta_hat = -slope;
    f.M_m = std::exp(ym - slope * tm);
    f.samples = static_cast<int>(ts.size());
    return f;
}

}  // namespace pchaos
