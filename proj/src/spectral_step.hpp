#pragma once

// Integrating-factor midpoint stepping shared by the mean-field and Liouville collocation solvers:
// heat part exact in Fourier, transport part explicit midpoint with per-axis 2/3 dealiasing.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pchaos/grid.hpp"
#include "pchaos/simd.hpp"

namespace pchaos::detail {

class BlowUp : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Transport term: given m̂ and its physical values, writes the (unfiltered) spectrum of −∇·(m b).
using TransportFn = std::function<void(const Spectrum& mhat, const std::vector<double>& m, Spectrum& out)>;

class IfMidpoint {
public:
    IfMidpoint(const TorusGrid& g, double dt, bool dealias) : grid_(g), dt_(dt) {
        const std::size_t nc = ipow(static_cast<std::size_t>(g.n), g.dim - 1) * static_cast<std::size_t>(g.n / 2 + 1);
        e_full_.resize(nc);
        e_half_.resize(nc);
        filter_.resize(nc);
        const double c = -4.0 * std::numbers::pi * std::numbers::pi;
        for_each_mode(g, [&](std::size_t lin, const int* k) {
            double k2 = 0.0;
            bool keep = true;
            for (int a = 0; a < g.dim; ++a) {
                k2 += static_cast<double>(k[a]) * k[a];
                if (dealias && 3 * std::abs(k[a]) >= g.n) keep = false;
            }
            e_full_[lin] = std::exp(c * k2 * dt);
            e_half_[lin] = std::exp(c * k2 * dt * 0.5);
            filter_[lin] = keep ? 1.0 : 0.0;
        });
        phys_.resize(g.size());
        n0_.grid = g;
        n0_.data.resize(nc);
        mid_.grid = g;
        mid_.data.resize(nc);
    }

    const std::vector<double>& filter() const { return filter_; }

    // Advances m̂ by one step.
    void step(Spectrum& mhat, const TransportFn& transport) {
        eval(mhat, transport, n0_);
        const std::size_t nc = mhat.data.size();
        for (std::size_t i = 0; i < nc; ++i) mid_.data[i] = mhat.data[i] + 0.5 * dt_ * n0_.data[i];
        simd::scale_complex(mid_.data.data(), e_half_.data(), nc);
        eval(mid_, transport, n0_);
        simd::scale_complex(mhat.data.data(), e_full_.data(), nc);
        simd::scale_complex(n0_.data.data(), e_half_.data(), nc);
        for (std::size_t i = 0; i < nc; ++i) mhat.data[i] += dt_ * n0_.data[i];
        mhat.data[0] = 1.0;  // renormalize: zero mode of a unit-mass density on the unit torus
    }

private:
    void eval(const Spectrum& mhat, const TransportFn& transport, Spectrum& out) {
        inverse_into(mhat, phys_.data());
        for (double x : phys_)
            if (!(std::abs(x) <= 1e6)) throw BlowUp("blow-up detected: density value " + std::to_string(x));
        transport(mhat, phys_, out);
        simd::scale_complex(out.data.data(), filter_.data(), out.data.size());
    }

    TorusGrid grid_;
    double dt_;
    std::vector<double> e_full_, e_half_, filter_;
    std::vector<double> phys_;
    Spectrum n0_, mid_;
};

// Output schedule: step s is stored when s·dt is within dt/2 of a requested time.
inline std::vector<long> schedule_steps(const std::vector<double>& times, double dt, long nsteps) {
    std::vector<long> steps;
    steps.push_back(0);
    for (double t : times) {
        const long s = std::lround(t / dt);
        if (s < 0 || s > nsteps) throw std::invalid_argument("output time outside [0, T]");
        steps.push_back(s);
    }
    steps.push_back(nsteps);
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    return steps;
}

}  // namespace pchaos::detail
