#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pchaos/grid.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

template <class F>
pchaos::Field sample(const pchaos::TorusGrid& g, F&& f) {
    pchaos::Field out(g);
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int a = 0; a < g.dim; ++a) x[a] = g.coord(i, a);
        out.values[i] = f(x.data());
    }
    return out;
}

template <class F>
pchaos::DensityField density(const pchaos::TorusGrid& g, F&& f) {
    return pchaos::DensityField::normalized(g, sample(g, f).values);
}

inline pchaos::DensityField sine_density(const pchaos::TorusGrid& g, double a) {
    return density(g, [a](const double* x) { return 1.0 + a * std::sin(2.0 * kPi * x[0]); });
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testing
