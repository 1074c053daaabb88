#include "doctest.h"
#include "pchaos/meanfield.hpp"
#include "support.hpp"

using namespace pchaos;
using testing::kPi;

namespace {

KernelSpec sin_kernel(const TorusGrid& g) {
    FourierTerm t{{1}, {cplx(0.0, -1.0)}};
    return fourier_series_kernel(g, {t});
}

}  // namespace

TEST_SUITE("meanfield") {

TEST_CASE("zero kernel reduces to the heat equation") {
    const TorusGrid g = make_grid(1, 64);
    const DensityField m0 = testing::sine_density(g, 0.5);
    MeanFieldOptions o;
    o.T = 0.01;
    o.dt = 1e-4;
    const FlowTrajectory tr = solve_mckean_vlasov(zero_kernel(g), m0, o);
    const double amp = 0.5 * std::exp(-4 * kPi * kPi * 0.01);
    CHECK(amp == doctest::Approx(0.33690).epsilon(1e-4));
    const Field exact = testing::sample(g, [amp](const double* x) { return 1.0 + amp * std::sin(2 * kPi * x[0]); });
    CHECK(tr.times.back() == doctest::Approx(0.01));
    CHECK(testing::max_abs_diff(tr.states.back().values, exact.values) < 1e-6);
    for (double r : tr.mass_residual) CHECK(r < 1e-12);
}

TEST_CASE("uniform density is stationary") {
    const TorusGrid g = make_grid(1, 32);
    MeanFieldOptions o;
    o.T = 0.05;
    o.dt = 1e-3;
    const FlowTrajectory tr = solve_mckean_vlasov(sin_kernel(g), DensityField::uniform(g), o);
    for (const auto& s : tr.states)
        for (double v : s.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Biot-Savart shear flow decays like heat") {
    const TorusGrid g = make_grid(2, 32);
    const DensityField m0 = testing::density(g, [](const double* x) { return 1.0 + 0.5 * std::cos(2 * kPi * x[0]); });
    MeanFieldOptions o;
    o.T = 0.02;
    o.dt = 1e-4;
    const FlowTrajectory tr = solve_mckean_vlasov(biot_savart(g, 16), m0, o);
    const double amp = 0.5 * std::exp(-4 * kPi * kPi * o.T);
    const Field exact = testing::sample(g, [amp](const double* x) { return 1.0 + amp * std::cos(2 * kPi * x[0]); });
    CHECK(testing::max_abs_diff(tr.states.back().values, exact.values) < 1e-5);
}

TEST_CASE("log regularity against a dense search") {
    CHECK(log_regularity(DensityField::uniform(make_grid(1, 16))).g2 == doctest::Approx(0.0).scale(1.0));
    CHECK(log_regularity(DensityField::uniform(make_grid(1, 16))).h == doctest::Approx(0.0).scale(1.0));

    const TorusGrid g = make_grid(1, 64);
    const LogRegularity lr = log_regularity(testing::sine_density(g, 0.5));
    double g2 = 0.0, h = 0.0;
    for (int i = 0; i < 640; ++i) {
        const double x = i / 640.0, m = 1 + 0.5 * std::sin(2 * kPi * x);
        const double m1 = kPi * std::cos(2 * kPi * x), m2 = -2 * kPi * kPi * std::sin(2 * kPi * x);
        g2 = std::max(g2, (m1 / m) * (m1 / m));
        h = std::max(h, std::abs(m2 / m - (m1 / m) * (m1 / m)));
    }
    CHECK(lr.g2 == doctest::Approx(g2).epsilon(0.01));
    CHECK(lr.h == doctest::Approx(h).epsilon(0.01));
}

TEST_CASE("decay fit") {
    const TorusGrid g = make_grid(1, 64);
    MeanFieldOptions o;
    o.T = 0.2;
    o.dt = 1e-4;
    for (int j = 1; j < 50; ++j) o.output_times.push_back(o.T * j / 50);
    SUBCASE("heat single mode recovers 4π²") {
        const FlowTrajectory tr = solve_mckean_vlasov(zero_kernel(g), testing::sine_density(g, 0.3), o);
        const DecayFit f = decay_fit(tr);
        CHECK(f.samples >= 5);
        CHECK(f.eta_hat >= 0.9 * 4 * kPi * kPi);
        CHECK(f.eta_hat <= 1.1 * 4 * kPi * kPi);
        CHECK(f.M_m > 0.0);
    }
    SUBCASE("uniform state has no regularity to fit") {
        const FlowTrajectory tr = solve_mckean_vlasov(zero_kernel(g), DensityField::uniform(g), o);
        CHECK_THROWS(decay_fit(tr));
    }
    SUBCASE("too few samples") {
        MeanFieldOptions s = o;
        s.output_times.clear();
        const FlowTrajectory tr = solve_mckean_vlasov(zero_kernel(g), testing::sine_density(g, 0.3), s);
        CHECK_THROWS(decay_fit(tr));
    }
}

}
