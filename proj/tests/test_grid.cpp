#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "pchaos/grid.hpp"
#include "support.hpp"

using namespace pchaos;
using testing::kPi;

TEST_SUITE("grid") {

TEST_CASE("make_grid sizes and spacing") {
    CHECK(make_grid(1, 64).spacing() == doctest::Approx(0.015625));
    CHECK_THROWS_AS(make_grid(2, 0), GridError);
    CHECK(make_grid(4, 32).size() == 1048576u);
    CHECK_THROWS_AS(make_grid(3, 64, 1000), GridError);
}

TEST_CASE("spectral derivatives against analytic oracles") {
    const TorusGrid g = make_grid(1, 64);
    const Field f = testing::sample(g, [](const double* x) { return std::sin(2 * kPi * x[0]); });
    const Field df = derivative(f, 0);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        err = std::max(err, std::abs(df.values[i] - 2 * kPi * std::cos(2 * kPi * g.coord(i, 0))));
    CHECK(err < 1e-10);

    const Field c = testing::sample(g, [](const double* x) { return std::cos(4 * kPi * x[0]); });
    const Field lap = laplacian(c);
    err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        err = std::max(err, std::abs(lap.values[i] + 16 * kPi * kPi * c.values[i]));
    CHECK(err < 1e-9);
}

TEST_CASE("constant field has zero gradient and Laplacian") {
    const TorusGrid g = make_grid(2, 16);
    const Field f(g, 3.5);
    const VectorField gr = gradient(f);
    const Field lap = laplacian(f);
    for (const auto& comp : gr.comp)
        for (double v : comp) CHECK(std::abs(v) < 1e-12);
    for (double v : lap.values) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("convolution") {
    const TorusGrid g = make_grid(1, 32);
    SUBCASE("uniform density gives the mean of K") {
        const Field K = testing::sample(g, [](const double* x) { return 0.3 + std::sin(2 * kPi * x[0]) + x[0] * x[0]; });
        const Field out = convolve(K, DensityField::uniform(g));
        const double mean = integrate(K);
        for (double v : out.values) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
    }
    SUBCASE("sin against a single-mode density matches direct summation") {
        const Field K = testing::sample(g, [](const double* x) { return std::sin(2 * kPi * x[0]); });
        const DensityField m = testing::sine_density(g, 0.5);
        const Field out = convolve(K, m);
        const std::size_t n = g.size();
        for (std::size_t i = 0; i < n; ++i) {
            double direct = 0.0;
            for (std::size_t j = 0; j < n; ++j) direct += K.values[(i + n - j) % n] * m.values[j] / n;
            CHECK(out.values[i] == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
            // closed form of ∫ sin(2π(x−y))(1 + ½ sin 2πy) dy
            CHECK(out.values[i] == doctest::Approx(-0.25 * std::cos(2 * kPi * g.coord(i, 0))).scale(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("zero kernel") {
        const Field out = convolve(Field(g, 0.0), testing::sine_density(g, 0.5));
        for (double v : out.values) CHECK(v == 0.0);
    }
}

TEST_CASE("marginalize") {
    SUBCASE("product density") {
        const TorusGrid g1 = make_grid(1, 8);
        const DensityField p = testing::sine_density(g1, 0.4);
        const DensityField q = testing::density(g1, [](const double* x) { return 1.0 + 0.2 * std::cos(2 * kPi * x[0]); });
        std::vector<double> v(64);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) v[i * 8 + j] = p.values[i] * q.values[j];
        const DensityField m = marginalize(DensityField::normalized(make_grid(2, 8), v), 1, 1);
        CHECK(testing::max_abs_diff(m.values, p.values) < 1e-14);
    }
    SUBCASE("uniform") {
        const DensityField m = marginalize(DensityField::uniform(make_grid(2, 6)), 1, 1);
        for (double v : m.values) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("two-cell joint summed by hand") {
        const DensityField joint = DensityField::normalized(make_grid(2, 2), {2.0, 0.4, 0.8, 0.8});
        const DensityField m = marginalize(joint, 1, 1);
        CHECK(m.values[0] == doctest::Approx(1.2));
        CHECK(m.values[1] == doctest::Approx(0.8));
    }
}

TEST_CASE("tensorize") {
    const DensityField u = tensorize(DensityField::uniform(make_grid(1, 4)), 3);
    CHECK(u.grid.dim == 3);
    for (double v : u.values) CHECK(v == doctest::Approx(1.0));
    const DensityField m = testing::sine_density(make_grid(1, 8), 0.3);
    CHECK(testing::max_abs_diff(tensorize(m, 1).values, m.values) == 0.0);
    const DensityField two = tensorize(DensityField::normalized(make_grid(1, 2), {1.6, 0.4}), 2);
    const std::vector<double> expect = {2.56, 0.64, 0.64, 0.16};
    for (int i = 0; i < 4; ++i) CHECK(two.values[i] == doctest::Approx(expect[i]));
}

TEST_CASE("cell averages of a trigonometric polynomial") {
    const TorusGrid g = make_grid(1, 32);
    const Field f = testing::sample(g, [](const double* x) { return 1.0 + std::cos(2 * kPi * x[0]); });
    const Field avg = cell_average(f, 4);
    for (int j = 0; j < 4; ++j) {
        // exact ∫_{j/4}^{(j+1)/4} (1 + cos 2πx) dx · 4
        const double a = j / 4.0, b = (j + 1) / 4.0;
        const double exact = 1.0 + 4.0 * (std::sin(2 * kPi * b) - std::sin(2 * kPi * a)) / (2 * kPi);
        CHECK(avg.values[j] == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("binary field round trip") {
    const TorusGrid g = make_grid(2, 8);
    const Field f = testing::sample(g, [](const double* x) { return x[0] - 2 * x[1]; });
    const auto path = std::filesystem::temp_directory_path() / "pchaos_roundtrip.pchl";
    write_pchl(path.string(), f);
    const Field r = read_pchl(path.string());
    std::filesystem::remove(path);
    CHECK(r.grid == g);
    CHECK(testing::max_abs_diff(r.values, f.values) == 0.0);
}

}
