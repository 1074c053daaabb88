#include "doctest.h"
#include "pchaos/kernels.hpp"
#include "support.hpp"

using namespace pchaos;
using testing::kPi;

namespace {

std::size_t node(const TorusGrid& g, int i, int j) { return static_cast<std::size_t>(((i % g.n + g.n) % g.n) * g.n + ((j % g.n + g.n) % g.n)); }

// Free-space kernel plus square-shell image sum plus the (x₂/2, −x₁/2) background of ΔG = δ − 1.
std::pair<double, double> periodic_reference(double x1, double x2) {
    double c0 = 0.0, c1 = 0.0;
    const int M = 200;
    for (int a = -M; a <= M; ++a)
        for (int b = -M; b <= M; ++b) {
            const double y1 = x1 + a, y2 = x2 + b, r2 = y1 * y1 + y2 * y2;
            c0 += -y2 / r2 / (2 * kPi);
            c1 += y1 / r2 / (2 * kPi);
        }
    return {c0 + x2 / 2, c1 - x1 / 2};
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("Biot-Savart kernel is odd and divergence free") {
    const TorusGrid g = make_grid(2, 32);
    const KernelSpec K = biot_savart(g, 16);
    double odd = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            for (int a = 0; a < 2; ++a)
                odd = std::max(odd, std::abs(K.K1->comp[a][node(g, i, j)] + K.K1->comp[a][node(g, -i, -j)]));
    CHECK(odd < 1e-12);
    const DecompositionReport rep = check_decomposition(K);
    CHECK(rep.div_v_residual < 1e-8);
    CHECK(rep.div_k1_residual < 1e-8);
    CHECK(rep.pass);
}

TEST_CASE("Biot-Savart near field matches the periodic Green function") {
    const auto [r0, r1] = periodic_reference(1.0 / 64, 0.0);
    CHECK(r1 == doctest::Approx(10.186).epsilon(0.01));
    for (int n : {128, 256}) {
        const TorusGrid g = make_grid(2, n);
        const KernelSpec K = biot_savart(g, n / 2);
        const std::size_t i = node(g, n / 64, 0);
        CHECK(std::abs(K.K1->comp[0][i] - r0) < 0.05 * r1);
        CHECK(std::abs(K.K1->comp[1][i] - r1) < 0.05 * r1);
    }
}

TEST_CASE("v_matrix values") {
    const TorusGrid g = make_grid(2, 16);
    const MatrixField V = v_matrix(g);
    const std::size_t diag = node(g, 3, 3);
    CHECK(V.at(0, 0)[diag] == doctest::Approx(0.125));
    CHECK(V.at(1, 1)[diag] == doctest::Approx(-0.125));
    for (int i = 0; i < g.n; ++i)
        for (int j = 1; j < g.n / 2; ++j) CHECK(V.at(0, 0)[node(g, i, -j)] == doctest::Approx(-V.at(0, 0)[node(g, i, j)]));
    for (const auto& c : V.comp)
        for (double v : c) CHECK(std::abs(v) <= 0.25 + 1e-15);
}

TEST_CASE("mollify damps each mode by its symbol") {
    const TorusGrid g = make_grid(1, 32);
    VectorField K2(g, 1);
    for (std::size_t i = 0; i < g.size(); ++i) K2.comp[0][i] = std::sin(2 * kPi * g.coord(i, 0));
    const KernelSpec K = explicit_kernel(g, std::nullopt, K2);
    const KernelSpec Ke = mollify(K, 0.1);
    const double factor = std::exp(-0.01 * 4 * kPi * kPi / 2);
    CHECK(factor == doctest::Approx(0.82087).epsilon(1e-4));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(Ke.K2->comp[0][i] == doctest::Approx(factor * K2.comp[0][i]).scale(1.0));

    const KernelSpec Z = mollify(zero_kernel(g), 0.1);
    for (double v : Z.K2->comp[0]) CHECK(v == 0.0);

    const TorusGrid g2 = make_grid(2, 32);
    const KernelSpec bs = biot_savart(g2, 16);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.2, 0.1, 0.05}) {
        const KernelSpec m = mollify(bs, eps);
        double s = 0.0;
        for (int a = 0; a < 2; ++a)
            for (std::size_t i = 0; i < g2.size(); ++i) {
                const double d = bs.K1->comp[a][i] - m.K1->comp[a][i];
                s += d * d;
            }
        const double l2 = std::sqrt(s * g2.cell_volume());
        CHECK(l2 < prev);
        prev = l2;
    }
}

TEST_CASE("decomposition check") {
    const TorusGrid g = make_grid(2, 16);
    SUBCASE("bounded part only is vacuous") {
        const DecompositionReport r = check_decomposition(zero_kernel(g));
        CHECK(r.vacuous);
        CHECK(r.pass);
    }
    SUBCASE("corrupted V is detected") {
        KernelSpec K = biot_savart(g, 8);
        K.V->comp[0][5] += 0.1;
        const DecompositionReport r = check_decomposition(K);
        CHECK(r.div_v_residual > 1e-3);
        CHECK_FALSE(r.pass);
    }
}

TEST_CASE("mv_constant") {
    const TorusGrid g = make_grid(1, 16);
    MatrixField V(g, 1);
    for (std::size_t i = 0; i < g.size(); ++i) V.at(0, 0)[i] = std::cos(2 * kPi * g.coord(i, 0)) + 0.5;
    double mean = 0.0;
    for (double v : V.at(0, 0)) mean += v * v / g.n;
    CHECK(mv_constant(V, {DensityField::uniform(g)}) == doctest::Approx(mean));

    MatrixField C(make_grid(2, 8), 2);
    for (int c = 0; c < 4; ++c) std::fill(C.comp[c].begin(), C.comp[c].end(), 0.5 * (c + 1));
    CHECK(mv_constant(C, {DensityField::uniform(C.grid)}) == doctest::Approx(0.25 * (1 + 4 + 9 + 16)));

    const DensityField m = testing::sine_density(g, 0.5);
    double direct = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < g.n; ++j) {
            const double v = V.at(0, 0)[static_cast<std::size_t>((i - j + g.n) % g.n)];
            s += v * v * m.values[j] / g.n;
        }
        direct = std::max(direct, s);
    }
    CHECK(mv_constant(V, {m}) == doctest::Approx(direct).epsilon(1e-12));
}

}
