#include "doctest.h"
#include "pchaos/divergences.hpp"
#include "pchaos/inequalities.hpp"
#include "support.hpp"

using namespace pchaos;
using testing::kPi;

namespace {

// Exchangeable joint h·m⊗m on T² for random smooth symmetric h.
DensityField exchangeable_joint(int n, Rng& rng, DensityField& m) {
    m = random_density(make_grid(1, n), rng);
    const Field h = random_exchangeable_h(n, 2, m, rng, 0.8);
    std::vector<double> v(h.values.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v[i * n + j] = h.values[i * n + j] * m.values[i] * m.values[j];
    return DensityField::normalized(h.grid, v);
}

}  // namespace

TEST_SUITE("divergences") {

TEST_CASE("two-cell pair by direct summation") {
    const TorusGrid g = make_grid(1, 2);
    const DensityField m1 = DensityField::normalized(g, {1.6, 0.4});
    const DensityField m2 = DensityField::uniform(g);
    const double H = 0.5 * (1.6 * std::log(1.6) + 0.4 * std::log(0.4));
    CHECK(relative_entropy(m1, m2) == doctest::Approx(H).epsilon(1e-12));
    CHECK(H == doctest::Approx(0.19275).epsilon(1e-4));
    CHECK(chi_square(m1, m2) == doctest::Approx(0.36));
    CHECK(chi_square(m2, m1) == doctest::Approx(0.5625));
    CHECK(relative_entropy(m1, m2) <= std::log(1.0 + chi_square(m1, m2)));
    CHECK(relative_entropy(m1, m1) == 0.0);
    CHECK(chi_square(m1, m1) == 0.0);
}

TEST_CASE("stable entropy density") {
    CHECK(entropy_density(0.0) == 0.0);
    CHECK(entropy_density(1e-9) == doctest::Approx(0.5e-18).epsilon(1e-6));
    CHECK(entropy_density(-1.0) == doctest::Approx(1.0));
    CHECK(entropy_density(1.0) == doctest::Approx(2 * std::log(2.0) - 1));
}

TEST_CASE("Fisher information and Dirichlet energy closed forms") {
    const TorusGrid g = make_grid(1, 64);
    const DensityField m1 = testing::density(g, [](const double* x) { return 1.0 + 0.5 * std::cos(2 * kPi * x[0]); });
    const DensityField u = DensityField::uniform(g);
    // π²·(1 − √(1 − a²))/a² with a = ½
    const double I = kPi * kPi * (1 - std::sqrt(0.75)) / 0.25;
    CHECK(I == doctest::Approx(5.2891).epsilon(1e-4));
    CHECK(fisher_information(m1, u) == doctest::Approx(I).epsilon(1e-9));
    CHECK(dirichlet_energy(m1, u) == doctest::Approx(kPi * kPi / 2).epsilon(1e-9));
    CHECK(fisher_information(m1, m1) == doctest::Approx(0.0).scale(1.0));
    CHECK(dirichlet_energy(m1, m1) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("divergence ladder") {
    const TorusGrid g = make_grid(1, 8);
    const DensityField m = testing::sine_density(g, 0.4);
    SUBCASE("product joint") {
        const DivergenceLadder l = divergence_ladder(tensorize(m, 3), m);
        REQUIRE(l.levels.size() == 3);
        for (const auto& v : l.levels) {
            CHECK(std::abs(v.H) < 1e-14);
            CHECK(std::abs(v.I) < 1e-12);
            CHECK(std::abs(v.D) < 1e-14);
            CHECK(std::abs(v.E) < 1e-12);
        }
    }
    SUBCASE("explicit 2x2-cell joint by hand") {
        const TorusGrid g2 = make_grid(1, 2);
        const DensityField mu = DensityField::uniform(g2);
        const DensityField joint = DensityField::normalized(make_grid(2, 2), {1.5, 0.5, 0.5, 1.5});
        const DivergenceLadder l = divergence_ladder(joint, mu);
        CHECK(l.levels[0].H == doctest::Approx(0.0).scale(1.0));
        CHECK(l.levels[1].H == doctest::Approx(0.5 * (1.5 * std::log(1.5) + 0.5 * std::log(0.5))));
        CHECK(l.levels[1].D == doctest::Approx(0.25));
    }
    SUBCASE("non-exchangeable joint is rejected") {
        const DensityField joint = DensityField::normalized(make_grid(2, 2), {1.0, 2.0, 0.5, 0.5});
        CHECK_THROWS(divergence_ladder(joint, DensityField::uniform(make_grid(1, 2))));
    }
}

TEST_CASE("ladder monotonicity on random exchangeable perturbations") {
    Rng rng(11);
    for (int draw = 0; draw < 100; ++draw) {
        DensityField m;
        const DensityField joint = exchangeable_joint(8, rng, m);
        const DivergenceLadder l = divergence_ladder(joint, m);
        CHECK(l.levels[0].H <= l.levels[1].H + 1e-15);
        CHECK(l.levels[0].D <= l.levels[1].D + 1e-15);
    }
}

TEST_CASE("towering identities") {
    SUBCASE("product joint") {
        const DensityField m = testing::sine_density(make_grid(1, 8), 0.3);
        const ToweringReport r = towering_check(tensorize(m, 2), m);
        CHECK(r.pass);
        CHECK(std::abs(r.H.lhs) < 1e-14);
        CHECK(std::abs(r.H.rhs) < 1e-14);
    }
    SUBCASE("random exchangeable joints") {
        Rng rng(5);
        for (int draw = 0; draw < 10; ++draw) {
            DensityField m;
            const DensityField joint = exchangeable_joint(16, rng, m);
            const ToweringReport r = towering_check(joint, m);
            CHECK(r.max_residual < 1e-8);
            CHECK(r.pass);
        }
    }
}

TEST_CASE("entropy second difference is advisory only") {
    Rng rng(3);
    const int n = 6;
    const DensityField m = random_density(make_grid(1, n), rng);
    const Field h = random_exchangeable_h(n, 3, m, rng, 0.5);
    std::vector<double> v(h.values.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = h.values[i] * m.values[i / (n * n)] * m.values[(i / n) % n] * m.values[i % n];
    const DivergenceLadder l = divergence_ladder(DensityField::normalized(h.grid, v), m);
    const double d2 = entropy_second_difference(l);
    CHECK(std::isfinite(d2));
    CHECK_THROWS(entropy_second_difference(DivergenceLadder{}));
}

}
