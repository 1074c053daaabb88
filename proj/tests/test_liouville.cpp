#include "doctest.h"
#include "pchaos/divergences.hpp"
#include "pchaos/liouville.hpp"
#include "support.hpp"

using namespace pchaos;
using testing::kPi;

namespace {

KernelSpec cos_kernel(const TorusGrid& g) { return fourier_series_kernel(g, {FourierTerm{{1}, {cplx(1.0)}}}); }

double h1_at(int n, double T) {
    const TorusGrid g = make_grid(1, n);
    const DensityField m0 = testing::sine_density(g, 0.5);
    LiouvilleOptions lo;
    lo.T = T;
    lo.dt = 1e-4;
    const JointTrajectory jt = solve_liouville(cos_kernel(g), m0, 2, lo);
    MeanFieldOptions mo;
    mo.T = T;
    mo.dt = 1e-4;
    const FlowTrajectory mf = solve_mckean_vlasov(cos_kernel(g), m0, mo);
    return relative_entropy(marginalize(jt.joints.back(), 1, 1), mf.states.back());
}

struct Pair {
    JointTrajectory joint;
    FlowTrajectory mf;
};

Pair solve(const KernelSpec& K, const DensityField& m0, int N, double T, double dt, const std::vector<double>& checks,
           LiouvilleScheme scheme = LiouvilleScheme::automatic) {
    LiouvilleOptions lo;
    lo.T = T;
    lo.dt = dt;
    lo.scheme = scheme;
    lo.output_times = stencil_times(checks, dt);
    MeanFieldOptions mo;
    mo.T = T;
    mo.dt = dt;
    mo.output_times = lo.output_times;
    return {solve_liouville(K, m0, N, lo), solve_mckean_vlasov(K, m0, mo)};
}

}  // namespace

TEST_SUITE("liouville") {

TEST_CASE("zero kernel keeps the joint tensorized") {
    const TorusGrid g = make_grid(1, 16);
    const DensityField m0 = testing::sine_density(g, 0.5);
    LiouvilleOptions lo;
    lo.T = 0.02;
    lo.dt = 1e-3;
    const JointTrajectory jt = solve_liouville(zero_kernel(g), m0, 3, lo);
    const double amp = 0.5 * std::exp(-4 * kPi * kPi * 0.02);
    const DensityField heat = testing::sine_density(g, amp);
    CHECK(testing::max_abs_diff(jt.joints.back().values, tensorize(heat, 3).values) < 1e-6);
    for (double e : jt.exchangeability) CHECK(e < 1e-12);
    CHECK(jt.coupling == doctest::Approx(0.5));
}

TEST_CASE("uniform joint is stationary") {
    const TorusGrid g = make_grid(1, 8);
    LiouvilleOptions lo;
    lo.T = 0.01;
    lo.dt = 1e-3;
    lo.scheme = LiouvilleScheme::collocation;
    const JointTrajectory jt = solve_liouville(cos_kernel(g), DensityField::uniform(g), 3, lo);
    for (double v : jt.joints.back().values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pair interaction breaks chaos at order one over N squared") {
    const double coarse = h1_at(32, 0.1), fine = h1_at(48, 0.1);
    CHECK(fine > 0.0);
    CHECK(fine < 1e-2);
    CHECK(std::abs(coarse - fine) < 0.05 * fine);
}

TEST_CASE("Galerkin and collocation agree") {
    const TorusGrid g = make_grid(1, 16);
    const DensityField m0 = testing::sine_density(g, 0.5);
    LiouvilleOptions lo;
    lo.T = 0.02;
    lo.dt = 1e-4;
    lo.scheme = LiouvilleScheme::galerkin;
    const JointTrajectory a = solve_liouville(cos_kernel(g), m0, 2, lo);
    lo.scheme = LiouvilleScheme::collocation;
    const JointTrajectory b = solve_liouville(cos_kernel(g), m0, 2, lo);
    CHECK(testing::max_abs_diff(a.joints.back().values, b.joints.back().values) < 1e-6);
}

TEST_CASE("BBGKY residual") {
    const TorusGrid g = make_grid(1, 16);
    const DensityField m0 = testing::sine_density(g, 0.5);
    SUBCASE("no interaction") {
        const TorusGrid g32 = make_grid(1, 32);
        const KernelSpec K = zero_kernel(g32);
        const Pair p = solve(K, testing::sine_density(g32, 0.5), 2, 0.01, 1e-4, {0.005});
        CHECK(bbgky_residual(p.joint, K, 1, 0.005).residual < 1e-5);
    }
    SUBCASE("refinement and the corrupted hierarchy") {
        const KernelSpec K = cos_kernel(g);
        const Pair coarse = solve(K, m0, 3, 0.05, 2e-3, {0.04});
        const Pair fine = solve(K, m0, 3, 0.05, 1e-3, {0.04});
        const BbgkyResidual rc = bbgky_residual(coarse.joint, K, 1, 0.04);
        const BbgkyResidual rf = bbgky_residual(fine.joint, K, 1, 0.04);
        CHECK(rf.relative() < 1e-3);
        CHECK(rc.residual >= 3.0 * rf.residual);

        // k = 1 of N = 2 with the pair marginal replaced by the tensor square of the honest one-marginal.
        const Pair two = solve(K, m0, 2, 0.05, 1e-3, {0.04});
        JointTrajectory bad = two.joint;
        for (auto& j : bad.joints) j = tensorize(marginalize(j, 1, 1), 2);
        const double honest = bbgky_residual(two.joint, K, 1, 0.04).residual;
        CHECK(bbgky_residual(bad, K, 1, 0.04).residual > honest);
    }
}

TEST_CASE("evolution identity") {
    const TorusGrid g = make_grid(1, 16);
    const DensityField m0 = testing::sine_density(g, 0.5);
    SUBCASE("no interaction") {
        const KernelSpec K = zero_kernel(g);
        const Pair p = solve(K, m0, 3, 0.05, 1e-3, {0.04});
        for (int pp = 1; pp <= 2; ++pp) {
            const IdentityTerms e = evolution_identity_check(p.joint, p.mf, K, 2, pp, 0.04);
            CHECK(std::abs(e.A1) < 1e-10);
            CHECK(std::abs(e.A2) < 1e-10);
            CHECK(std::abs(e.B1) < 1e-10);
            CHECK(std::abs(e.B2) < 1e-10);
            CHECK(std::abs(e.lhs + e.E) < 1e-8);
        }
    }
    SUBCASE("bounded kernel under refinement") {
        const KernelSpec K = cos_kernel(g);
        const Pair coarse = solve(K, m0, 3, 0.05, 2e-3, {0.04});
        const Pair fine = solve(K, m0, 3, 0.05, 1e-3, {0.04});
        for (int k = 1; k <= 2; ++k)
            for (int pp = 1; pp <= 2; ++pp) {
                const IdentityTerms a = evolution_identity_check(coarse.joint, coarse.mf, K, k, pp, 0.04);
                const IdentityTerms b = evolution_identity_check(fine.joint, fine.mf, K, k, pp, 0.04);
                CAPTURE(k);
                CAPTURE(pp);
                CHECK(b.residual < 5e-2);
                CHECK(a.abs_residual >= 3.0 * b.abs_residual);
            }
    }
}

TEST_CASE("divergence_p") {
    const TorusGrid g = make_grid(1, 2);
    const DensityField m1 = DensityField::normalized(g, {1.6, 0.4});
    const DensityField u = DensityField::uniform(g);
    CHECK(divergence_p(m1, u, 1) == doctest::Approx(relative_entropy(m1, u)));
    CHECK(divergence_p(m1, u, 2) == doctest::Approx(0.36));
    CHECK_THROWS(divergence_p(m1, u, 3));
}

}
