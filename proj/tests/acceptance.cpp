// Acceptance suite: one line per criterion. Exit status is nonzero only for failures not listed in kDocumented.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pchaos/divergences.hpp"
#include "pchaos/hierarchy.hpp"
#include "pchaos/inequalities.hpp"
#include "pchaos/kernels.hpp"
#include "pchaos/liouville.hpp"
#include "pchaos/meanfield.hpp"
#include "pchaos/particles.hpp"

using namespace pchaos;

namespace {

constexpr double kPi = std::numbers::pi;

// Tolerances and targets.
constexpr double kSlopeLo = -2.6, kSlopeHi = -1.5;
constexpr double kStability = 0.10;
constexpr double kIdentityTol = 5e-2;
constexpr double kRefineRatio = 3.0;
constexpr double kBbgkyControl = 1e-5;
constexpr double kDomination = -1e-12;  // relative slack allowed below the bound
constexpr double kGfTol = 1e-6;
constexpr double kPositivity = 1e-10;
constexpr double kTransportSlack = 1e-8;
constexpr double kWorkedTol = 1e-3;
constexpr double kRateTol = 0.10;

// Criteria that cannot be met by the reference solver; see the decisions ledger.
const std::set<int> kDocumented = {1};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DensityField sine_density(const TorusGrid& g, double a) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + a * std::sin(2 * kPi * g.coord(i, 0));
    return DensityField::normalized(g, std::move(v));
}

KernelSpec cos_kernel(const TorusGrid& g) { return fourier_series_kernel(g, {FourierTerm{{1}, {cplx(1.0)}}}); }

struct Pair {
    JointTrajectory joint;
    FlowTrajectory mf;
};

Pair solve_pair(const KernelSpec& K, const DensityField& m0, int N, double T, double dt,
                const std::vector<double>& checks) {
    LiouvilleOptions lo;
    lo.T = T;
    lo.dt = dt;
    lo.output_times = stencil_times(checks, dt);
    MeanFieldOptions mo;
    mo.T = T;
    mo.dt = dt;
    mo.output_times = lo.output_times;
    return {solve_liouville(K, m0, N, lo), solve_mckean_vlasov(K, m0, mo)};
}

// ---- 1 ----
Outcome scaling_law() {
    auto h1 = [](int n, const std::vector<int>& Ns) {
        const TorusGrid g = make_grid(1, n);
        const KernelSpec K = cos_kernel(g);
        const DensityField m0 = sine_density(g, 0.5);
        MeanFieldOptions mo;
        mo.T = 0.5;
        mo.dt = 1e-4;
        const DensityField m = solve_mckean_vlasov(K, m0, mo).states.back();
        std::vector<double> out;
        for (int N : Ns) {
            LiouvilleOptions lo;
            lo.T = 0.5;
            lo.dt = 1e-4;
            out.push_back(relative_entropy(marginalize(solve_liouville(K, m0, N, lo).joints.back(), 1, 1), m));
        }
        return out;
    };
    auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
        double mx = 0, my = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]) / x.size(), my += std::log(y[i]) / y.size();
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
            sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        }
        return sxy / sxx;
    };
    const std::vector<double> H48 = h1(48, {2, 3, 4});
    const std::vector<double> H64 = h1(64, {2, 3});
    const double s = slope({2, 3, 4}, H48);
    const double s_nm1 = slope({1, 2, 3}, H48);
    const double s48 = slope({2, 3}, {H48[0], H48[1]}), s64 = slope({2, 3}, H64);
    const bool in_range = s >= kSlopeLo && s <= kSlopeHi;
    const bool stable = std::abs(s64 - s48) <= kStability * std::abs(s48);
    return {in_range && stable,
            fmt("H1(N=2,3,4)=%.3e,%.3e,%.3e slope=%.3f (target [%.1f,%.1f]) slope_vs_N-1=%.3f; "
                "n48->64 two-point slope %.3f->%.3f (%s)",
                H48[0], H48[1], H48[2], s, kSlopeLo, kSlopeHi, s_nm1, s48, s64, stable ? "stable" : "unstable")};
}

// ---- 2 ----
Outcome evolution_identity() {
    const TorusGrid g = make_grid(1, 16);
    const KernelSpec K = cos_kernel(g);
    const DensityField m0 = sine_density(g, 0.5);
    const Pair coarse = solve_pair(K, m0, 3, 0.1, 1e-3, {0.05});
    const Pair fine = solve_pair(K, m0, 3, 0.1, 5e-4, {0.05});
    bool ok = true;
    double worst = 0.0, min_ratio = 1e300;
    for (int k = 1; k <= 2; ++k)
        for (int p = 1; p <= 2; ++p) {
            const IdentityTerms a = evolution_identity_check(coarse.joint, coarse.mf, K, k, p, 0.05);
            const IdentityTerms b = evolution_identity_check(fine.joint, fine.mf, K, k, p, 0.05);
            const double ratio = a.abs_residual / b.abs_residual;
            worst = std::max({worst, a.residual, b.residual});
            min_ratio = std::min(min_ratio, ratio);
            ok = ok && a.residual <= kIdentityTol && b.residual <= kIdentityTol && ratio >= kRefineRatio;
        }
    return {ok, fmt("max relative residual %.2e (tol %.0e), min refinement ratio %.2f (need >= %.0f)", worst,
                    kIdentityTol, min_ratio, kRefineRatio)};
}

// ---- 3 ----
Outcome bbgky() {
    const TorusGrid g = make_grid(1, 16);
    const KernelSpec K = cos_kernel(g);
    const DensityField m0 = sine_density(g, 0.5);
    const Pair coarse = solve_pair(K, m0, 3, 0.1, 1e-3, {0.05});
    const Pair fine = solve_pair(K, m0, 3, 0.1, 5e-4, {0.05});
    double min_ratio = 1e300;
    for (int k = 1; k <= 2; ++k)
        min_ratio = std::min(min_ratio, bbgky_residual(coarse.joint, K, k, 0.05).residual /
                                            bbgky_residual(fine.joint, K, k, 0.05).residual);
    const TorusGrid g32 = make_grid(1, 32);
    const KernelSpec Z = zero_kernel(g32);
    const Pair ctrl = solve_pair(Z, sine_density(g32, 0.5), 3, 0.02, 1e-4, {0.01});
    double control = 0.0;
    for (int k = 1; k <= 2; ++k) control = std::max(control, bbgky_residual(ctrl.joint, Z, k, 0.01).residual);
    return {min_ratio >= kRefineRatio && control <= kBbgkyControl,
            fmt("min refinement ratio %.2f (need >= %.0f), K=0 control residual %.2e (tol %.0e)", min_ratio,
                kRefineRatio, control, kBbgkyControl)};
}

double min_relative_margin(const HierarchyTrajectory& tr, const std::function<std::vector<double>(double)>& bound,
                           int kmax) {
    double worst = 1e300;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        const std::vector<double> b = bound(tr.times[j]);
        for (int k = 0; k < kmax; ++k) worst = std::min(worst, (b[k] - tr.x[j][k]) / b[k]);
    }
    return worst;
}

// ---- 4 ----
Outcome hierarchy_global() {
    HierarchyParams p;
    p.N = 200;
    p.beta = 3;
    p.c1 = 1.0;
    p.c2 = 0.5;
    p.M1 = p.M2 = p.M3 = TimeFunction::constant(1.0);
    const EntBound b = ent_bound(p, BoundMode::global, 2.0);
    const HierarchyTrajectory tr = integrate_hierarchy(p, HierarchySystem::entropic, Closure::zero(), 2.0, 1e-3, {}, 10);
    const double margin = min_relative_margin(tr, [&](double t) { return b.at(t); }, p.N);
    return {b.certified && margin >= kDomination,
            fmt("certified=%d M=%.4g, min relative margin over all k, t in [0,2]: %.3f", b.certified, b.M, margin)};
}

// ---- 5 ----
Outcome hierarchy_decaying() {
    HierarchyParams p;
    p.N = 200;
    p.beta = 3;
    p.c1 = 1.0;
    p.c2 = 0.25;
    p.rho = 0.5;
    p.r = 0.15;
    p.M1 = p.M2 = p.M3 = TimeFunction::decaying(1.0, 1.0);
    const EntBound b = ent_bound(p, BoundMode::decaying, 20.0);
    const double rate = std::min(p.r, p.M1.eta);
    double mx = 0.0;
    for (const Closure& c : {Closure::zero(), Closure::proportional()}) {
        const HierarchyTrajectory tr = integrate_hierarchy(p, HierarchySystem::entropic, c, 20.0, 1e-3, {}, 100);
        for (std::size_t j = 0; j < tr.times.size(); ++j)
            for (int k = 1; k <= p.N; ++k)
                mx = std::max(mx, tr.x[j][k - 1] * std::exp(rate * tr.times[j]) * p.N * p.N / std::pow(k, p.beta));
    }
    return {b.certified && mx <= b.displayed,
            fmt("certified=%d, max x*e^{%.2ft}*N^2/k^beta = %.4g <= M' = %.4g (both closures)", b.certified, rate, mx,
                b.displayed)};
}

// ---- 6 ----
Outcome hierarchy_l2() {
    HierarchyParams p;
    p.N = 100;
    p.c1 = 1.0;
    p.c2 = 0.5;
    p.C0 = 1.0;
    p.M2 = TimeFunction::constant(2.0);
    p.M3 = TimeFunction::constant(1.0);
    const L2Bound b = l2_bound(p);
    const double horizon = 0.95 * b.T_star;
    const HierarchyTrajectory tr = integrate_hierarchy(p, HierarchySystem::l2, Closure::zero(), horizon, 2.5e-5, {}, 10);
    const double margin = min_relative_margin(tr, [&](double t) {
        std::vector<double> v(p.N);
        for (int k = 1; k <= p.N; ++k) v[k - 1] = b(t, k);
        return v;
    }, p.N);
    std::vector<double> rg;
    for (int i = 0; i < 100; ++i) rg.push_back(i / 100.0);
    const GeneratingFunctionReport gf = generating_function_check(tr, p, rg);
    const bool exact = b.T_star == 0.25;
    return {exact && margin >= kDomination && gf.residual <= kGfTol,
            fmt("T*=%.17g, min relative margin for t <= %.4f: %.3f, GF residual %.2e (tol %.0e), tightness %.3f",
                b.T_star, horizon, margin, gf.residual, kGfTol, gf.tightness)};
}

// ---- 7 ----
Outcome comparison() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 20);
    int passed = 0;
    double worst = 1e300;
    for (int draw = 0; draw < 100; ++draw) {
        const int n = size(rng);
        Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
        Eigen::MatrixXd C = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
        B.diagonal() = -3.0 * n * Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
        C.diagonal().setZero();
        const double w = 1 + 4 * u(rng);
        const Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng) < 0.3 ? 0.0 : u(rng); });
        const ComparisonResult r =
            comparison_check([&](double t) -> Eigen::MatrixXd { return B + std::sin(w * t) * std::sin(w * t) * C; }, x0, 5.0);
        passed += r.metzler && r.pass;
        worst = std::min(worst, r.min_ratio);
    }
    Eigen::MatrixXd A(2, 2);
    A << 0, -1, 0, 0;
    const ComparisonResult bad = comparison_check([&](double) { return A; }, Eigen::Vector2d(0.0, 1.0), 5.0);
    return {passed == 100 && worst >= -kPositivity && bad.hypothesis_violation && !bad.pass,
            fmt("%d/100 Metzler systems nonnegative (min x/|x| = %.2e), counterexample flagged=%d min ratio %.3f",
                passed, worst, bad.hypothesis_violation, bad.min_ratio)};
}

// ---- 8 ----
Outcome concentration() {
    Rng rng(8);
    const int n = 64;
    const TorusGrid g = make_grid(1, n);
    const double amax = std::sqrt(0.5 / c_jw());
    std::uniform_real_distribution<double> pick(0.05 * amax, amax);
    int passed = 0, total = 0;
    double worst = 0.0;
    for (int k : {2, 3})
        for (int draw = 0; draw < 20; ++draw) {
            const DensityField m = random_density(g, rng);
            const PairFunction phi = random_centered_phi(n, m, pick(rng), rng);
            const ConcentrationReport r = exp_moment_check(phi, m, k, ScaleMode::per_k);
            ++total;
            passed += r.hypotheses_ok && r.gamma <= 0.5 && r.method == EvalMethod::quadrature && r.pass;
            worst = std::max(worst, r.value / r.bound);
        }
    const DensityField m = random_density(g, rng);
    const PairFunction phi = random_centered_phi(n, m, pick(rng), rng);
    McOptions mc;
    mc.seed = 64;
    const ConcentrationReport r = exp_moment_check(phi, m, 64, ScaleMode::per_k, 0, mc);
    const bool mc_ok = r.method == EvalMethod::monte_carlo && r.hypotheses_ok && r.value + r.ci <= r.bound;
    return {passed == total && mc_ok,
            fmt("quadrature %d/%d (max value/bound %.2e); k=64 MC value %.3e +- %.1e <= %.3e", passed, total, worst,
                r.value, r.ci, r.bound)};
}

// ---- 9 ----
Outcome transport() {
    Rng rng(9);
    int passed = 0, total = 0;
    for (int draw = 0; draw < 100; ++draw) {
        const TorusGrid g = make_grid(1 + draw % 2, 32);
        const MatrixField V = random_matrix_field(g, rng);
        const DensityField m1 = random_density(g, rng), m2 = random_density(g, rng);
        for (TransportMode mode : {TransportMode::entropy, TransportMode::l2}) {
            const TransportGap t = transport_gap(V, m1, m2, mode);
            ++total;
            passed += t.lhs <= t.rhs + kTransportSlack;
        }
    }
    const TorusGrid g = make_grid(1, 64);
    MatrixField V(g, 1);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        V.at(0, 0)[i] = std::sin(2 * kPi * g.coord(i, 0));
        v[i] = 1 + 0.5 * std::cos(2 * kPi * g.coord(i, 0));
    }
    const TransportGap w = transport_gap(V, DensityField::normalized(g, v), DensityField::uniform(g), TransportMode::entropy);
    const bool worked = std::abs(w.lhs - kPi / 2) <= kWorkedTol && std::abs(w.rhs - 2.2999) <= kWorkedTol;
    return {passed == total && worked,
            fmt("%d/%d random draws hold; worked example lhs %.4f (pi/2) rhs %.4f (2.2999)", passed, total, w.lhs, w.rhs)};
}

// ---- 10 ----
Outcome regularity_decay() {
    auto fitted = [](const KernelSpec& K, const DensityField& m0) {
        MeanFieldOptions o;
        o.T = 0.2;
        o.dt = 1e-4;
        for (int j = 1; j < 50; ++j) o.output_times.push_back(o.T * j / 50);
        return decay_fit(solve_mckean_vlasov(K, m0, o)).eta_hat;
    };
    const TorusGrid g1 = make_grid(1, 64), g2 = make_grid(2, 32);
    const double heat = fitted(zero_kernel(g1), sine_density(g1, 0.3));
    const double bs = fitted(biot_savart(g2, 16), sine_density(g2, 0.3));
    const double target = 4 * kPi * kPi;
    const bool ok = std::abs(heat - target) <= kRateTol * target && std::abs(bs - target) <= kRateTol * target;
    return {ok, fmt("eta_hat heat %.3f, Biot-Savart %.3f vs 4pi^2 = %.3f (tol %.0f%%)", heat, bs, target, 100 * kRateTol)};
}

// ---- 11 ----
Outcome inner_lemmas() {
    Rng rng(11);
    const int n = 16;
    int passed = 0, total = 0;
    double worst = 1e300;
    for (int draw = 0; draw < 50; ++draw) {
        const DensityField m = random_density(make_grid(1, n), rng);
        const Field h = random_exchangeable_h(n, 3, m, rng);
        const PairFunction U = random_pair_field(n, rng);
        const PairFunction phi = random_centered_phi(n, m, std::sqrt(0.5 / c_jw()), rng);
        for (int p = 1; p <= 2; ++p) {
            std::vector<LemmaReport> reports{inner_lemma_check(InnerLemma::cs_crude, p, h, m, U, 1.0),
                                             inner_lemma_check(InnerLemma::ibp, p, h, m, phi, 1.0, 50)};
            // the refined Cauchy–Schwarz bound exists for p = 1 only
            if (p == 1) reports.push_back(inner_lemma_check(InnerLemma::cs_fine, p, h, m, U, 1.0));
            for (const LemmaReport& r : reports) {
                ++total;
                passed += r.pass && r.rhs - r.lhs >= 0.0;
                worst = std::min(worst, r.rhs - r.lhs);
            }
        }
    }
    return {passed == total, fmt("%d/%d lemma instances hold, min margin %.3e", passed, total, worst)};
}

// ---- 12 ----
Outcome particles_vs_meanfield() {
    const TorusGrid g = make_grid(2, 32);
    const KernelSpec K = mollify(biot_savart(g, 16), 0.05);
    const DensityField m0 = sine_density(g, 0.5);
    const double T = 0.05;
    MeanFieldOptions mo;
    mo.T = T;
    mo.dt = 1e-4;
    const DensityField pde = solve_mckean_vlasov(K, m0, mo).states.back();
    SimConfig sc;
    sc.kernel = K;
    sc.m0 = m0;
    sc.T = T;
    sc.dt = 1e-3;
    sc.seed = 12;
    std::vector<WeakError> errs;
    std::string detail;
    for (int N : {64, 256, 1024}) {
        const int R = static_cast<int>(std::lround(1e5 / N));
        errs.push_back(weak_error(simulate(sc, N, R).snapshots.back(), pde, 16));
        detail += fmt("N=%d R=%d L1=%.4f floor=%.4f; ", N, R, errs.back().l1, errs.back().noise_floor);
    }
    bool ok = true;
    for (std::size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i].l1 <= errs[i - 1].l1 + errs[i].noise_floor;
    return {ok, detail + "rule: L1(N') <= L1(N) + floor"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
        {"scaling law", scaling_law},
        {"evolution identity", evolution_identity},
        {"BBGKY consistency", bbgky},
        {"entropic hierarchy, global", hierarchy_global},
        {"entropic hierarchy, decaying", hierarchy_decaying},
        {"L2 hierarchy", hierarchy_l2},
        {"comparison principle", comparison},
        {"concentration", concentration},
        {"transport", transport},
        {"mean-field decay rate", regularity_decay},
        {"inner-interaction lemmas", inner_lemmas},
        {"particles vs mean field", particles_vs_meanfield},
    };
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool documented = !o.pass && kDocumented.count(id);
        if (!o.pass && !documented) ++unexpected;
        std::printf("%-4s %-30s %-17s %s [%.1fs]\n", fmt("C%d", id).c_str(), criteria[i].first,
                    o.pass ? "PASS" : documented ? "FAIL (documented)" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d undocumented failure(s)\n", unexpected);
    return unexpected == 0 ? 0 : 1;
}
