#include "pchaos/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace pchaos {

namespace {

void require_same(const TorusGrid& a, const TorusGrid& b) {
    if (!(a == b)) throw GridError("divergence arguments live on different grids");
}

std::vector<double> floored(const DensityField& m) {
    const double fl = m.floor_value();
    std::vector<double> v(m.values);
    for (double& x : v) x = std::max(x, fl);
    return v;
}

// Node index after swapping particle blocks p and p+1 (each block = d axes).
std::size_t swap_index(std::size_t idx, int n, int D, int d, int p) {
    std::vector<int> digits(static_cast<std::size_t>(D));
    for (int a = D - 1; a >= 0; --a) {
        digits[a] = static_cast<int>(idx % n);
        idx /= n;
    }
    for (int c = 0; c < d; ++c) std::swap(digits[p * d + c], digits[(p + 1) * d + c]);
    std::size_t out = 0;
    for (int a = 0; a < D; ++a) out = out * n + digits[a];
    return out;
}

}  // namespace

double entropy_density(double u) {
    if (u <= -1.0) return 1.0;
    if (std::abs(u) < 1e-3) {
        const double u2 = u * u;
        return u2 * (0.5 - u / 6.0 + u2 / 12.0 - u2 * u / 20.0 + u2 * u2 / 30.0);
    }
    return (1.0 + u) * std::log1p(u) - u;
}

double relative_entropy(const DensityField& m1, const DensityField& m2) {
    require_same(m1.grid, m2.grid);
    const std::vector<double> q = floored(m2);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * entropy_density(m1.values[i] / q[i] - 1.0);
    return s * m1.grid.cell_volume();
}

double chi_square(const DensityField& m1, const DensityField& m2) {
    require_same(m1.grid, m2.grid);
    const std::vector<double> q = floored(m2);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double r = m1.values[i] / q[i] - 1.0;
        s += r * r * q[i];
    }
    return s * m1.grid.cell_volume();
}

double fisher_information(const DensityField& m1, const DensityField& m2) {
    require_same(m1.grid, m2.grid);
    const std::vector<double> p = floored(m1), q = floored(m2);
    Field lr(m1.grid);
    for (std::size_t i = 0; i < q.size(); ++i) lr.values[i] = std::log(p[i] / q[i]);
    double s = 0.0;
    for (int a = 0; a < m1.grid.dim; ++a) {
        const Field g = derivative(lr, a);
        for (std::size_t i = 0; i < q.size(); ++i) s += g.values[i] * g.values[i] * m1.values[i];
    }
    return s * m1.grid.cell_volume();
}

double dirichlet_energy(const DensityField& m1, const DensityField& m2) {
    require_same(m1.grid, m2.grid);
    const std::vector<double> q = floored(m2);
    Field r(m1.grid);
    for (std::size_t i = 0; i < q.size(); ++i) r.values[i] = m1.values[i] / q[i];
    double s = 0.0;
    for (int a = 0; a < m1.grid.dim; ++a) {
        const Field g = derivative(r, a);
        for (std::size_t i = 0; i < q.size(); ++i) s += g.values[i] * g.values[i] * m2.values[i];
    }
    return s * m1.grid.cell_volume();
}

double exchangeability_residual(const Field& joint, int d) {
    const int D = joint.grid.dim;
    if (d < 1 || D % d != 0) throw GridError("joint dimension not divisible by d");
    const int k = D / d;
    double amax = 0.0;
    for (double x : joint.values) amax = std::max(amax, std::abs(x));
    if (amax == 0.0) return 0.0;
    double worst = 0.0;
    for (int p = 0; p + 1 < k; ++p) {
        for (std::size_t i = 0; i < joint.values.size(); ++i) {
            const std::size_t j = swap_index(i, joint.grid.n, D, d, p);
            if (j <= i) continue;
            worst = std::max(worst, std::abs(joint.values[i] - joint.values[j]));
        }
    }
    return worst / amax;
}

DivergenceLadder divergence_ladder(const DensityField& joint, const DensityField& m, double t, double exch_tol) {
    const int d = m.grid.dim;
    if (joint.grid.n != m.grid.n || joint.grid.dim % d != 0) throw GridError("ladder grids incompatible");
    const double ex = exchangeability_residual(joint, d);
    if (ex > exch_tol) throw GridError("joint density is not exchangeable (residual " + std::to_string(ex) + ")");
    const int kmax = joint.grid.dim / d;
    DivergenceLadder ladder;
    ladder.t = t;
    for (int k = 1; k <= kmax; ++k) {
        const DensityField mk = marginalize(joint, d, k);
        const DensityField ref = tensorize(m, k);
        LadderLevel lv;
        lv.k = k;
        lv.H = relative_entropy(mk, ref);
        lv.I = fisher_information(mk, ref);
        lv.D = chi_square(mk, ref);
        lv.E = dirichlet_energy(mk, ref);
        ladder.levels.push_back(lv);
    }
    return ladder;
}

ToweringReport towering_check(const DensityField& joint, const DensityField& m) {
    const int d = m.grid.dim;
    const int n = m.grid.n;
    if (joint.grid.n != n || joint.grid.dim % d != 0 || joint.grid.dim / d < 2)
        throw GridError("towering needs a joint on T^{(k+1)d} with k >= 1");
    const int k = joint.grid.dim / d - 1;
    ToweringReport rep;
    rep.k = k;

    const DensityField mk = marginalize(joint, d, k);
    const DensityField refk = tensorize(m, k);
    const DensityField refk1 = tensorize(m, k + 1);
    const std::size_t inner = m.values.size();
    const std::size_t outer = mk.values.size();
    const double hk = mk.grid.cell_volume();
    const double h1 = m.grid.cell_volume();
    const double mk_floor = mk.floor_value();
    const std::vector<double> mf = floored(m);

    // R(x, x*) = cond(x*|x)/m(x*), zero on excluded rows.
    Field R(joint.grid);
    std::vector<char> keep(outer, 1);
    for (std::size_t o = 0; o < outer; ++o) {
        if (mk.values[o] < mk_floor) {
            keep[o] = 0;
            rep.excluded_mass += mk.values[o] * hk;
            continue;
        }
        for (std::size_t i = 0; i < inner; ++i)
            R.values[o * inner + i] = joint.values[o * inner + i] / (mk.values[o] * mf[i]);
    }
    Field logR(joint.grid);
    for (std::size_t o = 0; o < outer; ++o) {
        if (!keep[o]) continue;
        for (std::size_t i = 0; i < inner; ++i) logR.values[o * inner + i] = std::log(std::max(R.values[o * inner + i], kDensityFloor));
    }
    std::vector<double> gradR2(joint.values.size(), 0.0), gradL2(joint.values.size(), 0.0);
    for (int c = 0; c < d; ++c) {
        const int axis = k * d + c;
        const Field gR = derivative(R, axis);
        const Field gL = derivative(logR, axis);
        for (std::size_t i = 0; i < gR.values.size(); ++i) {
            gradR2[i] += gR.values[i] * gR.values[i];
            gradL2[i] += gL.values[i] * gL.values[i];
        }
    }

    double lH = 0.0, lI = 0.0, lD = 0.0, lE = 0.0;
    for (std::size_t o = 0; o < outer; ++o) {
        if (!keep[o]) continue;
        const double w2 = mk.values[o] * mk.values[o] / refk.values[o];
        double sH = 0.0, sI = 0.0, sD = 0.0, sE = 0.0;
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t at = o * inner + i;
            const double u = R.values[at] - 1.0;
            sH += mf[i] * entropy_density(u);
            sI += gradL2[at] * joint.values[at] / mk.values[o];
            sD += u * u * mf[i];
            sE += gradR2[at] * mf[i];
        }
        lH += mk.values[o] * sH;
        lI += mk.values[o] * sI;
        lD += w2 * sD;
        lE += w2 * sE;
    }
    const double vol = hk * h1;
    rep.H.lhs = lH * vol;
    rep.I.lhs = lI * vol;
    rep.D.lhs = lD * vol;
    rep.E.lhs = lE * vol;

    rep.H.rhs = relative_entropy(joint, refk1) - relative_entropy(mk, refk);
    rep.I.rhs = fisher_information(joint, refk1) / (k + 1);
    rep.D.rhs = chi_square(joint, refk1) - chi_square(mk, refk);
    rep.E.rhs = dirichlet_energy(joint, refk1) / (k + 1);

    for (ToweringIdentity* id : {&rep.H, &rep.I, &rep.D, &rep.E}) {
        id->residual = std::abs(id->lhs - id->rhs);
        rep.scale = std::max({rep.scale, std::abs(id->lhs), std::abs(id->rhs)});
        rep.max_residual = std::max(rep.max_residual, id->residual);
    }
    rep.pass = rep.max_residual <= 1e-6 * rep.scale + 1e-14 && rep.excluded_mass < 1e-8;
    return rep;
}

double entropy_second_difference(const DivergenceLadder& ladder) {
    if (ladder.levels.size() < 3) throw GridError("chain-rule check needs three ladder levels");
    return ladder.levels[2].H - 2.0 * ladder.levels[1].H + ladder.levels[0].H;
}

void write_ladder_csv(std::ostream& os, const std::vector<DivergenceLadder>& ladders, bool header) {
    if (header) os << "t,k,H,I,D,E\n";
    os << std::setprecision(12);
    for (const auto& l : ladders)
        for (const auto& v : l.levels) os << l.t << ',' << v.k << ',' << v.H << ',' << v.I << ',' << v.D << ',' << v.E << '\n';
}

}  // namespace pchaos
