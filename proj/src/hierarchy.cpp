#include "pchaos/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pchaos {

namespace {

constexpr double kSearchCap = 1e12;

double gk(const std::function<double(double)>& f, double a, double b) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-11);
}

// ∫_a^b f, split at t_* so the indicator jump sits on a panel edge.
double gk_split(const std::function<double(double)>& f, double a, double b, double t_star) {
    if (t_star > a && t_star < b) return gk(f, a, t_star) + gk(f, t_star, b);
    return gk(f, a, b);
}

double ipow_d(double x, int e) { return std::pow(x, e); }

// Hierarchy with M₁ removed: x' = x e^{−∫M₁}, M₃' = M₃ e^{−∫M₁}.
struct Reduced {
    const HierarchyParams& p;
    double M3(double t) const { return p.M3(t) * std::exp(-p.M1.integral(t)); }
    double rho_int(double a, double b) const {
        if (p.rho == 0.0) return 0.0;
        const double lo = std::max(a, p.t_star), hi = std::max(b, p.t_star);
        return p.rho * (hi - lo);
    }
    double apriori(double t) const {
        const double head = p.C0 * std::exp(-rho_int(0.0, t));
        const double tail = gk_split([&](double s) { return std::exp(-rho_int(s, t)) * M3(s); }, 0.0, t, p.t_star);
        return head + tail;
    }
};

std::vector<double> make_lattice(double horizon) {
    std::vector<double> t{0.0};
    const int count = std::max(1, static_cast<int>(std::ceil(64.0 * horizon)));
    const double lo = std::min(1e-4, horizon) * horizon;
    for (int j = 0; j < count; ++j) {
        const double u = count == 1 ? 1.0 : static_cast<double>(j) / (count - 1);
        t.push_back(lo * std::pow(horizon / lo, u));
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

struct Sums {
    std::vector<double> S;   // S(k) = Σ_{i=k}^N i^β/(i−k+i₀)^α
    std::vector<double> Z0;  // Σ_{i=k}^N C₀i²/N²/(i−k+i₀)^α
    double zeta = 0.0;       // Σ_{j=0}^{N−k̄} (j+i₀)^{−α}
};

Sums make_sums(const HierarchyParams& p, double i0v, double alpha) {
    const int N = p.N;
    Sums s;
    s.S.assign(static_cast<std::size_t>(N) + 1, 0.0);
    s.Z0.assign(static_cast<std::size_t>(N) + 1, 0.0);
    for (int k = 1; k <= N; ++k) {
        double a = 0.0, b = 0.0;
        for (int i = k; i <= N; ++i) {
            const double w = std::pow(i - k + i0v, -alpha);
            a += ipow_d(i, p.beta) * w;
            b += p.C0 * static_cast<double>(i) * i / (static_cast<double>(N) * N) * w;
        }
        s.S[k] = a;
        s.Z0[k] = b;
    }
    const int kbar = N / 2 + 1;
    for (int j = 0; j <= N - kbar; ++j) s.zeta += std::pow(j + i0v, -alpha);
    return s;
}

}  // namespace

double TimeFunction::operator()(double t) const {
    switch (kind) {
        case Kind::constant: return L;
        case Kind::growing: return L * std::exp(L * t);
        case Kind::decaying: return L * std::exp(-eta * t);
    }
    return 0.0;
}

double TimeFunction::integral(double t) const {
    switch (kind) {
        case Kind::constant: return L * t;
        case Kind::growing: return std::expm1(L * t);
        case Kind::decaying: return eta > 0.0 ? L * (-std::expm1(-eta * t)) / eta : L * t;
    }
    return 0.0;
}

void validate(const HierarchyParams& p) {
    if (p.N < 2) throw HierarchyError("N must be >= 2");
    if (p.beta < 2) throw HierarchyError("beta must be an integer >= 2");
    if (!(p.c1 > p.c2) || p.c2 < 0.0) throw HierarchyError("need c1 > c2 >= 0");
    if (p.C0 < 0.0) throw HierarchyError("need C0 >= 0");
    if (p.rho < 0.0 || p.r < 0.0 || p.t_star < 0.0) throw HierarchyError("rho, r, t_star must be >= 0");
    if (p.r > 0.0 && !(p.rho > 0.0 && p.r < p.rho * (p.c1 - p.c2)))
        throw HierarchyError("need 0 < r < rho (c1 - c2)");
    if (p.alpha > 0.0 && p.alpha < p.beta + 3.0) throw HierarchyError("alpha must be >= beta + 3");
    for (const TimeFunction* f : {&p.M1, &p.M2, &p.M3})
        if (f->L < 0.0 || f->eta < 0.0) throw HierarchyError("coefficient functions must be nonnegative");
}

double i0(const HierarchyParams& p) {
    const double ratio = p.r == 0.0 ? 0.0 : p.r / p.rho;
    const double thr = (p.c2 + ratio) / p.c1;
    if (thr >= 1.0) throw HierarchyError("threshold (c2 + r/rho)/c1 >= 1: no valid i0 (r too large)");
    const double theta = std::pow(thr, 1.0 / p.alpha_value());
    return std::max(1.0, theta / (1.0 - theta));
}

double z_transform(const std::vector<double>& x, int k, double i0v, double alpha) {
    const int N = static_cast<int>(x.size());
    if (k < 1 || k > N) throw HierarchyError("z_transform needs 1 <= k <= N");
    double z = 0.0;
    for (int i = k; i <= N; ++i) z += x[static_cast<std::size_t>(i - 1)] / std::pow(i - k + i0v, alpha);
    return z;
}

double summation_by_parts_residual(const std::vector<double>& x, int k, double i0v, double alpha) {
    const int N = static_cast<int>(x.size());
    auto X = [&](int i) { return x[static_cast<std::size_t>(i - 1)]; };
    auto w = [&](int i) { return std::pow(i - k + i0v, -alpha); };
    double lhs = 0.0, rhs = -k * std::pow(i0v, -alpha) * X(k) + N * w(N) * X(N);
    for (int i = k; i < N; ++i) {
        lhs += i * w(i) * (X(i + 1) - X(i));
        rhs += (i * w(i) - (i + 1) * w(i + 1)) * X(i + 1);
    }
    return std::abs(lhs - rhs);
}

double apriori_bound(const HierarchyParams& p, double t) {
    HierarchyParams q = p;
    q.M1 = TimeFunction::constant(0.0);
    return Reduced{q}.apriori(t);
}

EntBound ent_bound(const HierarchyParams& p, BoundMode mode, double horizon) {
    validate(p);
    if (!(horizon > 0.0)) throw HierarchyError("certificate horizon must be positive");
    HierarchyParams q = p;
    if (mode == BoundMode::global) {
        if (p.M1.kind != TimeFunction::Kind::constant || p.M2.kind != TimeFunction::Kind::constant)
            throw HierarchyError("global mode needs constant M1 and M2");
        // Case 1 of the proposition runs without dissipation: ρ(·) = 0, r = 0.
        q.rho = 0.0;
        q.r = 0.0;
        q.t_star = std::numeric_limits<double>::infinity();
    } else {
        if (!(p.rho > 0.0) || !(p.r > 0.0)) throw HierarchyError("decaying mode needs rho > 0 and r > 0");
        for (const TimeFunction* f : {&p.M1, &p.M2, &p.M3})
            if (!(f->kind == TimeFunction::Kind::decaying && f->eta > 0.0) &&
                !(f->kind == TimeFunction::Kind::constant && f->L == 0.0))
                throw HierarchyError("decaying mode needs M_i(t) = L e^{-eta t} with eta > 0");
    }
    const Reduced red{q};
    EntBound b;
    b.mode = mode;
    b.params = q;
    b.horizon = horizon;
    b.alpha = q.alpha_value();
    b.i0 = i0(q);
    b.kappa = std::pow((b.i0 + 1.0) / b.i0, b.alpha);
    b.a = (b.alpha - 1.0) * b.kappa;
    b.lattice = make_lattice(horizon);

    const int N = q.N, beta = q.beta;
    const int K = N / 2, kbar = N / 2 + 1;
    const double N2 = static_cast<double>(N) * N;
    const Sums sums = make_sums(q, b.i0, b.alpha);
    const double two_alpha = std::pow(2.0, b.alpha);
    std::vector<double> MN(b.lattice.size());
    for (std::size_t j = 0; j < b.lattice.size(); ++j) MN[j] = red.apriori(b.lattice[j]);

    // Telescoping coefficient: c₁/(j+1)^α ≥ (c₂ + r/ρ)/j^α for j = i₀ + m.
    const double ratio = q.r == 0.0 ? 0.0 : q.r / q.rho;
    for (int m = 0; m < N; ++m) {
        const double j = b.i0 + m;
        CertificateRow row{"telescoping", 0.0, j, q.c1 * std::pow(j + 1.0, -b.alpha),
                           (q.c2 + ratio) * std::pow(j, -b.alpha)};
        b.rows.push_back(row);
    }

    if (mode == BoundMode::global) {
        auto rows_for = [&](double M, std::vector<CertificateRow>* out) {
            bool ok = true;
            auto push = [&](CertificateRow r) {
                if (r.lhs < r.rhs) ok = false;
                if (out) out->push_back(r);
            };
            for (int k = 1; k <= K; ++k) push({"initial", 0.0, double(k), M * ipow_d(k, beta) / N2, sums.Z0[k]});
            for (std::size_t j = 0; j < b.lattice.size(); ++j) {
                const double t = b.lattice[j];
                const double decay = std::exp(-M * t);
                push({"boundary", t, double(kbar), M * ipow_d(kbar, beta) / N2,
                      sums.zeta * MN[j] * std::pow(N, beta - 2) * decay});
                const double m2 = q.M2(t), m3 = red.M3(t);
                for (int k = 1; k <= K; ++k) {
                    const double kb = ipow_d(k, beta);
                    const double rhs = b.a * m2 * M * kb + m2 * M * k * (ipow_d(k + 1, beta) - kb) +
                                       sums.S[k] * m3 * decay + two_alpha * m2 * MN[j] * decay;
                    push({"interior", t, double(k), M * M * kb, rhs});
                }
            }
            return ok;
        };
        double hi = 1.0;
        if (rows_for(hi, nullptr)) {
            double lo = hi;
            while (lo > 1e-12 && rows_for(lo, nullptr)) {
                hi = lo;
                lo *= 0.5;
            }
            if (lo > 1e-12) {
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (rows_for(mid, nullptr) ? hi : lo) = mid;
                }
            }
        } else {
            double lo = hi;
            while (!rows_for(hi, nullptr)) {
                lo = hi;
                hi *= 2.0;
                if (hi > kSearchCap) throw HierarchyError("no certificate: search exceeded 1e12");
            }
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (rows_for(mid, nullptr) ? hi : lo) = mid;
            }
        }
        b.M = hi;
        rows_for(b.M, &b.rows);
        // Fold both k-ranges into M_f e^{M_f t} k^β/N², using ∫_0^t M₃ ≤ e^{Lt} − 1 with L = M₃.L.
        b.displayed = std::max({std::pow(b.i0, b.alpha) * b.M, b.M + q.M1.L, std::pow(2.0, beta) * (q.C0 + 1.0),
                                q.M1.L + q.M3.L});
    } else {
        const double eta = std::min({q.M1.kind == TimeFunction::Kind::decaying ? q.M1.eta : 1e300,
                                     q.M2.kind == TimeFunction::Kind::decaying ? q.M2.eta : 1e300,
                                     q.M3.kind == TimeFunction::Kind::decaying ? q.M3.eta : 1e300});
        const double L = std::max({q.M1.L, q.M2.L, q.M3.L});
        double smax = 0.0;
        for (int k = 1; k <= K; ++k) smax = std::max(smax, sums.S[k] / ipow_d(k, beta));
        b.Lpp = L * (smax + two_alpha * (q.C0 + L / eta));
        // M′₀ from the initial condition and from the boundary at k̄ over the lattice, where
        // M′(t) = E(t)M′₀ + P(t) must dominate ζ M^N_t N^β/k̄^β.
        double M0req = 0.0;
        for (int k = 1; k <= K; ++k) M0req = std::max(M0req, sums.Z0[k] * N2 / ipow_d(k, beta));
        for (std::size_t j = 0; j < b.lattice.size(); ++j) {
            const double t = b.lattice[j];
            const double need = sums.zeta * MN[j] * std::pow(N, beta) / ipow_d(kbar, beta);
            b.M0 = 0.0;
            const double P = b.amplitude(t);
            b.M0 = 1.0;
            const double E = b.amplitude(t) - P;
            M0req = std::max(M0req, (need - P) / E);
        }
        if (!(M0req < kSearchCap)) throw HierarchyError("no certificate: M'0 exceeds 1e12");
        b.M0 = M0req;

        const double rate = std::min(q.r, eta);
        for (int k = 1; k <= K; ++k)
            b.rows.push_back({"initial", 0.0, double(k), b.M0 * ipow_d(k, beta) / N2, sums.Z0[k]});
        double disp = 0.0;
        for (std::size_t j = 0; j < b.lattice.size(); ++j) {
            const double t = b.lattice[j];
            const double amp = b.amplitude(t);
            b.rows.push_back({"boundary", t, double(kbar), amp * ipow_d(kbar, beta) / N2,
                              sums.zeta * MN[j] * std::pow(N, beta - 2)});
            // Interior: dM′/dt ≥ −ρ′M′ + source(k); dM′/dt = −ρ′M′ + L″e^{−ηt} by construction.
            const double m2 = q.M2(t), m3 = red.M3(t);
            for (int k = 1; k <= K; ++k) {
                const double kb = ipow_d(k, beta);
                const double growth = b.a * m2 + m2 * k * (ipow_d(k + 1, beta) - kb) / kb;
                const double rho_p = q.r * (t >= q.t_star ? 1.0 : 0.0) - (b.a + std::pow(2.0, beta - 1) * beta) * m2;
                const double lhs = -rho_p * amp + b.Lpp * std::exp(-eta * t);
                const double rhs = -q.r * (t >= q.t_star ? 1.0 : 0.0) * amp + growth * amp + sums.S[k] * m3 / kb +
                                   two_alpha * MN[j] * m2 / kb;
                b.rows.push_back({"interior", t, double(k), lhs, rhs});
            }
            const double factor = std::exp(q.M1.integral(t));
            const double amp_x = factor * std::max(std::pow(b.i0, b.alpha) * amp, std::pow(2.0, beta) * MN[j]);
            disp = std::max(disp, std::exp(rate * t) * amp_x);
        }
        b.displayed = disp;
    }
    b.certified = b.min_margin() >= 0.0;
    if (!b.certified) throw HierarchyError("no certificate: a lattice inequality failed");
    return b;
}

double EntBound::amplitude(double t) const {
    const HierarchyParams& q = params;
    if (mode == BoundMode::global) return M * std::exp(M * t);
    const double eta = std::min({q.M1.kind == TimeFunction::Kind::decaying ? q.M1.eta : 1e300,
                                 q.M2.kind == TimeFunction::Kind::decaying ? q.M2.eta : 1e300,
                                 q.M3.kind == TimeFunction::Kind::decaying ? q.M3.eta : 1e300});
    const double c = a + std::pow(2.0, q.beta - 1) * q.beta;
    // R(t) = ∫_0^t ρ′ = r (t − t_*)_+ − c ∫_0^t M₂.
    auto R = [&](double s) { return q.r * std::max(0.0, s - q.t_star) - c * q.M2.integral(s); };
    const double Rt = R(t);
    double Q = 0.0;
    if (Lpp != 0.0) Q = gk_split([&](double s) { return std::exp(R(s) - Rt - eta * s); }, 0.0, t, q.t_star);
    return std::exp(-Rt) * M0 + Lpp * Q;
}

double EntBound::operator()(double t, int k) const {
    const HierarchyParams& q = params;
    const double factor = std::exp(q.M1.integral(t));
    const double N2 = static_cast<double>(q.N) * q.N;
    if (k <= q.N / 2) return factor * std::pow(i0, alpha) * amplitude(t) * std::pow(k, q.beta) / N2;
    return factor * Reduced{q}.apriori(t) * std::pow(q.N, q.beta - 2);
}

std::vector<double> EntBound::at(double t) const {
    const HierarchyParams& q = params;
    const double factor = std::exp(q.M1.integral(t));
    const double N2 = static_cast<double>(q.N) * q.N;
    const double low = factor * std::pow(i0, alpha) * amplitude(t) / N2;
    const double high = factor * Reduced{q}.apriori(t) * std::pow(q.N, q.beta - 2);
    std::vector<double> out(static_cast<std::size_t>(q.N));
    for (int k = 1; k <= q.N; ++k) out[k - 1] = k <= q.N / 2 ? low * std::pow(k, q.beta) : high;
    return out;
}

double EntBound::min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        // Relative slack guards against round-off in rows whose sides agree to the last bits.
        const double tol = 1e-12 * std::max(std::abs(r.lhs), std::abs(r.rhs));
        m = std::min(m, r.margin() + tol);
    }
    return m;
}

void write_certificate(std::ostream& os, const EntBound& b, bool all_rows) {
    const HierarchyParams& p = b.params;
    os << std::setprecision(12);
    os << "certificate " << (b.mode == BoundMode::global ? "global" : "decaying") << '\n';
    os << "N = " << p.N << "\nbeta = " << p.beta << "\nc1 = " << p.c1 << "\nc2 = " << p.c2 << "\nC0 = " << p.C0
       << "\nrho = " << p.rho << "\nt_star = " << p.t_star << "\nr = " << p.r << '\n';
    os << "i0 = " << b.i0 << "\nalpha = " << b.alpha << "\nkappa = " << b.kappa << "\na = " << b.a << '\n';
    if (b.mode == BoundMode::global) os << "M = " << b.M << '\n';
    else os << "M0' = " << b.M0 << "\nL'' = " << b.Lpp << '\n';
    os << "displayed_constant = " << b.displayed << "\nhorizon = " << b.horizon
       << "\nlattice_points = " << b.lattice.size() << "\nrows = " << b.rows.size()
       << "\nmin_margin = " << b.min_margin() << "\ncertified = " << (b.certified ? "yes" : "no") << '\n';
    if (!all_rows) return;
    os << "kind,t,k,lhs,rhs,margin\n";
    for (const auto& r : b.rows)
        os << r.kind << ',' << r.t << ',' << r.k << ',' << r.lhs << ',' << r.rhs << ',' << r.margin() << '\n';
}

const char* Closure::name() const {
    switch (kind) {
        case Kind::proportional: return "proportional";
        case Kind::zero: return "zero";
        case Kind::external: return "external";
    }
    return "?";
}

std::vector<double> default_initial(const HierarchyParams& p, HierarchySystem s) {
    std::vector<double> x(static_cast<std::size_t>(p.N));
    const double N2 = static_cast<double>(p.N) * p.N;
    for (int k = 1; k <= p.N; ++k)
        x[k - 1] = s == HierarchySystem::entropic ? p.C0 * k * k / N2 : p.C0 * k * (k + 1.0) / (2.0 * N2);
    return x;
}

HierarchyTrajectory integrate_hierarchy(const HierarchyParams& p, HierarchySystem s, const Closure& c, double T,
                                        double dt, std::vector<double> x0, int stride) {
    validate(p);
    if (!(dt > 0.0) || !(T >= 0.0) || stride < 1) throw HierarchyError("need dt > 0, T >= 0, stride >= 1");
    if (c.kind == Closure::Kind::external && !c.external) throw HierarchyError("external closure not supplied");
    const int N = p.N;
    if (x0.empty()) x0 = default_initial(p, s);
    if (static_cast<int>(x0.size()) != N) throw HierarchyError("initial data must have N entries");
    const double N2 = static_cast<double>(N) * N;
    std::vector<double> kb(static_cast<std::size_t>(N));
    for (int k = 1; k <= N; ++k) kb[k - 1] = (s == HierarchySystem::entropic ? std::pow(k, p.beta) : double(k) * k) / N2;

    auto closure = [&](double t, const std::vector<double>& x) {
        switch (c.kind) {
            case Closure::Kind::proportional: {
                std::vector<double> y(x);
                for (double& v : y) v *= p.rho_at(t);
                return y;
            }
            case Closure::Kind::zero: return std::vector<double>(x.size(), 0.0);
            case Closure::Kind::external: return c.external(t, x);
        }
        return std::vector<double>(x.size(), 0.0);
    };
    auto rhs = [&](double t, const std::vector<double>& x, std::vector<double>& out) {
        const std::vector<double> y = closure(t, x);
        const double m1 = p.M1(t), m2 = p.M2(t), m3 = p.M3(t);
        for (int k = 1; k <= N; ++k) {
            const std::size_t i = static_cast<std::size_t>(k - 1);
            double v = -p.c1 * y[i] + m3 * kb[i];
            if (k < N) v += p.c2 * y[i + 1];
            if (s == HierarchySystem::entropic) {
                v += m1 * x[i];
                if (k < N) v += m2 * k * (x[i + 1] - x[i]);
            } else if (k < N) {
                v += m2 * k * x[i + 1];
            }
            out[i] = v;
        }
    };

    HierarchyTrajectory traj;
    traj.system = s;
    traj.closure = c.name();
    const long nsteps = std::lround(T / dt);
    std::vector<double> x = std::move(x0), k1(N), k2(N), k3(N), k4(N), tmp(N);
    auto store = [&](double t) {
        traj.times.push_back(t);
        traj.x.push_back(x);
        traj.y.push_back(closure(t, x));
    };
    store(0.0);
    for (long st = 0; st < nsteps; ++st) {
        const double t = st * dt;
        rhs(t, x, k1);
        for (int i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
        rhs(t + 0.5 * dt, tmp, k2);
        for (int i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
        rhs(t + 0.5 * dt, tmp, k3);
        for (int i = 0; i < N; ++i) tmp[i] = x[i] + dt * k3[i];
        rhs(t + dt, tmp, k4);
        for (int i = 0; i < N; ++i) {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(x[i])) throw HierarchyError("instability detected in hierarchy integration");
        }
        if ((st + 1) % stride == 0 || st + 1 == nsteps) store((st + 1) * dt);
    }
    return traj;
}

ComparisonResult comparison_check(const std::function<Eigen::MatrixXd(double)>& A, const Eigen::VectorXd& x0,
                                  double T) {
    ComparisonResult res;
    if ((x0.array() < 0.0).any()) throw HierarchyError("comparison check needs x0 >= 0");
    const Eigen::Index n = x0.size();
    auto metzler = [&](const Eigen::MatrixXd& M) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (i != j && M(i, j) < 0.0) return false;
        return true;
    };
    // Step size from the largest sampled entry.
    double amax = 0.0;
    for (int s = 0; s <= 64; ++s) amax = std::max(amax, A(T * s / 64.0).cwiseAbs().maxCoeff());
    const double dt = std::min(1e-3, 0.05 / std::max(amax * static_cast<double>(n), 1e-300));
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(T / dt)));
    const double h = T / nsteps;
    Eigen::VectorXd x = x0;
    res.min_ratio = std::numeric_limits<double>::infinity();
    auto observe = [&] {
        const double nrm = x.norm();
        const double mn = x.minCoeff();
        if (nrm > 0.0) res.min_ratio = std::min(res.min_ratio, mn / nrm);
        else res.min_ratio = std::min(res.min_ratio, 0.0);
        return mn >= -1e-10 * nrm;
    };
    bool ok = observe();
    for (long st = 0; st < nsteps; ++st) {
        const double t = st * h;
        const Eigen::MatrixXd A0 = A(t), Ah = A(t + 0.5 * h), A1 = A(t + h);
        if (!metzler(A0) || !metzler(Ah) || !metzler(A1)) res.metzler = false;
        const Eigen::VectorXd k1 = A0 * x;
        const Eigen::VectorXd k2 = Ah * (x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = Ah * (x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = A1 * (x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) throw HierarchyError("instability detected in comparison integration");
        ok = observe() && ok;
    }
    res.pass = ok;
    res.hypothesis_violation = !res.metzler;
    return res;
}

L2Bound l2_bound(const HierarchyParams& p) {
    validate(p);
    const double M2 = p.M2(0.0);
    if (!(p.c2 > 0.0)) throw HierarchyError("l2_bound needs c2 > 0 (use ent_bound for c2 = 0)");
    if (!(M2 > 0.0)) throw HierarchyError("l2_bound needs M2 > 0 (use ent_bound for M2 = 0)");
    L2Bound b;
    b.params = p;
    b.T_star = (1.0 - p.c2 / p.c1) / M2;
    return b;
}

double L2Bound::operator()(double t, int k) const {
    const double M2 = params.M2(0.0), M3 = params.M3(0.0);
    const double gap = 1.0 - M2 * t - params.c2 / params.c1;
    if (!(gap > 0.0)) return std::numeric_limits<double>::infinity();
    const double N2 = static_cast<double>(params.N) * params.N;
    return std::pow(params.c1 / params.c2, k) * (params.C0 / (gap * gap * gap) + M3 / (M2 * gap * gap)) / N2;
}

GeneratingFunctionReport generating_function_check(const HierarchyTrajectory& traj, const HierarchyParams& p,
                                                   const std::vector<double>& r_grid) {
    GeneratingFunctionReport rep;
    const std::size_t nt = traj.times.size();
    if (nt < 5) throw HierarchyError("generating-function check needs at least 5 stored times");
    for (double r : r_grid)
        if (!(r >= 0.0 && r < 1.0)) throw HierarchyError("r must lie in [0, 1)");
    const int N = static_cast<int>(traj.x.front().size());
    const double N2 = static_cast<double>(N) * N;
    const double M2 = p.M2(0.0), M3 = p.M3(0.0);
    for (double r : r_grid) {
        std::vector<double> F(nt);
        for (std::size_t j = 0; j < nt; ++j) {
            double s = 0.0, rk = 1.0;
            for (int k = 1; k <= N; ++k) {
                rk *= r;
                s += rk * traj.x[j][k - 1];
            }
            F[j] = s;
        }
        for (std::size_t j = 2; j + 2 < nt; ++j) {
            const double h = traj.times[j + 1] - traj.times[j];
            const double lhs = (-F[j + 2] + 8.0 * F[j + 1] - 8.0 * F[j - 1] + F[j - 2]) / (12.0 * h);
            double Fr = 0.0, rk = 1.0;
            for (int k = 1; k <= N; ++k) {
                Fr += k * rk * traj.x[j][k - 1];
                rk *= r;
            }
            const double rhs = M2 * Fr + 2.0 * M3 / (N2 * std::pow(1.0 - r, 3));
            rep.residual = std::max(rep.residual, (lhs - rhs) / std::max(std::abs(rhs), 1e-300));
            if (rhs > 0.0) rep.tightness = std::max(rep.tightness, lhs / rhs);
        }
    }
    return rep;
}

void write_trajectory_csv(std::ostream& os, const HierarchyTrajectory& traj,
                          const std::function<double(double, int)>& bound) {
    os << "t,k,x,y,bound\n" << std::setprecision(12);
    for (std::size_t j = 0; j < traj.times.size(); ++j)
        for (std::size_t k = 0; k < traj.x[j].size(); ++k) {
            os << traj.times[j] << ',' << k + 1 << ',' << traj.x[j][k] << ',' << traj.y[j][k] << ',';
            if (bound) os << bound(traj.times[j], static_cast<int>(k + 1));
            os << '\n';
        }
}

}  // namespace pchaos
