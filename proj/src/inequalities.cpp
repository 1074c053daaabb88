#include "pchaos/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "pchaos/divergences.hpp"
#include "pchaos/kernels.hpp"
#include "pchaos/meanfield.hpp"

namespace pchaos {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kQuadratureCap = std::size_t(1) << 25;

void require_match(const PairFunction& phi, const DensityField& m) {
    if (phi.d != m.grid.dim || phi.grid.n != m.grid.n) throw GridError("pair function and density grids differ");
}

std::vector<double> node_weights(const DensityField& m) {
    std::vector<double> w(m.values.size());
    const double h = m.grid.cell_volume();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = m.values[i] * h;
    return w;
}

// Σ_{i,j} φ(x_i, x_j) over a tuple of node indices.
double pair_sum(const PairFunction& phi, const std::size_t* idx, int k) {
    const std::size_t P = phi.inner();
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        const double* row = phi.values.data() + idx[i] * P;
        for (int j = 0; j < k; ++j) s += row[idx[j]];
    }
    return s;
}

// Same sum from the symmetrized table ψ = φ + φᵀ (half the loads).
double pair_sum_sym(const std::vector<double>& psi, std::size_t P, const std::size_t* idx, int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        const double* row = psi.data() + idx[i] * P;
        s += 0.5 * row[idx[i]];
        for (int j = i + 1; j < k; ++j) s += row[idx[j]];
    }
    return s;
}

std::vector<double> symmetrized(const PairFunction& phi) {
    const std::size_t P = phi.inner();
    std::vector<double> psi(P * P);
    for (std::size_t x = 0; x < P; ++x)
        for (std::size_t y = 0; y < P; ++y) psi[x * P + y] = phi(x, y) + phi(y, x);
    return psi;
}

// Visits every k-tuple of nodes with its product weight.
template <class Fn>
void for_each_tuple(const std::vector<double>& w, int k, Fn&& fn) {
    const std::size_t P = w.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    while (true) {
        double W = 1.0;
        for (int i = 0; i < k; ++i) W *= w[idx[i]];
        fn(idx.data(), W);
        int a = k - 1;
        while (a >= 0 && ++idx[a] == P) idx[a--] = 0;
        if (a < 0) break;
    }
}

// Samples k-tuples of nodes i.i.d. from w.
class TupleSampler {
public:
    TupleSampler(const std::vector<double>& w, std::uint64_t seed) : rng_(seed), cdf_(w.size()) {
        double c = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) cdf_[i] = (c += w[i]);
        for (double& x : cdf_) x /= c;
    }
    void draw(std::size_t* idx, int k) {
        for (int i = 0; i < k; ++i) {
            const double u = unif_(rng_);
            const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            idx[i] = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
        }
    }

private:
    Rng rng_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::vector<double> cdf_;
};

bool use_quadrature(const PairFunction& phi, int k) {
    if (k > 3) return false;
    const std::size_t P = phi.inner();
    std::size_t total = 1;
    for (int i = 0; i < k; ++i) {
        total *= P;
        if (total > kQuadratureCap) return false;
    }
    return true;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

double c_jw() { return 1600.0 * 1600.0 + 36.0 * std::pow(std::numbers::e, 4); }

PairFunction::PairFunction(int d_, int n) : d(d_), grid(make_grid(2 * d_, n)), values(grid.size(), 0.0) {}

double PairFunction::sup() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
}

CenteringReport centering(const PairFunction& phi, const DensityField& m) {
    require_match(phi, m);
    const std::vector<double> w = node_weights(m);
    const std::size_t P = w.size();
    CenteringReport rep;
    std::vector<double> col(P, 0.0);
    for (std::size_t x = 0; x < P; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < P; ++y) {
            row += phi(x, y) * w[y];
            col[y] += phi(x, y) * w[x];
        }
        rep.row = std::max(rep.row, std::abs(row));
        rep.diag = std::max(rep.diag, std::abs(phi(x, x)));
    }
    for (double c : col) rep.col = std::max(rep.col, std::abs(c));
    return rep;
}

ConcentrationReport exp_moment_check(const PairFunction& phi, const DensityField& m, int k, ScaleMode scale, int N,
                                     const McOptions& mc) {
    require_match(phi, m);
    if (k < 1) throw GridError("k must be positive");
    if (scale == ScaleMode::per_N && N < k) throw GridError("N must be at least k");
    ConcentrationReport rep;
    rep.k = k;
    rep.N = N;
    rep.scale = scale;
    rep.phi_sup = phi.sup();
    rep.gamma = c_jw() * rep.phi_sup * rep.phi_sup;
    rep.centering = centering(phi, m);
    const bool centered = rep.centering.ok();
    const bool small = rep.gamma <= 0.5;
    rep.hypotheses_ok = centered && small;
    if (!centered) rep.hypothesis_note = "centering or zero-diagonal condition fails";
    else if (!small) rep.hypothesis_note = "C_JW*|phi|^2 exceeds 1/2";
    const double s = scale == ScaleMode::per_k ? 1.0 / k : 1.0 / N;
    rep.bound = scale == ScaleMode::per_k ? 6.0 * rep.gamma
                                          : 6.0 * rep.gamma * static_cast<double>(k) * k / (static_cast<double>(N) * N);

    const std::vector<double> w = node_weights(m);
    if (use_quadrature(phi, k)) {
        rep.method = EvalMethod::quadrature;
        double acc = 0.0;
        for_each_tuple(w, k, [&](const std::size_t* idx, double W) { acc += W * std::expm1(s * pair_sum(phi, idx, k)); });
        rep.value = std::log1p(acc);
    } else {
        rep.method = EvalMethod::monte_carlo;
        TupleSampler sampler(w, mc.seed);
        const std::vector<double> psi = symmetrized(phi);
        std::vector<std::size_t> idx(static_cast<std::size_t>(k));
        double mean = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < mc.samples; ++i) {
            sampler.draw(idx.data(), k);
            const double y = std::expm1(s * pair_sum_sym(psi, phi.inner(), idx.data(), k));
            const double delta = y - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta * (y - mean);
        }
        const double var = mc.samples > 1 ? m2 / static_cast<double>(mc.samples - 1) : 0.0;
        rep.value = std::log1p(mean);
        rep.ci = mc.z * std::sqrt(var / static_cast<double>(mc.samples)) / (1.0 + mean);
    }
    rep.asserted = rep.hypotheses_ok;
    rep.pass = rep.asserted && rep.value + rep.ci <= rep.bound;
    return rep;
}

std::vector<MomentRow> moment_table(const PairFunction& phi, const DensityField& m, int k, int r_max,
                                    const McOptions& mc) {
    require_match(phi, m);
    if (k < 1) throw GridError("k must be positive");
    if (r_max < 1 || r_max > 6) throw GridError("r_max must lie in 1..6");
    const double sup = phi.sup();
    const std::vector<double> w = node_weights(m);
    const std::size_t R = static_cast<std::size_t>(r_max);
    std::vector<double> mean(R, 0.0), m2(R, 0.0);
    std::vector<MomentRow> rows(R);
    const bool quad = use_quadrature(phi, k);

    auto powers = [&](double v, std::vector<double>& out) {
        const double a = std::abs(v / k);
        double p = a * a;
        for (std::size_t r = 0; r < R; ++r) {
            out[r] = p;
            p *= a * a;
        }
    };
    std::vector<double> pw(R);
    if (quad) {
        for_each_tuple(w, k, [&](const std::size_t* idx, double W) {
            powers(pair_sum(phi, idx, k), pw);
            for (std::size_t r = 0; r < R; ++r) mean[r] += W * pw[r];
        });
    } else {
        TupleSampler sampler(w, mc.seed);
        const std::vector<double> psi = symmetrized(phi);
        std::vector<std::size_t> idx(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < mc.samples; ++i) {
            sampler.draw(idx.data(), k);
            powers(pair_sum_sym(psi, phi.inner(), idx.data(), k), pw);
            for (std::size_t r = 0; r < R; ++r) {
                const double delta = pw[r] - mean[r];
                mean[r] += delta / static_cast<double>(i + 1);
                m2[r] += delta * (pw[r] - mean[r]);
            }
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        MomentRow& row = rows[r];
        row.r = static_cast<int>(r + 1);
        const double f = factorial(2 * row.r);
        row.lhs = mean[r] / f;
        row.method = quad ? EvalMethod::quadrature : EvalMethod::monte_carlo;
        if (!quad && mc.samples > 1)
            row.ci = mc.z * std::sqrt(m2[r] / static_cast<double>(mc.samples - 1) / static_cast<double>(mc.samples)) / f;
        const bool high = 4 * row.r > k;
        row.branch = high ? "4r>k" : "4r<=k";
        const double base = high ? 6.0 * std::numbers::e * std::numbers::e * sup : 1600.0 * sup;
        row.rhs = std::pow(base, 2 * row.r);
        row.pass = row.lhs + row.ci <= row.rhs;
    }
    return rows;
}

TransportGap transport_gap(const MatrixField& V, const DensityField& m1, const DensityField& m2, TransportMode mode) {
    if (!(V.grid == m1.grid) || !(m1.grid == m2.grid)) throw GridError("transport inputs on different grids");
    const VectorField K = matrix_divergence(V);
    const double h = m1.grid.cell_volume();
    double lhs2 = 0.0;
    for (const auto& c : K.comp) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * (m1.values[i] - m2.values[i]);
        lhs2 += (s * h) * (s * h);
    }
    TransportGap gap;
    gap.lhs = std::sqrt(lhs2);
    const double glog = std::sqrt(log_regularity(m2).g2);
    if (mode == TransportMode::entropy) {
        const double I = fisher_information(m1, m2);
        const double H = relative_entropy(m1, m2);
        gap.rhs = sup_norm(V) * (std::sqrt(std::max(I, 0.0)) + glog * std::sqrt(2.0 * std::max(H, 0.0)));
    } else {
        const double E = dirichlet_energy(m1, m2);
        const double D = chi_square(m1, m2);
        gap.rhs = l2_norm(V, m2) * (std::sqrt(std::max(E, 0.0)) + glog * std::sqrt(std::max(D, 0.0)));
    }
    return gap;
}

std::string LemmaReport::variant() const {
    const char* base = lemma == InnerLemma::cs_crude ? "cs_crude" : lemma == InnerLemma::cs_fine ? "cs_fine" : "ibp";
    return std::string(base) + "_p" + std::to_string(p);
}

LemmaReport inner_lemma_check(InnerLemma lemma, int p, const Field& h, const DensityField& m, const PairFunction& U,
                              double eps, int N) {
    if (m.grid.dim != 1 || U.d != 1) throw GridError("inner lemmas are implemented for d = 1");
    if (p != 1 && p != 2) throw GridError("p must be 1 or 2");
    if (lemma == InnerLemma::cs_fine && p != 1) throw GridError("the refined bound is stated for p = 1");
    if (lemma != InnerLemma::ibp && !(eps > 0.0)) throw GridError("epsilon must be positive");
    const int k = h.grid.dim;
    const int n = m.grid.n;
    if (h.grid.n != n || U.grid.n != n) throw GridError("grids differ");
    if (k < 2) throw GridError("k must be at least 2");
    if (lemma == InnerLemma::ibp && N < k) throw GridError("N must be at least k");

    const std::size_t total = h.values.size();
    const std::vector<double> w = node_weights(m);
    std::vector<double> W(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(k));
    auto decode = [&](std::size_t lin) {
        for (int a = k - 1; a >= 0; --a) {
            idx[a] = lin % static_cast<std::size_t>(n);
            lin /= static_cast<std::size_t>(n);
        }
    };
    double mass = 0.0;
    for (std::size_t lin = 0; lin < total; ++lin) {
        if (h.values[lin] < 0.0) throw GridError("h must be nonnegative");
        decode(lin);
        double v = 1.0;
        for (int a = 0; a < k; ++a) v *= w[idx[a]];
        W[lin] = v;
        mass += v * h.values[lin];
    }
    if (std::abs(mass - 1.0) > 1e-9) throw GridError("h is not normalized against m^{⊗k}");

    LemmaReport rep;
    rep.lemma = lemma;
    rep.p = p;
    const double sup = U.sup();
    const double km1 = k - 1.0;

    if (lemma == InnerLemma::ibp) {
        double lhs = 0.0, Dp = 0.0;
        for (std::size_t lin = 0; lin < total; ++lin) {
            decode(lin);
            const double hv = h.values[lin];
            lhs += W[lin] * (p == 1 ? hv : hv * hv) * pair_sum(U, idx.data(), k);
            Dp += W[lin] * (p == 1 ? (hv > 0.0 ? hv * std::log(hv) : 0.0) : (hv - 1.0) * (hv - 1.0));
        }
        const double root = std::sqrt(2.0 * c_jw());
        const double kk = static_cast<double>(k) * k;
        rep.lhs = lhs;
        rep.terms = {{"divergence", sup * root * N * Dp},
                     {"concentration", sup * root * 3.0 * kk / N},
                     {"square", p == 2 ? sup * kk * Dp : 0.0}};
    } else {
        // i = first coordinate; Ū(x) = ∫U(x, y) dm(y).
        std::vector<double> Ubar(static_cast<std::size_t>(n), 0.0);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) Ubar[x] += U(x, y) * w[y];
        const Field dh = derivative(h, 0);
        double a = 0.0, grad = 0.0, Dsq = 0.0;
        for (std::size_t lin = 0; lin < total; ++lin) {
            decode(lin);
            const double hv = h.values[lin];
            double s = 0.0;
            for (int j = 1; j < k; ++j) s += U(idx[0], idx[j]) - Ubar[idx[0]];
            const double g = dh.values[lin];
            a += W[lin] * (p == 2 ? hv : 1.0) * g * s;
            if (p == 1) grad += hv > 0.0 ? W[lin] * g * g / hv : 0.0;
            else grad += W[lin] * g * g;
            Dsq += W[lin] * (hv - 1.0) * (hv - 1.0);
        }
        rep.lhs = a;
        const double u2 = sup * sup / eps;
        rep.terms.emplace_back("gradient", eps * grad);
        if (p == 2) {
            rep.terms.emplace_back("square", 2.0 * km1 * km1 * u2 * Dsq);
            rep.terms.emplace_back("variance", 2.0 * km1 * u2);
        } else if (lemma == InnerLemma::cs_crude) {
            rep.terms.emplace_back("pair", km1 * km1 * u2);
        } else {
            double H3 = 0.0;
            if (k >= 3) {
                std::vector<double> joint(total);
                const double cell = h.grid.cell_volume();
                for (std::size_t lin = 0; lin < total; ++lin) joint[lin] = W[lin] * h.values[lin] / cell;
                const DensityField jd = DensityField::normalized(h.grid, std::move(joint));
                const DensityField m3 = k == 3 ? jd : marginalize(jd, 1, 3);
                H3 = relative_entropy(m3, tensorize(m, 3));
            }
            rep.terms.emplace_back("diagonal", km1 * u2);
            rep.terms.emplace_back("triple", km1 * (k - 2.0) * u2 * std::sqrt(2.0 * std::max(H3, 0.0)));
        }
    }
    rep.rhs = 0.0;
    for (const auto& t : rep.terms) rep.rhs += t.second;
    rep.pass = rep.lhs <= rep.rhs + 1e-12 * std::max(1.0, std::abs(rep.rhs));
    return rep;
}

DensityField random_density(const TorusGrid& g, Rng& rng, int modes, double amplitude) {
    std::uniform_int_distribution<int> wave(-3, 3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), phase(0.0, kTwoPi);
    std::vector<double> v(g.size(), 0.0);
    for (int t = 0; t < modes; ++t) {
        std::vector<int> q(static_cast<std::size_t>(g.dim));
        bool nonzero = false;
        while (!nonzero) {
            for (int& x : q) nonzero |= (x = wave(rng)) != 0;
        }
        const double amp = amplitude * unit(rng) / modes;
        const double th = phase(rng);
        for (std::size_t i = 0; i < v.size(); ++i) {
            double arg = th;
            for (int a = 0; a < g.dim; ++a) arg += kTwoPi * q[a] * g.coord(i, a);
            v[i] += amp * std::cos(arg);
        }
    }
    for (double& x : v) x = std::exp(x);
    return DensityField::normalized(g, std::move(v));
}

PairFunction random_pair_field(int n, Rng& rng, double amplitude) {
    PairFunction U(1, n);
    std::uniform_int_distribution<int> wave(-2, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), phase(0.0, kTwoPi);
    for (int t = 0; t < 4; ++t) {
        const int p = wave(rng), q = wave(rng);
        const double c = unit(rng), th = phase(rng);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) U(x, y) += c * std::cos(kTwoPi * (p * x + q * y) / n + th);
    }
    const double s = U.sup();
    if (s > 0.0)
        for (double& v : U.values) v *= amplitude / s;
    return U;
}

PairFunction random_centered_phi(int n, const DensityField& m, double amplitude, Rng& rng) {
    if (m.grid.dim != 1 || m.grid.n != n) throw GridError("centered pair functions are generated for d = 1");
    PairFunction phi(1, n);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), phase(0.0, kTwoPi);
    // Translation-invariant part in x − y plus a smaller generic part.
    for (int q = 1; q <= 3; ++q) {
        const double a = unit(rng) / q, b = unit(rng) / q;
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                const double arg = kTwoPi * q * (x - y) / n;
                phi(x, y) += a * std::cos(arg) + b * std::sin(arg);
            }
    }
    std::uniform_int_distribution<int> wave(-2, 2);
    for (int t = 0; t < 3; ++t) {
        const int p = wave(rng), q = wave(rng);
        const double c = 0.3 * unit(rng), th = phase(rng);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) phi(x, y) += c * std::cos(kTwoPi * (p * x + q * y) / n + th);
    }

    // Least-squares projection onto {Σ_y φ(x,y)w_y = 0, Σ_x φ(x,y)w_x = 0, φ(x,x) = 0}.
    const std::vector<double> w = node_weights(m);
    const Eigen::Index P = n, nn = static_cast<Eigen::Index>(n) * n;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3 * P, nn);
    for (Eigen::Index x = 0; x < P; ++x)
        for (Eigen::Index y = 0; y < P; ++y) {
            C(x, x * P + y) = w[static_cast<std::size_t>(y)];
            C(P + y, x * P + y) = w[static_cast<std::size_t>(x)];
        }
    for (Eigen::Index x = 0; x < P; ++x) C(2 * P + x, x * P + x) = 1.0;
    Eigen::Map<Eigen::VectorXd> f(phi.values.data(), nn);
    const Eigen::MatrixXd G = C * C.transpose();
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd lambda = cod.solve(C * f);
        f -= C.transpose() * lambda;
    }
    const double s = phi.sup();
    if (s > 0.0)
        for (double& v : phi.values) v *= amplitude / s;
    return phi;
}

Field random_exchangeable_h(int n, int k, const DensityField& m, Rng& rng, double amplitude) {
    if (m.grid.dim != 1 || m.grid.n != n) throw GridError("exchangeable densities are generated for d = 1");
    const TorusGrid g = make_grid(k, n);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), phase(0.0, kTwoPi);
    std::uniform_int_distribution<int> wave(-2, 2);
    // One-body a(x) and symmetric two-body b(x, y).
    std::vector<double> a(static_cast<std::size_t>(n), 0.0), b(static_cast<std::size_t>(n) * n, 0.0);
    for (int t = 0; t < 2; ++t) {
        const int q = 1 + t;
        const double c = 0.5 * unit(rng), th = phase(rng);
        for (int x = 0; x < n; ++x) a[x] += c * std::cos(kTwoPi * q * x / n + th);
    }
    for (int t = 0; t < 3; ++t) {
        const int p = wave(rng), q = wave(rng);
        const double c = unit(rng), th = phase(rng);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                b[static_cast<std::size_t>(x) * n + y] +=
                    c * (std::cos(kTwoPi * (p * x + q * y) / n + th) + std::cos(kTwoPi * (p * y + q * x) / n + th));
    }
    Field h(g);
    std::vector<std::size_t> idx(static_cast<std::size_t>(k));
    const std::vector<double> w = node_weights(m);
    double mass = 0.0;
    for (std::size_t lin = 0; lin < h.values.size(); ++lin) {
        std::size_t r = lin;
        for (int i = k - 1; i >= 0; --i) {
            idx[i] = r % static_cast<std::size_t>(n);
            r /= static_cast<std::size_t>(n);
        }
        double s = 0.0, W = 1.0;
        for (int i = 0; i < k; ++i) {
            s += a[idx[i]];
            W *= w[idx[i]];
            for (int j = i + 1; j < k; ++j) s += b[idx[i] * n + idx[j]];
        }
        h.values[lin] = std::exp(amplitude * s / k);
        mass += W * h.values[lin];
    }
    for (double& v : h.values) v /= mass;
    return h;
}

MatrixField random_matrix_field(const TorusGrid& g, Rng& rng) {
    MatrixField V(g, g.dim);
    std::uniform_int_distribution<int> wave(-2, 2), count(1, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), phase(0.0, kTwoPi);
    for (auto& c : V.comp) {
        const int terms = count(rng);
        for (int t = 0; t < terms; ++t) {
            std::vector<int> q(static_cast<std::size_t>(g.dim));
            for (int& x : q) x = wave(rng);
            const double amp = unit(rng), th = phase(rng);
            for (std::size_t i = 0; i < c.size(); ++i) {
                double arg = th;
                for (int a = 0; a < g.dim; ++a) arg += kTwoPi * q[a] * g.coord(i, a);
                c[i] += amp * std::cos(arg);
            }
        }
    }
    return V;
}

}  // namespace pchaos
