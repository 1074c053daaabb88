#include "pchaos/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pchaos {

namespace {

constexpr double kPi = std::numbers::pi;

void require_grid(const TorusGrid& a, const TorusGrid& b) {
    if (!(a == b)) throw GridError("kernel grid mismatch");
}

Spectrum empty_spectrum(const TorusGrid& g) {
    Spectrum s;
    s.grid = g;
    s.data.assign(ipow(static_cast<std::size_t>(g.n), g.dim - 1) * static_cast<std::size_t>(g.n / 2 + 1), 0.0);
    return s;
}

void multiply_symbol(std::vector<double>& values, const TorusGrid& g, double eps) {
    Spectrum s = forward(g, values.data());
    const double c = -0.5 * eps * eps * 4.0 * kPi * kPi;
    for_each_mode(g, [&](std::size_t lin, const int* k) {
        double k2 = 0.0;
        for (int a = 0; a < g.dim; ++a) k2 += static_cast<double>(k[a]) * k[a];
        s.data[lin] *= std::exp(c * k2);
    });
    inverse_into(s, values.data());
}

}  // namespace

const char* tag_name(KernelTag t) {
    switch (t) {
        case KernelTag::biot_savart: return "biot_savart";
        case KernelTag::fourier_series: return "fourier_series";
        default: return "explicit_grid";
    }
}

VectorField KernelSpec::singular() const {
    if (K1) return *K1;
    if (V) return matrix_divergence(*V);
    return VectorField(grid, d);
}

VectorField KernelSpec::bounded() const { return K2 ? *K2 : VectorField(grid, d); }

VectorField KernelSpec::total() const {
    VectorField out = singular();
    if (K2)
        for (int c = 0; c < d; ++c)
            for (std::size_t i = 0; i < out.comp[c].size(); ++i) out.comp[c][i] += K2->comp[c][i];
    return out;
}

VectorField matrix_divergence(const MatrixField& V) {
    VectorField out(V.grid, V.d);
    for (int a = 0; a < V.d; ++a) {
        for (int b = 0; b < V.d; ++b) {
            Field vb(V.grid, V.at(b, a));
            Field db = derivative(vb, b);
            for (std::size_t i = 0; i < db.values.size(); ++i) out.comp[a][i] += db.values[i];
        }
    }
    return out;
}

KernelSpec biot_savart(const TorusGrid& g, int mode_cutoff, SpectralWindow window) {
    if (g.dim != 2) throw GridError("biot_savart needs a 2-dimensional grid");
    if (g.n % 2 != 0) throw GridError("biot_savart needs even n (Nyquist asymmetry)");
    if (mode_cutoff < 1 || mode_cutoff > g.n / 2) throw GridError("mode_cutoff must lie in [1, n/2]");
    const int n = g.n;
    std::vector<Spectrum> ks(2, empty_spectrum(g));
    std::vector<Spectrum> vs(4, empty_spectrum(g));
    for_each_mode(g, [&](std::size_t lin, const int* k) {
        if (k[0] == 0 && k[1] == 0) return;
        if (std::abs(k[0]) >= n / 2 || std::abs(k[1]) >= n / 2) return;
        const double kk = std::sqrt(static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1]);
        const double rho = kk / mode_cutoff;
        double w = 0.0;
        if (window == SpectralWindow::sharp) w = rho <= 1.0 ? 1.0 : 0.0;
        else w = rho < 1.0 ? 0.5 * (1.0 + std::cos(kPi * rho)) : 0.0;
        if (w == 0.0) return;
        const double k2 = kk * kk;
        const cplx khat[2] = {cplx(0.0, k[1] / (2.0 * kPi * k2)) * w, cplx(0.0, -k[0] / (2.0 * kPi * k2)) * w};
        ks[0].data[lin] = khat[0];
        ks[1].data[lin] = khat[1];
        // V_βα = −∂_β Δ^{-1} K_α ⇒ V̂_βα = −iξ_β K̂_α/|ξ|², ξ = 2πk.
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a)
                vs[b * 2 + a].data[lin] = cplx(0.0, -2.0 * kPi * k[b]) * khat[a] / (4.0 * kPi * kPi * k2);
    });
    KernelSpec spec;
    spec.d = 2;
    spec.grid = g;
    spec.tag = KernelTag::biot_savart;
    VectorField K1(g, 2);
    for (int a = 0; a < 2; ++a) inverse_into(ks[a], K1.comp[a].data());
    MatrixField V(g, 2);
    for (int c = 0; c < 4; ++c) inverse_into(vs[c], V.comp[c].data());
    spec.K1 = std::move(K1);
    spec.V = std::move(V);
    return spec;
}

MatrixField v_matrix(const TorusGrid& g, bool half_offset) {
    if (g.dim != 2) throw GridError("v_matrix needs a 2-dimensional grid");
    MatrixField V(g, 2);
    const double h = g.spacing();
    auto atan_ratio = [](double num, double den) {
        if (den == 0.0) return num == 0.0 ? 0.0 : std::copysign(kPi / 2.0, num);
        return std::atan(num / den);
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s[2];
        for (int a = 0; a < 2; ++a) {
            double x = g.coord(i, a) + (half_offset ? 0.5 * h : 0.0);
            x -= std::floor(x);
            s[a] = x >= 0.5 ? x - 1.0 : x;
        }
        V.at(0, 0)[i] = atan_ratio(s[1], s[0]) / (2.0 * kPi);
        V.at(1, 1)[i] = -atan_ratio(s[0], s[1]) / (2.0 * kPi);
    }
    return V;
}

KernelSpec mollify(const KernelSpec& spec, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw GridError("mollification epsilon must lie in (0, 1/2)");
    KernelSpec out = spec;
    const TorusGrid& g = spec.grid;
    if (out.V)
        for (auto& c : out.V->comp) multiply_symbol(c, g, eps);
    if (out.K1)
        for (auto& c : out.K1->comp) multiply_symbol(c, g, eps);
    if (out.K2)
        for (auto& c : out.K2->comp) multiply_symbol(c, g, eps);
    for (auto& term : out.series) {
        double k2 = 0.0;
        for (int a : term.k) k2 += static_cast<double>(a) * a;
        const double f = std::exp(-0.5 * eps * eps * 4.0 * kPi * kPi * k2);
        for (auto& c : term.coef) c *= f;
    }
    out.epsilon = std::sqrt(spec.epsilon * spec.epsilon + eps * eps);
    return out;
}

KernelSpec fourier_series_kernel(const TorusGrid& g, std::vector<FourierTerm> terms) {
    KernelSpec spec;
    spec.d = g.dim;
    spec.grid = g;
    spec.tag = KernelTag::fourier_series;
    VectorField K2(g, g.dim);
    for (const auto& t : terms) {
        if (static_cast<int>(t.k.size()) != g.dim || static_cast<int>(t.coef.size()) != g.dim)
            throw GridError("Fourier term has wrong dimension");
        for (int a : t.k)
            if (2 * std::abs(a) >= g.n) throw GridError("Fourier term not resolved by the grid");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (const auto& t : terms) {
            double ph = 0.0;
            for (int a = 0; a < g.dim; ++a) ph += t.k[a] * g.coord(i, a);
            const cplx e = std::polar(1.0, 2.0 * kPi * ph);
            for (int c = 0; c < g.dim; ++c) K2.comp[c][i] += (t.coef[c] * e).real();
        }
    }
    spec.K2 = std::move(K2);
    spec.series = std::move(terms);
    return spec;
}

KernelSpec explicit_kernel(const TorusGrid& g, std::optional<MatrixField> V, std::optional<VectorField> K2) {
    if (!V && !K2) throw GridError("kernel needs a singular or a bounded part");
    if (V) require_grid(V->grid, g);
    if (K2) require_grid(K2->grid, g);
    KernelSpec spec;
    spec.d = g.dim;
    spec.grid = g;
    spec.V = std::move(V);
    spec.K2 = std::move(K2);
    return spec;
}

KernelSpec zero_kernel(const TorusGrid& g) { return explicit_kernel(g, std::nullopt, VectorField(g, g.dim)); }

DecompositionReport check_decomposition(const KernelSpec& spec) {
    DecompositionReport r;
    if (!spec.V) {
        r.vacuous = true;
        return r;
    }
    const VectorField divV = matrix_divergence(*spec.V);
    const VectorField K1 = spec.K1 ? *spec.K1 : divV;
    double scale = 0.0;
    for (const auto& c : K1.comp)
        for (double x : c) scale = std::max(scale, std::abs(x));
    r.scale = std::max(scale, 1.0);
    for (int a = 0; a < spec.d; ++a)
        for (std::size_t i = 0; i < divV.comp[a].size(); ++i)
            r.div_v_residual = std::max(r.div_v_residual, std::abs(divV.comp[a][i] - K1.comp[a][i]));
    const Field div = divergence(K1);
    for (double x : div.values) r.div_k1_residual = std::max(r.div_k1_residual, std::abs(x));
    r.pass = r.div_v_residual <= 1e-8 * r.scale && r.div_k1_residual <= 1e-8 * r.scale;
    return r;
}

double mv_constant(const MatrixField& V, const std::vector<DensityField>& densities) {
    if (densities.empty()) throw GridError("mv_constant needs at least one density");
    Field v2(V.grid);
    for (const auto& c : V.comp)
        for (std::size_t i = 0; i < c.size(); ++i) v2.values[i] += c[i] * c[i];
    double sup = 0.0;
    for (const auto& m : densities) {
        require_grid(m.grid, V.grid);
        const Field conv = convolve(v2, m);
        for (double x : conv.values) sup = std::max(sup, x);
    }
    return sup;
}

double sup_norm(const MatrixField& V) {
    double sup = 0.0;
    for (std::size_t i = 0; i < V.grid.size(); ++i) {
        double s = 0.0;
        for (const auto& c : V.comp) s += c[i] * c[i];
        sup = std::max(sup, s);
    }
    return std::sqrt(sup);
}

double sup_norm(const VectorField& K) {
    double sup = 0.0;
    for (std::size_t i = 0; i < K.grid.size(); ++i) {
        double s = 0.0;
        for (const auto& c : K.comp) s += c[i] * c[i];
        sup = std::max(sup, s);
    }
    return std::sqrt(sup);
}

double l2_norm(const MatrixField& V, const DensityField& m) {
    require_grid(V.grid, m.grid);
    double s = 0.0;
    for (std::size_t i = 0; i < V.grid.size(); ++i) {
        double v2 = 0.0;
        for (const auto& c : V.comp) v2 += c[i] * c[i];
        s += v2 * m.values[i];
    }
    return std::sqrt(s * V.grid.cell_volume());
}

}  // namespace pchaos
