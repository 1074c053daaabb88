#include "pchaos/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "pchaos/simd.hpp"

namespace pchaos {

std::size_t ipow(std::size_t base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

std::size_t TorusGrid::size() const { return ipow(static_cast<std::size_t>(n), dim); }

double TorusGrid::cell_volume() const { return std::pow(spacing(), dim); }

double TorusGrid::coord(std::size_t idx, int axis) const {
    const std::size_t stride = ipow(static_cast<std::size_t>(n), dim - 1 - axis);
    return static_cast<double>((idx / stride) % static_cast<std::size_t>(n)) / n;
}

TorusGrid make_grid(int dim, int n, std::size_t cap) {
    if (dim < 1) throw GridError("dim must be >= 1");
    if (n < 2) throw GridError("n too small");
    long double count = 1;
    for (int i = 0; i < dim; ++i) count *= n;
    if (count > static_cast<long double>(cap))
        throw GridError("grid of " + std::to_string(n) + "^" + std::to_string(dim) + " nodes exceeds memory cap");
    return TorusGrid{dim, n};
}

Field::Field(TorusGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw GridError("field size does not match grid");
}

Field::Field(TorusGrid g, double fill) : grid(g), values(g.size(), fill) {}

DensityField DensityField::normalized(TorusGrid g, std::vector<double> v) {
    DensityField m;
    m.grid = g;
    m.values = std::move(v);
    if (m.values.size() != g.size()) throw GridError("density size does not match grid");
    double sum = 0.0, amax = 0.0;
    for (double x : m.values) {
        if (!std::isfinite(x)) throw GridError("density has non-finite values");
        sum += x;
        amax = std::max(amax, std::abs(x));
    }
    for (double& x : m.values) {
        if (x < 0.0) {
            if (x < -1e-9 * amax) throw GridError("density has negative values");
            x = 0.0;
        }
    }
    const double mass = sum * g.cell_volume();
    if (!(mass > 0.0)) throw GridError("density has zero mass");
    const double s = 1.0 / mass;
    for (double& x : m.values) x *= s;
    return m;
}

DensityField DensityField::uniform(TorusGrid g) { return normalized(g, std::vector<double>(g.size(), 1.0)); }

double DensityField::floor_value() const {
    double sum = 0.0;
    for (double x : values) sum += x;
    return kDensityFloor * sum / static_cast<double>(values.size());
}

VectorField::VectorField(TorusGrid g, int ncomp)
    : grid(g), comp(static_cast<std::size_t>(ncomp), std::vector<double>(g.size(), 0.0)) {}

MatrixField::MatrixField(TorusGrid g, int d_)
    : grid(g), d(d_), comp(static_cast<std::size_t>(d_ * d_), std::vector<double>(g.size(), 0.0)) {}

// ---------------------------------------------------------------------------
// FFTW plan cache. ESTIMATE plans keep results bitwise reproducible run to run.

namespace {

struct Plan {
    int dim, n;
    std::size_t nreal, ncplx;
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;

    Plan(int dim_, int n_) : dim(dim_), n(n_) {
        nreal = ipow(static_cast<std::size_t>(n), dim);
        ncplx = ipow(static_cast<std::size_t>(n), dim - 1) * static_cast<std::size_t>(n / 2 + 1);
        rbuf = fftw_alloc_real(nreal);
        cbuf = fftw_alloc_complex(ncplx);
        std::vector<int> dims(static_cast<std::size_t>(dim), n);
        fwd = fftw_plan_dft_r2c(dim, dims.data(), rbuf, cbuf, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r(dim, dims.data(), cbuf, rbuf, FFTW_ESTIMATE);
    }
    ~Plan() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(rbuf);
        fftw_free(cbuf);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
};

std::mutex g_plan_mutex;

Plan& plan_for(const TorusGrid& g) {
    static std::map<std::pair<int, int>, std::unique_ptr<Plan>> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto key = std::make_pair(g.dim, g.n);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, std::make_unique<Plan>(g.dim, g.n)).first;
    return *it->second;
}

void check_same(const TorusGrid& a, const TorusGrid& b) {
    if (!(a == b)) throw GridError("grid mismatch");
}

}  // namespace

Spectrum forward(const TorusGrid& g, const double* values) {
    Plan& p = plan_for(g);
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    std::memcpy(p.rbuf, values, p.nreal * sizeof(double));
    fftw_execute(p.fwd);
    Spectrum s;
    s.grid = g;
    s.data.resize(p.ncplx);
    const double scale = 1.0 / static_cast<double>(p.nreal);
    const cplx* src = reinterpret_cast<const cplx*>(p.cbuf);
    for (std::size_t i = 0; i < p.ncplx; ++i) s.data[i] = src[i] * scale;
    return s;
}

Spectrum forward(const Field& f) { return forward(f.grid, f.values.data()); }

void inverse_into(const Spectrum& s, double* out) {
    Plan& p = plan_for(s.grid);
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    std::memcpy(reinterpret_cast<void*>(p.cbuf), s.data.data(), p.ncplx * sizeof(fftw_complex));
    fftw_execute(p.bwd);
    std::memcpy(out, p.rbuf, p.nreal * sizeof(double));
}

Field inverse(const Spectrum& s) {
    Field f(s.grid);
    inverse_into(s, f.values.data());
    return f;
}

double integrate(const Field& f) {
    double sum = 0.0;
    for (double x : f.values) sum += x;
    return sum * f.grid.cell_volume();
}

Field derivative(const Field& f, int axis) {
    if (axis < 0 || axis >= f.grid.dim) throw GridError("axis out of range");
    Spectrum s = forward(f);
    const int n = f.grid.n;
    const double two_pi = 2.0 * std::numbers::pi;
    for_each_mode(f.grid, [&](std::size_t lin, const int* k) {
        const int ka = k[axis];
        if (n % 2 == 0 && std::abs(ka) == n / 2) s.data[lin] = 0.0;
        else s.data[lin] *= cplx(0.0, two_pi * ka);
    });
    return inverse(s);
}

VectorField gradient(const Field& f) {
    VectorField g(f.grid, f.grid.dim);
    for (int a = 0; a < f.grid.dim; ++a) g.comp[a] = derivative(f, a).values;
    return g;
}

Field laplacian(const Field& f) {
    Spectrum s = forward(f);
    const double c = -4.0 * std::numbers::pi * std::numbers::pi;
    const int D = f.grid.dim;
    for_each_mode(f.grid, [&](std::size_t lin, const int* k) {
        double k2 = 0.0;
        for (int a = 0; a < D; ++a) k2 += static_cast<double>(k[a]) * k[a];
        s.data[lin] *= c * k2;
    });
    return inverse(s);
}

Field divergence(const VectorField& v) {
    if (v.ncomp() != v.grid.dim) throw GridError("divergence needs one component per axis");
    Field out(v.grid);
    for (int a = 0; a < v.grid.dim; ++a) {
        Field c(v.grid, v.comp[a]);
        Field da = derivative(c, a);
        simd::axpy(1.0, da.values.data(), out.values.data(), out.values.size());
    }
    return out;
}

Field convolve(const Field& f, const Field& m) {
    check_same(f.grid, m.grid);
    Spectrum a = forward(f);
    Spectrum b = forward(m);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] *= b.data[i];
    return inverse(a);
}

VectorField convolve(const VectorField& f, const Field& m) {
    check_same(f.grid, m.grid);
    Spectrum b = forward(m);
    VectorField out(f.grid, f.ncomp());
    for (int c = 0; c < f.ncomp(); ++c) {
        Spectrum a = forward(f.grid, f.comp[c].data());
        for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] *= b.data[i];
        inverse_into(a, out.comp[c].data());
    }
    return out;
}

DensityField marginalize(const DensityField& joint, int d, int j) {
    const int D = joint.grid.dim;
    if (d < 1 || D % d != 0) throw GridError("joint dimension not divisible by d");
    const int k = D / d;
    if (j < 1 || j > k) throw GridError("marginal level j must satisfy 1 <= j <= k");
    if (j == k) return joint;
    const TorusGrid out_grid{j * d, joint.grid.n};
    const std::size_t outer = out_grid.size();
    const std::size_t inner = ipow(static_cast<std::size_t>(joint.grid.n), (k - j) * d);
    std::vector<double> v(outer, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = joint.values.data() + o * inner;
        double s = 0.0;
        for (std::size_t i = 0; i < inner; ++i) s += src[i];
        v[o] = s;
    }
    return DensityField::normalized(out_grid, std::move(v));
}

DensityField tensorize(const DensityField& m, int k, std::size_t cap) {
    if (k < 1) throw GridError("tensor power must be >= 1");
    const TorusGrid g = make_grid(m.grid.dim * k, m.grid.n, cap);
    if (k == 1) return m;
    const std::size_t base = m.values.size();
    std::vector<double> v(m.values);
    for (int p = 1; p < k; ++p) {
        std::vector<double> next(v.size() * base);
        for (std::size_t a = 0; a < v.size(); ++a) {
            const double va = v[a];
            double* dst = next.data() + a * base;
            for (std::size_t b = 0; b < base; ++b) dst[b] = va * m.values[b];
        }
        v.swap(next);
    }
    DensityField out;
    out.grid = g;
    out.values = std::move(v);
    return out;
}

Field cell_average(const Field& f, int bins) {
    const TorusGrid& g = f.grid;
    if (bins < 1 || bins > g.n) throw GridError("bins must lie in [1, n]");
    const int D = g.dim;
    const int n = g.n;
    const double two_pi = 2.0 * std::numbers::pi;
    Spectrum s = forward(f);
    // Fold the full spectrum modulo `bins`, weighting by the cell-average factor of each mode.
    const std::size_t nb = ipow(static_cast<std::size_t>(bins), D);
    std::vector<cplx> folded(nb, 0.0);
    auto cell_factor = [&](int k) {
        if (k == 0) return cplx(1.0, 0.0);
        const double w = 1.0 / bins;
        const cplx z = cplx(0.0, two_pi * k * w);
        return (std::exp(z) - 1.0) / z;
    };
    std::vector<int> full(static_cast<std::size_t>(D));
    for_each_mode(g, [&](std::size_t lin, const int* k) {
        // Each half-spectrum entry stands for itself and (if not self-conjugate) its mirror.
        const int kl = k[D - 1];
        const bool self_mirror = kl == 0 || (n % 2 == 0 && kl == n / 2);
        for (int mirror = 0; mirror < (self_mirror ? 1 : 2); ++mirror) {
            cplx c = mirror ? std::conj(s.data[lin]) : s.data[lin];
            std::size_t idx = 0;
            cplx fac = 1.0;
            for (int a = 0; a < D; ++a) {
                int ka = mirror ? -k[a] : k[a];
                // Nyquist entries are shared between ±n/2; split them symmetrically.
                if (n % 2 == 0 && std::abs(ka) == n / 2) {
                    fac *= 0.5 * (cell_factor(n / 2) + cell_factor(-n / 2));
                } else {
                    fac *= cell_factor(ka);
                }
                idx = idx * bins + static_cast<std::size_t>(((ka % bins) + bins) % bins);
            }
            folded[idx] += c * fac;
        }
    });
    // Evaluate Σ_k folded_k e^{2πik·j/bins} at cell origins.
    TorusGrid out_grid{D, bins};
    Field out(out_grid);
    for (std::size_t cidx = 0; cidx < nb; ++cidx) {
        std::size_t rem = cidx;
        std::vector<int> jc(static_cast<std::size_t>(D));
        for (int a = D - 1; a >= 0; --a) {
            jc[a] = static_cast<int>(rem % bins);
            rem /= bins;
        }
        cplx acc = 0.0;
        for (std::size_t kidx = 0; kidx < nb; ++kidx) {
            if (folded[kidx] == cplx(0.0)) continue;
            std::size_t r2 = kidx;
            double phase = 0.0;
            for (int a = D - 1; a >= 0; --a) {
                phase += static_cast<double>(r2 % bins) * jc[a];
                r2 /= bins;
            }
            acc += folded[kidx] * std::polar(1.0, two_pi * phase / bins);
        }
        out.values[cidx] = acc.real();
    }
    (void)full;
    return out;
}

// ---------------------------------------------------------------------------
// PCHL snapshots: "PCHL", u32 version, u32 dim, u32 n, n^dim little-endian f64.

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw GridError("truncated PCHL header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_pchl(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw GridError("cannot open " + path);
    os.write("PCHL", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(f.grid.dim));
    put_u32(os, static_cast<std::uint32_t>(f.grid.n));
    for (double x : f.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        os.write(reinterpret_cast<const char*>(b), 8);
    }
    if (!os) throw GridError("write failed: " + path);
}

Field read_pchl(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw GridError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PCHL", 4) != 0) throw GridError("bad PCHL magic");
    if (get_u32(is) != 1) throw GridError("unsupported PCHL version");
    const int dim = static_cast<int>(get_u32(is));
    const int n = static_cast<int>(get_u32(is));
    Field f(make_grid(dim, n));
    for (double& x : f.values) {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        if (!is) throw GridError("truncated PCHL payload");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
        std::memcpy(&x, &bits, 8);
    }
    return f;
}

}  // namespace pchaos
