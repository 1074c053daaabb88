#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pchaos {

using cplx = std::complex<double>;

// Guards T^{Nd} allocations; counted in array elements.
inline constexpr std::size_t kDefaultMemoryCap = std::size_t(1) << 31;

// Relative floor applied before any logarithm or ratio of densities.
inline constexpr double kDensityFloor = 1e-13;

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TorusGrid {
    int dim = 1;
    int n = 2;

    std::size_t size() const;
    double spacing() const { return 1.0 / n; }
    double cell_volume() const;
    // Coordinate of node `idx` along `axis` (row-major, last axis fastest).
    double coord(std::size_t idx, int axis) const;
    bool operator==(const TorusGrid&) const = default;
};

TorusGrid make_grid(int dim, int n, std::size_t cap = kDefaultMemoryCap);

std::size_t ipow(std::size_t base, int e);

struct Field {
    TorusGrid grid;
    std::vector<double> values;

    Field() = default;
    Field(TorusGrid g, std::vector<double> v);
    explicit Field(TorusGrid g, double fill = 0.0);
};

// Nonnegative grid function with Riemann sum equal to one.
struct DensityField : Field {
    DensityField() = default;
    // Validates nonnegativity (tiny negative round-off is clipped) and renormalizes.
    static DensityField normalized(TorusGrid g, std::vector<double> v);
    static DensityField uniform(TorusGrid g);

    double floor_value() const;
};

struct VectorField {
    TorusGrid grid;
    std::vector<std::vector<double>> comp;

    VectorField() = default;
    VectorField(TorusGrid g, int ncomp);
    int ncomp() const { return static_cast<int>(comp.size()); }
};

// d×d matrix field; comp[a*d + b] holds V_ab.
struct MatrixField {
    TorusGrid grid;
    int d = 0;
    std::vector<std::vector<double>> comp;

    MatrixField() = default;
    MatrixField(TorusGrid g, int d_);
    std::vector<double>& at(int a, int b) { return comp[static_cast<std::size_t>(a * d + b)]; }
    const std::vector<double>& at(int a, int b) const { return comp[static_cast<std::size_t>(a * d + b)]; }
};

// Half-spectrum (r2c layout) holding Fourier coefficients c_k with f(x) = Σ c_k e^{2πik·x}.
struct Spectrum {
    TorusGrid grid;
    std::vector<cplx> data;

    std::size_t last_extent() const { return static_cast<std::size_t>(grid.n / 2 + 1); }
};

Spectrum forward(const Field& f);
Spectrum forward(const TorusGrid& g, const double* values);
Field inverse(const Spectrum& s);
void inverse_into(const Spectrum& s, double* out);

// Signed wavenumber of array index i on an axis with n points.
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

// Visits every half-spectrum entry with its signed integer wavenumber vector.
template <class Fn>
void for_each_mode(const TorusGrid& g, Fn&& fn) {
    const int D = g.dim;
    const int n = g.n;
    const int nl = n / 2 + 1;
    std::vector<int> idx(static_cast<std::size_t>(D), 0);
    std::vector<int> k(static_cast<std::size_t>(D), 0);
    const std::size_t total = ipow(static_cast<std::size_t>(n), D - 1) * static_cast<std::size_t>(nl);
    for (std::size_t lin = 0; lin < total; ++lin) {
        for (int a = 0; a < D - 1; ++a) k[a] = wavenumber(idx[a], n);
        k[D - 1] = idx[D - 1];
        fn(lin, k.data());
        for (int a = D - 1; a >= 0; --a) {
            const int ext = (a == D - 1) ? nl : n;
            if (++idx[a] < ext) break;
            idx[a] = 0;
        }
    }
}

double integrate(const Field& f);

Field derivative(const Field& f, int axis);
VectorField gradient(const Field& f);
Field laplacian(const Field& f);
Field divergence(const VectorField& v);

Field convolve(const Field& f, const Field& m);
VectorField convolve(const VectorField& f, const Field& m);

DensityField marginalize(const DensityField& joint, int d, int j);
DensityField tensorize(const DensityField& m, int k, std::size_t cap = kDefaultMemoryCap);

// Cell averages over `bins` equal cells per axis of the trigonometric interpolant of f.
Field cell_average(const Field& f, int bins);

void write_pchl(const std::string& path, const Field& f);
Field read_pchl(const std::string& path);

}  // namespace pchaos
