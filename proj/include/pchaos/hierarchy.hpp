#pragma once

#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pchaos {

class HierarchyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Coefficient functions M_i(t): L, L·e^{Lt} or L·e^{−ηt}.
struct TimeFunction {
    enum class Kind { constant, growing, decaying };
    Kind kind = Kind::constant;
    double L = 0.0;
    double eta = 0.0;

    static TimeFunction constant(double L) { return {Kind::constant, L, 0.0}; }
    static TimeFunction growing(double L) { return {Kind::growing, L, 0.0}; }
    static TimeFunction decaying(double L, double eta) { return {Kind::decaying, L, eta}; }

    double operator()(double t) const;
    double integral(double t) const;  // ∫_0^t
};

struct HierarchyParams {
    int N = 200;
    int beta = 3;
    double c1 = 1.0;
    double c2 = 0.5;
    double C0 = 1.0;
    TimeFunction M1, M2, M3;
    double rho = 0.0;
    double t_star = 0.0;
    double r = 0.0;
    double alpha = 0.0;  // ≤ 0 selects β + 3

    double alpha_value() const { return alpha > 0.0 ? alpha : beta + 3.0; }
    // ρ·1_{t ≥ t_*}
    double rho_at(double t) const { return t >= t_star ? rho : 0.0; }
};

// Throws HierarchyError when the common hypotheses fail.
void validate(const HierarchyParams& p);

// max(1, θ/(1−θ)) with θ = ((c₂ + r/ρ)/c₁)^{1/α}; 0/0 = 0.
double i0(const HierarchyParams& p);

// Σ_{i=k}^N x^i/(i − k + i₀)^α with x[i−1] = x^i.
double z_transform(const std::vector<double>& x, int k, double i0, double alpha);

// |lhs − rhs| of the summation by parts for Σ_{i=k}^{N−1} i(x^{i+1} − x^i)/(i − k + i₀)^α.
double summation_by_parts_residual(const std::vector<double>& x, int k, double i0, double alpha);

// M^N_t = C₀e^{−∫ρ} + ∫_0^t e^{−∫_s^t ρ} M₃(s) ds, ρ(s) = ρ·1_{s ≥ t_*}.
double apriori_bound(const HierarchyParams& p, double t);

enum class BoundMode { global, decaying };

struct CertificateRow {
    std::string kind;  // initial | boundary | interior | telescoping
    double t = 0.0;
    double k = 0.0;
    double lhs = 0.0, rhs = 0.0;
    double margin() const { return lhs - rhs; }
};

struct EntBound {
    BoundMode mode = BoundMode::global;
    HierarchyParams params;
    double i0 = 1.0, alpha = 0.0, kappa = 0.0;
    double a = 0.0;        // (α−1)κ, coefficient of M₂ z^k
    double M = 0.0;        // global: certified M for w = Me^{Mt}k^β/N²
    double M0 = 0.0;       // decaying: M′(0)
    double Lpp = 0.0;      // decaying: L″
    double displayed = 0.0;  // constant in the proposition's displayed form
    double horizon = 0.0;
    std::vector<double> lattice;
    std::vector<CertificateRow> rows;
    bool certified = false;

    // Upper bound on x^k_t implied by the certificate.
    double operator()(double t, int k) const;
    // Bounds for k = 1..N at time t (one amplitude evaluation).
    std::vector<double> at(double t) const;
    // Supersolution amplitude: M e^{Mt} (global) or M′(t) (decaying).
    double amplitude(double t) const;
    double min_margin() const;
};

// Finds the certificate on [0, horizon]; throws "no certificate" if the search exceeds 1e12.
EntBound ent_bound(const HierarchyParams& p, BoundMode mode, double horizon);

void write_certificate(std::ostream& os, const EntBound& b, bool all_rows = true);

enum class HierarchySystem { entropic, l2 };

struct Closure {
    enum class Kind { proportional, zero, external };
    Kind kind = Kind::zero;
    // y^k_t for k = 1..N given x_t; used when kind == external.
    std::function<std::vector<double>(double t, const std::vector<double>& x)> external;

    static Closure proportional() { return {Kind::proportional, {}}; }
    static Closure zero() { return {Kind::zero, {}}; }
    const char* name() const;
};

struct HierarchyTrajectory {
    HierarchySystem system = HierarchySystem::entropic;
    std::vector<double> times;
    std::vector<std::vector<double>> x, y;
    std::string closure;
};

// Default initial data: C₀k²/N² (entropic) or C₀k(k+1)/(2N²) (L², generating function ≤ C₀/(N²(1−r)³)).
std::vector<double> default_initial(const HierarchyParams& p, HierarchySystem s);

// RK4 on the equality version of the hierarchy. Stores every `stride` steps and the final time.
HierarchyTrajectory integrate_hierarchy(const HierarchyParams& p, HierarchySystem s, const Closure& c, double T,
                                        double dt, std::vector<double> x0 = {}, int stride = 1);

struct ComparisonResult {
    bool metzler = true;
    bool hypothesis_violation = false;
    bool pass = false;          // min_k x^k ≥ −1e−10‖x‖ along the run
    double min_ratio = 0.0;     // min over t of min_k x^k/‖x‖
};

ComparisonResult comparison_check(const std::function<Eigen::MatrixXd(double)>& A, const Eigen::VectorXd& x0,
                                  double T);

struct L2Bound {
    HierarchyParams params;
    double T_star = 0.0;
    double operator()(double t, int k) const;
};

L2Bound l2_bound(const HierarchyParams& p);

struct GeneratingFunctionReport {
    double residual = 0.0;   // max (lhs − rhs)_+ / max(|rhs|, 1e−300)
    double tightness = 0.0;  // max lhs/rhs
};

// ∂F/∂t ≤ M₂ ∂F/∂r + 2M₃/(N²(1−r)³) for F(t,r) = Σ r^k x^k_t on interior stored times.
GeneratingFunctionReport generating_function_check(const HierarchyTrajectory& traj, const HierarchyParams& p,
                                                   const std::vector<double>& r_grid);

void write_trajectory_csv(std::ostream& os, const HierarchyTrajectory& traj,
                          const std::function<double(double, int)>& bound = {});

}  // namespace pchaos
