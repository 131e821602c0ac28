#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "magsplit/darboux.hpp"
#include "magsplit/spline.hpp"

namespace magsplit {

// Bump potential sealing the lower well: support (c_d - radius, c_d + radius),
// peak value sigma0 at c_d. Profile is the standard compactly supported
// smooth bump sigma0 * exp(1 - 1/(1 - y^2)).
struct SealSpec {
    double center = -1.0;  // c_d
    double radius = 0.2;
    double sigma0 = 0.02;

    double value(double x2) const {
        const double y = (x2 - center) / radius;
        if (std::abs(y) >= 1.0) return 0.0;
        return sigma0 * std::exp(1.0 - 1.0 / (1.0 - y * y));
    }
    double derivative(double x2) const {
        const double y = (x2 - center) / radius;
        if (std::abs(y) >= 1.0) return 0.0;
        const double g = 1.0 - y * y;
        return value(x2) * (-2.0 * y / (g * g)) / radius;
    }
    bool in_support(double x2) const { return std::abs(x2 - center) < radius; }

    void validate(const FieldSpec& f) const {
        if (std::abs(center + f.c_u) > 1e-12)
            throw ConfigError("seal: must be centered at the lower well");
        if (!(sigma0 > 0.0)) throw ConfigError("seal: sigma0 must be positive");
        if (!(radius > 0.0 && radius < f.c_u / 4.0))
            throw ConfigError("seal: radius must be in (0, c_u/4)");
        const double cap = (1.0 - 3.0 * f.eps) * f.b0;
        if (!(sigma0 < cap)) {
            std::ostringstream os;
            os << "seal: sigma0=" << sigma0 << " violates sigma0 < (1-3*eps)*b0 = " << cap;
            throw ConfigError(os.str());
        }
    }
};

// ---------------------------------------------------------------------------
// Level curve gamma: B(i gamma(q2), q2) = b0, with gamma > 0 on (c_d, c_u)
// and gamma < 0 outside. B(it,q2) is even in t, so we solve for u = t^2.

inline double gamma_at(const FieldSpec& f, double q2, double* root_u = nullptr) {
    const Cplx z0{0.0, 0.0};
    auto G = [&](double u) {
        const double t = std::sqrt(std::max(u, 0.0));
        return f.B(Cplx(0.0, t), q2).real() - f.b0;
    };
    auto dG = [&](double u) {
        const double t = std::sqrt(std::max(u, 0.0));
        if (t < 1e-8) return -0.5 * f.d11B(z0, q2).real();
        // d/du B(i sqrt(u), q2) = i d1B(i t, q2) / (2 t)
        return (Cplx(0.0, 1.0) * f.d1B(Cplx(0.0, t), q2)).real() / (2.0 * t);
    };

    const double g0 = G(0.0);
    const double slope0 = dG(0.0);
    if (!(slope0 < 0.0)) {
        std::ostringstream os;
        os << "gamma_at: B(i t, " << q2 << ") is not decreasing at t=0, no level curve";
        throw NumericalError(os.str());
    }
    double u = std::max(g0 / (-slope0), 0.0);
    const double u_cap = sqr(f.strip_r * 0.999);
    const double tol = 1e-14 * f.b0;
    bool done = false;
    for (int it = 0; it < 80; ++it) {
        const double res = G(u);
        if (std::abs(res) <= tol) { done = true; break; }
        const double d = dG(u);
        if (d == 0.0) break;
        double un = u - res / d;
        if (un < 0.0) un = 0.5 * u;
        if (un > u_cap) un = 0.5 * (u + u_cap);
        if (un == u) { done = std::abs(res) <= 1e-12 * f.b0; break; }
        u = un;
    }
    if (!done && std::abs(G(u)) > 1e-12 * f.b0) {
        std::ostringstream os;
        os << "gamma_at: no root of B(it,q2)=b0 in the strip at q2=" << q2;
        throw NumericalError(os.str());
    }
    if (root_u) *root_u = u;
    const double t = std::sqrt(std::max(u, 0.0));
    const double inside = (q2 > -f.c_u && q2 < f.c_u) ? 1.0 : -1.0;
    if (q2 == f.c_u || q2 == -f.c_u) return 0.0;
    return inside * t;
}

// Gamma(x2) = gamma(x2) * int_0^1 B(i t gamma(x2), x2) dt. This is the image
// of the level curve under the Darboux map, and the magnitude of the weight
// slope away from the seal.
inline double Gamma_at(const FieldSpec& f, double x2, double rel_tol = 1e-13) {
    const double g = gamma_at(f, x2);
    if (g == 0.0) return 0.0;
    const Cplx val = integrate(
        [&](double t) { return f.B(Cplx(0.0, t * g), x2); }, 0.0, 1.0, rel_tol).value;
    return g * val.real();
}

// One-sided derivative of gamma at c_u (from inside), 5-point O(d^4) stencil
// with two Richardson levels. gamma is smooth through c_u.
inline double gamma_prime_cu(const FieldSpec& f, double step = 0.01) {
    auto der = [&](double d) {
        // gamma(c_u) = 0 drops out of the stencil
        const double f1 = gamma_at(f, f.c_u - d);
        const double f2 = gamma_at(f, f.c_u - 2.0 * d);
        const double f3 = gamma_at(f, f.c_u - 3.0 * d);
        const double f4 = gamma_at(f, f.c_u - 4.0 * d);
        return (-48.0 * f1 + 36.0 * f2 - 16.0 * f3 + 3.0 * f4) / (12.0 * d);
    };
    const double d1 = der(step), d2 = der(0.5 * step), d3 = der(0.25 * step);
    const double r1 = (16.0 * d2 - d1) / 15.0;
    const double r2 = (16.0 * d3 - d2) / 15.0;
    return (32.0 * r2 - r1) / 31.0;
}

// Action S = int_{c_d}^{c_u} int_0^{gamma(q2)} B(it,q2) dt dq2. Computed by
// nested quadrature and, independently, as int Gamma; both are returned.
struct ActionResult {
    double nested = 0.0;
    double via_Gamma = 0.0;
    double value() const { return via_Gamma; }
};

inline ActionResult action_S(const FieldSpec& f, double rel_tol = 1e-11) {
    ActionResult r;
    auto inner = [&](double q2) {
        const double g = gamma_at(f, q2);
        if (g == 0.0) return 0.0;
        const Cplx v = integrate(
            [&](double t) { return f.B(Cplx(0.0, t), q2); }, 0.0, g, 0.1 * rel_tol).value;
        return v.real();
    };
    r.nested = integrate([&](double q2) { return Cplx(inner(q2), 0.0); },
                         -f.c_u, f.c_u, rel_tol).value.real();
    r.via_Gamma = integrate([&](double q2) { return Cplx(Gamma_at(f, q2), 0.0); },
                            -f.c_u, f.c_u, rel_tol).value.real();
    if (!close_rel(r.nested, r.via_Gamma, 1e-9))
        throw InvariantViolation("action_S: the two action routes disagree beyond 1e-9");
    return r;
}

// ---------------------------------------------------------------------------
// Agmon weight phi_u: solution of calB(i phi', x2) + Sigma(x2) = b0.

struct EikonalProfile {
    std::vector<double> grid;  // ascending, spans [-X, X]
    std::vector<double> gamma; // level curve samples
    std::vector<double> Gamma; // weight slope magnitude samples
    std::vector<double> phi;   // phi_u
    std::vector<double> dphi;  // phi_u'
    double S = 0.0;
    double ddphi_cu = 0.0;     // phi_u''(c_u)
    SealSpec seal;
    double c_u = 0.0;

    CubicSpline phi_spline, dphi_spline;

    double phi_at(double x2) const { return phi_spline(x2); }
    double dphi_at(double x2) const { return dphi_spline(x2); }
};

namespace detail {

// calB(i s, x2) and d/ds calB(i s, x2) (both real) for the root solves.
struct ImagAxisEval {
    double calB;
    double dcalB_ds; // = Re( i d1_calB )
};

inline ImagAxisEval calB_imag_axis(const FieldSpec& f, double s, double x2) {
    const Cplx q1 = iota_inv(f, Cplx(0.0, s), x2, 1e-14);
    const Cplx B = f.B(q1, x2);
    const Cplx d1 = f.d1B(q1, x2) / B;
    return {B.real(), (Cplx(0.0, 1.0) * d1).real()};
}

// Solve calB(i s, x2) = rhs for s on the branch with sign(s) = branch_sign,
// seeded at s0. Newton with analytic slope, driven to the quadrature noise
// floor (downstream finite-difference cross-checks difference this value at
// 1e-5 steps, so slack here shows up amplified there).
inline double project_dphi(const FieldSpec& f, double x2, double rhs, double s0,
                           double branch_sign, double tol_scale = 1e-14) {
    double s = s0;
    if (s == 0.0) s = branch_sign * 1e-6;
    const double tol = tol_scale * f.b0;
    double best_s = s;
    double best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 60; ++it) {
        const ImagAxisEval e = calB_imag_axis(f, s, x2);
        const double res = std::abs(e.calB - rhs);
        if (res < best_res) {
            best_res = res;
            best_s = s;
        }
        if (res <= tol) return s;
        if (e.dcalB_ds == 0.0) break;
        double sn = s - (e.calB - rhs) / e.dcalB_ds;
        if (branch_sign * sn < 0.0) sn = 0.5 * s; // stay on the branch
        if (sn == s) break;                       // at the floating-point floor
        s = sn;
    }
    if (best_res <= 1e-11 * f.b0) return best_s;
    std::ostringstream os;
    os << "eikonal projection: no convergence at x2=" << x2 << " (rhs=" << rhs
       << ", best residual " << best_res << ")";
    throw NumericalError(os.str());
}

} // namespace detail

struct EikonalGrid {
    double half_width = 0.0; // X; 0 means default 2*c_u + 1
    int cells_per_unit = 0;  // 0 means default from spacing 1e-3 * (2X)
};

// Build the weight profile. Outside supp Sigma the slope is
// sign(x2-c_u)*|Gamma|; across the seal it is continued by integrating the
// differentiated eikonal as an ODE in phi' and projecting every point back
// onto the exact level set by Newton.
inline EikonalProfile solve_phi(const FieldSpec& f, const SealSpec& seal,
                                const EikonalGrid& gpar = {}) {
    seal.validate(f);
    EikonalProfile p;
    p.seal = seal;
    p.c_u = f.c_u;

    const double X = gpar.half_width > 0.0 ? gpar.half_width : 2.0 * f.c_u + 1.0;
    // spacing chosen so that 0 and +-c_u are exact nodes
    const double target_dx =
        gpar.cells_per_unit > 0 ? 1.0 / gpar.cells_per_unit : 1e-3 * (2.0 * X);
    const int k_cu = std::max(8, static_cast<int>(std::llround(f.c_u / target_dx)));
    const double dx = f.c_u / k_cu;
    const int n_half = static_cast<int>(std::ceil(X / dx - 1e-12));
    const int n_nodes = 2 * n_half + 1;

    p.grid.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) p.grid[i] = (i - n_half) * dx;

    const double sign_out = 1.0; // phi' > 0 for x2 > c_u
    p.gamma.resize(n_nodes);
    p.Gamma.resize(n_nodes);
    p.dphi.assign(n_nodes, 0.0);

    // pass 1: gamma, Gamma and the unsealed slope everywhere
    for (int i = 0; i < n_nodes; ++i) {
        const double x2 = p.grid[i];
        p.gamma[i] = gamma_at(f, x2);
        p.Gamma[i] = Gamma_at(f, x2);
        p.dphi[i] = (x2 >= f.c_u ? sign_out : -sign_out) * std::abs(p.Gamma[i]);
    }

    // pass 2: continue the slope through the seal. March left to right across
    // supp Sigma with an RK4 predictor on
    //   phi'' = -(d2_calB(i phi',x2) + Sigma'(x2)) / (i d1_calB(i phi',x2))
    // and Newton projection onto calB(i phi',x2) = b0 - Sigma(x2).
    {
        const double a = seal.center - seal.radius;
        const double b = seal.center + seal.radius;
        auto slope_ode = [&](double x2, double s) {
            const DarbouxFirst e = eval_darboux_first(f, Cplx(0.0, s), x2);
            const double denom = (Cplx(0.0, 1.0) * e.d1_calB).real();
            if (std::abs(denom) < 1e-12 * f.b0)
                throw NumericalError("solve_phi: transport coefficient vanished inside the seal "
                                     "(seal too aggressive for the field)");
            return -(e.d2_calB.real() + seal.derivative(x2)) / denom;
        };
        double s = 0.0;
        bool started = false;
        try {
            for (int i = 0; i < n_nodes; ++i) {
                const double x2 = p.grid[i];
                if (x2 <= a || x2 >= b) continue;
                if (!started) {
                    s = p.dphi[i - 1]; // initial data from the outer branch
                    started = true;
                }
                const double x_prev = p.grid[i - 1];
                const double k1 = slope_ode(x_prev, s);
                const double k2 = slope_ode(x_prev + 0.5 * dx, s + 0.5 * dx * k1);
                const double k3 = slope_ode(x_prev + 0.5 * dx, s + 0.5 * dx * k2);
                const double k4 = slope_ode(x_prev + dx, s + dx * k3);
                s += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                s = detail::project_dphi(f, x2, f.b0 - seal.value(x2), s, -1.0);
                p.dphi[i] = s;
            }
        } catch (const NumericalError& e) {
            throw NumericalError(std::string("solve_phi: seal too aggressive for the field "
                                             "(sealed level curve left the strip): ") +
                                 e.what());
        }
    }

    // exact slope used for the phi quadrature between nodes
    auto slope_exact = [&](double x2, double seed) {
        if (!seal.in_support(x2)) {
            const double G = Gamma_at(f, x2);
            return (x2 >= f.c_u ? 1.0 : -1.0) * std::abs(G);
        }
        return detail::project_dphi(f, x2, f.b0 - seal.value(x2), seed, -1.0);
    };

    // pass 3: cumulative phi by per-cell 5-point Gauss-Legendre of the exact
    // slope; accumulate away from c_u in both directions.
    static const double gl_x[5] = {-0.906179845938663992797626878299,
                                   -0.538469310105683091036314420700, 0.0,
                                   0.538469310105683091036314420700,
                                   0.906179845938663992797626878299};
    static const double gl_w[5] = {0.236926885056189087514264040720,
                                   0.478628670499366468041291514836,
                                   0.568888888888888888888888888889,
                                   0.478628670499366468041291514836,
                                   0.236926885056189087514264040720};
    const int i_cu = n_half + k_cu;
    p.phi.assign(n_nodes, 0.0);
    auto cell_integral = [&](int i) {
        // integral of the slope over [grid[i], grid[i+1]]
        const double xa = p.grid[i], xb = p.grid[i + 1];
        const double c = 0.5 * (xa + xb), hw = 0.5 * (xb - xa);
        double acc = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double x = c + hw * gl_x[k];
            const double t = (x - xa) / (xb - xa);
            const double seed = (1.0 - t) * p.dphi[i] + t * p.dphi[i + 1];
            acc += gl_w[k] * slope_exact(x, seed);
        }
        return acc * hw;
    };
    for (int i = i_cu; i + 1 < n_nodes; ++i) p.phi[i + 1] = p.phi[i] + cell_integral(i);
    for (int i = i_cu; i > 0; --i) p.phi[i - 1] = p.phi[i] - cell_integral(i - 1);

    // curvature at the well and the action
    const double gpcu = gamma_prime_cu(f);
    p.ddphi_cu = -f.b0 * gpcu;
    if (i_cu >= 8) {
        // cross-check against direct differencing of the slope at the nodes
        // nearest the well, one Richardson level
        auto der = [&](int stride) {
            return (-48.0 * p.dphi[i_cu - stride] + 36.0 * p.dphi[i_cu - 2 * stride] -
                    16.0 * p.dphi[i_cu - 3 * stride] + 3.0 * p.dphi[i_cu - 4 * stride]) /
                   (12.0 * stride * dx);
        };
        const double combined = (16.0 * der(1) - der(2)) / 15.0;
        if (!close_rel(combined, p.ddphi_cu, 1e-7))
            throw InvariantViolation("solve_phi: phi'' at the well disagrees between the "
                                     "gamma route and slope differencing");
    }
    p.S = action_S(f).value();

    p.phi_spline = CubicSpline(p.grid, p.phi);
    p.dphi_spline = CubicSpline(p.grid, p.dphi);
    return p;
}

// High-accuracy slope at an arbitrary point of a built profile: spline seed,
// Newton projection onto the exact level set.
inline double exact_dphi(const FieldSpec& f, const EikonalProfile& p, double x2) {
    const double seed = p.dphi_at(x2);
    const double rhs = f.b0 - p.seal.value(x2);
    const double branch = (x2 >= f.c_u) ? 1.0 : -1.0;
    if (std::abs(seed) < 1e-9) return seed; // at the well the slope vanishes
    return detail::project_dphi(f, x2, rhs, seed, branch);
}

} // namespace magsplit
