#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <sstream>

#include "magsplit/numeric.hpp"

namespace magsplit {

// Gauss-Kronrod 15(7) nodes/weights on [-1,1] (positive half; symmetric).
namespace gk15 {
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};
} // namespace gk15

struct QuadResult {
    Cplx value{0.0, 0.0};
    double abs_error = 0.0;
    int depth = 0;
};

namespace detail {

template <class F>
QuadResult gk15_panel(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    Cplx fc = f(c);
    Cplx result_k = fc * gk15::wgk[7];
    Cplx result_g = fc * gk15::wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = hw * gk15::xgk[j];
        Cplx fsum = f(c - dx) + f(c + dx);
        result_k += fsum * gk15::wgk[j];
        if (j % 2 == 1) result_g += fsum * gk15::wg[j / 2];
    }
    QuadResult r;
    r.value = result_k * hw;
    r.abs_error = std::abs(result_k - result_g) * std::abs(hw);
    return r;
}

template <class F>
void gk15_adaptive(const F& f, double a, double b, double tol_abs, double eps_floor, int depth,
                   int max_depth, Cplx& acc, double& err_acc) {
    QuadResult panel = gk15_panel(f, a, b);
    const double accept = std::max(tol_abs, eps_floor);
    if (panel.abs_error <= accept || depth >= max_depth) {
        if (panel.abs_error > accept && depth >= max_depth) {
            std::ostringstream os;
            os << "adaptive quadrature failed to converge on [" << a << "," << b
               << "]: panel error " << panel.abs_error << " > " << accept
               << " at depth cap " << max_depth;
            throw NumericalError(os.str());
        }
        acc += panel.value;
        err_acc += panel.abs_error;
        return;
    }
    const double c = 0.5 * (a + b);
    gk15_adaptive(f, a, c, 0.5 * tol_abs, eps_floor, depth + 1, max_depth, acc, err_acc);
    gk15_adaptive(f, c, b, 0.5 * tol_abs, eps_floor, depth + 1, max_depth, acc, err_acc);
}

} // namespace detail

// Adaptive Gauss-Kronrod 15(7) on [a,b] for a complex-valued integrand of a
// real variable. Tolerance is relative to the accumulated magnitude, with a
// small absolute floor so that integrals that are genuinely zero converge.
template <class F>
QuadResult integrate(const F& f, double a, double b, double rel_tol = 1e-12,
                     int max_depth = 48, double abs_floor = 1e-300) {
    if (a == b) return {};
    QuadResult first = detail::gk15_panel(f, a, b);
    double scale = std::max(std::abs(first.value), std::abs(b - a) * 1e-30);
    double tol_abs = std::max(rel_tol * scale, abs_floor);
    // panels whose error estimate is already at roundoff relative to the
    // global scale are accepted regardless of the per-level budget
    double eps_floor = 5e-17 * scale;
    Cplx acc{0.0, 0.0};
    double err = 0.0;
    detail::gk15_adaptive(f, a, b, tol_abs, eps_floor, 0, max_depth, acc, err);
    // one refinement pass when the first panel badly underestimated the scale
    if (std::abs(acc) > 4.0 * scale) {
        tol_abs = rel_tol * std::abs(acc);
        eps_floor = 5e-17 * std::abs(acc);
        acc = Cplx{0.0, 0.0};
        err = 0.0;
        detail::gk15_adaptive(f, a, b, tol_abs, eps_floor, 0, max_depth, acc, err);
    }
    QuadResult r;
    r.value = acc;
    r.abs_error = err;
    return r;
}

// Integral of f along the straight segment from 0 to z1 in the complex plane.
template <class F>
Cplx integrate_segment(const F& f, Cplx z1, double rel_tol = 1e-12) {
    if (z1 == Cplx{0.0, 0.0}) return {0.0, 0.0};
    auto g = [&](double t) { return f(z1 * t); };
    return z1 * integrate(g, 0.0, 1.0, rel_tol).value;
}

} // namespace magsplit
