#pragma once

#include <sstream>

#include "magsplit/field.hpp"
#include "magsplit/quadrature.hpp"

namespace magsplit {

// Gauge potential A2(q1,q2) = int_0^{q1} B(s,q2) ds along the straight
// segment, together with its q2-derivatives obtained by differentiating
// under the integral.
struct GaugeEval {
    Cplx a2;    // A2(q1,q2)
    Cplx d2a2;  // dA2/dq2   = int d2B
    Cplx d22a2; // d2A2/dq2^2 = int d22B
};

inline Cplx A2(const FieldSpec& f, Cplx q1, double q2, double rel_tol = 1e-12) {
    return integrate_segment([&](Cplx s) { return f.B(s, q2); }, q1, rel_tol);
}

inline GaugeEval eval_gauge(const FieldSpec& f, Cplx q1, double q2, double rel_tol = 1e-12) {
    GaugeEval g;
    g.a2 = integrate_segment([&](Cplx s) { return f.B(s, q2); }, q1, rel_tol);
    g.d2a2 = integrate_segment([&](Cplx s) { return f.d2B(s, q2); }, q1, rel_tol);
    g.d22a2 = integrate_segment([&](Cplx s) { return f.d22B(s, q2); }, q1, rel_tol);
    return g;
}

// Provable inversion strip half-width for x1: below this the Newton
// inversion is guaranteed; evaluations beyond it are attempted and verified
// by residual (the level curve itself lives inside the B-strip even when
// |Im x1| exceeds this bound).
inline double safe_strip(const FieldSpec& f) {
    return (1.0 - f.eps) * f.b0 * f.strip_r;
}

// Inverse of q1 -> A2(q1,q2) by Newton iteration with analytic Jacobian
// dA2/dq1 = B. B never vanishes on the strip, so the iteration is
// well-conditioned; iterates leaving the strip abort.
inline Cplx iota_inv(const FieldSpec& f, Cplx x1, double x2, double rel_tol = 1e-13) {
    Cplx q1 = x1 / f.b0;
    const double tol = rel_tol * std::max(1.0, std::abs(x1));
    for (int it = 0; it < 60; ++it) {
        if (std::abs(q1.imag()) >= f.strip_r) {
            std::ostringstream os;
            os << "iota_inv: Newton iterate left the strip at x1=(" << x1.real() << ","
               << x1.imag() << "), x2=" << x2;
            throw NumericalError(os.str());
        }
        const Cplx res = A2(f, q1, x2) - x1;
        if (std::abs(res) <= tol) return q1;
        q1 -= res / f.B(q1, x2);
    }
    std::ostringstream os;
    os << "iota_inv: no convergence at x1=(" << x1.real() << "," << x1.imag() << "), x2=" << x2;
    throw NumericalError(os.str());
}

// Field data transported to Darboux coordinates x = (A2(q), q2):
//   calB(x)  = B(iota^{-1}(x), x2),
//   alpha(x) = d2A2(iota^{-1}(x), x2),
// with first and second x-derivatives by the chain rule
//   d/dx1 = (1/B) d/dq1,   d/dx2 = d/dq2 - (d2A2/B) d/dq1.
struct DarbouxEval {
    Cplx x1;
    double x2 = 0.0;
    Cplx q1; // preimage under iota

    Cplx calB, d1_calB, d2_calB, d11_calB, d22_calB, d12_calB;
    Cplx alpha, d1_alpha, d2_alpha, d11_alpha, d22_alpha, d12_alpha;
};

// Value and first Darboux derivatives only; skips the second-derivative
// gauge integrals. The eikonal solver calls this in inner loops.
struct DarbouxFirst {
    Cplx q1;
    Cplx calB, d1_calB, d2_calB;
    Cplx alpha, d1_alpha;
};

inline DarbouxFirst eval_darboux_first(const FieldSpec& f, Cplx x1, double x2) {
    DarbouxFirst e;
    e.q1 = iota_inv(f, x1, x2);
    const Cplx B = f.B(e.q1, x2);
    const Cplx B1 = f.d1B(e.q1, x2);
    const Cplx B2 = f.d2B(e.q1, x2);
    const Cplx at = integrate_segment([&](Cplx s) { return f.d2B(s, x2); }, e.q1);
    e.calB = B;
    e.alpha = at;
    e.d1_calB = B1 / B;
    e.d2_calB = B2 - B1 * at / B;
    e.d1_alpha = B2 / B;
    return e;
}

inline DarbouxEval eval_darboux(const FieldSpec& f, Cplx x1, double x2) {
    DarbouxEval e;
    e.x1 = x1;
    e.x2 = x2;
    e.q1 = iota_inv(f, x1, x2);

    const Cplx q1 = e.q1;
    const Cplx B = f.B(q1, x2);
    const Cplx B1 = f.d1B(q1, x2);
    const Cplx B2 = f.d2B(q1, x2);
    const Cplx B11 = f.d11B(q1, x2);
    const Cplx B22 = f.d22B(q1, x2);
    const Cplx B12 = f.d12B(q1, x2);
    const GaugeEval g = eval_gauge(f, q1, x2);
    const Cplx at = g.d2a2;   // d2A2 at the preimage
    const Cplx at2 = g.d22a2; // d22A2
    const Cplx at222 = f.d222B ? integrate_segment([&](Cplx s) { return f.d222B(s, x2); }, q1)
                               : Cplx{0.0, 0.0};

    // dq1/dx2 at fixed x1 (implicit differentiation of A2(q1,x2)=x1)
    const Cplx qx2 = -at / B;

    e.calB = B;
    e.alpha = at;

    e.d1_calB = B1 / B;
    e.d2_calB = B2 + B1 * qx2;
    e.d1_alpha = B2 / B;
    e.d2_alpha = at2 + B2 * qx2;

    e.d11_calB = (B11 * B - B1 * B1) / (B * B * B);
    // d/dx2 of (B1/B)
    e.d12_calB = (B12 * B - B1 * B2) / (B * B) + (B11 * B - B1 * B1) / (B * B) * qx2;
    // d/dx2 of (B2 + B1*qx2): expand m(q1,q2) = B2 - B1*at/B
    {
        const Cplx dq1_m = B12 - (B11 * at / B + B1 * B2 / B - B1 * at * B1 / (B * B));
        const Cplx dq2_m = B22 - (B12 * at / B + B1 * at2 / B - B1 * at * B2 / (B * B));
        e.d22_calB = dq2_m + dq1_m * qx2;
    }

    e.d11_alpha = (B12 * B - B2 * B1) / (B * B * B);
    e.d12_alpha = (B22 * B - B2 * B2) / (B * B) + (B12 * B - B2 * B1) / (B * B) * qx2;
    // d/dx2 of (at2 + B2*qx2): expand k(q1,q2) = at2 - B2*at/B
    {
        if (!f.d222B)
            throw NumericalError("eval_darboux: FieldSpec.d222B required for d22_alpha");
        const Cplx dq1_k = B22 - (B12 * at / B + B2 * B2 / B - B2 * at * B1 / (B * B));
        const Cplx dq2_k = at222 - (B22 * at / B + B2 * at2 / B - B2 * at * B2 / (B * B));
        e.d22_alpha = dq2_k + dq1_k * qx2;
    }
    return e;
}

} // namespace magsplit
