#pragma once

#include <functional>
#include <sstream>
#include <vector>

#include "magsplit/numeric.hpp"

namespace magsplit {

// A magnetic field B(q1,q2) with two symmetric wells at (0, +-c_u).
// The first argument extends holomorphically to the strip |Im q1| < strip_r;
// the second argument is real. Analytic derivatives are carried explicitly
// because everything downstream (flux integrals, transport coefficients,
// prefactors) consumes derivatives and amplifies their error.
struct FieldSpec {
    double b0 = 1.0;      // field value at the wells
    double eps = 0.5;     // declared variation bound: |B - b0| <= eps*b0 on the strip
    double strip_r = 0.3; // analyticity strip half-width in q1
    double c_u = 1.0;     // ordinate of the upper well (lower well at -c_u)

    using Map = std::function<Cplx(Cplx, double)>;
    Map B;      // B(q1, q2)
    Map d1B;    // dB/dq1
    Map d2B;    // dB/dq2
    Map d11B;   // d^2B/dq1^2
    Map d22B;   // d^2B/dq2^2
    Map d12B;   // d^2B/dq1 dq2
    Map d222B;  // d^3B/dq2^3 (consumed by the second x2-derivative of the
                // transported gauge derivative; keeps that path analytic too)
};

// Parameters of the built-in double-well family
//   B(q) = b0 (1 + e1 (1 - s(q1)) + e2 s(q1) W(q2)),   s(q1) = 1/(1+q1^2),
// with well profile W(q2) = (1 - exp(-beta (q2^2-c_u^2)^2)) / 2.
struct ExampleFieldParams {
    double b0 = 1.0;
    double eps1 = 0.25;
    double eps2 = 0.10;
    double c_u = 1.0;
    double beta = 1.25; // = eps1/(2 eps2): makes the well isotropic
    double strip_r = 0.5;

    double eps3() const { return eps2 / eps1; }

    void validate() const {
        if (!(b0 > 0.0)) throw ConfigError("example field: b0 must be positive");
        if (!(eps1 > 0.0 && eps1 <= 1.0)) throw ConfigError("example field: eps1 must be in (0,1]");
        if (!(eps2 > 0.0 && eps2 <= 1.0)) throw ConfigError("example field: eps2 must be in (0,1]");
        if (eps2 > eps1)
            throw ConfigError("example field: eps2 > eps1 breaks the monotonicity assumption");
        if (!(c_u > 0.0)) throw ConfigError("example field: c_u must be positive");
        if (!(beta > 0.0)) throw ConfigError("example field: beta must be positive");
        if (!(strip_r > 0.0 && strip_r < 1.0))
            throw ConfigError("example field: strip_r must be in (0,1) (poles at q1 = +-i)");
    }
};

namespace detail {

// Well profile W and derivatives. W is smooth, even, 0 <= W <= 1/2,
// vanishes quadratically at +-c_u.
struct WellProfile {
    double beta, cu2;
    double W(double q2) const {
        const double u = q2 * q2 - cu2;
        return 0.5 * (1.0 - std::exp(-beta * u * u));
    }
    double dW(double q2) const {
        const double u = q2 * q2 - cu2;
        return 2.0 * beta * q2 * u * std::exp(-beta * u * u);
    }
    double ddW(double q2) const {
        const double u = q2 * q2 - cu2;
        const double e = std::exp(-beta * u * u);
        return 2.0 * beta * (u + 2.0 * q2 * q2 - 4.0 * beta * q2 * q2 * u * u) * e;
    }
    double dddW(double q2) const {
        const double u = q2 * q2 - cu2;
        const double q = q2;
        const double e = std::exp(-beta * u * u);
        return 2.0 * beta * e *
               (6.0 * q - 12.0 * beta * q * u * u - 24.0 * beta * q * q * q * u +
                16.0 * beta * beta * q * q * q * u * u * u);
    }
};

} // namespace detail

inline FieldSpec make_example_field(const ExampleFieldParams& p) {
    p.validate();
    detail::WellProfile w{p.beta, p.c_u * p.c_u};
    const double b0 = p.b0, e1 = p.eps1, e2 = p.eps2;

    auto s = [](Cplx q1) { return 1.0 / (1.0 + q1 * q1); };
    auto ds = [&](Cplx q1) { Cplx v = s(q1); return -2.0 * q1 * v * v; };
    auto dds = [&](Cplx q1) { Cplx v = s(q1); return v * v * (8.0 * q1 * q1 * v - 2.0); };

    FieldSpec f;
    f.b0 = b0;
    f.c_u = p.c_u;
    f.strip_r = p.strip_r;
    // declared variation bound: sup |g| -> 1 at infinity on the strip, and the
    // W part contributes at most e2 * (1/2) / (1 - r^2)
    f.eps = e1 + 0.5 * e2 / (1.0 - p.strip_r * p.strip_r);

    f.B = [=](Cplx q1, double q2) {
        return b0 * (1.0 + e1 * (1.0 - s(q1)) + e2 * s(q1) * w.W(q2));
    };
    f.d1B = [=](Cplx q1, double q2) { return b0 * ds(q1) * (e2 * w.W(q2) - e1); };
    f.d2B = [=](Cplx q1, double q2) { return b0 * e2 * s(q1) * w.dW(q2); };
    f.d11B = [=](Cplx q1, double q2) { return b0 * dds(q1) * (e2 * w.W(q2) - e1); };
    f.d22B = [=](Cplx q1, double q2) { return b0 * e2 * s(q1) * w.ddW(q2); };
    f.d12B = [=](Cplx q1, double q2) { return b0 * e2 * ds(q1) * w.dW(q2); };
    f.d222B = [=](Cplx q1, double q2) { return b0 * e2 * s(q1) * w.dddW(q2); };
    return f;
}

// ---------------------------------------------------------------------------
// Assumption checking (sampling-based)

struct CheckItem {
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity(); // >=0 means pass
    Cplx worst_q1{0.0, 0.0};
    double worst_q2 = 0.0;

    void update(double margin, Cplx q1, double q2) {
        if (margin < worst_margin) {
            worst_margin = margin;
            worst_q1 = q1;
            worst_q2 = q2;
        }
        if (margin < 0.0) pass = false;
    }
};

struct AssumptionReport {
    CheckItem symmetry_q1;      // B(-q1,q2) = B(q1,q2)
    CheckItem symmetry_q2;      // B(q1,-q2) = B(q1,q2)
    CheckItem variation;        // |B - b0| <= eps*b0 on the strip
    CheckItem d2_bound;         // |d2B| <= (1-eps)*b0/(2r)
    CheckItem positivity;       // Re B >= (1-eps)*b0
    CheckItem monotonicity;     // Re(d1B/B) >= 0 for Re q1 >= 0
    CheckItem well_position;    // B(0,c_u) = b0 and gradient vanishes there
    CheckItem well_nondegenerate; // Hess B(0,c_u) diagonal positive

    bool all_pass() const {
        return symmetry_q1.pass && symmetry_q2.pass && variation.pass && d2_bound.pass &&
               positivity.pass && monotonicity.pass && well_position.pass &&
               well_nondegenerate.pass;
    }
};

struct CheckSampling {
    double q_range = 8.0;      // real sampling range [-Q,Q] in both variables
    int n_real = 41;           // lattice points per real direction
    int n_imag = 9;            // strip depths
    double strip_margin = 0.05; // sample |Im q1| <= r*(1-margin)
    int n_random = 200;        // extra seeded random strip points
    std::uint64_t seed = 0x5eed;
    double sym_tol = 1e-11;    // tolerance for the symmetry identities
};

inline AssumptionReport check_assumptions(const FieldSpec& f, const CheckSampling& s = {}) {
    AssumptionReport rep;
    const double b0 = f.b0, eps = f.eps, r = f.strip_r;
    const double d2_cap = (1.0 - eps) * b0 / (2.0 * r);

    auto visit = [&](Cplx q1, double q2) {
        const Cplx bv = f.B(q1, q2);
        rep.variation.update(eps * b0 - std::abs(bv - b0), q1, q2);
        rep.d2_bound.update(d2_cap - std::abs(f.d2B(q1, q2)), q1, q2);
        rep.positivity.update(bv.real() - (1.0 - eps) * b0, q1, q2);
        if (q1.real() >= 0.0) {
            const Cplx ratio = f.d1B(q1, q2) / bv;
            // tiny slack absorbs roundoff on the axis Re q1 = 0 where the
            // ratio is exactly imaginary
            rep.monotonicity.update(ratio.real() + 1e-13, q1, q2);
        }
        if (q1.imag() == 0.0) {
            const double scale = std::abs(bv);
            const Cplx b_m1 = f.B(-q1, q2);
            const Cplx b_m2 = f.B(q1, -q2);
            rep.symmetry_q1.update(s.sym_tol * scale - std::abs(b_m1 - bv), q1, q2);
            rep.symmetry_q2.update(s.sym_tol * scale - std::abs(b_m2 - bv), q1, q2);
        }
    };

    for (int i = 0; i < s.n_real; ++i) {
        const double x = -s.q_range + 2.0 * s.q_range * i / (s.n_real - 1);
        for (int j = 0; j < s.n_real; ++j) {
            const double q2 = -s.q_range + 2.0 * s.q_range * j / (s.n_real - 1);
            for (int k = 0; k < s.n_imag; ++k) {
                const double y = -r * (1.0 - s.strip_margin) +
                                 2.0 * r * (1.0 - s.strip_margin) * k / (s.n_imag - 1);
                visit(Cplx(x, y), q2);
            }
        }
    }
    Rng rng(s.seed);
    for (int i = 0; i < s.n_random; ++i) {
        const double x = rng.uniform(-s.q_range, s.q_range);
        const double y = rng.uniform(-r * (1.0 - s.strip_margin), r * (1.0 - s.strip_margin));
        const double q2 = rng.uniform(-s.q_range, s.q_range);
        visit(Cplx(x, y), q2);
    }

    // well position and non-degeneracy at (0, c_u)
    {
        const Cplx z0{0.0, 0.0};
        const double bu = f.B(z0, f.c_u).real();
        const double g1 = std::abs(f.d1B(z0, f.c_u));
        const double g2 = std::abs(f.d2B(z0, f.c_u));
        rep.well_position.update(1e-10 * b0 - std::abs(bu - b0), z0, f.c_u);
        rep.well_position.update(1e-10 * b0 - g1, z0, f.c_u);
        rep.well_position.update(1e-10 * b0 - g2, z0, f.c_u);
        const double h11 = f.d11B(z0, f.c_u).real();
        const double h22 = f.d22B(z0, f.c_u).real();
        const double h12 = std::abs(f.d12B(z0, f.c_u));
        rep.well_nondegenerate.update(h11 - 1e-10 * b0, z0, f.c_u);
        rep.well_nondegenerate.update(h22 - 1e-10 * b0, z0, f.c_u);
        rep.well_nondegenerate.update(1e-10 * b0 - h12, z0, f.c_u);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Well coefficients of the two-term eigenvalue expansion

struct WellCoefficients {
    double h11 = 0.0; // H = (1/2) diag(d11B, d22B) at the upper well
    double h22 = 0.0;
    double d0 = 0.0;  // sqrt(det H)/b0
    double d1 = 0.0;  // (Tr H^{1/2})^2 / (2 b0)
};

inline WellCoefficients well_coefficients(const FieldSpec& f) {
    const Cplx z0{0.0, 0.0};
    const double b11 = f.d11B(z0, f.c_u).real();
    const double b22 = f.d22B(z0, f.c_u).real();
    if (!(b11 > 0.0) || !(b22 > 0.0)) {
        std::ostringstream os;
        os << "well_coefficients: degenerate well, curvatures (" << b11 << ", " << b22 << ")";
        throw InvariantViolation(os.str());
    }
    WellCoefficients wc;
    wc.h11 = 0.5 * b11;
    wc.h22 = 0.5 * b22;
    wc.d0 = std::sqrt(wc.h11 * wc.h22) / f.b0;
    wc.d1 = sqr(std::sqrt(wc.h11) + std::sqrt(wc.h22)) / (2.0 * f.b0);
    return wc;
}

} // namespace magsplit
