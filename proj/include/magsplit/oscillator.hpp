#pragma once

#include <array>
#include <sstream>
#include <vector>

#include "magsplit/gaussian.hpp"

namespace magsplit {

// Coefficient data of the fiber operators M0, M1, M2 at one phase-space
// point. calB and alpha (and their gradients/Hessians in the Darboux
// variables) are evaluated at (xi2 + i Phi'(x2), x2); Sigma at x2.
struct OscillatorData {
    double x2 = 0.0;
    double xi2 = 0.0;
    Cplx calB{1.0, 0.0};
    Cplx alpha{0.0, 0.0};
    std::array<Cplx, 2> grad_calB{};  // (d1, d2)
    std::array<Cplx, 2> grad_alpha{};
    std::array<Cplx, 3> hess_calB{};  // (d11, d12, d22)
    std::array<Cplx, 3> hess_alpha{};
    double Sigma = 0.0;
    double dphi = 0.0;   // Phi'(x2)
    double ddphi = 0.0;  // Phi''(x2)
    Cplx T_value{0.0, 0.0}; // subprincipal scalar entering M2 (default 0)

    Cplx first_eigenvalue() const { return calB + Sigma; }

    // derivative of (calB, alpha) along xi2 at fixed x2
    std::array<Cplx, 2> dir_xi2() const { return {grad_calB[0], grad_alpha[0]}; }
    // derivative of (calB, alpha) along x2 at fixed xi2 (the weight moves too)
    std::array<Cplx, 2> dir_x2() const {
        const Cplx iddphi{0.0, ddphi};
        return {iddphi * grad_calB[0] + grad_calB[1], iddphi * grad_alpha[0] + grad_alpha[1]};
    }
};

// ---------------------------------------------------------------------------
// Ground-state pair: F normalized in L2, G dual eigenfunction of M0^* with
// <F, G> = 1.

struct GaussianPair {
    GaussianState F, G;
    Cplx aF, aG; // exponents
    double C = 0.0;
    Cplx c{0.0, 0.0};
};

inline GaussianPair gaussian_pair(const OscillatorData& od) {
    GaussianPair p;
    p.aF = 1.0 / (od.calB - Cplx{0.0, 1.0} * od.alpha);
    p.aG = 1.0 / std::conj(od.calB + Cplx{0.0, 1.0} * od.alpha);
    if (!(p.aF.real() > 0.0) || !(p.aG.real() > 0.0))
        throw NumericalError("gaussian_pair: non-integrable exponent (Re(calB -+ i alpha) <= 0)");
    p.C = std::pow(p.aF.real() / PI, 0.25);
    const Cplx sFG = p.aF + std::conj(p.aG);
    const Cplx i0 = std::sqrt(2.0 * PI / sFG);
    p.c = std::conj(1.0 / (p.C * i0));
    p.F = GaussianState(p.aF, {Cplx{p.C, 0.0}});
    p.G = GaussianState(p.aG, {p.c});
    return p;
}

// ---------------------------------------------------------------------------
// Fiber operators. M0 is applied as the displayed operator; M1, M2 through
// exact Weyl quantization of their polynomial symbols.

inline GaussianState apply_M0(const OscillatorData& od, const GaussianState& s) {
    const Cplx B = od.calB, al = od.alpha;
    GaussianState Ds = apply_D(s);
    GaussianState DDs = apply_D(Ds);
    GaussianState r = DDs;
    r *= (B * B + al * al);
    // alpha (x D + D x)
    GaussianState xDs = mul_x(Ds);
    GaussianState Dxs = apply_D(mul_x(s));
    r.add_scaled(xDs, al);
    r.add_scaled(Dxs, al);
    r.add_scaled(mul_x(mul_x(s)), Cplx{1.0, 0.0});
    r.add_scaled(s, Cplx{od.Sigma, 0.0});
    return r;
}

struct MonomialTerm {
    int ax, bxi;
    Cplx coef;
};

inline std::vector<MonomialTerm> m1_terms(const OscillatorData& od) {
    const Cplx B = od.calB, al = od.alpha;
    const Cplx B1 = od.grad_calB[0], B2 = od.grad_calB[1];
    const Cplx A1 = od.grad_alpha[0], A2 = od.grad_alpha[1];
    return {
        {2, 1, 2.0 * A1},
        {1, 2, 2.0 * B * B1 + 2.0 * A2 + 2.0 * al * A1},
        {0, 3, 2.0 * B * B2 + 2.0 * al * A2},
    };
}

inline std::vector<MonomialTerm> m2_terms(const OscillatorData& od) {
    const Cplx B = od.calB, al = od.alpha;
    const Cplx B1 = od.grad_calB[0], B2 = od.grad_calB[1];
    const Cplx A1 = od.grad_alpha[0], A2 = od.grad_alpha[1];
    const Cplx B11 = od.hess_calB[0], B12 = od.hess_calB[1], B22 = od.hess_calB[2];
    const Cplx A11 = od.hess_alpha[0], A12 = od.hess_alpha[1], A22 = od.hess_alpha[2];
    return {
        {3, 1, A11},
        {2, 2, B1 * B1 + B * B11 + A1 * A1 + 2.0 * A12 + al * A11},
        {1, 3, 2.0 * B1 * B2 + 2.0 * B * B12 + 2.0 * A1 * A2 + A22 + 2.0 * al * A12},
        {0, 4, B2 * B2 + B * B22 + A2 * A2 + al * A22},
        {0, 0, od.T_value},
    };
}

inline GaussianState apply_terms(const std::vector<MonomialTerm>& terms, const GaussianState& s) {
    GaussianState acc;
    acc.a = s.a;
    bool first = true;
    for (const MonomialTerm& t : terms) {
        if (t.coef == Cplx{0.0, 0.0}) continue;
        GaussianState part = apply_weyl_monomial(t.ax, t.bxi, s);
        part *= t.coef;
        if (first) {
            acc = part;
            first = false;
        } else {
            acc.add_scaled(part, Cplx{1.0, 0.0});
        }
    }
    if (first) acc.c.assign(1, Cplx{0.0, 0.0});
    return acc;
}

inline GaussianState apply_M(int j, const OscillatorData& od, const GaussianState& s) {
    switch (j) {
        case 0: return apply_M0(od, s);
        case 1: return apply_terms(m1_terms(od), s);
        case 2: return apply_terms(m2_terms(od), s);
        default: throw NumericalError("apply_M: order must be 0, 1 or 2");
    }
}

// (1/i) d/dxi2 of M0 applied to s (coefficients differentiated along xi2).
inline GaussianState apply_dxi2_M0_over_i(const OscillatorData& od, const GaussianState& s) {
    const Cplx B = od.calB, al = od.alpha;
    const Cplx B1 = od.grad_calB[0], A1 = od.grad_alpha[0];
    GaussianState r = apply_D(apply_D(s));
    r *= 2.0 * B * B1;
    // d/dxi2 (x + alpha D)^2 = A1 [ D (x + alpha D) + (x + alpha D) D ]
    auto xaD = [&](const GaussianState& u) {
        GaussianState v = mul_x(u);
        v.add_scaled(apply_D(u), al);
        return v;
    };
    GaussianState t1 = apply_D(xaD(s));
    GaussianState t2 = xaD(apply_D(s));
    r.add_scaled(t1, A1);
    r.add_scaled(t2, A1);
    r *= Cplx{0.0, -1.0}; // 1/i
    return r;
}

// ---------------------------------------------------------------------------
// Ladder basis of M0 and the dual basis of M0^*.

struct LadderBasis {
    std::vector<GaussianState> psi;  // eigenfunctions of M0, psi[0] = F
    std::vector<GaussianState> dual; // biorthogonal eigenfunctions of M0^*
    Cplx calB;
    double Sigma = 0.0;

    Cplx eigenvalue(int n1) const { // n1 = 1-based level index
        return (2.0 * n1 - 1.0) * calB + Sigma;
    }
};

inline LadderBasis ladder_basis(const OscillatorData& od, int n_max,
                                double residual_tol = 1e-10) {
    if (n_max < 4) throw NumericalError("ladder_basis: n_max must be >= 4");
    LadderBasis lb;
    lb.calB = od.calB;
    lb.Sigma = od.Sigma;

    const GaussianPair pair = gaussian_pair(od);
    const Cplx B = od.calB, al = od.alpha;
    const Cplx beta2 = B * B + al * al;
    // raising operator (mu - i nu alpha / beta^2) x - i nu D with mu nu = 1/2
    const Cplx mu = std::sqrt(B / (2.0 * beta2));
    const Cplx nu = 1.0 / (2.0 * mu);
    const Cplx cx = mu - Cplx{0.0, 1.0} * nu * al / beta2;
    const Cplx cd = -Cplx{0.0, 1.0} * nu;
    // dual ladder: the raising operator of M0^*, i.e. the same formula with
    // conjugated parameters (not the conjugated operator, which would lower)
    const Cplx cx_d = std::conj(mu) - Cplx{0.0, 1.0} * std::conj(nu) * std::conj(al / beta2);
    const Cplx cd_d = -Cplx{0.0, 1.0} * std::conj(nu);

    lb.psi.push_back(pair.F);
    lb.dual.push_back(pair.G);
    for (int n = 1; n < n_max; ++n) {
        GaussianState up = mul_x(lb.psi.back());
        up *= cx;
        up.add_scaled(apply_D(lb.psi.back()), cd);
        lb.psi.push_back(up);

        GaussianState upd = mul_x(lb.dual.back());
        upd *= cx_d;
        upd.add_scaled(apply_D(lb.dual.back()), cd_d);
        lb.dual.push_back(upd);
    }
    // biorthonormalize the dual family: <psi_n, dual_n> = 1
    for (int n = 0; n < n_max; ++n) {
        const Cplx d = inner(lb.psi[n], lb.dual[n]);
        if (std::abs(d) < 1e-14)
            throw NumericalError("ladder_basis: degenerate dual pairing");
        lb.dual[n] *= std::conj(1.0 / d);
    }
    // verify the eigen-residual of every member
    for (int n = 0; n < n_max; ++n) {
        GaussianState r = apply_M0(od, lb.psi[n]);
        r.add_scaled(lb.psi[n], -lb.eigenvalue(n + 1));
        const double rel = r.coef_norm() / lb.psi[n].coef_norm();
        if (rel > residual_tol) {
            std::ostringstream os;
            os << "ladder_basis: eigen-residual " << rel << " at level " << n + 1;
            throw NumericalError(os.str());
        }
    }
    return lb;
}

// Reduced resolvent R0(z) = (M0 - z)^{-1} (Id - Pi) applied to a state with
// the same exponent as F. Expansion through the dual pairing; the first
// coefficient is projected out.
inline GaussianState R0_apply(const LadderBasis& lb, Cplx z, const GaussianState& s) {
    const int n_max = static_cast<int>(lb.psi.size());
    if (s.degree() + 1 > n_max)
        throw NumericalError("R0_apply: state degree exceeds the ladder basis");
    GaussianState acc;
    acc.a = s.a;
    acc.c.assign(1, Cplx{0.0, 0.0});
    for (int n = 1; n < n_max; ++n) {
        const Cplx coef = inner(s, lb.dual[n]);
        if (coef == Cplx{0.0, 0.0}) continue;
        acc.add_scaled(lb.psi[n], coef / (lb.eigenvalue(n + 1) - z));
    }
    return acc;
}

} // namespace magsplit
