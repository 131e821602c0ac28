#pragma once

#include <vector>

#include "magsplit/numeric.hpp"

namespace magsplit {

// P(x) * exp(-a x^2 / 2) with complex polynomial P and Re a > 0.
// This class is closed under everything the oscillator pipeline applies:
// multiplication by polynomials, differentiation, Weyl-quantized monomials.
// Inner products reduce to closed-form Gaussian moments, so there is no
// x-discretization error anywhere in the amplitude computation.
struct GaussianState {
    Cplx a{1.0, 0.0};
    std::vector<Cplx> c; // polynomial coefficients, c[k] x^k

    GaussianState() = default;
    GaussianState(Cplx exponent, std::vector<Cplx> coef) : a(exponent), c(std::move(coef)) {}

    int degree() const {
        for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k)
            if (c[k] != Cplx{0.0, 0.0}) return k;
        return -1;
    }

    double coef_norm() const {
        double s = 0.0;
        for (const Cplx& v : c) s += std::norm(v);
        return std::sqrt(s);
    }

    GaussianState& operator*=(Cplx z) {
        for (Cplx& v : c) v *= z;
        return *this;
    }

    GaussianState& add_scaled(const GaussianState& o, Cplx z) {
        if (std::abs(o.a - a) > 1e-12 * std::abs(a))
            throw NumericalError("GaussianState: adding states with different exponents");
        if (o.c.size() > c.size()) c.resize(o.c.size(), Cplx{0.0, 0.0});
        for (std::size_t k = 0; k < o.c.size(); ++k) c[k] += z * o.c[k];
        return *this;
    }
};

inline GaussianState mul_x(const GaussianState& s) {
    GaussianState r;
    r.a = s.a;
    r.c.assign(s.c.size() + 1, Cplx{0.0, 0.0});
    for (std::size_t k = 0; k < s.c.size(); ++k) r.c[k + 1] = s.c[k];
    return r;
}

// D = -i d/dx:  D[P e] = -i (P' - a x P) e
inline GaussianState apply_D(const GaussianState& s) {
    GaussianState r;
    r.a = s.a;
    r.c.assign(s.c.size() + 1, Cplx{0.0, 0.0});
    const Cplx mi{0.0, -1.0};
    for (std::size_t k = 1; k < s.c.size(); ++k) r.c[k - 1] += mi * (double)k * s.c[k];
    for (std::size_t k = 0; k < s.c.size(); ++k) r.c[k + 1] -= mi * s.a * s.c[k];
    return r;
}

// Gaussian moment integral over the real line:
//   moment(k, s) = int x^k exp(-s x^2/2) dx,  Re s > 0.
inline Cplx gaussian_moment(int k, Cplx s) {
    if (k % 2 == 1) return {0.0, 0.0};
    // sqrt(2 pi) (k-1)!! s^{-(k+1)/2}, principal branch
    const int m = k / 2;
    double dfact = 1.0;
    for (int j = 1; j <= m; ++j) dfact *= 2.0 * j - 1.0;
    return std::sqrt(2.0 * PI) * dfact * std::exp(-(m + 0.5) * std::log(s));
}

// L2 inner product <s, t> = int s(x) conj(t(x)) dx in closed form.
inline Cplx inner(const GaussianState& s, const GaussianState& t) {
    const Cplx expo = s.a + std::conj(t.a);
    Cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < s.c.size(); ++j) {
        if (s.c[j] == Cplx{0.0, 0.0}) continue;
        for (std::size_t k = 0; k < t.c.size(); ++k) {
            if (t.c[k] == Cplx{0.0, 0.0}) continue;
            acc += s.c[j] * std::conj(t.c[k]) * gaussian_moment(static_cast<int>(j + k), expo);
        }
    }
    return acc;
}

inline double l2_norm(const GaussianState& s) {
    return std::sqrt(std::max(0.0, inner(s, s).real()));
}

// Weyl quantization of the monomial x^a xi^b applied to a state:
//   Op^w(x^a xi^b) = 2^{-a} sum_j C(a,j) x^j D^b x^{a-j}.
inline GaussianState apply_weyl_monomial(int ax, int bxi, const GaussianState& s) {
    double binom = 1.0;
    GaussianState acc;
    acc.a = s.a;
    acc.c.clear();
    for (int j = 0; j <= ax; ++j) {
        GaussianState t = s;
        for (int k = 0; k < ax - j; ++k) t = mul_x(t);
        for (int k = 0; k < bxi; ++k) t = apply_D(t);
        for (int k = 0; k < j; ++k) t = mul_x(t);
        if (acc.c.empty()) {
            acc = t;
            acc *= binom;
        } else {
            acc.add_scaled(t, Cplx{binom, 0.0});
        }
        binom = binom * (ax - j) / (j + 1);
    }
    const double scale = std::pow(0.5, ax);
    acc *= Cplx{scale, 0.0};
    return acc;
}

} // namespace magsplit
