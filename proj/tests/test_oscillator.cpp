#include <catch2/catch_amalgamated.hpp>

#include "magsplit/oscillator.hpp"
#include "oracle_helpers.hpp"

using namespace magsplit;
using Catch::Approx;

namespace {

// admissible oscillator coefficients: Re(calB -+ i alpha) > 0 with calB near b0
OscillatorData random_od(Rng& rng, bool with_gradients) {
    OscillatorData od;
    while (true) {
        od.calB = Cplx(rng.uniform(0.7, 1.4), rng.uniform(-0.25, 0.25));
        od.alpha = Cplx(rng.uniform(-0.4, 0.4), rng.uniform(-0.25, 0.25));
        const Cplx i{0.0, 1.0};
        if ((od.calB - i * od.alpha).real() > 0.3 && (od.calB + i * od.alpha).real() > 0.3) break;
    }
    od.Sigma = rng.uniform(0.0, 0.05);
    if (with_gradients) {
        auto rc = [&] { return Cplx(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)); };
        od.grad_calB = {rc(), rc()};
        od.grad_alpha = {rc(), rc()};
        od.hess_calB = {rc(), rc(), rc()};
        od.hess_alpha = {rc(), rc(), rc()};
    }
    return od;
}

Cplx inner_oracle(const GaussianState& s, const GaussianState& t) {
    auto eval = [](const GaussianState& g, double x) {
        Cplx p{0.0, 0.0};
        double xk = 1.0;
        for (std::size_t k = 0; k < g.c.size(); ++k, xk *= x) p += g.c[k] * xk;
        return p * std::exp(-0.5 * g.a * x * x);
    };
    const double re = std::min(s.a.real(), t.a.real());
    const double L = 14.0 / std::sqrt(re);
    return oracle::gl_integrate(
        [&](double x) { return eval(s, x) * std::conj(eval(t, x)); }, -L, L, 64);
}

} // namespace

TEST_CASE("selfadjoint point: F reduces to the harmonic ground state and G = F") {
    OscillatorData od;
    od.calB = 1.0;
    od.alpha = 0.0;
    od.Sigma = 0.0;
    GaussianPair p = gaussian_pair(od);
    CHECK(p.aF == p.aG);
    CHECK(p.C == Approx(std::pow(1.0 / PI, 0.25)).epsilon(1e-14));
    CHECK(std::abs(p.c - Cplx(p.C, 0.0)) < 1e-14);
    // M0 = D^2 + x^2 on exp(-x^2/2): eigenvalue 1
    GaussianState r = apply_M(0, od, p.F);
    r.add_scaled(p.F, Cplx{-1.0, 0.0});
    CHECK(r.coef_norm() < 1e-13);
}

TEST_CASE("normalization contracts of the ground pair") {
    Rng rng(101);
    for (int i = 0; i < 40; ++i) {
        OscillatorData od = random_od(rng, false);
        GaussianPair p = gaussian_pair(od);
        CHECK(std::abs(l2_norm(p.F) - 1.0) < 1e-13);
        CHECK(std::abs(inner(p.F, p.G) - 1.0) < 1e-13);
        // quadrature oracle for a few of them
        if (i % 8 == 0) {
            CHECK(std::abs(inner_oracle(p.F, p.G) - 1.0) < 1e-11);
            CHECK(std::abs(inner_oracle(p.F, p.F).real() - 1.0) < 1e-11);
        }
    }
}

TEST_CASE("F is the first eigenfunction of M0") {
    Rng rng(103);
    for (int i = 0; i < 40; ++i) {
        OscillatorData od = random_od(rng, false);
        GaussianPair p = gaussian_pair(od);
        GaussianState r = apply_M(0, od, p.F);
        r.add_scaled(p.F, -(od.calB + od.Sigma));
        CHECK(r.coef_norm() <= 1e-12 * p.F.coef_norm());
    }
}

TEST_CASE("M1 has zero ground-state expectation (odd symbol)") {
    Rng rng(107);
    for (int i = 0; i < 30; ++i) {
        OscillatorData od = random_od(rng, true);
        GaussianPair p = gaussian_pair(od);
        const Cplx v = inner(apply_M(1, od, p.F), p.G);
        CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("ladder basis: eigen-residuals and biorthogonality") {
    Rng rng(109);
    for (int i = 0; i < 50; ++i) {
        OscillatorData od = random_od(rng, false);
        LadderBasis lb = ladder_basis(od, 6, 1e-10); // residual verified internally up to n=6
        // eigenvalue of the second level is 3 calB + Sigma
        GaussianState r = apply_M(0, od, lb.psi[1]);
        r.add_scaled(lb.psi[1], -(3.0 * od.calB + od.Sigma));
        CHECK(r.coef_norm() <= 1e-10 * lb.psi[1].coef_norm());
        // biorthogonality for m, n <= 4
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) {
                const Cplx v = inner(lb.psi[m], lb.dual[n]);
                CHECK(std::abs(v - (m == n ? 1.0 : 0.0)) < 1e-11);
            }
    }
}

TEST_CASE("selfadjoint ladder reproduces Hermite functions") {
    OscillatorData od;
    od.calB = 2.0; // M0 = 4 D^2 + x^2, ground exp(-x^2/4), scale sqrt(2)
    od.alpha = 0.0;
    od.Sigma = 0.0;
    LadderBasis lb = ladder_basis(od, 5);
    // psi_2 proportional to x exp(-x^2/4); check odd polynomial with zero constant
    CHECK(std::abs(lb.psi[1].c[0]) < 1e-14);
    CHECK(std::abs(lb.psi[1].c[1]) > 0.0);
    // psi_3 proportional to (x^2 - 1) scaled Hermite: H2(x/sqrt(2)) = (x^2/... )
    // just verify the eigenvalue instead of the coefficient pattern
    GaussianState r = apply_M(0, od, lb.psi[2]);
    r.add_scaled(lb.psi[2], -(5.0 * od.calB));
    CHECK(r.coef_norm() <= 1e-12 * lb.psi[2].coef_norm());
}

TEST_CASE("reduced resolvent: kernel, eigen-division, resolvent identity") {
    Rng rng(113);
    for (int i = 0; i < 25; ++i) {
        OscillatorData od = random_od(rng, false);
        LadderBasis lb = ladder_basis(od, 8);
        GaussianPair p = gaussian_pair(od);
        const Cplx z{od.calB.real() * 0.98, 0.0}; // inside the disc around b0

        // R0 annihilates the ground state
        GaussianState r0F = R0_apply(lb, z, p.F);
        CHECK(r0F.coef_norm() < 1e-11);

        // action on psi_3 is division by (5 calB + Sigma - z)
        GaussianState r3 = R0_apply(lb, z, lb.psi[2]);
        GaussianState expected = lb.psi[2];
        expected *= 1.0 / (5.0 * od.calB + od.Sigma - z);
        GaussianState diff = r3;
        diff.add_scaled(expected, Cplx{-1.0, 0.0});
        CHECK(diff.coef_norm() <= 1e-11 * expected.coef_norm());

        // (M0 - z) R0 s + <s, G> F = s for random degree-3 s
        GaussianState s;
        s.a = p.aF;
        s.c.resize(4);
        for (auto& v : s.c) v = Cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        GaussianState u = R0_apply(lb, z, s);
        GaussianState lhs = apply_M(0, od, u);
        lhs.add_scaled(u, -z);
        lhs.add_scaled(p.F, inner(s, p.G));
        GaussianState resid = lhs;
        resid.add_scaled(s, Cplx{-1.0, 0.0});
        CHECK(resid.coef_norm() <= 1e-10 * s.coef_norm());
    }
}

TEST_CASE("R0 rejects states beyond the basis degree") {
    Rng rng(127);
    OscillatorData od = random_od(rng, false);
    LadderBasis lb = ladder_basis(od, 4);
    GaussianState s;
    s.a = 1.0 / (od.calB - Cplx{0.0, 1.0} * od.alpha);
    s.c.assign(6, Cplx{1.0, 0.0}); // degree 5 > n_max-1
    CHECK_THROWS_AS(R0_apply(lb, {1.0, 0.0}, s), NumericalError);
}
