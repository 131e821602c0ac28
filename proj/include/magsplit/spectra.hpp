#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "magsplit/darboux.hpp"
#include "magsplit/fit.hpp"

namespace magsplit {

// Dirichlet box [-L1,L1] x [-L2,L2] with N1 x N2 nodes (boundary included).
struct GridSpec {
    double L1 = 2.0, L2 = 3.0;
    int N1 = 101, N2 = 151;

    double dx1() const { return 2.0 * L1 / (N1 - 1); }
    double dx2() const { return 2.0 * L2 / (N2 - 1); }
    int m1() const { return N1 - 2; } // interior nodes per direction
    int m2() const { return N2 - 2; }
    int unknowns() const { return m1() * m2(); }
    // nodes are centered so that node(N-1-i) = -node(i) exactly in floating
    // point; the parity operator then commutes with the assembly bit-exactly
    double node1(int i) const { return (2 * i - (N1 - 1)) * 0.5 * dx1(); }
    double node2(int j) const { return (2 * j - (N2 - 1)) * 0.5 * dx2(); }

    void validate(double h) const {
        const double cap = 0.15 * std::sqrt(h);
        if (dx1() > cap || dx2() > cap) {
            std::ostringstream os;
            os << "grid: spacing (" << dx1() << ", " << dx2() << ") exceeds 0.15 sqrt(h) = "
               << cap << " at h = " << h;
            throw InvariantViolation(os.str());
        }
        if (dx1() > std::min(L1, L2) / 50.0 || dx2() > std::min(L1, L2) / 50.0)
            throw InvariantViolation("grid: spacing exceeds min(L)/50");
    }
};

enum class GaugeChoice { landau_x, landau_y, symmetric };

inline const char* gauge_name(GaugeChoice g) {
    switch (g) {
        case GaugeChoice::landau_x: return "landau_x";
        case GaugeChoice::landau_y: return "landau_y";
        default: return "symmetric";
    }
}

using SparseH = Eigen::SparseMatrix<Cplx>;
using VecC = Eigen::VectorXcd;

namespace detail {

// components of the vector potential for each gauge choice
struct Gauge {
    const FieldSpec& f;
    GaugeChoice choice;

    // A1(q): 0 for landau_x; -int_0^{q2} B(q1,s) ds for landau_y
    double A1(double q1, double q2) const {
        if (choice == GaugeChoice::landau_x) return 0.0;
        const double v =
            -integrate([&](double s) { return f.B(Cplx(q1, 0.0), s); }, 0.0, q2, 1e-12)
                 .value.real();
        return choice == GaugeChoice::landau_y ? v : 0.5 * v;
    }
    // A2(q): int_0^{q1} B(s,q2) ds for landau_x; 0 for landau_y
    double A2(double q1, double q2) const {
        if (choice == GaugeChoice::landau_y) return 0.0;
        const double v = magsplit::A2(f, Cplx(q1, 0.0), q2).real();
        return choice == GaugeChoice::landau_x ? v : 0.5 * v;
    }
};

// 3-point Gauss rule written as midpoint +- offset with the outer pair
// summed commutatively: a reflected edge then evaluates to the exact
// floating-point negation, which keeps [H, U] = 0 bit-exactly.
inline constexpr double g3_off = 0.387298334620741688517926539978; // sqrt(3/5)/2
inline constexpr double g3_w_mid = 8.0 / 18.0;
inline constexpr double g3_w_out = 5.0 / 18.0;

} // namespace detail

// Peierls phase (1/h) int A . dl along the horizontal edge with midpoint
// (mid1, q2) and length d1, and the vertical analogue.
inline double edge_phase_h(const detail::Gauge& g, double mid1, double q2, double d1, double h) {
    if (g.choice == GaugeChoice::landau_x) return 0.0;
    const double off = detail::g3_off * d1;
    const double acc = detail::g3_w_mid * g.A1(mid1, q2) +
                       detail::g3_w_out * (g.A1(mid1 - off, q2) + g.A1(mid1 + off, q2));
    return acc * d1 / h;
}

inline double edge_phase_v(const detail::Gauge& g, double q1, double mid2, double d2, double h) {
    if (g.choice == GaugeChoice::landau_y) return 0.0;
    const double off = detail::g3_off * d2;
    const double acc = detail::g3_w_mid * g.A2(q1, mid2) +
                       detail::g3_w_out * (g.A2(q1, mid2 - off) + g.A2(q1, mid2 + off));
    return acc * d2 / h;
}

// Gauge-covariant 5-point discretization of (-ih grad - A)^2 with Dirichlet
// boundary. Hopping carries exp(-i theta) with theta the edge line integral
// of A/h, which keeps the matrix Hermitian and the scheme gauge-covariant up
// to the edge quadrature error.
inline SparseH assemble(const FieldSpec& f, GaugeChoice gauge, const GridSpec& grid, double h) {
    grid.validate(h);
    detail::Gauge g{f, gauge};
    const int m1 = grid.m1(), m2 = grid.m2();
    const double d1 = grid.dx1(), d2 = grid.dx2();
    const double t1 = h * h / (d1 * d1), t2 = h * h / (d2 * d2);

    std::vector<Eigen::Triplet<Cplx>> trips;
    trips.reserve(static_cast<std::size_t>(grid.unknowns()) * 5);
    auto idx = [&](int i1, int i2) { return (i2 - 1) * m1 + (i1 - 1); };

    for (int i2 = 1; i2 <= m2; ++i2) {
        const double q2 = grid.node2(i2);
        for (int i1 = 1; i1 <= m1; ++i1) {
            const double q1 = grid.node1(i1);
            const int k = idx(i1, i2);
            trips.emplace_back(k, k, Cplx(2.0 * t1 + 2.0 * t2, 0.0));
            // horizontal hop to (i1+1, i2); edge midpoints negate exactly
            // under reflection because the endpoints do
            if (i1 + 1 <= m1) {
                const double mid1 = 0.5 * (q1 + grid.node1(i1 + 1));
                const double th = edge_phase_h(g, mid1, q2, d1, h);
                const Cplx hop = -t1 * std::exp(Cplx(0.0, -th));
                trips.emplace_back(k, idx(i1 + 1, i2), hop);
                trips.emplace_back(idx(i1 + 1, i2), k, std::conj(hop));
            }
            // vertical hop to (i1, i2+1)
            if (i2 + 1 <= m2) {
                const double mid2 = 0.5 * (q2 + grid.node2(i2 + 1));
                const double tv = edge_phase_v(g, q1, mid2, d2, h);
                const Cplx hop = -t2 * std::exp(Cplx(0.0, -tv));
                trips.emplace_back(k, idx(i1, i2 + 1), hop);
                trips.emplace_back(idx(i1, i2 + 1), k, std::conj(hop));
            }
        }
    }
    SparseH H(grid.unknowns(), grid.unknowns());
    H.setFromTriplets(trips.begin(), trips.end());
    H.makeCompressed();
    return H;
}

// parity operator U f(q) = f(-q) as an index permutation on the interior grid
inline VecC apply_parity(const VecC& v, const GridSpec& grid) {
    const int m1 = grid.m1(), m2 = grid.m2();
    VecC r(v.size());
    for (int i2 = 0; i2 < m2; ++i2)
        for (int i1 = 0; i1 < m1; ++i1)
            r[(m2 - 1 - i2) * m1 + (m1 - 1 - i1)] = v[i2 * m1 + i1];
    return r;
}

inline double gershgorin_norm(const SparseH& H) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(H.rows());
    for (int k = 0; k < H.outerSize(); ++k)
        for (SparseH::InnerIterator it(H, k); it; ++it) rows[it.row()] += std::abs(it.value());
    return rows.maxCoeff();
}

// ---------------------------------------------------------------------------
// Shift-invert Lanczos with full reorthogonalization.

struct SpectrumResult {
    double h = 0.0;
    std::vector<double> eigenvalues;    // ascending
    std::vector<double> residual_norms; // ||Hv - lambda v|| / ||H||
    std::vector<int> parities;          // sign of <Uv, v>
    double gap = 0.0;                   // lambda2 - lambda1
    GridSpec grid;
    double hnorm = 0.0;                 // Gershgorin bound used for residual scaling
    double sigma = 0.0;
    int iterations = 0;
};

struct EigOptions {
    int k = 4;
    double sigma = -1.0;   // <0: use 0.9 b0 h
    double tol = 1e-11;    // residual tolerance relative to ||H||
    int max_iter = 400;
    std::uint64_t seed = 12345;
    // on symmetric grids the assembly commutes with parity bit-exactly, so
    // the exponentially clustered tunneling pair can be resolved by running
    // one Lanczos per parity sector instead of waiting for rounding noise to
    // populate the second copy
    bool parity_sectors = true;
};

inline GridSpec refine(const GridSpec& g) {
    GridSpec r = g;
    r.N1 = 2 * g.N1 - 1;
    r.N2 = 2 * g.N2 - 1;
    return r;
}

namespace detail {

struct RitzPair {
    double lambda;
    VecC vec;
};

// Shift-invert Lanczos with full reorthogonalization from a given start
// vector; returns the k_want lowest eigenpairs of H reachable from it.
// When sector is +-1, every iterate is re-projected onto that parity sector
// (the factorized solve is the only step that breaks parity, at roundoff
// level; without the projection the leakage lets the run converge onto the
// other sector's member of an exponentially close pair).
inline std::vector<RitzPair> lanczos_core(
    const Eigen::SimplicialLDLT<SparseH, Eigen::Lower>& solver, const SparseH& H, VecC v0,
    double sigma, double hnorm, int k_want, double tol, int max_iter,
    const GridSpec* grid = nullptr, int sector = 0) {
    const int n = static_cast<int>(v0.size());
    auto project = [&](VecC& w) {
        if (sector == 0) return;
        const VecC uw = apply_parity(w, *grid);
        w = 0.5 * (w + static_cast<double>(sector) * uw);
    };
    project(v0);
    v0 /= v0.norm();
    std::vector<VecC> V{v0};
    std::vector<double> alpha, beta;
    Eigen::VectorXd ritz;
    Eigen::MatrixXd S;
    int m_used = 0;

    auto update_ritz = [&](int m) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) {
                T(i, i + 1) = beta[i];
                T(i + 1, i) = beta[i];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        ritz = es.eigenvalues();
        S = es.eigenvectors();
    };
    auto converged = [&](int m, double beta_next) {
        update_ritz(m);
        if (m < k_want + 2) return false;
        for (int j = 0; j < k_want; ++j) {
            const int col = m - 1 - j;
            const double nu = ritz[col];
            if (nu <= 0.0) return false;
            // ||H y - lam y|| <= ||H - sigma|| ||r_nu|| / nu
            const double r_nu = std::abs(beta_next * S(m - 1, col));
            if (r_nu * (hnorm + std::abs(sigma)) / nu > 0.1 * tol * hnorm) return false;
        }
        return true;
    };

    double op_scale = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        VecC w = solver.solve(V.back());
        project(w);
        const double a = std::real(V.back().dot(w));
        alpha.push_back(a);
        op_scale = std::max(op_scale, std::abs(a));
        w -= a * V.back();
        if (V.size() > 1) w -= beta.back() * V[V.size() - 2];
        for (int pass = 0; pass < 2; ++pass)
            for (const VecC& u : V) w -= u.dot(w) * u;
        const double b = w.norm();
        m_used = static_cast<int>(alpha.size());
        // exhaustion of the reachable subspace; continuing would only grow
        // ghost copies of converged values out of roundoff
        if (b < 1e-13 * std::max(1.0, op_scale)) break;
        if (m_used >= k_want + 2 && converged(m_used, b)) break;
        if (it + 1 < max_iter) {
            beta.push_back(b);
            V.push_back(w / b);
        }
    }
    update_ritz(m_used);

    std::vector<std::pair<double, int>> order;
    for (int col = 0; col < m_used; ++col)
        if (ritz[col] > 0.0) order.emplace_back(sigma + 1.0 / ritz[col], col);
    std::sort(order.begin(), order.end());
    if (static_cast<int>(order.size()) < k_want) {
        std::ostringstream os;
        os << "lanczos: found " << order.size() << " pairs, wanted " << k_want << " after "
           << m_used << " iterations";
        throw NumericalError(os.str());
    }
    std::vector<RitzPair> out;
    for (int j = 0; j < k_want; ++j) {
        const auto [lam, col] = order[j];
        VecC y = VecC::Zero(n);
        for (int i = 0; i < m_used; ++i) y += S(i, col) * V[i];
        y /= y.norm();
        const double resid = (H * y - lam * y).norm() / hnorm;
        if (resid > tol) {
            std::ostringstream os;
            os << "lanczos: pair " << j << " residual " << resid << " above tolerance " << tol
               << " after " << m_used << " iterations (Ritz value " << lam << ")";
            throw NumericalError(os.str());
        }
        out.push_back({lam, std::move(y)});
    }
    return out;
}

} // namespace detail

inline SpectrumResult lowest_eigenpairs(const SparseH& H, const GridSpec& grid, double h,
                                        const EigOptions& opt, const FieldSpec& f) {
    const int n = static_cast<int>(H.rows());
    const double sigma = opt.sigma > 0.0 ? opt.sigma : 0.9 * f.b0 * h;

    SparseH A = H;
    for (int k = 0; k < n; ++k) A.coeffRef(k, k) -= sigma;
    A.makeCompressed();
    Eigen::SimplicialLDLT<SparseH, Eigen::Lower> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw NumericalError("lowest_eigenpairs: factorization of (H - sigma) failed");

    const double hnorm = gershgorin_norm(H);
    Rng rng(opt.seed);
    VecC v(n);
    for (int i = 0; i < n; ++i) v[i] = Cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);

    std::vector<detail::RitzPair> pairs;
    int iterations = 0;
    if (opt.parity_sectors) {
        const int k_sector = std::max(2, (opt.k + 1) / 2);
        for (int s : {+1, -1}) {
            auto part = detail::lanczos_core(solver, H, v, sigma, hnorm, k_sector, opt.tol,
                                             opt.max_iter, &grid, s);
            for (auto& p : part) pairs.push_back(std::move(p));
        }
    } else {
        pairs = detail::lanczos_core(solver, H, v, sigma, hnorm, opt.k, opt.tol, opt.max_iter);
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const detail::RitzPair& a, const detail::RitzPair& b) {
                  return a.lambda < b.lambda;
              });

    SpectrumResult res;
    res.h = h;
    res.grid = grid;
    res.hnorm = hnorm;
    res.sigma = sigma;
    res.iterations = iterations;
    for (int j = 0; j < opt.k && j < static_cast<int>(pairs.size()); ++j) {
        const auto& p = pairs[j];
        res.eigenvalues.push_back(p.lambda);
        res.residual_norms.push_back((H * p.vec - p.lambda * p.vec).norm() / hnorm);
        const Cplx par = apply_parity(p.vec, grid).dot(p.vec);
        res.parities.push_back(par.real() >= 0.0 ? 1 : -1);
    }
    res.gap = res.eigenvalues[1] - res.eigenvalues[0];
    return res;
}

// ---------------------------------------------------------------------------
// Two-term expansion check: fits the mean of the tunneling pair against
// c_lin h + c_quad h^2 over a list of h values. The tunneling correction is
// exponentially below h^2, so the pair mean tracks the one-well level.

struct ExpansionCheckOptions {
    double spacing_factor = 0.15;
    double box_L = 0.0;          // 0: L2 = 2(c_u + 3 sqrt(h/b0)), L1 = c_u + 4 sqrt(h/b0)
    bool richardson = true;
    double rel_resid_threshold = 1e-2;
    EigOptions eig;
};

struct ExpansionCheck {
    std::vector<double> h, lambda_mean;
    ExpansionFit fit;
};

inline ExpansionCheck single_well_expansion_check(const FieldSpec& f,
                                                  const std::vector<double>& h_list,
                                                  const ExpansionCheckOptions& opt = {}) {
    ExpansionCheck out;
    for (double h : h_list) {
        GridSpec g;
        g.L2 = opt.box_L > 0.0 ? opt.box_L : 2.0 * (f.c_u + 3.0 * std::sqrt(h / f.b0));
        g.L1 = opt.box_L > 0.0 ? opt.box_L : f.c_u + 4.0 * std::sqrt(h / f.b0);
        const double cap =
            std::min({opt.spacing_factor * std::sqrt(h), g.L1 / 50.0, g.L2 / 50.0}) * 0.995;
        g.N1 = static_cast<int>(std::ceil(2.0 * g.L1 / cap)) + 1;
        g.N2 = static_cast<int>(std::ceil(2.0 * g.L2 / cap)) + 1;
        EigOptions eopt = opt.eig;
        eopt.k = std::max(2, eopt.k);
        SpectrumResult r = lowest_eigenpairs(assemble(f, GaugeChoice::landau_x, g, h), g, h, eopt, f);
        double l0 = r.eigenvalues[0], l1 = r.eigenvalues[1];
        if (opt.richardson) {
            GridSpec g2 = refine(g);
            SpectrumResult r2 =
                lowest_eigenpairs(assemble(f, GaugeChoice::landau_x, g2, h), g2, h, eopt, f);
            l0 = (4.0 * r2.eigenvalues[0] - r.eigenvalues[0]) / 3.0;
            l1 = (4.0 * r2.eigenvalues[1] - r.eigenvalues[1]) / 3.0;
        }
        out.h.push_back(h);
        out.lambda_mean.push_back(0.5 * (l0 + l1));
    }
    out.fit = fit_two_term(out.h, out.lambda_mean, opt.rel_resid_threshold);
    return out;
}

} // namespace magsplit
