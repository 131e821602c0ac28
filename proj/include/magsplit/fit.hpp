#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "magsplit/numeric.hpp"

namespace magsplit {

namespace detail {

struct LsSolution {
    Eigen::VectorXd coef;
    Eigen::VectorXd stderr_;
    double rss = 0.0;
    double condition = 0.0;
};

inline LsSolution weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w) {
    const int n = static_cast<int>(X.rows()), p = static_cast<int>(X.cols());
    Eigen::MatrixXd Xw = w.asDiagonal() * X;
    Eigen::VectorXd yw = w.asDiagonal() * y;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    LsSolution s;
    s.condition = svd.singularValues()(0) / svd.singularValues()(p - 1);
    if (!(s.condition < 1e12))
        throw NumericalError("least squares: ill-conditioned design (h range too narrow)");
    s.coef = svd.solve(yw);
    const Eigen::VectorXd r = yw - Xw * s.coef;
    s.rss = r.squaredNorm();
    const double sigma2 = n > p ? s.rss / (n - p) : 0.0;
    // covariance via (Xw^T Xw)^{-1} = V S^{-2} V^T
    Eigen::MatrixXd V = svd.matrixV();
    Eigen::VectorXd inv2 = svd.singularValues().array().square().inverse();
    s.stderr_.resize(p);
    for (int j = 0; j < p; ++j) {
        double v = 0.0;
        for (int k = 0; k < p; ++k) v += V(j, k) * V(j, k) * inv2(k);
        s.stderr_(j) = std::sqrt(sigma2 * v);
    }
    return s;
}

} // namespace detail

// Fit of the gap law: ln(gap) - (3/2) ln h regressed on {1, 1/h}, plus a
// free-exponent diagnostic ln(gap) on {1, ln h, 1/h}.
struct GapFit {
    double S_fit = 0.0, c0_fit = 0.0;
    double S_stderr = 0.0, ln_c0_stderr = 0.0;
    double p_hat = 0.0, p_stderr = 0.0;       // free-exponent diagnostic
    double S_fit_free = 0.0, c0_fit_free = 0.0;
    std::vector<double> h_used;
    std::vector<double> residuals;             // in ln(gap) units, fixed-exponent model
    double condition = 0.0;
    double S_pred = 0.0, c0_pred = 0.0;        // pipeline predictions (when supplied)
    double S_rel_err = 0.0, c0_ratio = 0.0;
};

inline GapFit fit_gap_law(const std::vector<double>& h, const std::vector<double>& gap,
                          const std::vector<double>* weights = nullptr) {
    const int n = static_cast<int>(h.size());
    if (n < 4) throw NumericalError("fit_gap_law: need at least 4 usable points");
    Eigen::MatrixXd X(n, 2), Xf(n, 3);
    Eigen::VectorXd y(n), yf(n), w = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
        if (!(gap[i] > 0.0)) throw NumericalError("fit_gap_law: non-positive gap");
        X(i, 0) = 1.0;
        X(i, 1) = 1.0 / h[i];
        y(i) = std::log(gap[i]) - 1.5 * std::log(h[i]);
        Xf(i, 0) = 1.0;
        Xf(i, 1) = std::log(h[i]);
        Xf(i, 2) = 1.0 / h[i];
        yf(i) = std::log(gap[i]);
        if (weights) w(i) = (*weights)[i];
    }
    const auto fixed = detail::weighted_ls(X, y, w);
    GapFit out;
    out.h_used = h;
    out.c0_fit = std::exp(fixed.coef(0));
    out.S_fit = -fixed.coef(1);
    out.ln_c0_stderr = fixed.stderr_(0);
    out.S_stderr = fixed.stderr_(1);
    out.condition = fixed.condition;
    out.residuals.resize(n);
    for (int i = 0; i < n; ++i)
        out.residuals[i] = y(i) - (fixed.coef(0) + fixed.coef(1) / h[i]);

    const auto free = detail::weighted_ls(Xf, yf, w);
    out.c0_fit_free = std::exp(free.coef(0));
    out.p_hat = free.coef(1);
    out.p_stderr = free.stderr_(1);
    out.S_fit_free = -free.coef(2);
    return out;
}

// Two-term expansion fit lambda(h) = c_lin h + c_quad h^2.
struct ExpansionFit {
    double c_lin = 0.0, c_quad = 0.0;
    double c_lin_stderr = 0.0, c_quad_stderr = 0.0;
    double max_rel_resid = 0.0;
    double condition = 0.0;
};

inline ExpansionFit fit_two_term(const std::vector<double>& h, const std::vector<double>& lam,
                                 double rel_resid_threshold = 1e-2) {
    const int n = static_cast<int>(h.size());
    if (n < 3) throw NumericalError("fit_two_term: need at least 3 points");
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n), w(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = h[i];
        X(i, 1) = h[i] * h[i];
        y(i) = lam[i];
        w(i) = 1.0 / h[i]; // equalizes the relative influence of each point
    }
    const auto ls = detail::weighted_ls(X, y, w);
    ExpansionFit out;
    out.c_lin = ls.coef(0);
    out.c_quad = ls.coef(1);
    out.c_lin_stderr = ls.stderr_(0);
    out.c_quad_stderr = ls.stderr_(1);
    out.condition = ls.condition;
    for (int i = 0; i < n; ++i) {
        const double fit = ls.coef(0) * h[i] + ls.coef(1) * h[i] * h[i];
        out.max_rel_resid = std::max(out.max_rel_resid, std::abs(fit - lam[i]) / lam[i]);
    }
    if (out.max_rel_resid > rel_resid_threshold)
        throw NumericalError("fit_two_term: residual above threshold (grid under-resolved)");
    return out;
}

} // namespace magsplit
