#include "scoring_bivariate.hpp"

#include <cmath>

namespace bmdl {

namespace {

constexpr double kConditionLimit = 1e12;

// Lower-triangular factor U with U'U = S^{-1}, from S = L L'.
Matrix2d inverse_sqrt_2x2(const Matrix2d& s) {
    const double s11 = s(0, 0), s22 = s(1, 1), s12 = s(0, 1);
    const double det = s11 * s22 - s12 * s12;
    if (!(s11 > 0.0) || !(det > 0.0)) {
        throw SingularMatrixError("2x2 covariance not positive definite");
    }
    const double l11 = std::sqrt(s11);
    const double l21 = s12 / l11;
    const double l22 = std::sqrt(s22 - l21 * l21);
    Matrix2d u = Matrix2d::Zero();  // inverse of the Cholesky factor
    u(0, 0) = 1.0 / l11;
    u(1, 0) = -l21 / (l11 * l22);
    u(1, 1) = 1.0 / l22;
    return u;
}

double logdet_2x2_pd(const Matrix2d& s) {
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    if (!(det > 0.0) || !(s(0, 0) > 0.0)) {
        throw SingularMatrixError("2x2 covariance not positive definite");
    }
    return std::log(det);
}

// rows p+1..N of m, minus the coefficient-weighted lagged rows
MatrixXd ar_filter(const MatrixXd& m, const std::vector<double>& coeffs, bool include_base) {
    const std::int64_t n = m.rows();
    const std::int64_t p = static_cast<std::int64_t>(coeffs.size());
    MatrixXd out = include_base ? MatrixXd(m.bottomRows(n - p))
                                : MatrixXd(MatrixXd::Zero(n - p, m.cols()));
    for (std::int64_t j = 1; j <= p; ++j) {
        out.noalias() -= coeffs[static_cast<std::size_t>(j - 1)] * m.middleRows(p - j, n - p);
    }
    return out;
}

std::vector<double> phi_entry(const std::vector<Matrix2d>& phi, int r, int c) {
    std::vector<double> v(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) v[j] = phi[j](r, c);
    return v;
}

struct BivariateSolve {
    VectorXd s_hat;   // 2T
    VectorXd mu_hat;  // m1+m2
    double quad = 0.0;      // (Xh - A s)' B (Xh - A s) at the optimum
    double logdet_m = 0.0;  // log|D'(Sigma^{-1} (x) I)D + Omega^{-1}|
};

// Transformed + ridge-augmented least squares; the Sigma^{-1} (x) I weight
// is applied through the 2x2 factor U, never materialized.
BivariateSolve solve_bivariate(const BivariateWhitened& ws, const Matrix2d& sigma, double nu) {
    const std::int64_t np = ws.n - ws.p;
    const std::int64_t tcols = ws.a.cols();
    const std::int64_t m = ws.d.cols();
    const Matrix2d u = inverse_sqrt_2x2(sigma);

    auto transform = [&](const MatrixXd& mat) {
        MatrixXd out(mat.rows(), mat.cols());
        out.topRows(np) = u(0, 0) * mat.topRows(np);
        out.bottomRows(np) = u(1, 0) * mat.topRows(np) + u(1, 1) * mat.bottomRows(np);
        return out;
    };

    const MatrixXd a_t = transform(ws.a);
    const MatrixXd d_t = m > 0 ? transform(ws.d) : MatrixXd(2 * np, 0);
    VectorXd x_t(2 * np);
    x_t.head(np) = u(0, 0) * ws.x.head(np);
    x_t.tail(np) = u(1, 0) * ws.x.head(np) + u(1, 1) * ws.x.tail(np);

    // ridge weights 1/sqrt(nu sigma_i^2) per regime-mean column
    VectorXd ridge(m);
    for (std::int64_t j = 0; j < m; ++j) {
        const double s2 = (j < ws.m1) ? sigma(0, 0) : sigma(1, 1);
        ridge(j) = 1.0 / std::sqrt(nu * s2);
    }

    const std::int64_t rows = 2 * np + m;
    const std::int64_t k = tcols + m;
    MatrixXd design = MatrixXd::Zero(rows, k);
    VectorXd rhs = VectorXd::Zero(rows);
    design.block(0, 0, 2 * np, tcols) = a_t;
    if (m > 0) design.block(0, tcols, 2 * np, m) = d_t;
    for (std::int64_t j = 0; j < m; ++j) design(2 * np + j, tcols + j) = ridge(j);
    rhs.head(2 * np) = x_t;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < k) throw SingularMatrixError("bivariate whitened design rank deficient");
    const auto rdiag = qr.matrixQR().diagonal().head(k).cwiseAbs();
    if (rdiag.minCoeff() <= 0.0 || rdiag.maxCoeff() / rdiag.minCoeff() > kConditionLimit) {
        throw SingularMatrixError("bivariate design condition number exceeds 1e12");
    }
    const VectorXd beta = qr.solve(rhs);

    BivariateSolve out;
    out.s_hat = beta.head(tcols);
    out.mu_hat = beta.tail(m);
    out.quad = (rhs - design * beta).squaredNorm();
    if (m > 0) {
        MatrixXd gram = d_t.transpose() * d_t;
        for (std::int64_t j = 0; j < m; ++j) gram(j, j) += ridge(j) * ridge(j);
        Eigen::LLT<MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
            throw SingularMatrixError("bivariate mu precision matrix not PD");
        }
        out.logdet_m = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    return out;
}

// Univariate Yule-Walker innovation/residual variance ratio for the Sigma
// fallback when the VAR subtraction leaves a non-PD matrix.
double yw_variance_ratio(const VectorXd& eps, std::int64_t p) {
    const AutocovEstimates acov = sample_autocov(eps, p);
    const YuleWalkerEstimates yw = yule_walker(acov);
    return (acov.gamma(0) > 0.0) ? yw.sigma2_yw / acov.gamma(0) : 1.0;
}

}  // namespace

CategoryCounts category_counts(const ChangepointConfig& config, const Metadata& meta) {
    if (config.components() != 2) {
        throw DimensionMismatchError("category counts need a bivariate config");
    }
    CategoryCounts counts;
    auto bump = [&](std::int64_t t, int category) {
        if (meta.contains(t)) {
            ++counts.doc[static_cast<std::size_t>(category)];
        } else {
            ++counts.undoc[static_cast<std::size_t>(category)];
        }
    };
    for (std::int64_t t = config.p() + 1; t <= config.n(); ++t) {
        const bool c1 = config.is_changepoint(0, t);
        const bool c2 = config.is_changepoint(1, t);
        bump(t, c1 ? (c2 ? 0 : 1) : (c2 ? 2 : 3));
    }
    return counts;
}

MatrixXd gls_residuals(const MatrixXd& x, const MatrixXd& a, const MatrixXd& d1,
                       const MatrixXd& d2) {
    const std::int64_t n = x.rows();
    if (x.cols() != 2) throw DimensionMismatchError("gls_residuals needs two components");

    const VectorXd e1 = ols_residuals(x.col(0), a, d1);
    const VectorXd e2 = ols_residuals(x.col(1), a, d2);
    Matrix2d gamma0;
    gamma0(0, 0) = e1.dot(e1) / static_cast<double>(n);
    gamma0(1, 1) = e2.dot(e2) / static_cast<double>(n);
    gamma0(0, 1) = gamma0(1, 0) = e1.dot(e2) / static_cast<double>(n);
    const Matrix2d u = inverse_sqrt_2x2(gamma0);  // throws SingularMatrix when degenerate

    // weighted LS on G = [A D1 0 0; 0 0 A D2] via the transformed rows
    const std::int64_t t_cols = a.cols();
    const std::int64_t m1 = d1.cols();
    const std::int64_t m2 = d2.cols();
    const std::int64_t k = 2 * t_cols + m1 + m2;
    MatrixXd design = MatrixXd::Zero(2 * n, k);
    design.block(0, 0, n, t_cols) = u(0, 0) * a;
    design.block(0, t_cols, n, m1) = u(0, 0) * d1;
    design.block(n, 0, n, t_cols) = u(1, 0) * a;
    design.block(n, t_cols, n, m1) = u(1, 0) * d1;
    design.block(n, t_cols + m1, n, t_cols) = u(1, 1) * a;
    design.block(n, 2 * t_cols + m1, n, m2) = u(1, 1) * d2;
    VectorXd rhs(2 * n);
    rhs.head(n) = u(0, 0) * x.col(0);
    rhs.tail(n) = u(1, 0) * x.col(0) + u(1, 1) * x.col(1);

    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < k) throw DegenerateDesignError("stacked mean design rank deficient");
    const VectorXd beta = qr.solve(rhs);

    // untransformed residual X - G beta
    MatrixXd resid(n, 2);
    resid.col(0) = x.col(0) - a * beta.head(t_cols) - d1 * beta.segment(t_cols, m1);
    resid.col(1) = x.col(1) - a * beta.segment(t_cols + m1, t_cols) -
                   d2 * beta.segment(2 * t_cols + m1, m2);
    return resid;
}

VarEstimates var_yule_walker(const MatrixXd& eps_gls, std::int64_t p) {
    const std::int64_t n = eps_gls.rows();
    if (eps_gls.cols() != 2) throw DimensionMismatchError("var_yule_walker needs two components");
    if (n <= p) throw DimensionMismatchError("var_yule_walker requires N > p");

    VarEstimates est;
    est.gamma.resize(static_cast<std::size_t>(p) + 1);
    for (std::int64_t h = 0; h <= p; ++h) {
        Matrix2d g = Matrix2d::Zero();
        for (std::int64_t t = h; t < n; ++t) {
            g += eps_gls.row(t).transpose() * eps_gls.row(h == 0 ? t : t - h);
        }
        est.gamma[static_cast<std::size_t>(h)] = g / static_cast<double>(n);
    }

    if (p > 0) {
        // symmetric block-Toeplitz system; block (i,j) = Gamma(j-i), with
        // Gamma(-h) = Gamma(h)'
        MatrixXd bt(2 * p, 2 * p);
        for (std::int64_t i = 0; i < p; ++i) {
            for (std::int64_t j = 0; j < p; ++j) {
                const std::int64_t h = j - i;
                const Matrix2d block = (h >= 0) ? est.gamma[static_cast<std::size_t>(h)]
                                                : Matrix2d(est.gamma[static_cast<std::size_t>(-h)]
                                                               .transpose());
                bt.block<2, 2>(2 * i, 2 * j) = block;
            }
        }
        MatrixXd rhs(2 * p, 2);  // stacked Gamma(1)'..Gamma(p)'
        for (std::int64_t j = 1; j <= p; ++j) {
            rhs.middleRows<2>(2 * (j - 1)) = est.gamma[static_cast<std::size_t>(j)].transpose();
        }
        Eigen::LDLT<MatrixXd> ldlt(bt);
        if (ldlt.info() != Eigen::Success) {
            throw SingularMatrixError("block-Toeplitz system not decomposable");
        }
        const VectorXd diag = ldlt.vectorD();
        if (diag.minCoeff() <= 0.0 || diag.maxCoeff() / diag.minCoeff() > kConditionLimit) {
            throw SingularMatrixError("block-Toeplitz system numerically singular");
        }
        const MatrixXd sol = ldlt.solve(rhs);  // 2p x 2; Phi_j = sol block', stacked
        est.phi.resize(static_cast<std::size_t>(p));
        for (std::int64_t j = 0; j < p; ++j) {
            est.phi[static_cast<std::size_t>(j)] = sol.middleRows<2>(2 * j).transpose();
        }
    }

    Matrix2d sigma = est.gamma[0];
    for (std::int64_t j = 1; j <= p; ++j) {
        sigma -= est.phi[static_cast<std::size_t>(j - 1)] *
                 est.gamma[static_cast<std::size_t>(j)].transpose();
    }
    sigma = 0.5 * (sigma + sigma.transpose());  // finite-sample asymmetry

    const double det = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
    if (!(sigma(0, 0) > 0.0) || !(sigma(1, 1) > 0.0) || !(det > 0.0)) {
        // backstop: Gamma(0) scaled per component by the univariate
        // Yule-Walker variance ratio; flagged for the caller
        const double r1 = yw_variance_ratio(eps_gls.col(0), p);
        const double r2 = yw_variance_ratio(eps_gls.col(1), p);
        Matrix2d scale = Matrix2d::Zero();
        scale(0, 0) = std::sqrt(std::max(r1, 1e-12));
        scale(1, 1) = std::sqrt(std::max(r2, 1e-12));
        sigma = scale * est.gamma[0] * scale;
        est.sigma_fallback = true;
        const double det2 = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
        if (!(sigma(0, 0) > 0.0) || !(det2 > 0.0)) {
            throw SingularMatrixError("innovation covariance not positive definite");
        }
    }
    est.sigma = sigma;
    return est;
}

double bivariate_prior_code_length(const CategoryCounts& counts, const Hyperparams& hp) {
    double value = 0.0;
    for (std::size_t l = 0; l < 4; ++l) {
        value -= std::lgamma(hp.alpha_undoc[l] + static_cast<double>(counts.undoc[l]));
        value -= std::lgamma(hp.alpha_doc[l] + static_cast<double>(counts.doc[l]));
    }
    return value;
}

BivariateWhitened whiten_bivariate(const MatrixXd& x, const MatrixXd& a, const MatrixXd& d1,
                                   const MatrixXd& d2, const std::vector<Matrix2d>& phi) {
    const std::int64_t n = x.rows();
    const std::int64_t p = static_cast<std::int64_t>(phi.size());
    if (n <= p) throw DimensionMismatchError("whiten_bivariate requires N > p");
    const std::int64_t np = n - p;
    const std::int64_t t_cols = a.cols();

    BivariateWhitened ws;
    ws.n = n;
    ws.p = p;
    ws.m1 = d1.cols();
    ws.m2 = d2.cols();

    ws.x.resize(2 * np);
    ws.x.head(np) = ar_filter(x.col(0), phi_entry(phi, 0, 0), true) +
                    ar_filter(x.col(1), phi_entry(phi, 0, 1), false);
    ws.x.tail(np) = ar_filter(x.col(0), phi_entry(phi, 1, 0), false) +
                    ar_filter(x.col(1), phi_entry(phi, 1, 1), true);

    ws.a.resize(2 * np, 2 * t_cols);
    ws.a.block(0, 0, np, t_cols) = ar_filter(a, phi_entry(phi, 0, 0), true);
    ws.a.block(0, t_cols, np, t_cols) = ar_filter(a, phi_entry(phi, 0, 1), false);
    ws.a.block(np, 0, np, t_cols) = ar_filter(a, phi_entry(phi, 1, 0), false);
    ws.a.block(np, t_cols, np, t_cols) = ar_filter(a, phi_entry(phi, 1, 1), true);

    ws.d.resize(2 * np, ws.m1 + ws.m2);
    ws.d.block(0, 0, np, ws.m1) = ar_filter(d1, phi_entry(phi, 0, 0), true);
    ws.d.block(0, ws.m1, np, ws.m2) = ar_filter(d2, phi_entry(phi, 0, 1), false);
    ws.d.block(np, 0, np, ws.m1) = ar_filter(d1, phi_entry(phi, 1, 0), false);
    ws.d.block(np, ws.m1, np, ws.m2) = ar_filter(d2, phi_entry(phi, 1, 1), true);
    return ws;
}

BivariatePipeline run_bivariate_pipeline(const SeriesData& data,
                                         const ChangepointConfig& config) {
    if (data.components() != 2 || config.components() != 2) {
        throw DimensionMismatchError("bivariate pipeline requires two components");
    }
    for (int c = 0; c < 2; ++c) {
        for (const RegimeRange& r : regime_partition(config.times(c), data.n())) {
            if (r.length() < 1) throw DegenerateDesignError("empty regime");
        }
    }
    BivariatePipeline pl;
    pl.design1 = build_design(config.times(0), data.n(), data.period());
    pl.design2 = build_design(config.times(1), data.n(), data.period());
    pl.eps_gls = gls_residuals(data.values(), pl.design1.seasonal, pl.design1.regime,
                               pl.design2.regime);
    pl.var = var_yule_walker(pl.eps_gls, data.ar_order());
    pl.ws = whiten_bivariate(data.values(), pl.design1.seasonal, pl.design1.regime,
                             pl.design2.regime, pl.var.phi);
    return pl;
}

ScoreBreakdown bivariate_bmdl_score(const SeriesData& data, const ChangepointConfig& config,
                                    const Metadata& meta, const Hyperparams& hp) {
    const BivariatePipeline pl = run_bivariate_pipeline(data, config);
    const BivariateSolve sol = solve_bivariate(pl.ws, pl.var.sigma, hp.nu);
    const double np = static_cast<double>(data.n() - data.ar_order());
    const std::int64_t m1 = config.num_changepoints(0);
    const std::int64_t m2 = config.num_changepoints(1);

    ScoreBreakdown out;
    out.sigma_fallback = pl.var.sigma_fallback;
    out.fit_term = 0.5 * np * logdet_2x2_pd(pl.var.sigma) + 0.5 * sol.quad;
    out.mu_penalty = 0.0;
    if (m1 + m2 > 0) {
        out.mu_penalty = 0.5 * static_cast<double>(m1) * std::log(hp.nu * pl.var.sigma(0, 0)) +
                         0.5 * static_cast<double>(m2) * std::log(hp.nu * pl.var.sigma(1, 1)) +
                         0.5 * sol.logdet_m;
    }
    out.config_penalty = bivariate_prior_code_length(category_counts(config, meta), hp);
    out.total = out.fit_term + out.mu_penalty + out.config_penalty;
    return out;
}

double log_integrated_likelihood_bivariate(const BivariateWhitened& ws, const VectorXd& s,
                                           const Matrix2d& sigma, double nu) {
    const std::int64_t np = ws.n - ws.p;
    const std::int64_t m = ws.d.cols();
    const Matrix2d u = inverse_sqrt_2x2(sigma);

    const VectorXd y = ws.x - ws.a * s;
    VectorXd y_t(2 * np);
    y_t.head(np) = u(0, 0) * y.head(np);
    y_t.tail(np) = u(1, 0) * y.head(np) + u(1, 1) * y.tail(np);

    double quad;
    double logdet_m = 0.0;
    double logdet_omega = 0.0;
    if (m == 0) {
        quad = y_t.squaredNorm();
    } else {
        MatrixXd d_t(2 * np, m);
        d_t.topRows(np) = u(0, 0) * ws.d.topRows(np);
        d_t.bottomRows(np) = u(1, 0) * ws.d.topRows(np) + u(1, 1) * ws.d.bottomRows(np);
        MatrixXd gram = d_t.transpose() * d_t;
        for (std::int64_t j = 0; j < m; ++j) {
            const double s2 = (j < ws.m1) ? sigma(0, 0) : sigma(1, 1);
            gram(j, j) += 1.0 / (nu * s2);
            logdet_omega += std::log(nu * s2);
        }
        Eigen::LLT<MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) throw SingularMatrixError("mu precision not PD");
        logdet_m = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const VectorXd dty = d_t.transpose() * y_t;
        quad = y_t.squaredNorm() - dty.dot(llt.solve(dty));
    }
    return -static_cast<double>(np) * std::log(2.0 * M_PI) -
           0.5 * static_cast<double>(np) * logdet_2x2_pd(sigma) - 0.5 * logdet_omega -
           0.5 * logdet_m - 0.5 * quad;
}

FittedParams bivariate_fitted_params(const SeriesData& data, const ChangepointConfig& config,
                                     const Hyperparams& hp) {
    const BivariatePipeline pl = run_bivariate_pipeline(data, config);
    const BivariateSolve sol = solve_bivariate(pl.ws, pl.var.sigma, hp.nu);
    const std::int64_t t_cols = data.period();

    FittedParams params;
    params.seasonal_means.push_back(sol.s_hat.head(t_cols));
    params.seasonal_means.push_back(sol.s_hat.tail(t_cols));
    params.regime_means.push_back(sol.mu_hat.head(pl.ws.m1));
    params.regime_means.push_back(sol.mu_hat.tail(pl.ws.m2));
    params.var_coeffs = pl.var.phi;
    params.noise_covariance = pl.var.sigma;
    params.sigma_fallback = pl.var.sigma_fallback;
    return params;
}

}  // namespace bmdl
