#include "scoring.hpp"

#include <cmath>
#include <limits>

namespace bmdl {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_regimes(const std::vector<std::int64_t>& times, std::int64_t n, std::int64_t p) {
    std::int64_t prev = 0;
    for (std::int64_t t : times) {
        if (t <= p || t > n) {
            throw OutOfRangeError("changepoint time " + std::to_string(t) + " outside [" +
                                  std::to_string(p + 1) + ", " + std::to_string(n) + "]");
        }
        if (t == prev) throw DuplicateError("changepoint time " + std::to_string(t) + " repeated");
        if (t < prev) throw InvalidArgumentError("changepoint times must be sorted");
        prev = t;
    }
    for (const RegimeRange& r : regime_partition(times, n)) {
        if (r.length() < 1) {
            throw DegenerateDesignError("empty regime starting at " + std::to_string(r.first));
        }
    }
}

ClassifiedCounts classify_times(const std::vector<std::int64_t>& times, std::int64_t n,
                                std::int64_t p, const Metadata& meta) {
    ClassifiedCounts counts{};
    counts.n_doc = meta.count();
    counts.n_undoc = (n - p) - counts.n_doc;
    for (std::int64_t t : times) {
        if (meta.contains(t)) ++counts.m_doc; else ++counts.m_undoc;
    }
    return counts;
}

double checked_log(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw SingularMatrixError(std::string(what) + " is not strictly positive");
    }
    return std::log(x);
}

// Least squares on the raw indicator design via its Gram matrix. The Gram
// blocks are count/sum statistics, so this is O(N) plus a small solve.
// Falls back to column-pivoted QR when the Gram system looks rank-deficient.
VectorXd indicator_ols_residuals(const VectorXd& x, const MatrixXd& a, const MatrixXd& d) {
    const std::int64_t n = x.size();
    const std::int64_t t_cols = a.cols();
    const std::int64_t m = d.cols();
    const std::int64_t k = t_cols + m;

    std::vector<std::int64_t> season(n, -1), regime(n, -1);
    for (std::int64_t t = 0; t < n; ++t) {
        for (std::int64_t j = 0; j < t_cols; ++j) {
            if (a(t, j) != 0.0) { season[t] = j; break; }
        }
        for (std::int64_t j = 0; j < m; ++j) {
            if (d(t, j) != 0.0) { regime[t] = j; break; }
        }
    }

    MatrixXd gram = MatrixXd::Zero(k, k);
    VectorXd rhs = VectorXd::Zero(k);
    for (std::int64_t t = 0; t < n; ++t) {
        const std::int64_t v = season[t];
        const std::int64_t r = regime[t];
        gram(v, v) += 1.0;
        rhs(v) += x(t);
        if (r >= 0) {
            gram(t_cols + r, t_cols + r) += 1.0;
            gram(v, t_cols + r) += 1.0;
            gram(t_cols + r, v) += 1.0;
            rhs(t_cols + r) += x(t);
        }
    }

    Eigen::LDLT<MatrixXd> ldlt(gram);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        const VectorXd diag = ldlt.vectorD();
        const double dmax = diag.maxCoeff();
        const double dmin = diag.minCoeff();
        ok = dmax > 0.0 && dmin > dmax / kConditionLimit;
    }
    VectorXd beta;
    if (ok) {
        beta = ldlt.solve(rhs);
    } else {
        MatrixXd full(n, k);
        full << a, d;
        Eigen::ColPivHouseholderQR<MatrixXd> qr(full);
        if (qr.rank() < k) {
            throw DegenerateDesignError("seasonal/regime design is rank deficient");
        }
        beta = qr.solve(x);
    }

    VectorXd resid = x;
    for (std::int64_t t = 0; t < n; ++t) {
        resid(t) -= beta(season[t]);
        if (regime[t] >= 0) resid(t) -= beta(t_cols + regime[t]);
    }
    return resid;
}

struct PenalizedSolve {
    VectorXd s_hat;
    VectorXd mu_hat;
    double rss = 0.0;      // ||xw - A s - D u||^2 + ||u||^2 / nu
    double logdet_m = 0.0; // log|D'D + I/nu|, 0 when m == 0
};

// Joint minimizer over (s, mu) of the ridge-augmented least squares induced
// by integrating the regime means out. nu = inf drops the ridge rows
// (ordinary least squares); nu = 0 pins mu at zero.
PenalizedSolve solve_penalized(const WhitenedSystem& ws, double nu) {
    const std::int64_t rows = ws.x.size();
    const std::int64_t t_cols = ws.a.cols();
    const std::int64_t m = ws.d.cols();

    if (nu < 0.0 || std::isnan(nu)) throw InvalidArgumentError("nu must be >= 0");
    const bool pin_mu = (nu == 0.0) || m == 0;
    const bool ridge = std::isfinite(nu) && !pin_mu;

    const std::int64_t k = pin_mu ? t_cols : t_cols + m;
    const std::int64_t aug = rows + (ridge ? m : 0);

    MatrixXd design = MatrixXd::Zero(aug, k);
    VectorXd rhs = VectorXd::Zero(aug);
    design.block(0, 0, rows, t_cols) = ws.a;
    if (!pin_mu) design.block(0, t_cols, rows, m) = ws.d;
    if (ridge) {
        const double lam = 1.0 / std::sqrt(nu);
        for (std::int64_t j = 0; j < m; ++j) design(rows + j, t_cols + j) = lam;
    }
    rhs.head(rows) = ws.x;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < k) throw SingularMatrixError("whitened design is rank deficient");
    const auto rdiag = qr.matrixQR().diagonal().head(k).cwiseAbs();
    if (rdiag.minCoeff() <= 0.0 || rdiag.maxCoeff() / rdiag.minCoeff() > kConditionLimit) {
        throw SingularMatrixError("whitened design condition number exceeds 1e12");
    }

    PenalizedSolve out;
    const VectorXd beta = qr.solve(rhs);
    out.s_hat = beta.head(t_cols);
    out.mu_hat = pin_mu ? VectorXd(VectorXd::Zero(m)) : VectorXd(beta.tail(m));
    out.rss = (rhs - design * beta).squaredNorm();
    if (m > 0 && std::isfinite(nu) && nu > 0.0) {
        MatrixXd gram = ws.d.transpose() * ws.d;
        gram.diagonal().array() += 1.0 / nu;
        Eigen::LLT<MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
            throw SingularMatrixError("D'D + I/nu not positive definite");
        }
        out.logdet_m = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    } else if (m > 0 && !std::isfinite(nu)) {
        MatrixXd gram = ws.d.transpose() * ws.d;
        Eigen::LLT<MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
            throw SingularMatrixError("D'D not positive definite");
        }
        out.logdet_m = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    return out;
}

// Ridge regression of y on the whitened regime columns alone.
VectorXd regime_ridge(const WhitenedSystem& ws, const VectorXd& y, double nu, double* rss) {
    const std::int64_t rows = ws.x.size();
    const std::int64_t m = ws.d.cols();
    const bool ridge = std::isfinite(nu);
    const std::int64_t aug = rows + (ridge ? m : 0);
    MatrixXd design = MatrixXd::Zero(aug, m);
    design.topRows(rows) = ws.d;
    if (ridge) {
        const double lam = 1.0 / std::sqrt(nu);
        for (std::int64_t j = 0; j < m; ++j) design(rows + j, j) = lam;
    }
    VectorXd rhs = VectorXd::Zero(aug);
    rhs.head(rows) = y;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < m) throw SingularMatrixError("whitened regime design rank deficient");
    const VectorXd u = qr.solve(rhs);
    if (rss) *rss = (rhs - design * u).squaredNorm();
    return u;
}

double mdl_regime_term(const std::vector<std::int64_t>& times, std::int64_t n) {
    double sum = 0.0;
    const auto regimes = regime_partition(times, n);
    for (std::size_t r = 1; r < regimes.size(); ++r) {
        sum += std::log(static_cast<double>(regimes[r].length()));
    }
    return sum;
}

}  // namespace

VectorXd ols_residuals(const VectorXd& x, const MatrixXd& a, const MatrixXd& d) {
    if (a.rows() != x.size() || d.rows() != x.size()) {
        throw DimensionMismatchError("ols_residuals: row mismatch");
    }
    // regimes with no observations surface as zero columns
    for (std::int64_t j = 0; j < d.cols(); ++j) {
        if (d.col(j).sum() == 0.0) throw DegenerateDesignError("regime without observations");
    }
    return indicator_ols_residuals(x, a, d);
}

AutocovEstimates sample_autocov(const VectorXd& eps, std::int64_t p) {
    const std::int64_t n = eps.size();
    if (n <= p) throw DimensionMismatchError("sample_autocov requires N > p");
    AutocovEstimates acov;
    acov.gamma = VectorXd::Zero(p + 1);
    for (std::int64_t h = 0; h <= p; ++h) {
        double s = 0.0;
        for (std::int64_t t = h; t < n; ++t) s += eps(t) * eps(t - h);
        acov.gamma(h) = s / static_cast<double>(n);
    }
    acov.gamma_mat = MatrixXd::Zero(p, p);
    acov.gamma_vec = VectorXd::Zero(p);
    for (std::int64_t i = 0; i < p; ++i) {
        acov.gamma_vec(i) = acov.gamma(i + 1);
        for (std::int64_t j = 0; j < p; ++j) acov.gamma_mat(i, j) = acov.gamma(std::abs(i - j));
    }
    return acov;
}

YuleWalkerEstimates yule_walker(const AutocovEstimates& acov) {
    const std::int64_t p = acov.gamma_vec.size();
    YuleWalkerEstimates yw;
    if (p == 0) {
        yw.phi = VectorXd();
        yw.sigma2_yw = acov.gamma(0);
        return yw;
    }
    if (!(acov.gamma(0) > 0.0)) {
        throw SingularMatrixError("constant residuals: gamma(0) not positive");
    }
    Eigen::LDLT<MatrixXd> ldlt(acov.gamma_mat);
    if (ldlt.info() != Eigen::Success) {
        throw SingularMatrixError("autocovariance matrix not decomposable");
    }
    const VectorXd diag = ldlt.vectorD();
    if (diag.minCoeff() <= 0.0 || diag.maxCoeff() / diag.minCoeff() > kConditionLimit) {
        throw SingularMatrixError("autocovariance matrix numerically singular");
    }
    yw.phi = ldlt.solve(acov.gamma_vec);
    yw.sigma2_yw = std::max(0.0, acov.gamma(0) - acov.gamma_vec.dot(yw.phi));
    return yw;
}

VectorXd estimate_seasonal_means(const WhitenedSystem& ws, double nu) {
    return solve_penalized(ws, nu).s_hat;
}

double estimate_noise_variance(const WhitenedSystem& ws, const VectorXd& s_hat, double nu) {
    const std::int64_t rows = ws.x.size();
    const std::int64_t m = ws.d.cols();
    const VectorXd y = ws.x - ws.a * s_hat;
    if (m == 0 || nu == 0.0) return y.squaredNorm() / static_cast<double>(rows);
    double rss = 0.0;
    regime_ridge(ws, y, nu, &rss);
    return rss / static_cast<double>(rows);
}

VectorXd estimate_regime_means(const WhitenedSystem& ws, const VectorXd& s_hat, double nu) {
    const std::int64_t m = ws.d.cols();
    if (m == 0) throw EmptyModelError("no regime means to estimate for m = 0");
    if (nu == 0.0) return VectorXd::Zero(m);
    return regime_ridge(ws, ws.x - ws.a * s_hat, nu, nullptr);
}

double prior_code_length(const ClassifiedCounts& counts, const Hyperparams& hp) {
    if (counts.m_undoc > counts.n_undoc || counts.m_doc > counts.n_doc) {
        throw InvalidArgumentError("changepoint counts exceed available times");
    }
    double value = 0.0;
    value -= std::lgamma(hp.a + static_cast<double>(counts.m_undoc));
    value -= std::lgamma(hp.b_undoc + static_cast<double>(counts.n_undoc - counts.m_undoc));
    value -= std::lgamma(hp.a + static_cast<double>(counts.m_doc));
    value -= std::lgamma(hp.b_doc + static_cast<double>(counts.n_doc - counts.m_doc));
    return value;
}

UnivariatePipeline run_univariate_pipeline(const VectorXd& x, std::int64_t period, std::int64_t p,
                                           const std::vector<std::int64_t>& times) {
    check_regimes(times, x.size(), p);
    UnivariatePipeline pl;
    pl.design = build_design(times, x.size(), period);
    pl.eps_ols = ols_residuals(x, pl.design.seasonal, pl.design.regime);
    pl.acov = sample_autocov(pl.eps_ols, p);
    pl.yw = yule_walker(pl.acov);
    pl.ws = whiten_system(x, pl.design, pl.yw.phi);
    return pl;
}

double noise_variance_nu_inf(const WhitenedSystem& ws) {
    const PenalizedSolve sol = solve_penalized(ws, kInf);
    return sol.rss / static_cast<double>(ws.x.size());
}

ScoreBreakdown bmdl_score(const VectorXd& x, std::int64_t period, std::int64_t p,
                          const std::vector<std::int64_t>& times, const Metadata& meta,
                          const Hyperparams& hp) {
    const UnivariatePipeline pl = run_univariate_pipeline(x, period, p, times);
    const PenalizedSolve sol = solve_penalized(pl.ws, hp.nu);
    const double np = static_cast<double>(x.size() - p);
    const double sigma2 = sol.rss / np;
    const std::int64_t m = static_cast<std::int64_t>(times.size());

    ScoreBreakdown out;
    out.fit_term = 0.5 * np * checked_log(sigma2, "sigma2_hat");
    out.mu_penalty =
        (m == 0) ? 0.0 : 0.5 * static_cast<double>(m) * std::log(hp.nu) + 0.5 * sol.logdet_m;
    out.config_penalty = prior_code_length(classify_times(times, x.size(), p, meta), hp);
    out.total = out.fit_term + out.mu_penalty + out.config_penalty;
    return out;
}

double mdl_score(const VectorXd& x, std::int64_t period, std::int64_t p,
                 const std::vector<std::int64_t>& times) {
    return score_univariate(x, period, p, times, Metadata(), Hyperparams::defaults(),
                            Objective::Mdl)
        .total;
}

double bic_score(const VectorXd& x, std::int64_t period, std::int64_t p,
                 const std::vector<std::int64_t>& times) {
    return score_univariate(x, period, p, times, Metadata(), Hyperparams::defaults(),
                            Objective::Bic)
        .total;
}

ScoreBreakdown score_univariate(const VectorXd& x, std::int64_t period, std::int64_t p,
                                const std::vector<std::int64_t>& times, const Metadata& meta,
                                const Hyperparams& hp, Objective objective) {
    if (objective == Objective::Bmdl) return bmdl_score(x, period, p, times, meta, hp);
    if (objective == Objective::OBmdl) {
        Hyperparams ob = Hyperparams::objective_bayes();
        ob.nu = hp.nu;
        return bmdl_score(x, period, p, times, Metadata(), ob);
    }

    const UnivariatePipeline pl = run_univariate_pipeline(x, period, p, times);
    const double np = static_cast<double>(x.size() - p);
    const double sigma2 = noise_variance_nu_inf(pl.ws);
    const std::int64_t m = static_cast<std::int64_t>(times.size());

    ScoreBreakdown out;
    out.fit_term = 0.5 * np * checked_log(sigma2, "sigma2_hat(nu=inf)");
    if (objective == Objective::Mdl) {
        out.mu_penalty = 0.5 * mdl_regime_term(times, x.size());
        out.config_penalty =
            std::log(static_cast<double>(m + 1)) + static_cast<double>(m + 1) * std::log(np);
    } else {
        out.mu_penalty = 0.0;
        out.config_penalty = static_cast<double>(m) * std::log(np);
    }
    out.total = out.fit_term + out.mu_penalty + out.config_penalty;
    return out;
}

ScoreBreakdown bmdl_score(const SeriesData& data, const ChangepointConfig& config,
                          const Metadata& meta, const Hyperparams& hp) {
    if (data.components() != 1 || config.components() != 1) {
        throw DimensionMismatchError("univariate score requires one component");
    }
    return bmdl_score(data.component(0), data.period(), data.ar_order(), config.times(0), meta,
                      hp);
}

double mdl_score(const SeriesData& data, const ChangepointConfig& config) {
    return mdl_score(data.component(0), data.period(), data.ar_order(), config.times(0));
}

double bic_score(const SeriesData& data, const ChangepointConfig& config) {
    return bic_score(data.component(0), data.period(), data.ar_order(), config.times(0));
}

double log_integrated_likelihood(const WhitenedSystem& ws, const VectorXd& s, double sigma2,
                                 double nu) {
    const std::int64_t rows = ws.x.size();
    const std::int64_t m = ws.d.cols();
    if (!(sigma2 > 0.0)) throw InvalidArgumentError("sigma2 must be positive");

    const VectorXd y = ws.x - ws.a * s;
    double quad;
    double logdet = 0.0;
    if (m == 0) {
        quad = y.squaredNorm();
    } else {
        if (!(nu > 0.0) || !std::isfinite(nu)) {
            throw InvalidArgumentError("integrated likelihood needs finite nu > 0");
        }
        MatrixXd gram = ws.d.transpose() * ws.d;
        gram.diagonal().array() += 1.0 / nu;
        Eigen::LLT<MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) throw SingularMatrixError("D'D + I/nu not PD");
        logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const VectorXd dty = ws.d.transpose() * y;
        quad = y.squaredNorm() - dty.dot(llt.solve(dty));
    }
    const double np = static_cast<double>(rows);
    return -0.5 * np * std::log(2.0 * M_PI * sigma2) -
           0.5 * static_cast<double>(m) * std::log(nu) - 0.5 * logdet - quad / (2.0 * sigma2);
}

FittedParams univariate_fitted_params(const SeriesData& data, const ChangepointConfig& config,
                                      const Hyperparams& hp) {
    const UnivariatePipeline pl = run_univariate_pipeline(
        data.component(0), data.period(), data.ar_order(), config.times(0));
    const PenalizedSolve sol = solve_penalized(pl.ws, hp.nu);
    FittedParams params;
    params.seasonal_means.push_back(sol.s_hat);
    params.regime_means.push_back(sol.mu_hat);
    params.ar_coeffs.push_back(pl.yw.phi);
    params.noise_variance = sol.rss / static_cast<double>(pl.ws.x.size());
    return params;
}

}  // namespace bmdl
