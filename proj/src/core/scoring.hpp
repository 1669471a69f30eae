#ifndef BMDL_CORE_SCORING_HPP
#define BMDL_CORE_SCORING_HPP

#include "design.hpp"
#include "types.hpp"

namespace bmdl {

// Sample autocovariances of the OLS residuals, divisor N at every lag,
// plus the Toeplitz pieces of the Yule-Walker system.
struct AutocovEstimates {
    VectorXd gamma;     // gamma(0..p)
    MatrixXd gamma_mat; // Gamma_p, p x p with entries gamma(|i-j|)
    VectorXd gamma_vec; // gamma_p = (gamma(1),...,gamma(p))'
};

struct YuleWalkerEstimates {
    VectorXd phi;
    double sigma2_yw;   // gamma(0) - gamma_p' Gamma_p^{-1} gamma_p
};

enum class Objective { Bmdl, OBmdl, Mdl, Bic };

// Score components. For BMDL: fit = (N-p)/2 log sigma2_hat,
// mu = (m/2) log nu + 1/2 log|D'D + I/nu|, config = prior code length.
// For MDL: fit uses sigma2_{nu=inf}, mu = 1/2 sum log N_r (regimes 2..m+1),
// config = log(m+1) + (m+1) log(N-p). For BIC: fit as MDL, mu = 0,
// config = m log(N-p). total = fit + mu + config in every case.
struct ScoreBreakdown {
    double fit_term = 0.0;
    double mu_penalty = 0.0;
    double config_penalty = 0.0;
    double total = 0.0;
    bool sigma_fallback = false;
};

// Residuals of X regressed on [A|D] over rows 1..N.
VectorXd ols_residuals(const VectorXd& x, const MatrixXd& a, const MatrixXd& d);

AutocovEstimates sample_autocov(const VectorXd& eps, std::int64_t p);

YuleWalkerEstimates yule_walker(const AutocovEstimates& acov);

// Closed-form estimators of the whitened system. nu may be 0 (all
// shrinkage, B = I), finite, or +inf (ordinary least squares limit).
VectorXd estimate_seasonal_means(const WhitenedSystem& ws, double nu);
double estimate_noise_variance(const WhitenedSystem& ws, const VectorXd& s_hat, double nu);
VectorXd estimate_regime_means(const WhitenedSystem& ws, const VectorXd& s_hat, double nu);

// -sum_k log{Gamma(a + m^(k)) Gamma(b^(k) + N^(k) - m^(k))}, log-gamma space.
double prior_code_length(const ClassifiedCounts& counts, const Hyperparams& hp);

// Everything the scores need at one configuration of one component.
struct UnivariatePipeline {
    DesignPair design;
    VectorXd eps_ols;
    AutocovEstimates acov;
    YuleWalkerEstimates yw;
    WhitenedSystem ws;
};

UnivariatePipeline run_univariate_pipeline(const VectorXd& x, std::int64_t period, std::int64_t p,
                                           const std::vector<std::int64_t>& times);

ScoreBreakdown bmdl_score(const VectorXd& x, std::int64_t period, std::int64_t p,
                          const std::vector<std::int64_t>& times, const Metadata& meta,
                          const Hyperparams& hp);
double mdl_score(const VectorXd& x, std::int64_t period, std::int64_t p,
                 const std::vector<std::int64_t>& times);
double bic_score(const VectorXd& x, std::int64_t period, std::int64_t p,
                 const std::vector<std::int64_t>& times);

// Uniform entry point used by search and the CLI. MDL/BIC report their
// penalty split through the same breakdown fields.
ScoreBreakdown score_univariate(const VectorXd& x, std::int64_t period, std::int64_t p,
                                const std::vector<std::int64_t>& times, const Metadata& meta,
                                const Hyperparams& hp, Objective objective);

// Convenience wrappers over SeriesData + ChangepointConfig (univariate).
ScoreBreakdown bmdl_score(const SeriesData& data, const ChangepointConfig& config,
                          const Metadata& meta, const Hyperparams& hp);
double mdl_score(const SeriesData& data, const ChangepointConfig& config);
double bic_score(const SeriesData& data, const ChangepointConfig& config);

// sigma2 estimators exposed for the comparator scores and diagnostics.
double noise_variance_nu_inf(const WhitenedSystem& ws);

// Log integrated likelihood over the regime means, all constants kept:
// log integral of f(xw | mu, s, sigma2, phi) N(mu; 0, nu sigma2 I) dmu.
// Used by the quadrature/Monte-Carlo oracles.
double log_integrated_likelihood(const WhitenedSystem& ws, const VectorXd& s, double sigma2,
                                 double nu);

// Theorem-2 estimators (s_hat, mu_hat, phi_hat, sigma2_hat) at a config.
FittedParams univariate_fitted_params(const SeriesData& data, const ChangepointConfig& config,
                                      const Hyperparams& hp);

}  // namespace bmdl

#endif
