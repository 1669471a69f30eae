#ifndef BMDL_CORE_SCORING_BIVARIATE_HPP
#define BMDL_CORE_SCORING_BIVARIATE_HPP

#include "scoring.hpp"

namespace bmdl {

// VAR Yule-Walker output: cross-autocovariances Gamma(0..p), coefficient
// matrices Phi_1..Phi_p and innovation covariance Sigma.
struct VarEstimates {
    std::vector<Matrix2d> gamma;  // Gamma(0..p)
    std::vector<Matrix2d> phi;    // Phi_1..Phi_p
    Matrix2d sigma = Matrix2d::Zero();
    bool sigma_fallback = false;  // Sigma replaced by the scaled Gamma(0) backstop
};

// Times in p+1..N classified by the four indicator categories
// (1,1),(1,0),(0,1),(0,0) and by documentation status.
struct CategoryCounts {
    std::array<std::int64_t, 4> undoc = {0, 0, 0, 0};
    std::array<std::int64_t, 4> doc = {0, 0, 0, 0};
};

CategoryCounts category_counts(const ChangepointConfig& config, const Metadata& meta);

// GLS residuals of the stacked mean fit, weight Gamma_ols(0)^{-1} (x) I_N.
// Returns an N x 2 residual matrix.
MatrixXd gls_residuals(const MatrixXd& x, const MatrixXd& a, const MatrixXd& d1,
                       const MatrixXd& d2);

VarEstimates var_yule_walker(const MatrixXd& eps_gls, std::int64_t p);

// -sum_k sum_l log Gamma(alpha_l^(k) + m_l^(k))
double bivariate_prior_code_length(const CategoryCounts& counts, const Hyperparams& hp);

// Stacked whitened system: component-1 rows then component-2 rows.
// Columns of a: seasonal means of component 1 then component 2 (2T).
// Columns of d: regime means of component 1 (m1) then component 2 (m2).
struct BivariateWhitened {
    VectorXd x;   // 2(N-p)
    MatrixXd a;   // 2(N-p) x 2T
    MatrixXd d;   // 2(N-p) x (m1+m2)
    std::int64_t n = 0;
    std::int64_t p = 0;
    std::int64_t m1 = 0;
    std::int64_t m2 = 0;
};

BivariateWhitened whiten_bivariate(const MatrixXd& x, const MatrixXd& a, const MatrixXd& d1,
                                   const MatrixXd& d2, const std::vector<Matrix2d>& phi);

// The full pipeline evaluated at a configuration.
struct BivariatePipeline {
    DesignPair design1;
    DesignPair design2;
    MatrixXd eps_gls;  // N x 2
    VarEstimates var;
    BivariateWhitened ws;
};

BivariatePipeline run_bivariate_pipeline(const SeriesData& data, const ChangepointConfig& config);

ScoreBreakdown bivariate_bmdl_score(const SeriesData& data, const ChangepointConfig& config,
                                    const Metadata& meta, const Hyperparams& hp);

// Log integrated likelihood over the regime means with all constants kept,
// at fixed (s, Sigma); the whitening already encodes Phi.
double log_integrated_likelihood_bivariate(const BivariateWhitened& ws, const VectorXd& s,
                                           const Matrix2d& sigma, double nu);

FittedParams bivariate_fitted_params(const SeriesData& data, const ChangepointConfig& config,
                                     const Hyperparams& hp);

}  // namespace bmdl

#endif
