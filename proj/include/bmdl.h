/*
 * bmdl: multiple changepoint detection for seasonal autoregressive series
 * by Bayesian minimum description length scoring, with metadata priors,
 * MCMC model search, and a simulation/power-study harness.
 *
 * C API over an opaque-handle core. All functions returning bmdl_status
 * report failures through the status code; bmdl_last_error() carries the
 * human-readable message for the calling thread.
 */

#ifndef BMDL_H
#define BMDL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bmdl_status {
    BMDL_OK = 0,
    BMDL_E_INVALID_ARGUMENT = 1,
    BMDL_E_OUT_OF_RANGE = 2,
    BMDL_E_DUPLICATE = 3,
    BMDL_E_DIMENSION_MISMATCH = 4,
    BMDL_E_DEGENERATE_DESIGN = 5,
    BMDL_E_SINGULAR_MATRIX = 6,
    BMDL_E_EMPTY_MODEL = 7,
    BMDL_E_NONSTATIONARY = 8,
    BMDL_E_CHAIN_ABORTED = 9,
    BMDL_E_PARSE = 10,
    BMDL_E_GAP = 11,
    BMDL_E_NOMEM = 12,
    BMDL_E_INTERNAL = 13
} bmdl_status;

const char* bmdl_status_name(bmdl_status status);
const char* bmdl_last_error(void);

typedef enum bmdl_objective {
    BMDL_OBJECTIVE_BMDL = 0,
    BMDL_OBJECTIVE_OBMDL = 1,
    BMDL_OBJECTIVE_MDL = 2,
    BMDL_OBJECTIVE_BIC = 3
} bmdl_objective;

typedef enum bmdl_mode { BMDL_MODE_UNIVARIATE = 0, BMDL_MODE_BIVARIATE = 1 } bmdl_mode;

/* ------------------------------------------------------------------ */
/* series                                                              */

typedef struct bmdl_series bmdl_series;

/* values: length n*components, column-major (component 0 rows first) */
bmdl_status bmdl_series_create(const double* values, int64_t n, int components, int64_t period,
                               int64_t ar_order, bmdl_series** out);
/* documented times, absolute indices in p+1..n */
bmdl_status bmdl_series_set_metadata(bmdl_series* series, const int64_t* times, int64_t count);
void bmdl_series_free(bmdl_series* series);

/* ------------------------------------------------------------------ */
/* hyperparameters and options                                         */

typedef struct bmdl_hyperparams {
    double a;
    double b_undoc; /* b^(1) */
    double b_doc;   /* b^(2) */
    double nu;
    double alpha_undoc[4]; /* Dirichlet, categories (1,1),(1,0),(0,1),(0,0) */
    double alpha_doc[4];
} bmdl_hyperparams;

void bmdl_hyperparams_init(bmdl_hyperparams* hp);           /* metadata defaults */
void bmdl_hyperparams_init_objective(bmdl_hyperparams* hp); /* a = b = 1 */

typedef struct bmdl_search_options {
    int64_t iterations;
    int chains;
    uint64_t seed;
    double flip_probability;
    int64_t max_changepoints; /* per component; -1 for max(1, (N-p)/20) */
    int64_t min_spacing;      /* minimum regime length */
    int threads;              /* 0: BMDL_THREADS env or hardware count */
    int record_traces;        /* nonzero to keep per-chain traces */
    int64_t trace_stride;
    int random_init;          /* chains after the first start from random configs */
} bmdl_search_options;

void bmdl_search_options_init(bmdl_search_options* opts);

typedef struct bmdl_score_breakdown {
    double fit_term;
    double mu_penalty;
    double config_penalty;
    double total;
    int sigma_fallback;
} bmdl_score_breakdown;

/* Score one explicit configuration. times2/m2 are ignored in univariate
 * mode. Times are absolute indices in p+1..n. */
bmdl_status bmdl_score_config(const bmdl_series* series, bmdl_objective objective, bmdl_mode mode,
                              const int64_t* times1, int64_t m1, const int64_t* times2, int64_t m2,
                              const bmdl_hyperparams* hp, int use_metadata,
                              bmdl_score_breakdown* out);

/* ------------------------------------------------------------------ */
/* fitting                                                             */

typedef struct bmdl_fit_result bmdl_fit_result;

bmdl_status bmdl_fit(const bmdl_series* series, bmdl_objective objective, bmdl_mode mode,
                     const bmdl_hyperparams* hp, int use_metadata,
                     const bmdl_search_options* opts, bmdl_fit_result** out);
void bmdl_fit_result_free(bmdl_fit_result* result);

int bmdl_fit_components(const bmdl_fit_result* result);
int64_t bmdl_fit_num_changepoints(const bmdl_fit_result* result, int component);
int64_t bmdl_fit_changepoint(const bmdl_fit_result* result, int component, int64_t index);
void bmdl_fit_score(const bmdl_fit_result* result, bmdl_score_breakdown* out);

/* fitted parameters at the winning configuration */
int64_t bmdl_fit_period(const bmdl_fit_result* result);
int64_t bmdl_fit_ar_order(const bmdl_fit_result* result);
double bmdl_fit_seasonal_mean(const bmdl_fit_result* result, int component, int64_t season);
double bmdl_fit_regime_mean(const bmdl_fit_result* result, int component, int64_t index);
double bmdl_fit_ar_coeff(const bmdl_fit_result* result, int component, int64_t lag);
double bmdl_fit_var_coeff(const bmdl_fit_result* result, int64_t lag, int row, int col);
double bmdl_fit_noise_variance(const bmdl_fit_result* result);
double bmdl_fit_noise_covariance(const bmdl_fit_result* result, int row, int col);
int bmdl_fit_sigma_fallback(const bmdl_fit_result* result);

int bmdl_fit_chain_count(const bmdl_fit_result* result);
int bmdl_fit_aborted_chains(const bmdl_fit_result* result);
const char* bmdl_fit_chain_status(const bmdl_fit_result* result, int chain);
int64_t bmdl_fit_chain_accepted(const bmdl_fit_result* result, int chain);
int64_t bmdl_fit_chain_evaluated(const bmdl_fit_result* result, int chain);
double bmdl_fit_chain_best_total(const bmdl_fit_result* result, int chain);
int64_t bmdl_fit_trace_length(const bmdl_fit_result* result, int chain);
void bmdl_fit_trace_entry(const bmdl_fit_result* result, int chain, int64_t index,
                          int64_t* iteration, double* total, int64_t* m, double* best_total);

/* ------------------------------------------------------------------ */
/* simulation scenarios and power studies                              */

typedef struct bmdl_scenario bmdl_scenario;

bmdl_status bmdl_scenario_create(int64_t n, int64_t period, int64_t ar_order, int components,
                                 bmdl_scenario** out);
void bmdl_scenario_free(bmdl_scenario* scenario);

bmdl_status bmdl_scenario_set_seasonal_means(bmdl_scenario* scenario, int component,
                                             const double* values, int64_t count);
/* times: m changepoint times; regime_means: m+1 values (first regime first) */
bmdl_status bmdl_scenario_set_changepoints(bmdl_scenario* scenario, int component,
                                           const int64_t* times, int64_t m,
                                           const double* regime_means);
bmdl_status bmdl_scenario_set_ar(bmdl_scenario* scenario, const double* phi, int64_t p,
                                 double sigma2);
/* phi: p row-major 2x2 matrices (4p doubles); sigma: row-major 2x2 */
bmdl_status bmdl_scenario_set_var(bmdl_scenario* scenario, const double* phi, int64_t p,
                                  const double* sigma);
bmdl_status bmdl_scenario_set_metadata(bmdl_scenario* scenario, const int64_t* times,
                                       int64_t count);
bmdl_status bmdl_scenario_set_burnin(bmdl_scenario* scenario, int64_t burnin);
bmdl_status bmdl_scenario_set_hyperparams(bmdl_scenario* scenario, const bmdl_hyperparams* hp);
/* mode: 0/1 univariate on that component, 2 bivariate; objective < 0 marks
 * the truth-returning detector used for harness checks */
bmdl_status bmdl_scenario_add_detector(bmdl_scenario* scenario, int objective, int mode,
                                       int use_metadata);

/* The paper-style bivariate design at signal-to-noise kappa. */
bmdl_status bmdl_scenario_create_paper(double kappa, bmdl_scenario** out);

/* out: n*components doubles, column-major */
bmdl_status bmdl_simulate_series(const bmdl_scenario* scenario, uint64_t seed, double* out);

typedef struct bmdl_study_options {
    int64_t replications;
    int64_t iterations;
    int chains;
    uint64_t seed;
    int threads;
    double flip_probability;
    int64_t max_changepoints;
    int64_t min_spacing;
} bmdl_study_options;

void bmdl_study_options_init(bmdl_study_options* opts);

typedef struct bmdl_study_result bmdl_study_result;

bmdl_status bmdl_run_study(const bmdl_scenario* scenario, const bmdl_study_options* opts,
                           bmdl_study_result** out);
void bmdl_study_result_free(bmdl_study_result* result);

/* Deterministic CSV/JSON renderings; free with bmdl_string_free. */
char* bmdl_study_result_csv(const bmdl_study_result* result);
char* bmdl_study_result_json(const bmdl_study_result* result);

int64_t bmdl_study_row_count(const bmdl_study_result* result);
const char* bmdl_study_row_detector(const bmdl_study_result* result, int64_t row);
int bmdl_study_row_component(const bmdl_study_result* result, int64_t row);
int64_t bmdl_study_row_true_time_count(const bmdl_study_result* result, int64_t row);
int64_t bmdl_study_row_true_time(const bmdl_study_result* result, int64_t row, int64_t idx);
double bmdl_study_row_true_positive_pct(const bmdl_study_result* result, int64_t row, int64_t idx);
double bmdl_study_row_avg_false_positive_pct(const bmdl_study_result* result, int64_t row);
double bmdl_study_row_mhat_mean(const bmdl_study_result* result, int64_t row);
double bmdl_study_row_mhat_sd(const bmdl_study_result* result, int64_t row);

void bmdl_string_free(char* str);

#ifdef __cplusplus
}
#endif

#endif /* BMDL_H */
