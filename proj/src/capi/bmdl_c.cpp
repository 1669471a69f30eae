#include "bmdl.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "core/scoring.hpp"
#include "core/scoring_bivariate.hpp"
#include "core/search.hpp"
#include "core/simulate.hpp"

namespace {

thread_local std::string g_last_error;

bmdl_status to_status(const bmdl::Error& e) {
    using bmdl::ErrorCode;
    switch (e.code()) {
        case ErrorCode::InvalidArgument: return BMDL_E_INVALID_ARGUMENT;
        case ErrorCode::OutOfRange: return BMDL_E_OUT_OF_RANGE;
        case ErrorCode::Duplicate: return BMDL_E_DUPLICATE;
        case ErrorCode::DimensionMismatch: return BMDL_E_DIMENSION_MISMATCH;
        case ErrorCode::DegenerateDesign: return BMDL_E_DEGENERATE_DESIGN;
        case ErrorCode::SingularMatrix: return BMDL_E_SINGULAR_MATRIX;
        case ErrorCode::EmptyModel: return BMDL_E_EMPTY_MODEL;
        case ErrorCode::NonStationary: return BMDL_E_NONSTATIONARY;
        case ErrorCode::ChainAborted: return BMDL_E_CHAIN_ABORTED;
        case ErrorCode::ParseError: return BMDL_E_PARSE;
        case ErrorCode::GapError: return BMDL_E_GAP;
        case ErrorCode::Internal: return BMDL_E_INTERNAL;
    }
    return BMDL_E_INTERNAL;
}

template <typename Fn>
bmdl_status guarded(Fn&& fn) {
    try {
        fn();
        return BMDL_OK;
    } catch (const bmdl::Error& e) {
        g_last_error = e.what();
        return to_status(e);
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return BMDL_E_NOMEM;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BMDL_E_INTERNAL;
    }
}

bmdl::Hyperparams convert(const bmdl_hyperparams* hp) {
    bmdl::Hyperparams out;
    if (!hp) return out;
    out.a = hp->a;
    out.b_undoc = hp->b_undoc;
    out.b_doc = hp->b_doc;
    out.nu = hp->nu;
    for (int i = 0; i < 4; ++i) {
        out.alpha_undoc[static_cast<std::size_t>(i)] = hp->alpha_undoc[i];
        out.alpha_doc[static_cast<std::size_t>(i)] = hp->alpha_doc[i];
    }
    return out;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

struct bmdl_series {
    bmdl::SeriesData data;
    bmdl::Metadata metadata;
};

struct bmdl_fit_result {
    bmdl::FitResult result;
    std::int64_t period;
    std::int64_t ar_order;
};

struct bmdl_scenario {
    bmdl::Scenario scenario;
};

struct bmdl_study_result {
    bmdl::DetectionTable table;
};

extern "C" {

const char* bmdl_status_name(bmdl_status status) {
    switch (status) {
        case BMDL_OK: return "ok";
        case BMDL_E_INVALID_ARGUMENT: return "invalid argument";
        case BMDL_E_OUT_OF_RANGE: return "out of range";
        case BMDL_E_DUPLICATE: return "duplicate";
        case BMDL_E_DIMENSION_MISMATCH: return "dimension mismatch";
        case BMDL_E_DEGENERATE_DESIGN: return "degenerate design";
        case BMDL_E_SINGULAR_MATRIX: return "singular matrix";
        case BMDL_E_EMPTY_MODEL: return "empty model";
        case BMDL_E_NONSTATIONARY: return "non-stationary";
        case BMDL_E_CHAIN_ABORTED: return "chain aborted";
        case BMDL_E_PARSE: return "parse error";
        case BMDL_E_GAP: return "gap error";
        case BMDL_E_NOMEM: return "out of memory";
        case BMDL_E_INTERNAL: return "internal error";
    }
    return "unknown";
}

const char* bmdl_last_error(void) { return g_last_error.c_str(); }

bmdl_status bmdl_series_create(const double* values, int64_t n, int components, int64_t period,
                               int64_t ar_order, bmdl_series** out) {
    if (!values || !out) {
        g_last_error = "null pointer argument";
        return BMDL_E_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        bmdl::MatrixXd m(n, components);
        for (int c = 0; c < components; ++c) {
            for (int64_t t = 0; t < n; ++t) m(t, c) = values[c * n + t];
        }
        *out = new bmdl_series{bmdl::SeriesData(std::move(m), period, ar_order), bmdl::Metadata()};
    });
}

bmdl_status bmdl_series_set_metadata(bmdl_series* series, const int64_t* times, int64_t count) {
    if (!series || (count > 0 && !times)) {
        g_last_error = "null pointer argument";
        return BMDL_E_INVALID_ARGUMENT;
    }
    return guarded([&] {
        std::vector<std::int64_t> ts(times, times + count);
        series->metadata = bmdl::Metadata(std::move(ts), series->data.n(), series->data.ar_order());
    });
}

void bmdl_series_free(bmdl_series* series) { delete series; }

void bmdl_hyperparams_init(bmdl_hyperparams* hp) {
    const bmdl::Hyperparams def = bmdl::Hyperparams::defaults();
    hp->a = def.a;
    hp->b_undoc = def.b_undoc;
    hp->b_doc = def.b_doc;
    hp->nu = def.nu;
    for (int i = 0; i < 4; ++i) {
        hp->alpha_undoc[i] = def.alpha_undoc[static_cast<std::size_t>(i)];
        hp->alpha_doc[i] = def.alpha_doc[static_cast<std::size_t>(i)];
    }
}

void bmdl_hyperparams_init_objective(bmdl_hyperparams* hp) {
    bmdl_hyperparams_init(hp);
    const bmdl::Hyperparams ob = bmdl::Hyperparams::objective_bayes();
    hp->a = ob.a;
    hp->b_undoc = ob.b_undoc;
    hp->b_doc = ob.b_doc;
}

void bmdl_search_options_init(bmdl_search_options* opts) {
    const bmdl::SearchOptions def;
    opts->iterations = def.iterations;
    opts->chains = def.chains;
    opts->seed = def.seed;
    opts->flip_probability = def.flip_probability;
    opts->max_changepoints = def.max_changepoints;
    opts->min_spacing = def.min_spacing;
    opts->threads = def.threads;
    opts->record_traces = def.record_traces ? 1 : 0;
    opts->trace_stride = def.trace_stride;
    opts->random_init = def.random_init ? 1 : 0;
}

bmdl_status bmdl_score_config(const bmdl_series* series, bmdl_objective objective, bmdl_mode mode,
                              const int64_t* times1, int64_t m1, const int64_t* times2, int64_t m2,
                              const bmdl_hyperparams* hp, int use_metadata,
                              bmdl_score_breakdown* out) {
    if (!series || !out || (m1 > 0 && !times1) || (m2 > 0 && !times2)) {
        g_last_error = "null pointer argument";
        return BMDL_E_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const bmdl::Hyperparams params = convert(hp);
        const bmdl::Metadata meta = use_metadata ? series->metadata : bmdl::Metadata();
        const auto obj = static_cast<bmdl::Objective>(objective);
        bmdl::ScoreBreakdown sb;
        if (mode == BMDL_MODE_BIVARIATE) {
            std::vector<std::vector<std::int64_t>> times = {
                std::vector<std::int64_t>(times1, times1 + m1),
                std::vector<std::int64_t>(times2, times2 + m2)};
            const auto config = bmdl::config_from_times(times, series->data.n(),
                                                        series->data.ar_order(), 2);
            bmdl::Hyperparams use = params;
            bmdl::Metadata use_meta = meta;
            if (obj == bmdl::Objective::OBmdl) {
                use.alpha_undoc = {1.0, 1.0, 1.0, 1.0};
                use.alpha_doc = {1.0, 1.0, 1.0, 1.0};
                use_meta = bmdl::Metadata();
            } else if (obj != bmdl::Objective::Bmdl) {
                throw bmdl::InvalidArgumentError("bivariate mode supports BMDL objectives only");
            }
            sb = bmdl::bivariate_bmdl_score(series->data, config, use_meta, use);
        } else {
            if (series->data.components() != 1) {
                throw bmdl::DimensionMismatchError(
                    "univariate scoring requires a one-component series");
            }
            std::vector<std::int64_t> times(times1, times1 + m1);
            sb = bmdl::score_univariate(series->data.component(0), series->data.period(),
                                        series->data.ar_order(), times, meta, params, obj);
        }
        out->fit_term = sb.fit_term;
        out->mu_penalty = sb.mu_penalty;
        out->config_penalty = sb.config_penalty;
        out->total = sb.total;
        out->sigma_fallback = sb.sigma_fallback ? 1 : 0;
    });
}

bmdl_status bmdl_fit(const bmdl_series* series, bmdl_objective objective, bmdl_mode mode,
                     const bmdl_hyperparams* hp, int use_metadata,
                     const bmdl_search_options* opts, bmdl_fit_result** out) {
    if (!series || !out || !opts) {
        g_last_error = "null pointer argument";
        return BMDL_E_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        bmdl::SearchOptions sopts;
        sopts.iterations = opts->iterations;
        sopts.chains = opts->chains;
        sopts.seed = opts->seed;
        sopts.flip_probability = opts->flip_probability;
        sopts.max_changepoints = opts->max_changepoints;
        sopts.min_spacing = opts->min_spacing;
        sopts.threads = opts->threads;
        sopts.record_traces = opts->record_traces != 0;
        sopts.trace_stride = opts->trace_stride;
        sopts.random_init = opts->random_init != 0;
        sopts.objective = static_cast<bmdl::Objective>(objective);
        sopts.mode = (mode == BMDL_MODE_BIVARIATE) ? bmdl::FitMode::Bivariate
                                                   : bmdl::FitMode::Univariate;
        const bmdl::Metadata meta = use_metadata ? series->metadata : bmdl::Metadata();
        bmdl::FitResult res = bmdl::fit(series->data, meta, convert(hp), sopts);
        *out = new bmdl_fit_result{std::move(res), series->data.period(),
                                   series->data.ar_order()};
    });
}

void bmdl_fit_result_free(bmdl_fit_result* result) { delete result; }

int bmdl_fit_components(const bmdl_fit_result* result) {
    return result->result.best_config->components();
}

int64_t bmdl_fit_num_changepoints(const bmdl_fit_result* result, int component) {
    return result->result.best_config->num_changepoints(component);
}

int64_t bmdl_fit_changepoint(const bmdl_fit_result* result, int component, int64_t index) {
    return result->result.best_config->times(component)[static_cast<std::size_t>(index)];
}

void bmdl_fit_score(const bmdl_fit_result* result, bmdl_score_breakdown* out) {
    const bmdl::ScoreBreakdown& sb = result->result.best_score;
    out->fit_term = sb.fit_term;
    out->mu_penalty = sb.mu_penalty;
    out->config_penalty = sb.config_penalty;
    out->total = sb.total;
    out->sigma_fallback = sb.sigma_fallback ? 1 : 0;
}

int64_t bmdl_fit_period(const bmdl_fit_result* result) { return result->period; }
int64_t bmdl_fit_ar_order(const bmdl_fit_result* result) { return result->ar_order; }

double bmdl_fit_seasonal_mean(const bmdl_fit_result* result, int component, int64_t season) {
    return result->result.best_params.seasonal_means[static_cast<std::size_t>(component)](season);
}

double bmdl_fit_regime_mean(const bmdl_fit_result* result, int component, int64_t index) {
    return result->result.best_params.regime_means[static_cast<std::size_t>(component)](index);
}

double bmdl_fit_ar_coeff(const bmdl_fit_result* result, int component, int64_t lag) {
    return result->result.best_params.ar_coeffs[static_cast<std::size_t>(component)](lag);
}

double bmdl_fit_var_coeff(const bmdl_fit_result* result, int64_t lag, int row, int col) {
    return result->result.best_params.var_coeffs[static_cast<std::size_t>(lag)](row, col);
}

double bmdl_fit_noise_variance(const bmdl_fit_result* result) {
    return result->result.best_params.noise_variance;
}

double bmdl_fit_noise_covariance(const bmdl_fit_result* result, int row, int col) {
    return result->result.best_params.noise_covariance(row, col);
}

int bmdl_fit_sigma_fallback(const bmdl_fit_result* result) {
    return result->result.best_params.sigma_fallback ? 1 : 0;
}

int bmdl_fit_chain_count(const bmdl_fit_result* result) {
    return static_cast<int>(result->result.chains.size());
}

int bmdl_fit_aborted_chains(const bmdl_fit_result* result) {
    return result->result.aborted_chains;
}

const char* bmdl_fit_chain_status(const bmdl_fit_result* result, int chain) {
    return result->result.chains[static_cast<std::size_t>(chain)].status.c_str();
}

int64_t bmdl_fit_chain_accepted(const bmdl_fit_result* result, int chain) {
    return result->result.chains[static_cast<std::size_t>(chain)].accepted;
}

int64_t bmdl_fit_chain_evaluated(const bmdl_fit_result* result, int chain) {
    return result->result.chains[static_cast<std::size_t>(chain)].evaluated;
}

double bmdl_fit_chain_best_total(const bmdl_fit_result* result, int chain) {
    return result->result.chains[static_cast<std::size_t>(chain)].best_score.total;
}

int64_t bmdl_fit_trace_length(const bmdl_fit_result* result, int chain) {
    return static_cast<int64_t>(result->result.chains[static_cast<std::size_t>(chain)].trace.size());
}

void bmdl_fit_trace_entry(const bmdl_fit_result* result, int chain, int64_t index,
                          int64_t* iteration, double* total, int64_t* m, double* best_total) {
    const bmdl::TraceEntry& e =
        result->result.chains[static_cast<std::size_t>(chain)].trace[static_cast<std::size_t>(index)];
    if (iteration) *iteration = e.iteration;
    if (total) *total = e.total;
    if (m) *m = e.m;
    if (best_total) *best_total = e.best_total;
}

bmdl_status bmdl_scenario_create(int64_t n, int64_t period, int64_t ar_order, int components,
                                 bmdl_scenario** out) {
    if (!out) return BMDL_E_INVALID_ARGUMENT;
    *out = nullptr;
    return guarded([&] {
        auto* sc = new bmdl_scenario();
        sc->scenario.n = n;
        sc->scenario.period = period;
        sc->scenario.ar_order = ar_order;
        sc->scenario.components = components;
        sc->scenario.seasonal_means.assign(static_cast<std::size_t>(components),
                                           bmdl::VectorXd::Zero(period));
        sc->scenario.cp_times.assign(static_cast<std::size_t>(components), {});
        sc->scenario.regime_means.assign(static_cast<std::size_t>(components),
                                         bmdl::VectorXd::Zero(1));
        *out = sc;
    });
}

void bmdl_scenario_free(bmdl_scenario* scenario) { delete scenario; }

bmdl_status bmdl_scenario_set_seasonal_means(bmdl_scenario* scenario, int component,
                                             const double* values, int64_t count) {
    if (!scenario || !values) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        if (component < 0 || component >= scenario->scenario.components) {
            throw bmdl::InvalidArgumentError("component out of range");
        }
        if (count != scenario->scenario.period) {
            throw bmdl::DimensionMismatchError("seasonal means must have length T");
        }
        scenario->scenario.seasonal_means[static_cast<std::size_t>(component)] =
            Eigen::Map<const bmdl::VectorXd>(values, count);
    });
}

bmdl_status bmdl_scenario_set_changepoints(bmdl_scenario* scenario, int component,
                                           const int64_t* times, int64_t m,
                                           const double* regime_means) {
    if (!scenario || (m > 0 && !times) || !regime_means) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        if (component < 0 || component >= scenario->scenario.components) {
            throw bmdl::InvalidArgumentError("component out of range");
        }
        scenario->scenario.cp_times[static_cast<std::size_t>(component)] =
            std::vector<std::int64_t>(times, times + m);
        scenario->scenario.regime_means[static_cast<std::size_t>(component)] =
            Eigen::Map<const bmdl::VectorXd>(regime_means, m + 1);
    });
}

bmdl_status bmdl_scenario_set_ar(bmdl_scenario* scenario, const double* phi, int64_t p,
                                 double sigma2) {
    if (!scenario || (p > 0 && !phi)) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        scenario->scenario.ar_phi = Eigen::Map<const bmdl::VectorXd>(phi, p);
        scenario->scenario.ar_sigma2 = sigma2;
    });
}

bmdl_status bmdl_scenario_set_var(bmdl_scenario* scenario, const double* phi, int64_t p,
                                  const double* sigma) {
    if (!scenario || (p > 0 && !phi) || !sigma) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        std::vector<bmdl::Matrix2d> mats(static_cast<std::size_t>(p));
        for (int64_t j = 0; j < p; ++j) {
            mats[static_cast<std::size_t>(j)] << phi[4 * j], phi[4 * j + 1], phi[4 * j + 2],
                phi[4 * j + 3];
        }
        scenario->scenario.var_phi = std::move(mats);
        scenario->scenario.var_sigma << sigma[0], sigma[1], sigma[2], sigma[3];
    });
}

bmdl_status bmdl_scenario_set_metadata(bmdl_scenario* scenario, const int64_t* times,
                                       int64_t count) {
    if (!scenario || (count > 0 && !times)) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        scenario->scenario.metadata_times = std::vector<std::int64_t>(times, times + count);
    });
}

bmdl_status bmdl_scenario_set_burnin(bmdl_scenario* scenario, int64_t burnin) {
    if (!scenario || burnin < 0) return BMDL_E_INVALID_ARGUMENT;
    scenario->scenario.burnin = burnin;
    return BMDL_OK;
}

bmdl_status bmdl_scenario_set_hyperparams(bmdl_scenario* scenario, const bmdl_hyperparams* hp) {
    if (!scenario || !hp) return BMDL_E_INVALID_ARGUMENT;
    scenario->scenario.hyperparams = convert(hp);
    return BMDL_OK;
}

bmdl_status bmdl_scenario_add_detector(bmdl_scenario* scenario, int objective, int mode,
                                       int use_metadata) {
    if (!scenario) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        bmdl::Detector det;
        if (objective < 0) {
            det.truth = true;
        } else {
            det.objective = static_cast<bmdl::Objective>(objective);
        }
        if (mode < 0 || mode > 2) throw bmdl::InvalidArgumentError("detector mode must be 0..2");
        det.mode = static_cast<bmdl::DetectorMode>(mode);
        det.use_metadata = use_metadata != 0;
        scenario->scenario.detectors.push_back(det);
    });
}

bmdl_status bmdl_scenario_create_paper(double kappa, bmdl_scenario** out) {
    if (!out) return BMDL_E_INVALID_ARGUMENT;
    *out = nullptr;
    return guarded([&] {
        auto* sc = new bmdl_scenario();
        sc->scenario = bmdl::Scenario::paper_bivariate(kappa);
        *out = sc;
    });
}

bmdl_status bmdl_simulate_series(const bmdl_scenario* scenario, uint64_t seed, double* out) {
    if (!scenario || !out) return BMDL_E_INVALID_ARGUMENT;
    return guarded([&] {
        const bmdl::SeriesData data = bmdl::simulate_series(scenario->scenario, seed);
        for (int c = 0; c < data.components(); ++c) {
            for (int64_t t = 0; t < data.n(); ++t) out[c * data.n() + t] = data.values()(t, c);
        }
    });
}

void bmdl_study_options_init(bmdl_study_options* opts) {
    const bmdl::StudyOptions def;
    opts->replications = def.replications;
    opts->iterations = def.iterations;
    opts->chains = def.chains;
    opts->seed = def.seed;
    opts->threads = def.threads;
    opts->flip_probability = def.flip_probability;
    opts->max_changepoints = def.max_changepoints;
    opts->min_spacing = def.min_spacing;
}

bmdl_status bmdl_run_study(const bmdl_scenario* scenario, const bmdl_study_options* opts,
                           bmdl_study_result** out) {
    if (!scenario || !opts || !out) return BMDL_E_INVALID_ARGUMENT;
    *out = nullptr;
    return guarded([&] {
        bmdl::StudyOptions sopts;
        sopts.replications = opts->replications;
        sopts.iterations = opts->iterations;
        sopts.chains = opts->chains;
        sopts.seed = opts->seed;
        sopts.threads = opts->threads;
        sopts.flip_probability = opts->flip_probability;
        sopts.max_changepoints = opts->max_changepoints;
        sopts.min_spacing = opts->min_spacing;
        auto* result = new bmdl_study_result{bmdl::run_study(scenario->scenario, sopts)};
        *out = result;
    });
}

void bmdl_study_result_free(bmdl_study_result* result) { delete result; }

char* bmdl_study_result_csv(const bmdl_study_result* result) {
    return dup_string(bmdl::detection_table_csv(result->table));
}

char* bmdl_study_result_json(const bmdl_study_result* result) {
    return dup_string(bmdl::detection_table_json(result->table));
}

int64_t bmdl_study_row_count(const bmdl_study_result* result) {
    return static_cast<int64_t>(result->table.rows.size());
}

const char* bmdl_study_row_detector(const bmdl_study_result* result, int64_t row) {
    return result->table.rows[static_cast<std::size_t>(row)].detector.c_str();
}

int bmdl_study_row_component(const bmdl_study_result* result, int64_t row) {
    return result->table.rows[static_cast<std::size_t>(row)].component;
}

int64_t bmdl_study_row_true_time_count(const bmdl_study_result* result, int64_t row) {
    return static_cast<int64_t>(result->table.rows[static_cast<std::size_t>(row)].true_times.size());
}

int64_t bmdl_study_row_true_time(const bmdl_study_result* result, int64_t row, int64_t idx) {
    return result->table.rows[static_cast<std::size_t>(row)].true_times[static_cast<std::size_t>(idx)];
}

double bmdl_study_row_true_positive_pct(const bmdl_study_result* result, int64_t row,
                                        int64_t idx) {
    return result->table.rows[static_cast<std::size_t>(row)]
        .true_positive_pct[static_cast<std::size_t>(idx)];
}

double bmdl_study_row_avg_false_positive_pct(const bmdl_study_result* result, int64_t row) {
    return result->table.rows[static_cast<std::size_t>(row)].avg_false_positive_pct;
}

double bmdl_study_row_mhat_mean(const bmdl_study_result* result, int64_t row) {
    return result->table.rows[static_cast<std::size_t>(row)].mhat_mean;
}

double bmdl_study_row_mhat_sd(const bmdl_study_result* result, int64_t row) {
    return result->table.rows[static_cast<std::size_t>(row)].mhat_sd;
}

void bmdl_string_free(char* str) { std::free(str); }

}  // extern "C"
