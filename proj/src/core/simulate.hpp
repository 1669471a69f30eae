#ifndef BMDL_CORE_SIMULATE_HPP
#define BMDL_CORE_SIMULATE_HPP

#include "search.hpp"

namespace bmdl {

// A study detector: which objective, which series view, metadata or not.
// mode: 0/1 = univariate analysis of that component, 2 = bivariate.
// objective `Truth` short-circuits the fit and reports the generating
// configuration (harness plumbing check).
enum class DetectorMode { UnivariateComp0 = 0, UnivariateComp1 = 1, Bivariate = 2 };

struct Detector {
    Objective objective = Objective::Bmdl;
    DetectorMode mode = DetectorMode::UnivariateComp0;
    bool use_metadata = false;
    bool truth = false;
    std::string label() const;
};

// Synthetic-data generator settings plus the detectors to evaluate.
struct Scenario {
    std::int64_t n = 600;
    std::int64_t period = 12;
    std::int64_t ar_order = 3;
    int components = 2;

    std::vector<VectorXd> seasonal_means;              // per component, length T
    std::vector<std::vector<std::int64_t>> cp_times;   // per component
    std::vector<VectorXd> regime_means;                // per component, length m_i + 1

    // univariate errors: phi + sigma2; bivariate: Phi_1..p + Sigma
    VectorXd ar_phi;
    double ar_sigma2 = 1.0;
    std::vector<Matrix2d> var_phi;
    Matrix2d var_sigma = Matrix2d::Identity();

    std::vector<std::int64_t> metadata_times;
    std::int64_t burnin = 500;
    std::vector<Detector> detectors;

    Hyperparams hyperparams = Hyperparams::defaults();

    static Scenario paper_bivariate(double kappa);  // the simulation-study design
};

// Spectral radius of the AR/VAR companion matrix; >= 1 is non-stationary.
double companion_spectral_radius(const std::vector<Matrix2d>& phi);
double companion_spectral_radius(const VectorXd& phi);

// X_t = s_{v(t)} + mu_{r(t)} + eps_t with Gaussian AR/VAR errors; `burnin`
// pre-samples are discarded before t = 1. Deterministic per seed.
SeriesData simulate_series(const Scenario& scenario, std::uint64_t seed);

struct StudyOptions {
    std::int64_t replications = 200;
    std::int64_t iterations = 20000;
    int chains = 1;
    std::uint64_t seed = 0;
    int threads = 0;
    double flip_probability = 0.5;
    std::int64_t max_changepoints = -1;
    std::int64_t min_spacing = 1;
};

// One table row: detection percentages per true changepoint time of the
// analyzed component, averaged false-positive percentage over the other
// eligible times, and the m-hat sample moments.
struct DetectionRow {
    std::string detector;
    int component = 0;
    bool used_metadata = false;
    std::vector<std::int64_t> true_times;
    std::vector<double> true_positive_pct;
    double avg_false_positive_pct = 0.0;
    double mhat_mean = 0.0;
    double mhat_sd = 0.0;
    std::int64_t replications = 0;
    std::int64_t failed_replications = 0;
};

struct DetectionTable {
    std::vector<DetectionRow> rows;
    std::int64_t n = 0;
    std::int64_t ar_order = 0;
};

// Aggregates fitted time lists into one row. `flags[r]` holds the flagged
// times of replication r for the analyzed component.
DetectionRow detection_rates(const std::vector<std::vector<std::int64_t>>& flags,
                             const std::vector<std::int64_t>& true_times, std::int64_t n,
                             std::int64_t p);

DetectionTable run_study(const Scenario& scenario, const StudyOptions& opts);

std::string detection_table_csv(const DetectionTable& table);
std::string detection_table_json(const DetectionTable& table);

const char* objective_name(Objective objective);
Objective objective_from_name(const std::string& name);

}  // namespace bmdl

#endif
