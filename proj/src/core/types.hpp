#ifndef BMDL_CORE_TYPES_HPP
#define BMDL_CORE_TYPES_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace bmdl {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Matrix2d = Eigen::Matrix2d;
using Vector2d = Eigen::Vector2d;

// Season of absolute time t for period T: v(t) = t - T*floor((t-1)/T), in 1..T.
inline std::int64_t season_of(std::int64_t t, std::int64_t period) {
    return t - period * ((t - 1) / period);
}

// Observed series: N rows, 1 or 2 components, seasonal period T, AR order p.
// Values are complete (no missing entries); that is checked at ingestion.
class SeriesData {
  public:
    SeriesData(MatrixXd values, std::int64_t period, std::int64_t ar_order);

    std::int64_t n() const { return values_.rows(); }
    int components() const { return static_cast<int>(values_.cols()); }
    std::int64_t period() const { return period_; }
    std::int64_t ar_order() const { return ar_order_; }
    const MatrixXd& values() const { return values_; }
    VectorXd component(int c) const { return values_.col(c); }

  private:
    MatrixXd values_;
    std::int64_t period_;
    std::int64_t ar_order_;
};

// Changepoint indicators eta_t over t = p+1..N, one vector per component.
// Times 1..p can never be changepoints; enforced at construction.
class ChangepointConfig {
  public:
    ChangepointConfig(std::int64_t n, std::int64_t p, int components);

    std::int64_t n() const { return n_; }
    std::int64_t p() const { return p_; }
    int components() const { return components_; }
    std::int64_t eligible_count() const { return n_ - p_; }

    bool is_changepoint(int comp, std::int64_t t) const;
    const std::vector<std::int64_t>& times(int comp) const { return times_[comp]; }
    std::int64_t num_changepoints(int comp) const {
        return static_cast<std::int64_t>(times_[comp].size());
    }
    std::int64_t total_changepoints() const;

    // Mutators keep the sorted time list and the bit vector in sync.
    void set(int comp, std::int64_t t);
    void clear(int comp, std::int64_t t);

    // Packed indicator bits of all components; usable as a hash/equality key.
    std::vector<std::uint64_t> packed_bits() const;

    bool operator==(const ChangepointConfig& other) const;

  private:
    void check_time(std::int64_t t) const;

    std::int64_t n_;
    std::int64_t p_;
    int components_;
    std::vector<std::vector<std::int64_t>> times_;  // sorted absolute times
    std::vector<std::vector<std::uint8_t>> bits_;   // index t-p-1, per component
};

// Canonical construction from sorted-or-unsorted time lists.
ChangepointConfig config_from_times(const std::vector<std::vector<std::int64_t>>& times,
                                    std::int64_t n, std::int64_t p, int components);
ChangepointConfig config_from_times(const std::vector<std::int64_t>& times, std::int64_t n,
                                    std::int64_t p);

struct RegimeRange {
    std::int64_t first;  // inclusive
    std::int64_t last;   // inclusive
    std::int64_t length() const { return last - first + 1; }
};

// Regimes 1..m+1 partitioning 1..N: regime r is [tau_{r-1}, tau_r - 1] with
// tau_0 = 1 and tau_{m+1} = N+1.
std::vector<RegimeRange> regime_partition(const std::vector<std::int64_t>& times, std::int64_t n);

// Station-history documented times, all within p+1..N.
class Metadata {
  public:
    Metadata() = default;
    Metadata(std::vector<std::int64_t> documented_times, std::int64_t n, std::int64_t p);

    const std::vector<std::int64_t>& documented_times() const { return times_; }
    bool contains(std::int64_t t) const;
    std::int64_t count() const { return static_cast<std::int64_t>(times_.size()); }
    bool empty() const { return times_.empty(); }

  private:
    std::vector<std::int64_t> times_;  // sorted
};

struct ClassifiedCounts {
    std::int64_t m_undoc;  // m^(1)
    std::int64_t m_doc;    // m^(2)
    std::int64_t n_undoc;  // N^(1)
    std::int64_t n_doc;    // N^(2)
};

// Splits one component's changepoints by documentation status.
ClassifiedCounts classify_counts(const ChangepointConfig& config, int comp, const Metadata& meta);

// Prior hyperparameters. b_undoc/b_doc are the Beta parameters b^(1), b^(2);
// alpha_undoc/alpha_doc the Dirichlet vectors for the bivariate prior.
struct Hyperparams {
    double a = 1.0;
    double b_undoc = 239.0;
    double b_doc = 47.0;
    double nu = 5.0;
    std::array<double, 4> alpha_undoc = {3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0, 239.0};
    std::array<double, 4> alpha_doc = {3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0, 47.0};

    static Hyperparams defaults() { return Hyperparams{}; }
    // Objective-Bayes comparator: a = b = 1.
    static Hyperparams objective_bayes();
    // One documented-looking rate for all times: 0.005 changepoints/month.
    static Hyperparams mitchell_rate();

    void validate(bool metadata_present) const;
};

// Estimators evaluated at a configuration: the conditional posterior mean of
// the regime means plus the Yule-Walker/closed-form pieces.
struct FittedParams {
    std::vector<VectorXd> seasonal_means;           // per component, length T
    std::vector<VectorXd> regime_means;             // per component, length m_i (mu_1 == 0 dropped)
    std::vector<VectorXd> ar_coeffs;                // univariate: per component, length p
    std::vector<Matrix2d> var_coeffs;               // bivariate: Phi_1..Phi_p
    double noise_variance = 0.0;                    // univariate sigma^2
    Matrix2d noise_covariance = Matrix2d::Zero();   // bivariate Sigma
    bool sigma_fallback = false;
};

}  // namespace bmdl

#endif
