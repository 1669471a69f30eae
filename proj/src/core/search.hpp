#ifndef BMDL_CORE_SEARCH_HPP
#define BMDL_CORE_SEARCH_HPP

#include <functional>
#include <optional>
#include <string>

#include "rng.hpp"
#include "scoring.hpp"
#include "scoring_bivariate.hpp"

namespace bmdl {

enum class FitMode { Univariate, Bivariate };

struct SearchOptions {
    std::int64_t iterations = 20000;
    int chains = 1;
    std::uint64_t seed = 0;
    double flip_probability = 0.5;
    std::int64_t max_changepoints = -1;  // per component; -1 -> max(1, (N-p)/20)
    std::int64_t min_spacing = 1;        // minimum regime length d
    Objective objective = Objective::Bmdl;
    FitMode mode = FitMode::Univariate;
    int threads = 0;                     // 0 -> BMDL_THREADS env or hardware
    bool record_traces = true;
    std::int64_t trace_stride = 1;       // record every k-th iteration
    bool random_init = false;            // chains > 0 start from random configs
};

struct SearchConstraints {
    std::int64_t n = 0;
    std::int64_t p = 0;
    int components = 1;
    std::int64_t max_changepoints = 0;
    std::int64_t min_spacing = 1;
};

// Feasible flip positions (additions respect the cap and spacing; removals
// are always feasible) and feasible same-component swap pairs.
std::int64_t count_eligible_flips(const ChangepointConfig& config, const SearchConstraints& cs);
std::int64_t count_eligible_swaps(const ChangepointConfig& config, const SearchConstraints& cs);

struct Proposal {
    ChangepointConfig config;
    double log_ratio = 0.0;  // log q(new->old) - log q(old->new)
    bool is_flip = true;
    int resamples = 0;       // candidates rejected by cap/spacing before this one
};

Proposal propose(const ChangepointConfig& config, Rng& rng, const SearchConstraints& cs,
                 double flip_probability);

struct TraceEntry {
    std::int64_t iteration;
    double total;
    std::int64_t m;
    double best_total;
};

struct ChainResult {
    std::optional<ChangepointConfig> best_config;
    ScoreBreakdown best_score;
    std::vector<TraceEntry> trace;
    std::int64_t accepted = 0;
    std::int64_t evaluated = 0;
    std::int64_t resamples = 0;
    std::string status = "ok";  // "aborted: <reason>" on failure
    bool ok() const { return status == "ok"; }
};

using ScoreFn = std::function<ScoreBreakdown(const ChangepointConfig&)>;

// One Metropolis-Hastings chain; acceptance probability
// min{1, exp(total_old - total_new + log_ratio)}. Tracks the best-scoring
// configuration over every evaluated proposal, accepted or not.
ChainResult mcmc_chain(const ScoreFn& score_fn, const ChangepointConfig& init,
                       const SearchOptions& opts, const SearchConstraints& cs,
                       std::uint64_t chain_seed);

struct FitResult {
    std::optional<ChangepointConfig> best_config;
    ScoreBreakdown best_score;
    FittedParams best_params;
    std::vector<ChainResult> chains;
    int aborted_chains = 0;
    Objective objective = Objective::Bmdl;
    FitMode mode = FitMode::Univariate;
};

SearchConstraints resolve_constraints(std::int64_t n, std::int64_t p, int components,
                                      const SearchOptions& opts);

// Builds the memoized score function for (data, meta, hp, objective, mode).
ScoreFn make_score_fn(const SeriesData& data, const Metadata& meta, const Hyperparams& hp,
                      Objective objective, FitMode mode);

// Multi-chain fit: per-chain seeds derive from opts.seed, the global best is
// the across-chain minimum, and Theorem-2 estimators are evaluated at it.
FitResult fit(const SeriesData& data, const Metadata& meta, const Hyperparams& hp,
              const SearchOptions& opts);

int resolve_threads(int requested);

}  // namespace bmdl

#endif
