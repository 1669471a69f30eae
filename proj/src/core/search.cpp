#include "search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_map>

namespace bmdl {

namespace {

struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& key) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::uint64_t w : key) h = mix_seed(h ^ w);
        return static_cast<std::size_t>(h);
    }
};

// Eligible insertion positions given the sorted changepoint list: t in
// [p+1, N], not already a changepoint, with both resulting regime lengths
// >= min_spacing. Computed per regime gap in O(m).
std::int64_t count_additions(const std::vector<std::int64_t>& times, const SearchConstraints& cs) {
    std::int64_t count = 0;
    for (const RegimeRange& r : regime_partition(times, cs.n)) {
        const std::int64_t lo = std::max(r.first + cs.min_spacing, cs.p + 1);
        const std::int64_t hi = std::min(r.last + 1 - cs.min_spacing, cs.n);
        if (hi >= lo) count += hi - lo + 1;
    }
    return count;
}

bool addition_feasible(const std::vector<std::int64_t>& times, std::int64_t t,
                       const SearchConstraints& cs) {
    if (t <= cs.p || t > cs.n) return false;
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it != times.end() && *it == t) return false;
    const std::int64_t prev = (it == times.begin()) ? 1 : *(it - 1);
    const std::int64_t next = (it == times.end()) ? cs.n + 1 : *it;
    return (t - prev >= cs.min_spacing) && (next - t >= cs.min_spacing);
}

std::vector<std::int64_t> without(const std::vector<std::int64_t>& times, std::int64_t t) {
    std::vector<std::int64_t> out;
    out.reserve(times.size() - 1);
    for (std::int64_t v : times) {
        if (v != t) out.push_back(v);
    }
    return out;
}

}  // namespace

std::int64_t count_eligible_flips(const ChangepointConfig& config, const SearchConstraints& cs) {
    std::int64_t count = 0;
    for (int c = 0; c < config.components(); ++c) {
        count += config.num_changepoints(c);  // removals
        if (config.num_changepoints(c) < cs.max_changepoints) {
            count += count_additions(config.times(c), cs);
        }
    }
    return count;
}

std::int64_t count_eligible_swaps(const ChangepointConfig& config, const SearchConstraints& cs) {
    std::int64_t count = 0;
    for (int c = 0; c < config.components(); ++c) {
        for (std::int64_t t : config.times(c)) {
            // re-inserting t itself is always feasible but is not a swap
            count += count_additions(without(config.times(c), t), cs) - 1;
        }
    }
    return count;
}

Proposal propose(const ChangepointConfig& config, Rng& rng, const SearchConstraints& cs,
                 double flip_probability) {
    const std::int64_t slots = config.eligible_count();
    const std::int64_t flips = count_eligible_flips(config, cs);
    const std::int64_t swaps = count_eligible_swaps(config, cs);
    if (flips == 0 && swaps == 0) {
        throw ChainAbortedError("no feasible proposal from current configuration");
    }

    auto move_log_prob = [&](std::int64_t f, std::int64_t s, bool flip_move) {
        // executed-move probability: the intended move falls back to the
        // other type when its feasible set is empty
        double prob;
        if (flip_move) {
            prob = (f > 0) ? flip_probability + (s == 0 ? 1.0 - flip_probability : 0.0) : 0.0;
        } else {
            prob = (s > 0) ? (1.0 - flip_probability) + (f == 0 ? flip_probability : 0.0) : 0.0;
        }
        return std::log(prob);
    };

    bool do_flip = rng.next_double() < flip_probability;
    if (do_flip && flips == 0) do_flip = false;
    if (!do_flip && swaps == 0) do_flip = true;

    Proposal prop{config, 0.0, do_flip, 0};
    if (do_flip) {
        while (true) {
            const std::int64_t pick = rng.next_below(slots * config.components());
            const int comp = static_cast<int>(pick / slots);
            const std::int64_t t = cs.p + 1 + (pick % slots);
            if (config.is_changepoint(comp, t)) {
                prop.config.clear(comp, t);
                break;
            }
            if (config.num_changepoints(comp) < cs.max_changepoints &&
                addition_feasible(config.times(comp), t, cs)) {
                prop.config.set(comp, t);
                break;
            }
            ++prop.resamples;
        }
        const std::int64_t flips_rev = count_eligible_flips(prop.config, cs);
        const std::int64_t swaps_rev = count_eligible_swaps(prop.config, cs);
        prop.log_ratio = move_log_prob(flips_rev, swaps_rev, true) -
                         std::log(static_cast<double>(flips_rev)) -
                         move_log_prob(flips, swaps, true) +
                         std::log(static_cast<double>(flips));
    } else {
        // candidate pairs are uniform over sum_c m_c * (slots - m_c), then
        // thinned to the feasible set by resampling
        std::vector<std::int64_t> weight(config.components());
        std::int64_t total_weight = 0;
        for (int c = 0; c < config.components(); ++c) {
            weight[c] = config.num_changepoints(c) * (slots - config.num_changepoints(c));
            total_weight += weight[c];
        }
        if (total_weight == 0) throw ChainAbortedError("swap selected with no candidate pairs");
        while (true) {
            std::int64_t pick = rng.next_below(total_weight);
            int comp = 0;
            while (pick >= weight[comp]) {
                pick -= weight[comp];
                ++comp;
            }
            const std::int64_t m_c = config.num_changepoints(comp);
            const std::int64_t u_c = slots - m_c;
            const std::int64_t t_out = config.times(comp)[static_cast<std::size_t>(pick / u_c)];
            // decode the k-th non-changepoint time of this component
            std::int64_t k = pick % u_c;
            std::int64_t t_in = -1;
            {
                const auto& ts = config.times(comp);
                std::size_t next_cp = 0;
                for (std::int64_t t = cs.p + 1; t <= cs.n; ++t) {
                    if (next_cp < ts.size() && ts[next_cp] == t) {
                        ++next_cp;
                        continue;
                    }
                    if (k == 0) {
                        t_in = t;
                        break;
                    }
                    --k;
                }
            }
            if (addition_feasible(without(config.times(comp), t_out), t_in, cs)) {
                prop.config.clear(comp, t_out);
                prop.config.set(comp, t_in);
                break;
            }
            ++prop.resamples;
        }
        const std::int64_t flips_rev = count_eligible_flips(prop.config, cs);
        const std::int64_t swaps_rev = count_eligible_swaps(prop.config, cs);
        prop.log_ratio = move_log_prob(flips_rev, swaps_rev, false) -
                         std::log(static_cast<double>(swaps_rev)) -
                         move_log_prob(flips, swaps, false) +
                         std::log(static_cast<double>(swaps));
    }
    return prop;
}

ChainResult mcmc_chain(const ScoreFn& score_fn, const ChangepointConfig& init,
                       const SearchOptions& opts, const SearchConstraints& cs,
                       std::uint64_t chain_seed) {
    ChainResult result;
    Rng rng(chain_seed);
    std::unordered_map<std::vector<std::uint64_t>, ScoreBreakdown, KeyHash> cache;

    auto score = [&](const ChangepointConfig& config) {
        auto key = config.packed_bits();
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const ScoreBreakdown sb = score_fn(config);
        ++result.evaluated;
        cache.emplace(std::move(key), sb);
        return sb;
    };

    const std::int64_t stride = std::max<std::int64_t>(1, opts.trace_stride);
    try {
        ChangepointConfig current = init;
        ScoreBreakdown cur = score(current);
        result.best_config = current;
        result.best_score = cur;
        if (opts.record_traces) {
            result.trace.push_back({0, cur.total, current.total_changepoints(), cur.total});
        }

        for (std::int64_t it = 1; it <= opts.iterations; ++it) {
            Proposal prop = propose(current, rng, cs, opts.flip_probability);
            result.resamples += prop.resamples;
            const ScoreBreakdown ps = score(prop.config);
            if (ps.total < result.best_score.total) {
                result.best_score = ps;
                result.best_config = prop.config;
            }
            const double log_alpha = cur.total - ps.total + prop.log_ratio;
            if (log_alpha >= 0.0 || std::log(rng.next_double()) < log_alpha) {
                current = std::move(prop.config);
                cur = ps;
                ++result.accepted;
            }
            if (opts.record_traces && (it % stride == 0 || it == opts.iterations)) {
                result.trace.push_back(
                    {it, cur.total, current.total_changepoints(), result.best_score.total});
            }
        }
    } catch (const Error& e) {
        result.status = std::string("aborted: ") + e.what();
    }
    return result;
}

SearchConstraints resolve_constraints(std::int64_t n, std::int64_t p, int components,
                                      const SearchOptions& opts) {
    SearchConstraints cs;
    cs.n = n;
    cs.p = p;
    cs.components = components;
    cs.max_changepoints =
        (opts.max_changepoints >= 0) ? opts.max_changepoints : std::max<std::int64_t>(1, (n - p) / 20);
    cs.min_spacing = std::max<std::int64_t>(1, opts.min_spacing);
    if (opts.iterations < 1) throw InvalidArgumentError("iterations must be >= 1");
    if (!(opts.flip_probability > 0.0 && opts.flip_probability < 1.0)) {
        throw InvalidArgumentError("flip_probability must be in (0,1)");
    }
    return cs;
}

ScoreFn make_score_fn(const SeriesData& data, const Metadata& meta, const Hyperparams& hp,
                      Objective objective, FitMode mode) {
    if (mode == FitMode::Bivariate) {
        if (data.components() != 2) {
            throw DimensionMismatchError("bivariate fit requires a two-component series");
        }
        if (objective != Objective::Bmdl && objective != Objective::OBmdl) {
            throw InvalidArgumentError("bivariate mode supports BMDL objectives only");
        }
        Hyperparams use = hp;
        Metadata use_meta = meta;
        if (objective == Objective::OBmdl) {
            // objective-Bayes comparator: symmetric Dirichlet, no metadata
            use.alpha_undoc = {1.0, 1.0, 1.0, 1.0};
            use.alpha_doc = {1.0, 1.0, 1.0, 1.0};
            use_meta = Metadata();
        }
        return [use_meta, use, copy = data](const ChangepointConfig& config) {
            return bivariate_bmdl_score(copy, config, use_meta, use);
        };
    }
    if (data.components() != 1) {
        throw DimensionMismatchError("univariate fit requires a one-component series");
    }
    const VectorXd x = data.component(0);
    const std::int64_t period = data.period();
    const std::int64_t p = data.ar_order();
    return [=](const ChangepointConfig& config) {
        return score_univariate(x, period, p, config.times(0), meta, hp, objective);
    };
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BMDL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

ChangepointConfig random_init_config(std::int64_t n, std::int64_t p, int components,
                                     const SearchConstraints& cs, Rng& rng) {
    ChangepointConfig config(n, p, components);
    for (int c = 0; c < components; ++c) {
        const std::int64_t target = rng.next_below(std::min<std::int64_t>(cs.max_changepoints, 10) + 1);
        int attempts = 0;
        while (config.num_changepoints(c) < target && attempts < 200) {
            const std::int64_t t = p + 1 + rng.next_below(n - p);
            if (addition_feasible(config.times(c), t, cs)) {
                config.set(c, t);
            } else {
                ++attempts;
            }
        }
    }
    return config;
}

}  // namespace

FitResult fit(const SeriesData& data, const Metadata& meta, const Hyperparams& hp,
              const SearchOptions& opts) {
    hp.validate(!meta.empty() &&
                (opts.objective == Objective::Bmdl));
    const int components = (opts.mode == FitMode::Bivariate) ? 2 : 1;
    const SearchConstraints cs = resolve_constraints(data.n(), data.ar_order(), components, opts);
    const ScoreFn score_fn = make_score_fn(data, meta, hp, opts.objective, opts.mode);

    FitResult result;
    result.objective = opts.objective;
    result.mode = opts.mode;
    result.chains.resize(static_cast<std::size_t>(opts.chains));

    const int workers = std::min(resolve_threads(opts.threads), std::max(1, opts.chains));
    std::atomic<int> next{0};
    auto run_chain = [&](int idx) {
        const std::uint64_t chain_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(idx));
        ChangepointConfig init(data.n(), data.ar_order(), components);
        if (opts.random_init && idx > 0) {
            Rng init_rng(derive_seed(chain_seed, 0xC0FFEE));
            init = random_init_config(data.n(), data.ar_order(), components, cs, init_rng);
        }
        result.chains[static_cast<std::size_t>(idx)] =
            mcmc_chain(score_fn, init, opts, cs, chain_seed);
    };

    if (workers <= 1 || opts.chains <= 1) {
        for (int i = 0; i < opts.chains; ++i) run_chain(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < opts.chains; i = next.fetch_add(1)) {
                    run_chain(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    for (const ChainResult& chain : result.chains) {
        if (!chain.ok()) {
            ++result.aborted_chains;
            continue;
        }
        if (!result.best_config.has_value() || chain.best_score.total < result.best_score.total) {
            result.best_config = chain.best_config;
            result.best_score = chain.best_score;
        }
    }
    if (!result.best_config.has_value()) {
        throw ChainAbortedError("all chains aborted");
    }

    if (opts.mode == FitMode::Bivariate) {
        result.best_params = bivariate_fitted_params(data, *result.best_config, hp);
    } else {
        Hyperparams use = hp;
        if (opts.objective == Objective::OBmdl) {
            use = Hyperparams::objective_bayes();
            use.nu = hp.nu;
        }
        result.best_params = univariate_fitted_params(data, *result.best_config, use);
    }
    return result;
}

}  // namespace bmdl
