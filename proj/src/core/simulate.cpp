#include "simulate.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace bmdl {

namespace {

std::string mode_name(DetectorMode mode) {
    switch (mode) {
        case DetectorMode::UnivariateComp0: return "uni1";
        case DetectorMode::UnivariateComp1: return "uni2";
        case DetectorMode::Bivariate: return "bi";
    }
    return "?";
}

std::vector<std::int64_t> regime_index_by_time(const std::vector<std::int64_t>& times,
                                               std::int64_t n) {
    std::vector<std::int64_t> regime(static_cast<std::size_t>(n));
    std::int64_t r = 0;
    std::size_t next = 0;
    for (std::int64_t t = 1; t <= n; ++t) {
        if (next < times.size() && times[next] == t) {
            ++r;
            ++next;
        }
        regime[static_cast<std::size_t>(t - 1)] = r;
    }
    return regime;
}

double spectral_radius(const MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

std::string Detector::label() const {
    const std::string obj = truth ? "truth" : objective_name(objective);
    return obj + "-" + mode_name(mode) + (use_metadata ? "-meta" : "-nometa");
}

double companion_spectral_radius(const VectorXd& phi) {
    const std::int64_t p = phi.size();
    if (p == 0) return 0.0;
    MatrixXd companion = MatrixXd::Zero(p, p);
    companion.row(0) = phi.transpose();
    for (std::int64_t i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    return spectral_radius(companion);
}

double companion_spectral_radius(const std::vector<Matrix2d>& phi) {
    const std::int64_t p = static_cast<std::int64_t>(phi.size());
    if (p == 0) return 0.0;
    MatrixXd companion = MatrixXd::Zero(2 * p, 2 * p);
    for (std::int64_t j = 0; j < p; ++j) {
        companion.block<2, 2>(0, 2 * j) = phi[static_cast<std::size_t>(j)];
    }
    for (std::int64_t i = 1; i < p; ++i) companion.block<2, 2>(2 * i, 2 * (i - 1)) =
        Matrix2d::Identity();
    return spectral_radius(companion);
}

Scenario Scenario::paper_bivariate(double kappa) {
    Scenario sc;
    sc.n = 600;
    sc.period = 12;
    sc.ar_order = 3;
    sc.components = 2;

    VectorXd s(12);
    s << 0, 3, 10, 18, 26, 33, 36, 36, 31, 20, 8, 2;
    sc.seasonal_means = {s, s};

    const double delta = kappa * 3.0;
    sc.cp_times = {{150, 300, 450}, {150, 300, 375}};
    VectorXd mu1(4), mu2(4);
    mu1 << 0.0, delta, 2.0 * delta, 3.0 * delta;
    mu2 << 0.0, -delta, delta, 0.0;
    sc.regime_means = {mu1, mu2};

    Matrix2d p1, p2, p3, sig;
    p1 << 0.2, 0.02, 0.02, 0.2;
    p2 << 0.1, 0.01, 0.01, 0.1;
    p3 << 0.05, 0.005, 0.005, 0.05;
    sig << 9.0, 2.0, 2.0, 9.0;
    sc.var_phi = {p1, p2, p3};
    sc.var_sigma = sig;

    sc.metadata_times = {75, 150, 250, 550};
    sc.burnin = 500;
    return sc;
}

SeriesData simulate_series(const Scenario& scenario, std::uint64_t seed) {
    const std::int64_t n = scenario.n;
    const std::int64_t p = scenario.ar_order;
    const int comps = scenario.components;
    if (comps != 1 && comps != 2) throw InvalidArgumentError("scenario components must be 1 or 2");
    if (static_cast<int>(scenario.seasonal_means.size()) != comps ||
        static_cast<int>(scenario.cp_times.size()) != comps ||
        static_cast<int>(scenario.regime_means.size()) != comps) {
        throw InvalidArgumentError("scenario per-component fields must match components");
    }
    for (int c = 0; c < comps; ++c) {
        if (scenario.seasonal_means[c].size() != scenario.period) {
            throw InvalidArgumentError("seasonal means must have length T");
        }
        if (scenario.regime_means[c].size() !=
            static_cast<std::int64_t>(scenario.cp_times[c].size()) + 1) {
            throw InvalidArgumentError("regime means must have length m+1");
        }
    }
    // validates time ranges and duplicates
    (void)config_from_times(scenario.cp_times, n, p, comps);

    const std::int64_t order =
        comps == 2 ? static_cast<std::int64_t>(scenario.var_phi.size()) : scenario.ar_phi.size();
    const double radius = comps == 2 ? companion_spectral_radius(scenario.var_phi)
                                     : companion_spectral_radius(scenario.ar_phi);
    if (radius >= 1.0) {
        throw NonStationaryError("companion spectral radius " + std::to_string(radius) + " >= 1");
    }

    Rng rng(seed);
    const std::int64_t total = scenario.burnin + n;
    MatrixXd eps(total, comps);

    if (comps == 1) {
        if (!(scenario.ar_sigma2 > 0.0)) throw InvalidArgumentError("ar_sigma2 must be positive");
        const double sd = std::sqrt(scenario.ar_sigma2);
        for (std::int64_t t = 0; t < total; ++t) {
            double v = sd * rng.next_normal();
            for (std::int64_t j = 1; j <= order && t - j >= 0; ++j) {
                v += scenario.ar_phi(j - 1) * eps(t - j, 0);
            }
            eps(t, 0) = v;
        }
    } else {
        const Matrix2d& sig = scenario.var_sigma;
        const double det = sig(0, 0) * sig(1, 1) - sig(0, 1) * sig(1, 0);
        if (!(sig(0, 0) > 0.0) || !(det > 0.0)) {
            throw InvalidArgumentError("var_sigma must be positive definite");
        }
        const double l11 = std::sqrt(sig(0, 0));
        const double l21 = sig(0, 1) / l11;
        const double l22 = std::sqrt(sig(1, 1) - l21 * l21);
        for (std::int64_t t = 0; t < total; ++t) {
            const double z1 = rng.next_normal();
            const double z2 = rng.next_normal();
            Vector2d v(l11 * z1, l21 * z1 + l22 * z2);
            for (std::int64_t j = 1; j <= order && t - j >= 0; ++j) {
                v += scenario.var_phi[static_cast<std::size_t>(j - 1)] *
                     Vector2d(eps(t - j, 0), eps(t - j, 1));
            }
            eps.row(t) = v.transpose();
        }
    }

    MatrixXd values(n, comps);
    for (int c = 0; c < comps; ++c) {
        const auto regime = regime_index_by_time(scenario.cp_times[c], n);
        for (std::int64_t t = 1; t <= n; ++t) {
            const double s = scenario.seasonal_means[c](season_of(t, scenario.period) - 1);
            const double mu = scenario.regime_means[c](regime[static_cast<std::size_t>(t - 1)]);
            values(t - 1, c) = s + mu + eps(scenario.burnin + t - 1, c);
        }
    }
    return SeriesData(std::move(values), scenario.period, p);
}

DetectionRow detection_rates(const std::vector<std::vector<std::int64_t>>& flags,
                             const std::vector<std::int64_t>& true_times, std::int64_t n,
                             std::int64_t p) {
    if (flags.empty()) throw InvalidArgumentError("detection_rates needs at least one outcome");
    DetectionRow row;
    row.true_times = true_times;
    row.replications = static_cast<std::int64_t>(flags.size());

    std::vector<std::int64_t> hits(static_cast<std::size_t>(n - p), 0);
    double mhat_sum = 0.0, mhat_sq = 0.0;
    for (const auto& f : flags) {
        for (std::int64_t t : f) hits[static_cast<std::size_t>(t - p - 1)] += 1;
        const double m = static_cast<double>(f.size());
        mhat_sum += m;
        mhat_sq += m * m;
    }
    const double reps = static_cast<double>(flags.size());

    row.true_positive_pct.reserve(true_times.size());
    for (std::int64_t t : true_times) {
        row.true_positive_pct.push_back(
            100.0 * static_cast<double>(hits[static_cast<std::size_t>(t - p - 1)]) / reps);
    }
    double fp_sum = 0.0;
    std::int64_t fp_count = 0;
    for (std::int64_t t = p + 1; t <= n; ++t) {
        if (std::find(true_times.begin(), true_times.end(), t) != true_times.end()) continue;
        fp_sum += static_cast<double>(hits[static_cast<std::size_t>(t - p - 1)]) / reps;
        ++fp_count;
    }
    row.avg_false_positive_pct = fp_count > 0 ? 100.0 * fp_sum / static_cast<double>(fp_count) : 0.0;
    row.mhat_mean = mhat_sum / reps;
    const double var = std::max(0.0, (mhat_sq - mhat_sum * mhat_sum / reps) /
                                          std::max(1.0, reps - 1.0));
    row.mhat_sd = std::sqrt(var);
    return row;
}

DetectionTable run_study(const Scenario& scenario, const StudyOptions& opts) {
    if (scenario.detectors.empty()) throw InvalidArgumentError("study needs at least one detector");
    if (opts.replications < 1) throw InvalidArgumentError("replications must be >= 1");

    const std::int64_t n = scenario.n;
    const std::int64_t p = scenario.ar_order;

    // (detector, analyzed component) pairs, one output row each
    struct RowSpec {
        std::size_t detector;
        int component;
    };
    std::vector<RowSpec> specs;
    for (std::size_t d = 0; d < scenario.detectors.size(); ++d) {
        const Detector& det = scenario.detectors[d];
        if (det.mode == DetectorMode::Bivariate) {
            if (scenario.components != 2) {
                throw InvalidArgumentError("bivariate detector needs a bivariate scenario");
            }
            specs.push_back({d, 0});
            specs.push_back({d, 1});
        } else {
            const int comp = static_cast<int>(det.mode);
            if (comp >= scenario.components) {
                throw InvalidArgumentError("detector component out of range");
            }
            specs.push_back({d, comp});
        }
    }

    // flags[spec][rep]: flagged times; empty optional marks a failed fit
    const std::size_t reps = static_cast<std::size_t>(opts.replications);
    std::vector<std::vector<std::optional<std::vector<std::int64_t>>>> flags(
        specs.size(), std::vector<std::optional<std::vector<std::int64_t>>>(reps));

    auto run_rep = [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(r));
        const SeriesData data = simulate_series(scenario, rep_seed);

        for (std::size_t d = 0; d < scenario.detectors.size(); ++d) {
            const Detector& det = scenario.detectors[d];
            std::vector<std::vector<std::int64_t>> fitted(
                static_cast<std::size_t>(scenario.components));
            bool ok = true;
            if (det.truth) {
                fitted = scenario.cp_times;
            } else {
                try {
                    SearchOptions sopts;
                    sopts.iterations = opts.iterations;
                    sopts.chains = opts.chains;
                    sopts.seed = derive_seed(rep_seed, 0x1000 + d);
                    sopts.flip_probability = opts.flip_probability;
                    sopts.max_changepoints = opts.max_changepoints;
                    sopts.min_spacing = opts.min_spacing;
                    sopts.objective = det.objective;
                    sopts.record_traces = false;
                    sopts.threads = 1;
                    const Metadata meta = det.use_metadata
                                              ? Metadata(scenario.metadata_times, n, p)
                                              : Metadata();
                    if (det.mode == DetectorMode::Bivariate) {
                        sopts.mode = FitMode::Bivariate;
                        const FitResult res = fit(data, meta, scenario.hyperparams, sopts);
                        fitted[0] = res.best_config->times(0);
                        fitted[1] = res.best_config->times(1);
                    } else {
                        sopts.mode = FitMode::Univariate;
                        const int comp = static_cast<int>(det.mode);
                        SeriesData view(data.values().col(comp), scenario.period, p);
                        const FitResult res = fit(view, meta, scenario.hyperparams, sopts);
                        fitted[static_cast<std::size_t>(comp)] = res.best_config->times(0);
                    }
                } catch (const Error&) {
                    ok = false;
                }
            }
            for (std::size_t s = 0; s < specs.size(); ++s) {
                if (specs[s].detector != d) continue;
                if (ok) {
                    flags[s][r] = fitted[static_cast<std::size_t>(specs[s].component)];
                } else {
                    flags[s][r] = std::nullopt;
                }
            }
        }
    };

    const int workers =
        std::min<int>(resolve_threads(opts.threads), static_cast<int>(reps));
    if (workers <= 1) {
        for (std::size_t r = 0; r < reps; ++r) run_rep(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
                    run_rep(r);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    DetectionTable table;
    table.n = n;
    table.ar_order = p;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const Detector& det = scenario.detectors[specs[s].detector];
        std::vector<std::vector<std::int64_t>> ok_flags;
        std::int64_t failed = 0;
        for (const auto& f : flags[s]) {
            if (f.has_value()) {
                ok_flags.push_back(*f);
            } else {
                ++failed;
            }
        }
        if (ok_flags.empty()) {
            throw ChainAbortedError("every replication failed for detector " + det.label());
        }
        DetectionRow row = detection_rates(
            ok_flags, scenario.cp_times[static_cast<std::size_t>(specs[s].component)], n, p);
        row.detector = det.label();
        row.component = specs[s].component;
        row.used_metadata = det.use_metadata;
        row.failed_replications = failed;
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string detection_table_csv(const DetectionTable& table) {
    std::string out = "detector,component,metadata,replications,failed,metric,time,value\n";
    for (const DetectionRow& row : table.rows) {
        const std::string prefix = row.detector + "," + std::to_string(row.component + 1) + "," +
                                   (row.used_metadata ? "yes" : "no") + "," +
                                   std::to_string(row.replications) + "," +
                                   std::to_string(row.failed_replications) + ",";
        for (std::size_t i = 0; i < row.true_times.size(); ++i) {
            out += prefix + "true_positive_pct," + std::to_string(row.true_times[i]) + "," +
                   format_fixed(row.true_positive_pct[i]) + "\n";
        }
        out += prefix + "avg_false_positive_pct,," + format_fixed(row.avg_false_positive_pct) +
               "\n";
        out += prefix + "mhat_mean,," + format_fixed(row.mhat_mean) + "\n";
        out += prefix + "mhat_sd,," + format_fixed(row.mhat_sd) + "\n";
    }
    return out;
}

std::string detection_table_json(const DetectionTable& table) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n"] = table.n;
    j["ar_order"] = table.ar_order;
    j["rows"] = nlohmann::json::array();
    for (const DetectionRow& row : table.rows) {
        nlohmann::json r;
        r["detector"] = row.detector;
        r["component"] = row.component + 1;
        r["metadata"] = row.used_metadata;
        r["replications"] = row.replications;
        r["failed_replications"] = row.failed_replications;
        r["true_times"] = row.true_times;
        r["true_positive_pct"] = row.true_positive_pct;
        r["avg_false_positive_pct"] = row.avg_false_positive_pct;
        r["mhat_mean"] = row.mhat_mean;
        r["mhat_sd"] = row.mhat_sd;
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2);
}

const char* objective_name(Objective objective) {
    switch (objective) {
        case Objective::Bmdl: return "bmdl";
        case Objective::OBmdl: return "obmdl";
        case Objective::Mdl: return "mdl";
        case Objective::Bic: return "bic";
    }
    return "?";
}

Objective objective_from_name(const std::string& name) {
    if (name == "bmdl") return Objective::Bmdl;
    if (name == "obmdl") return Objective::OBmdl;
    if (name == "mdl") return Objective::Mdl;
    if (name == "bic") return Objective::Bic;
    throw InvalidArgumentError("unknown objective: " + name);
}

}  // namespace bmdl
