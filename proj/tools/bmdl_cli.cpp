// bmdl-cli: changepoint fitting, scoring, simulation, and power studies
// over the bmdl C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmdl.h"
#include "csv.hpp"
#include "scenario.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbortedChains = 3;

struct SeriesHandle {
    bmdl_series* ptr = nullptr;
    ~SeriesHandle() { bmdl_series_free(ptr); }
};

struct FitHandle {
    bmdl_fit_result* ptr = nullptr;
    ~FitHandle() { bmdl_fit_result_free(ptr); }
};

struct ScenarioHandle {
    bmdl_scenario* ptr = nullptr;
    ~ScenarioHandle() { bmdl_scenario_free(ptr); }
};

struct StudyHandle {
    bmdl_study_result* ptr = nullptr;
    ~StudyHandle() { bmdl_study_result_free(ptr); }
};

[[noreturn]] void fail_status(const std::string& what, bmdl_status status) {
    std::cerr << "error: " << what << ": " << bmdl_status_name(status);
    const char* msg = bmdl_last_error();
    if (msg && *msg) std::cerr << " (" << msg << ")";
    std::cerr << "\n";
    std::exit(kExitNumeric);
}

void require_ok(bmdl_status status, const std::string& what) {
    if (status != BMDL_OK) fail_status(what, status);
}

std::vector<int64_t> parse_times_arg(const std::string& arg) {
    std::vector<int64_t> times;
    std::string item;
    std::stringstream ss(arg);
    while (std::getline(ss, item, ',')) {
        const std::string t = cli::trim(item);
        if (t.empty()) continue;
        try {
            std::size_t used = 0;
            times.push_back(std::stoll(t, &used));
            if (used != t.size()) throw std::invalid_argument(t);
        } catch (const std::exception&) {
            throw cli::InputError("cannot parse time '" + t + "' (absolute index expected)");
        }
    }
    return times;
}

// Shared fit/score/search options wired into a CLI11 subcommand.
struct CommonOptions {
    std::string series_path;
    std::string metadata_path;
    std::string mode = "uni";
    int component = 1;
    std::string objective = "bmdl";
    int64_t ar_order = 3;
    std::string params_file;
    double a = 1.0, b1 = 239.0, b2 = 47.0, nu = 5.0;
    bool a_set = false, b1_set = false, b2_set = false, nu_set = false;
};

void add_common_options(CLI::App* cmd, CommonOptions* opts, bool need_series) {
    auto* series = cmd->add_option("--series", opts->series_path,
                                   "series CSV (header year,month,tmax[,tmin])");
    if (need_series) series->required();
    cmd->add_option("--metadata", opts->metadata_path, "metadata CSV (header year,month)");
    cmd->add_option("--mode", opts->mode, "analysis mode: uni or bi")
        ->check(CLI::IsMember({"uni", "bi"}));
    cmd->add_option("--component", opts->component,
                    "component for univariate mode on bivariate input (1 or 2)")
        ->check(CLI::Range(1, 2));
    cmd->add_option("--objective", opts->objective, "bmdl, obmdl, mdl, or bic")
        ->check(CLI::IsMember({"bmdl", "obmdl", "mdl", "bic"}));
    cmd->add_option("-p,--ar-order", opts->ar_order, "autoregressive order p")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--params", opts->params_file, "hyperparameter file (key = value)");
    cmd->add_option("--a", opts->a, "Beta prior a");
    cmd->add_option("--b1", opts->b1, "Beta prior b for undocumented times");
    cmd->add_option("--b2", opts->b2, "Beta prior b for documented times");
    cmd->add_option("--nu", opts->nu, "regime-mean prior variance multiplier");
}

bmdl_hyperparams resolve_hyperparams(const CLI::App* cmd, const CommonOptions& opts) {
    bmdl_hyperparams hp;
    bmdl_hyperparams_init(&hp);
    if (!opts.params_file.empty()) {
        const auto map = cli::parse_scenario_file(opts.params_file);
        auto maybe = [&](const char* key, double* slot) {
            const auto it = map.find(key);
            if (it != map.end()) *slot = cli::to_double(it->second, key);
        };
        maybe("a", &hp.a);
        maybe("b_undoc", &hp.b_undoc);
        maybe("b1", &hp.b_undoc);
        maybe("b_doc", &hp.b_doc);
        maybe("b2", &hp.b_doc);
        maybe("nu", &hp.nu);
        const auto au = map.find("alpha_undoc");
        if (au != map.end()) {
            const auto v = cli::to_doubles(au->second, "alpha_undoc");
            if (v.size() != 4) throw cli::InputError("alpha_undoc needs 4 entries");
            for (int i = 0; i < 4; ++i) hp.alpha_undoc[i] = v[static_cast<std::size_t>(i)];
        }
        const auto ad = map.find("alpha_doc");
        if (ad != map.end()) {
            const auto v = cli::to_doubles(ad->second, "alpha_doc");
            if (v.size() != 4) throw cli::InputError("alpha_doc needs 4 entries");
            for (int i = 0; i < 4; ++i) hp.alpha_doc[i] = v[static_cast<std::size_t>(i)];
        }
    }
    // flags win over the params file
    if (cmd->count("--a")) hp.a = opts.a;
    if (cmd->count("--b1")) hp.b_undoc = opts.b1;
    if (cmd->count("--b2")) hp.b_doc = opts.b2;
    if (cmd->count("--nu")) hp.nu = opts.nu;
    return hp;
}

struct LoadedSeries {
    cli::StationRecord record;
    SeriesHandle series;
    std::vector<int64_t> metadata_times;
    bool univariate_view = false;
    int view_component = 0;  // 0-based, for univariate analysis of column 2
};

// Reads the series (and metadata) and creates the C-API handle, reducing a
// bivariate record to one column when univariate mode asks for it.
LoadedSeries load_series(const CommonOptions& opts) {
    LoadedSeries out;
    out.record = cli::read_series_csv(opts.series_path);
    const bool bivariate_mode = opts.mode == "bi";
    if (bivariate_mode && out.record.components != 2) {
        throw cli::InputError("bivariate mode requires a tmax,tmin series");
    }

    const int64_t n = out.record.n;
    bmdl_status status;
    if (!bivariate_mode && out.record.components == 2) {
        out.univariate_view = true;
        out.view_component = opts.component - 1;
        const double* col = out.record.values.data() +
                            static_cast<std::size_t>(out.view_component) * n;
        status = bmdl_series_create(col, n, 1, 12, opts.ar_order, &out.series.ptr);
    } else {
        status = bmdl_series_create(out.record.values.data(), n, out.record.components, 12,
                                    opts.ar_order, &out.series.ptr);
    }
    require_ok(status, "building series");

    if (!opts.metadata_path.empty()) {
        const auto entries = cli::read_metadata_csv(opts.metadata_path, out.record);
        for (const auto& e : entries) {
            if (e.index <= opts.ar_order || e.index > n) {
                throw cli::InputError(
                    "metadata row " + std::to_string(e.row) + " (" + std::to_string(e.year) +
                    "-" + std::to_string(e.month) + "): index " + std::to_string(e.index) +
                    " outside the usable range " + std::to_string(opts.ar_order + 1) + ".." +
                    std::to_string(n));
            }
            out.metadata_times.push_back(e.index);
        }
        require_ok(bmdl_series_set_metadata(out.series.ptr, out.metadata_times.data(),
                                            static_cast<int64_t>(out.metadata_times.size())),
                   "metadata");
    }
    return out;
}

bmdl_objective objective_enum(const std::string& name) {
    if (name == "bmdl") return BMDL_OBJECTIVE_BMDL;
    if (name == "obmdl") return BMDL_OBJECTIVE_OBMDL;
    if (name == "mdl") return BMDL_OBJECTIVE_MDL;
    return BMDL_OBJECTIVE_BIC;
}

json score_to_json(const bmdl_score_breakdown& sb) {
    return json{{"fit_term", sb.fit_term},
                {"mu_penalty", sb.mu_penalty},
                {"config_penalty", sb.config_penalty},
                {"total", sb.total},
                {"sigma_fallback", sb.sigma_fallback != 0}};
}

void write_text(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw cli::InputError("cannot write " + path);
    out << content;
}

// ------------------------------------------------------------------ fit --

int run_fit(const CLI::App* cmd, const CommonOptions& common, const bmdl_search_options& sopts,
            const std::string& json_path, bool emit_traces) {
    LoadedSeries loaded = load_series(common);
    const bmdl_hyperparams hp = resolve_hyperparams(cmd, common);
    const bool bivariate = common.mode == "bi";
    const int use_meta = loaded.metadata_times.empty() ? 0 : 1;

    FitHandle fit;
    require_ok(bmdl_fit(loaded.series.ptr, objective_enum(common.objective),
                        bivariate ? BMDL_MODE_BIVARIATE : BMDL_MODE_UNIVARIATE, &hp, use_meta,
                        &sopts, &fit.ptr),
               "fit");

    bmdl_score_breakdown sb{};
    bmdl_fit_score(fit.ptr, &sb);
    const int components = bmdl_fit_components(fit.ptr);
    const int chains = bmdl_fit_chain_count(fit.ptr);
    const int aborted = bmdl_fit_aborted_chains(fit.ptr);

    // human summary
    std::printf("fit: objective=%s mode=%s N=%lld T=12 p=%lld metadata=%s\n",
                common.objective.c_str(), common.mode.c_str(),
                static_cast<long long>(loaded.record.n),
                static_cast<long long>(common.ar_order), use_meta ? "yes" : "no");
    std::printf("score: total=%.6f (fit %.6f, mu penalty %.6f, config penalty %.6f)\n", sb.total,
                sb.fit_term, sb.mu_penalty, sb.config_penalty);
    if (sb.sigma_fallback) {
        std::printf("note: innovation covariance fell back to the scaled lag-0 estimate\n");
    }
    for (int c = 0; c < components; ++c) {
        const int label_comp = loaded.univariate_view ? loaded.view_component : c;
        const int64_t m = bmdl_fit_num_changepoints(fit.ptr, c);
        std::printf("component %d: %lld changepoint%s", label_comp + 1, static_cast<long long>(m),
                    m == 1 ? "" : "s");
        for (int64_t i = 0; i < m; ++i) {
            const int64_t t = bmdl_fit_changepoint(fit.ptr, c, i);
            std::printf("%s %s (t=%lld)", i == 0 ? ":" : ",",
                        loaded.record.label_of(t).c_str(), static_cast<long long>(t));
        }
        std::printf("\n");
        if (m > 0) {
            std::printf("  regime means:");
            for (int64_t i = 0; i < m; ++i) {
                std::printf(" %.3f", bmdl_fit_regime_mean(fit.ptr, c, i));
            }
            std::printf("\n");
        }
        if (!bivariate) {
            std::printf("  ar coeffs:");
            for (int64_t j = 0; j < common.ar_order; ++j) {
                std::printf(" %.3f", bmdl_fit_ar_coeff(fit.ptr, c, j));
            }
            std::printf("  sigma2: %.3f\n", bmdl_fit_noise_variance(fit.ptr));
        }
    }
    if (bivariate) {
        std::printf("Sigma: [[%.3f, %.3f], [%.3f, %.3f]]\n",
                    bmdl_fit_noise_covariance(fit.ptr, 0, 0),
                    bmdl_fit_noise_covariance(fit.ptr, 0, 1),
                    bmdl_fit_noise_covariance(fit.ptr, 1, 0),
                    bmdl_fit_noise_covariance(fit.ptr, 1, 1));
    }
    std::printf("chains: %d ok, %d aborted\n", chains - aborted, aborted);
    for (int c = 0; c < chains; ++c) {
        const std::string status = bmdl_fit_chain_status(fit.ptr, c);
        if (status != "ok") std::printf("  chain %d %s\n", c, status.c_str());
    }

    if (!json_path.empty()) {
        json j;
        j["schema_version"] = 1;
        j["command"] = "fit";
        j["mode"] = common.mode == "bi" ? "bivariate" : "univariate";
        j["objective"] = common.objective;
        j["n"] = loaded.record.n;
        j["period"] = 12;
        j["ar_order"] = common.ar_order;
        j["start"] = {{"year", loaded.record.start_year}, {"month", loaded.record.start_month}};
        j["metadata_times"] = loaded.metadata_times;
        j["hyperparams"] = {{"a", hp.a},
                            {"b_undoc", hp.b_undoc},
                            {"b_doc", hp.b_doc},
                            {"nu", hp.nu},
                            {"alpha_undoc", std::vector<double>(hp.alpha_undoc,
                                                                hp.alpha_undoc + 4)},
                            {"alpha_doc", std::vector<double>(hp.alpha_doc, hp.alpha_doc + 4)}};
        j["search"] = {{"iterations", sopts.iterations},
                       {"chains", sopts.chains},
                       {"seed", sopts.seed},
                       {"flip_probability", sopts.flip_probability},
                       {"max_changepoints", sopts.max_changepoints},
                       {"min_spacing", sopts.min_spacing},
                       {"random_init", sopts.random_init != 0}};
        j["score"] = score_to_json(sb);
        j["components"] = json::array();
        for (int c = 0; c < components; ++c) {
            json comp;
            comp["input_component"] =
                (loaded.univariate_view ? loaded.view_component : c) + 1;
            comp["changepoints"] = json::array();
            const int64_t m = bmdl_fit_num_changepoints(fit.ptr, c);
            for (int64_t i = 0; i < m; ++i) {
                const int64_t t = bmdl_fit_changepoint(fit.ptr, c, i);
                comp["changepoints"].push_back(
                    {{"t", t}, {"label", loaded.record.label_of(t)}});
            }
            std::vector<double> seasonal;
            for (int64_t s = 0; s < 12; ++s) {
                seasonal.push_back(bmdl_fit_seasonal_mean(fit.ptr, c, s));
            }
            comp["seasonal_means"] = seasonal;
            std::vector<double> regime;
            for (int64_t i = 0; i < m; ++i) {
                regime.push_back(bmdl_fit_regime_mean(fit.ptr, c, i));
            }
            comp["regime_means"] = regime;
            if (!bivariate) {
                std::vector<double> phi;
                for (int64_t l = 0; l < common.ar_order; ++l) {
                    phi.push_back(bmdl_fit_ar_coeff(fit.ptr, c, l));
                }
                comp["ar_coeffs"] = phi;
            }
            j["components"].push_back(std::move(comp));
        }
        if (bivariate) {
            j["noise_covariance"] = {{bmdl_fit_noise_covariance(fit.ptr, 0, 0),
                                      bmdl_fit_noise_covariance(fit.ptr, 0, 1)},
                                     {bmdl_fit_noise_covariance(fit.ptr, 1, 0),
                                      bmdl_fit_noise_covariance(fit.ptr, 1, 1)}};
            j["var_coeffs"] = json::array();
            for (int64_t l = 0; l < common.ar_order; ++l) {
                j["var_coeffs"].push_back({{bmdl_fit_var_coeff(fit.ptr, l, 0, 0),
                                            bmdl_fit_var_coeff(fit.ptr, l, 0, 1)},
                                           {bmdl_fit_var_coeff(fit.ptr, l, 1, 0),
                                            bmdl_fit_var_coeff(fit.ptr, l, 1, 1)}});
            }
        } else {
            j["noise_variance"] = bmdl_fit_noise_variance(fit.ptr);
        }
        j["chains"] = json::array();
        for (int c = 0; c < chains; ++c) {
            j["chains"].push_back({{"status", bmdl_fit_chain_status(fit.ptr, c)},
                                   {"accepted", bmdl_fit_chain_accepted(fit.ptr, c)},
                                   {"evaluated", bmdl_fit_chain_evaluated(fit.ptr, c)},
                                   {"best_total", bmdl_fit_chain_best_total(fit.ptr, c)}});
        }
        if (emit_traces) {
            j["traces"] = json::array();
            for (int c = 0; c < chains; ++c) {
                json trace = json::array();
                const int64_t len = bmdl_fit_trace_length(fit.ptr, c);
                for (int64_t i = 0; i < len; ++i) {
                    int64_t iter = 0, m = 0;
                    double total = 0.0, best = 0.0;
                    bmdl_fit_trace_entry(fit.ptr, c, i, &iter, &total, &m, &best);
                    trace.push_back({{"iteration", iter},
                                     {"total", total},
                                     {"m", m},
                                     {"best_total", best}});
                }
                j["traces"].push_back(std::move(trace));
            }
        }
        write_text(json_path, j.dump(2) + "\n");
    }
    return aborted == 0 ? 0 : kExitAbortedChains;
}

// ---------------------------------------------------------------- score --

int run_score(const CLI::App* cmd, const CommonOptions& common, const std::string& times1_arg,
              const std::string& times2_arg, const std::string& json_path) {
    LoadedSeries loaded = load_series(common);
    const bmdl_hyperparams hp = resolve_hyperparams(cmd, common);
    const bool bivariate = common.mode == "bi";
    const int use_meta = loaded.metadata_times.empty() ? 0 : 1;
    const auto times1 = parse_times_arg(times1_arg);
    const auto times2 = parse_times_arg(times2_arg);

    bmdl_score_breakdown sb{};
    require_ok(bmdl_score_config(loaded.series.ptr, objective_enum(common.objective),
                                 bivariate ? BMDL_MODE_BIVARIATE : BMDL_MODE_UNIVARIATE,
                                 times1.data(), static_cast<int64_t>(times1.size()),
                                 times2.data(), static_cast<int64_t>(times2.size()), &hp,
                                 use_meta, &sb),
               "score");

    std::printf("objective: %s  mode: %s\n", common.objective.c_str(), common.mode.c_str());
    std::printf("fit_term:       %.17g\n", sb.fit_term);
    std::printf("mu_penalty:     %.17g\n", sb.mu_penalty);
    std::printf("config_penalty: %.17g\n", sb.config_penalty);
    std::printf("total:          %.17g\n", sb.total);
    if (sb.sigma_fallback) {
        std::printf("note: innovation covariance fell back to the scaled lag-0 estimate\n");
    }
    if (!json_path.empty()) {
        json j;
        j["schema_version"] = 1;
        j["command"] = "score";
        j["objective"] = common.objective;
        j["mode"] = bivariate ? "bivariate" : "univariate";
        j["times"] = json::array();
        j["times"].push_back(times1);
        if (bivariate) j["times"].push_back(times2);
        j["score"] = score_to_json(sb);
        write_text(json_path, j.dump(2) + "\n");
    }
    return 0;
}

// ------------------------------------------------------------- simulate --

int run_simulate(const std::string& scenario_path, uint64_t seed, const std::string& out_path,
                 int start_year, int start_month) {
    const auto map = cli::parse_scenario_file(scenario_path);
    cli::ScenarioSettings settings;
    ScenarioHandle scenario;
    scenario.ptr = cli::build_scenario(map, &settings);

    // probe the dimensions from the scenario keys (paper preset is 600 x 2)
    int64_t n = 600;
    int comps = 2;
    if (!map.count("preset")) {
        n = map.count("n") ? cli::to_int(map.at("n"), "n") : 600;
        comps = map.count("components")
                    ? static_cast<int>(cli::to_int(map.at("components"), "components"))
                    : 1;
    }
    std::vector<double> values(static_cast<std::size_t>(n * comps));
    require_ok(bmdl_simulate_series(scenario.ptr, seed, values.data()), "simulate");

    std::string csv = comps == 2 ? "year,month,tmax,tmin\n" : "year,month,tmax\n";
    for (int64_t t = 0; t < n; ++t) {
        const int64_t months = 12LL * start_year + (start_month - 1) + t;
        char buf[128];
        if (comps == 2) {
            std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g\n",
                          static_cast<long long>(months / 12),
                          static_cast<long long>(months % 12 + 1),
                          values[static_cast<std::size_t>(t)],
                          values[static_cast<std::size_t>(n + t)]);
        } else {
            std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g\n",
                          static_cast<long long>(months / 12),
                          static_cast<long long>(months % 12 + 1),
                          values[static_cast<std::size_t>(t)]);
        }
        csv += buf;
    }
    write_text(out_path, csv);
    std::fprintf(stderr, "wrote %lld rows to %s\n", static_cast<long long>(n), out_path.c_str());
    return 0;
}

// ---------------------------------------------------------------- study --

int run_study_cmd(const std::string& scenario_path, const bmdl_study_options& base,
                  const CLI::App* cmd, const std::string& csv_path,
                  const std::string& json_path) {
    const auto map = cli::parse_scenario_file(scenario_path);
    cli::ScenarioSettings settings;
    ScenarioHandle scenario;
    scenario.ptr = cli::build_scenario(map, &settings);

    bmdl_study_options opts = base;
    // scenario file supplies defaults; explicit flags override
    if (settings.replications > 0 && !cmd->count("--reps")) {
        opts.replications = settings.replications;
    }
    if (settings.iterations > 0 && !cmd->count("--iterations")) {
        opts.iterations = settings.iterations;
    }
    if (settings.chains > 0 && !cmd->count("--chains")) {
        opts.chains = static_cast<int>(settings.chains);
    }
    if (settings.max_changepoints >= -1 && settings.max_changepoints != -2 &&
        !cmd->count("--max-changepoints")) {
        opts.max_changepoints = settings.max_changepoints;
    }
    if (settings.min_spacing > 0 && !cmd->count("--min-spacing")) {
        opts.min_spacing = settings.min_spacing;
    }

    StudyHandle study;
    require_ok(bmdl_run_study(scenario.ptr, &opts, &study.ptr), "study");

    char* csv = bmdl_study_result_csv(study.ptr);
    char* jsn = bmdl_study_result_json(study.ptr);
    if (!csv_path.empty()) write_text(csv_path, csv);
    if (!json_path.empty()) write_text(json_path, jsn);

    // short human summary
    const int64_t rows = bmdl_study_row_count(study.ptr);
    for (int64_t r = 0; r < rows; ++r) {
        std::printf("%s component %d:", bmdl_study_row_detector(study.ptr, r),
                    bmdl_study_row_component(study.ptr, r) + 1);
        const int64_t k = bmdl_study_row_true_time_count(study.ptr, r);
        for (int64_t i = 0; i < k; ++i) {
            std::printf(" t=%lld: %.1f%%",
                        static_cast<long long>(bmdl_study_row_true_time(study.ptr, r, i)),
                        bmdl_study_row_true_positive_pct(study.ptr, r, i));
        }
        std::printf("  FP %.3f%%  m-hat %.2f (%.2f)\n",
                    bmdl_study_row_avg_false_positive_pct(study.ptr, r),
                    bmdl_study_row_mhat_mean(study.ptr, r), bmdl_study_row_mhat_sd(study.ptr, r));
    }
    bmdl_string_free(csv);
    bmdl_string_free(jsn);
    return 0;
}

// ------------------------------------------------------------- plotdata --

int run_plotdata(const std::string& fit_path, const std::string& study_path,
                 const std::string& out_path) {
    std::string csv;
    if (!fit_path.empty()) {
        std::ifstream in(fit_path);
        if (!in) throw cli::InputError("cannot open " + fit_path);
        json j = json::parse(in);
        csv = "kind,component,x,y,label\n";
        int comp = 0;
        for (const auto& component : j.at("components")) {
            ++comp;
            for (const auto& cp : component.at("changepoints")) {
                csv += "changepoint," + std::to_string(comp) + "," +
                       std::to_string(cp.at("t").get<int64_t>()) + ",1," +
                       cp.at("label").get<std::string>() + "\n";
            }
            int season = 0;
            for (const auto& v : component.at("seasonal_means")) {
                ++season;
                csv += "seasonal_mean," + std::to_string(comp) + "," + std::to_string(season) +
                       "," + std::to_string(v.get<double>()) + ",\n";
            }
            int regime = 1;
            for (const auto& v : component.at("regime_means")) {
                ++regime;
                csv += "regime_mean," + std::to_string(comp) + "," + std::to_string(regime) +
                       "," + std::to_string(v.get<double>()) + ",\n";
            }
        }
        if (j.contains("traces")) {
            int chain = 0;
            for (const auto& trace : j.at("traces")) {
                ++chain;
                for (const auto& e : trace) {
                    csv += "trace_total," + std::to_string(chain) + "," +
                           std::to_string(e.at("iteration").get<int64_t>()) + "," +
                           std::to_string(e.at("total").get<double>()) + ",\n";
                }
            }
        }
    } else {
        std::ifstream in(study_path);
        if (!in) throw cli::InputError("cannot open " + study_path);
        json j = json::parse(in);
        csv = "detector,component,metadata,replications,failed,metric,time,value\n";
        for (const auto& row : j.at("rows")) {
            const std::string prefix =
                row.at("detector").get<std::string>() + "," +
                std::to_string(row.at("component").get<int>()) + "," +
                (row.at("metadata").get<bool>() ? "yes" : "no") + "," +
                std::to_string(row.at("replications").get<int64_t>()) + "," +
                std::to_string(row.at("failed_replications").get<int64_t>()) + ",";
            const auto& times = row.at("true_times");
            const auto& tps = row.at("true_positive_pct");
            char buf[64];
            for (std::size_t i = 0; i < times.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.6f", tps[i].get<double>());
                csv += prefix + "true_positive_pct," +
                       std::to_string(times[i].get<int64_t>()) + "," + buf + "\n";
            }
            std::snprintf(buf, sizeof(buf), "%.6f", row.at("avg_false_positive_pct").get<double>());
            csv += prefix + "avg_false_positive_pct,," + std::string(buf) + "\n";
            std::snprintf(buf, sizeof(buf), "%.6f", row.at("mhat_mean").get<double>());
            csv += prefix + "mhat_mean,," + std::string(buf) + "\n";
            std::snprintf(buf, sizeof(buf), "%.6f", row.at("mhat_sd").get<double>());
            csv += prefix + "mhat_sd,," + std::string(buf) + "\n";
        }
    }
    write_text(out_path, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bmdl-cli: seasonal changepoint detection by Bayesian MDL"};
    app.require_subcommand(1);

    // fit ------------------------------------------------------------
    CommonOptions fit_common;
    bmdl_search_options fit_opts;
    bmdl_search_options_init(&fit_opts);
    std::string fit_json;
    bool fit_traces = false;
    auto* fit_cmd = app.add_subcommand("fit", "fit changepoints to a series");
    add_common_options(fit_cmd, &fit_common, true);
    fit_cmd->add_option("--iterations", fit_opts.iterations, "MCMC iterations per chain");
    fit_cmd->add_option("--chains", fit_opts.chains, "number of chains");
    fit_cmd->add_option("--seed", fit_opts.seed, "RNG seed");
    fit_cmd->add_option("--flip-prob", fit_opts.flip_probability, "flip proposal probability");
    fit_cmd->add_option("--max-changepoints", fit_opts.max_changepoints,
                        "cap on changepoints per component (-1: auto)");
    fit_cmd->add_option("--min-spacing", fit_opts.min_spacing, "minimum regime length");
    fit_cmd->add_option("--threads", fit_opts.threads, "worker threads (0: auto)");
    fit_cmd->add_option("--trace-stride", fit_opts.trace_stride, "record every k-th iteration");
    fit_cmd->add_flag("--random-init", [&fit_opts](std::int64_t) { fit_opts.random_init = 1; },
                      "random starting configs for chains after the first");
    fit_cmd->add_option("--json", fit_json, "write the fit result as JSON ('-' for stdout)");
    fit_cmd->add_flag("--emit-traces", fit_traces, "include per-chain traces in the JSON");

    // score ----------------------------------------------------------
    CommonOptions score_common;
    std::string score_times1, score_times2, score_json;
    auto* score_cmd = app.add_subcommand("score", "score one explicit configuration");
    add_common_options(score_cmd, &score_common, true);
    score_cmd->add_option("--times", score_times1,
                          "comma-separated changepoint indices (component 1); '' for none");
    score_cmd->add_option("--times2", score_times2, "changepoint indices for component 2");
    score_cmd->add_option("--json", score_json, "write the breakdown as JSON");

    // simulate ---------------------------------------------------------
    std::string sim_scenario, sim_out = "-";
    uint64_t sim_seed = 0;
    int sim_year = 1901, sim_month = 1;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic series from a scenario");
    sim_cmd->add_option("--scenario", sim_scenario, "scenario file")->required();
    sim_cmd->add_option("--seed", sim_seed, "RNG seed")->required();
    sim_cmd->add_option("--out", sim_out, "output CSV path ('-' for stdout)");
    sim_cmd->add_option("--start-year", sim_year, "calendar year of the first row");
    sim_cmd->add_option("--start-month", sim_month, "calendar month of the first row")
        ->check(CLI::Range(1, 12));

    // study ------------------------------------------------------------
    std::string study_scenario, study_csv, study_json;
    bmdl_study_options study_opts;
    bmdl_study_options_init(&study_opts);
    auto* study_cmd = app.add_subcommand("study", "run a detection power study");
    study_cmd->add_option("--scenario", study_scenario, "scenario file")->required();
    study_cmd->add_option("--seed", study_opts.seed, "RNG seed (required for reproducibility)")
        ->required();
    study_cmd->add_option("--reps", study_opts.replications, "replications");
    study_cmd->add_option("--iterations", study_opts.iterations, "MCMC iterations per fit");
    study_cmd->add_option("--chains", study_opts.chains, "chains per fit");
    study_cmd->add_option("--threads", study_opts.threads, "worker threads (0: auto)");
    study_cmd->add_option("--flip-prob", study_opts.flip_probability, "flip proposal probability");
    study_cmd->add_option("--max-changepoints", study_opts.max_changepoints,
                          "cap on changepoints per component (-1: auto)");
    study_cmd->add_option("--min-spacing", study_opts.min_spacing, "minimum regime length");
    study_cmd->add_option("--out-csv", study_csv, "detection table CSV path");
    study_cmd->add_option("--out-json", study_json, "detection table JSON path");

    // plotdata ---------------------------------------------------------
    std::string plot_fit, plot_study, plot_out = "-";
    auto* plot_cmd = app.add_subcommand("plotdata", "flatten results into tidy CSV for plotting");
    auto* plot_fit_opt = plot_cmd->add_option("--fit", plot_fit, "fit result JSON");
    auto* plot_study_opt = plot_cmd->add_option("--study", plot_study, "study result JSON");
    plot_cmd->add_option("--out", plot_out, "output CSV path ('-' for stdout)");
    plot_fit_opt->excludes(plot_study_opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed()) return run_fit(fit_cmd, fit_common, fit_opts, fit_json, fit_traces);
        if (score_cmd->parsed()) {
            return run_score(score_cmd, score_common, score_times1, score_times2, score_json);
        }
        if (sim_cmd->parsed()) {
            return run_simulate(sim_scenario, sim_seed, sim_out, sim_year, sim_month);
        }
        if (study_cmd->parsed()) {
            return run_study_cmd(study_scenario, study_opts, study_cmd, study_csv, study_json);
        }
        if (plot_cmd->parsed()) {
            if (plot_fit.empty() == plot_study.empty()) {
                throw cli::InputError("plotdata needs exactly one of --fit or --study");
            }
            return run_plotdata(plot_fit, plot_study, plot_out);
        }
    } catch (const cli::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
