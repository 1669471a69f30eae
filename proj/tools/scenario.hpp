// Scenario file parser: flat "key = value" text (a TOML subset).
// Values: integers, floats, quoted strings, and [a, b, c] arrays.
// Lines starting with '#' (or trailing '#' fragments) are comments.

#ifndef BMDL_TOOLS_SCENARIO_HPP
#define BMDL_TOOLS_SCENARIO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bmdl.h"
#include "csv.hpp"

namespace cli {

struct ScenarioValue {
    std::string text;                 // raw scalar (unquoted)
    std::vector<std::string> items;   // array entries (unquoted)
    bool is_array = false;
};

using ScenarioMap = std::map<std::string, ScenarioValue>;

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

inline ScenarioMap parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file: " + path);
    ScenarioMap map;
    std::string line;
    std::size_t row = 0;
    std::string pending_key;
    std::string pending_array;
    bool in_array = false;
    auto finish_array = [&](std::size_t at_row) {
        ScenarioValue value;
        value.is_array = true;
        std::string item;
        for (char c : pending_array) {
            if (c == ',') {
                const std::string t = trim(item);
                if (!t.empty()) value.items.push_back(unquote(t));
                item.clear();
            } else {
                item += c;
            }
        }
        const std::string t = trim(item);
        if (!t.empty()) value.items.push_back(unquote(t));
        if (map.count(pending_key)) {
            throw InputError("line " + std::to_string(at_row) + ": duplicate key " + pending_key);
        }
        map[pending_key] = std::move(value);
        pending_key.clear();
        pending_array.clear();
        in_array = false;
    };

    while (std::getline(in, line)) {
        ++row;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string content = trim(line);
        if (content.empty()) continue;

        if (in_array) {
            const std::size_t close = content.find(']');
            if (close == std::string::npos) {
                pending_array += content;
            } else {
                pending_array += content.substr(0, close);
                finish_array(row);
            }
            continue;
        }

        const std::size_t eq = content.find('=');
        if (eq == std::string::npos) {
            throw InputError("line " + std::to_string(row) + ": expected key = value");
        }
        const std::string key = trim(content.substr(0, eq));
        std::string rest = trim(content.substr(eq + 1));
        if (key.empty() || rest.empty()) {
            throw InputError("line " + std::to_string(row) + ": expected key = value");
        }
        if (rest.front() == '[') {
            rest = rest.substr(1);
            const std::size_t close = rest.find(']');
            pending_key = key;
            if (close == std::string::npos) {
                in_array = true;
                pending_array = rest;
            } else {
                pending_array = rest.substr(0, close);
                finish_array(row);
            }
        } else {
            if (map.count(key)) {
                throw InputError("line " + std::to_string(row) + ": duplicate key " + key);
            }
            ScenarioValue value;
            value.text = unquote(rest);
            map[key] = std::move(value);
        }
    }
    if (in_array) throw InputError("unterminated array for key " + pending_key);
    return map;
}

inline double to_double(const ScenarioValue& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v.text, &used);
        if (used != v.text.size()) throw std::invalid_argument(v.text);
        return out;
    } catch (const std::exception&) {
        throw InputError("scenario key " + key + ": expected a number, got '" + v.text + "'");
    }
}

inline std::int64_t to_int(const ScenarioValue& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long out = std::stoll(v.text, &used);
        if (used != v.text.size()) throw std::invalid_argument(v.text);
        return out;
    } catch (const std::exception&) {
        throw InputError("scenario key " + key + ": expected an integer, got '" + v.text + "'");
    }
}

inline std::vector<double> to_doubles(const ScenarioValue& v, const std::string& key) {
    if (!v.is_array) throw InputError("scenario key " + key + ": expected an array");
    std::vector<double> out;
    for (const auto& item : v.items) {
        ScenarioValue sv;
        sv.text = item;
        out.push_back(to_double(sv, key));
    }
    return out;
}

inline std::vector<std::int64_t> to_ints(const ScenarioValue& v, const std::string& key) {
    if (!v.is_array) throw InputError("scenario key " + key + ": expected an array");
    std::vector<std::int64_t> out;
    for (const auto& item : v.items) {
        ScenarioValue sv;
        sv.text = item;
        out.push_back(to_int(sv, key));
    }
    return out;
}

struct ParsedDetector {
    int objective;  // bmdl_objective value, or -1 for the truth detector
    int mode;       // 0 uni comp 1, 1 uni comp 2, 2 bivariate
    int use_metadata;
};

inline ParsedDetector parse_detector(const std::string& text) {
    std::vector<std::string> parts;
    std::string item;
    for (char c : text) {
        if (c == ':' || c == '-') {
            parts.push_back(item);
            item.clear();
        } else {
            item += c;
        }
    }
    parts.push_back(item);
    if (parts.size() != 3) {
        throw InputError("detector '" + text + "': expected objective:mode:metadata");
    }
    ParsedDetector det{};
    const std::string obj = lower(parts[0]);
    if (obj == "bmdl") det.objective = BMDL_OBJECTIVE_BMDL;
    else if (obj == "obmdl") det.objective = BMDL_OBJECTIVE_OBMDL;
    else if (obj == "mdl") det.objective = BMDL_OBJECTIVE_MDL;
    else if (obj == "bic") det.objective = BMDL_OBJECTIVE_BIC;
    else if (obj == "truth") det.objective = -1;
    else throw InputError("detector '" + text + "': unknown objective " + parts[0]);
    const std::string mode = lower(parts[1]);
    if (mode == "uni1") det.mode = 0;
    else if (mode == "uni2") det.mode = 1;
    else if (mode == "bi") det.mode = 2;
    else throw InputError("detector '" + text + "': unknown mode " + parts[1]);
    const std::string meta = lower(parts[2]);
    if (meta == "meta") det.use_metadata = 1;
    else if (meta == "nometa") det.use_metadata = 0;
    else throw InputError("detector '" + text + "': metadata flag must be meta|nometa");
    return det;
}

struct ScenarioSettings {
    std::int64_t replications = -1;
    std::int64_t iterations = -1;
    std::int64_t chains = -1;
    std::int64_t max_changepoints = -2;  // -2: unset
    std::int64_t min_spacing = -1;
};

inline void check_status(bmdl_status status, const std::string& what) {
    if (status != BMDL_OK) {
        throw InputError(what + ": " + bmdl_status_name(status) + " (" + bmdl_last_error() + ")");
    }
}

// Builds a scenario handle from the parsed key/value map. The caller owns
// the returned handle. Study-level settings land in `settings`.
inline bmdl_scenario* build_scenario(const ScenarioMap& map, ScenarioSettings* settings) {
    auto get = [&](const std::string& key) -> const ScenarioValue* {
        const auto it = map.find(key);
        return it == map.end() ? nullptr : &it->second;
    };

    bmdl_scenario* sc = nullptr;
    double delta = 0.0;
    bool have_delta = false;
    if (const auto* v = get("delta")) {
        delta = to_double(*v, "delta");
        have_delta = true;
    } else if (const auto* v2 = get("kappa")) {
        const double sigma = get("sigma_shift") ? to_double(*get("sigma_shift"), "sigma_shift")
                                                : 3.0;
        delta = to_double(*v2, "kappa") * sigma;
        have_delta = true;
    }

    if (get("preset")) {
        const std::string preset = get("preset")->text;
        if (preset != "paper") throw InputError("unknown preset: " + preset);
        if (!get("kappa")) throw InputError("preset = \"paper\" requires kappa");
        check_status(bmdl_scenario_create_paper(to_double(*get("kappa"), "kappa"), &sc),
                     "scenario");
    } else {
        const std::int64_t n = get("n") ? to_int(*get("n"), "n") : 600;
        const std::int64_t period = get("period") ? to_int(*get("period"), "period") : 12;
        const std::int64_t p = get("ar_order") ? to_int(*get("ar_order"), "ar_order") : 3;
        const int comps =
            get("components") ? static_cast<int>(to_int(*get("components"), "components")) : 1;
        check_status(bmdl_scenario_create(n, period, p, comps, &sc), "scenario");

        try {
            for (int c = 0; c < comps; ++c) {
                const std::string suffix = std::to_string(c + 1);
                const ScenarioValue* sm = get("seasonal_means" + suffix);
                if (!sm) sm = get("seasonal_means");
                if (sm) {
                    const auto values = to_doubles(*sm, "seasonal_means");
                    check_status(bmdl_scenario_set_seasonal_means(
                                     sc, c, values.data(),
                                     static_cast<std::int64_t>(values.size())),
                                 "seasonal_means" + suffix);
                }
                const ScenarioValue* cp = get("changepoints" + suffix);
                if (!cp && comps == 1) cp = get("changepoints");
                if (cp) {
                    const auto times = to_ints(*cp, "changepoints");
                    std::vector<double> means;
                    const ScenarioValue* rm = get("regime_means" + suffix);
                    if (!rm && comps == 1) rm = get("regime_means");
                    const ScenarioValue* pattern = get("regime_pattern" + suffix);
                    if (!pattern && comps == 1) pattern = get("regime_pattern");
                    if (rm) {
                        means = to_doubles(*rm, "regime_means");
                    } else if (pattern) {
                        if (!have_delta) {
                            throw InputError("regime_pattern requires delta or kappa");
                        }
                        means = to_doubles(*pattern, "regime_pattern");
                        for (double& m : means) m *= delta;
                    } else {
                        throw InputError("changepoints" + suffix +
                                         " needs regime_means or regime_pattern");
                    }
                    if (means.size() != times.size() + 1) {
                        throw InputError("regime means must have one more entry than "
                                         "changepoints");
                    }
                    check_status(bmdl_scenario_set_changepoints(
                                     sc, c, times.data(),
                                     static_cast<std::int64_t>(times.size()), means.data()),
                                 "changepoints" + suffix);
                }
            }

            if (comps == 1) {
                std::vector<double> phi;
                if (const auto* v = get("ar_phi")) phi = to_doubles(*v, "ar_phi");
                const double sigma2 =
                    get("ar_sigma2") ? to_double(*get("ar_sigma2"), "ar_sigma2") : 1.0;
                check_status(bmdl_scenario_set_ar(sc, phi.data(),
                                                  static_cast<std::int64_t>(phi.size()), sigma2),
                             "ar parameters");
            } else {
                std::vector<double> phis;
                for (int j = 1;; ++j) {
                    const auto* v = get("var_phi" + std::to_string(j));
                    if (!v) break;
                    const auto mat = to_doubles(*v, "var_phi" + std::to_string(j));
                    if (mat.size() != 4) {
                        throw InputError("var_phi" + std::to_string(j) +
                                         " must have 4 entries (row-major 2x2)");
                    }
                    phis.insert(phis.end(), mat.begin(), mat.end());
                }
                std::vector<double> sigma = {1.0, 0.0, 0.0, 1.0};
                if (const auto* v = get("var_sigma")) {
                    sigma = to_doubles(*v, "var_sigma");
                    if (sigma.size() != 4) {
                        throw InputError("var_sigma must have 4 entries (row-major 2x2)");
                    }
                }
                check_status(bmdl_scenario_set_var(sc, phis.data(),
                                                   static_cast<std::int64_t>(phis.size() / 4),
                                                   sigma.data()),
                             "var parameters");
            }

            if (const auto* v = get("metadata")) {
                const auto times = to_ints(*v, "metadata");
                check_status(bmdl_scenario_set_metadata(
                                 sc, times.data(), static_cast<std::int64_t>(times.size())),
                             "metadata");
            }
            if (const auto* v = get("burnin")) {
                check_status(bmdl_scenario_set_burnin(sc, to_int(*v, "burnin")), "burnin");
            }
        } catch (...) {
            bmdl_scenario_free(sc);
            throw;
        }
    }

    try {
        // hyperparameter overrides apply to every detector of the study
        bmdl_hyperparams hp;
        bmdl_hyperparams_init(&hp);
        bool have_hp = false;
        auto maybe = [&](const char* key, double* slot) {
            if (const auto* v = get(key)) {
                *slot = to_double(*v, key);
                have_hp = true;
            }
        };
        maybe("a", &hp.a);
        maybe("b_undoc", &hp.b_undoc);
        maybe("b_doc", &hp.b_doc);
        maybe("nu", &hp.nu);
        if (have_hp) check_status(bmdl_scenario_set_hyperparams(sc, &hp), "hyperparams");

        if (const auto* v = get("detectors")) {
            if (!v->is_array) throw InputError("detectors must be an array of strings");
            for (const auto& item : v->items) {
                const ParsedDetector det = parse_detector(item);
                check_status(
                    bmdl_scenario_add_detector(sc, det.objective, det.mode, det.use_metadata),
                    "detector " + item);
            }
        }

        if (const auto* v = get("replications")) settings->replications = to_int(*v, "replications");
        if (const auto* v = get("iterations")) settings->iterations = to_int(*v, "iterations");
        if (const auto* v = get("chains")) settings->chains = to_int(*v, "chains");
        if (const auto* v = get("max_changepoints")) {
            settings->max_changepoints = to_int(*v, "max_changepoints");
        }
        if (const auto* v = get("min_spacing")) settings->min_spacing = to_int(*v, "min_spacing");
    } catch (...) {
        bmdl_scenario_free(sc);
        throw;
    }
    return sc;
}

}  // namespace cli

#endif
