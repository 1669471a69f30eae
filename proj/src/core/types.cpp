#include "types.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace bmdl {

SeriesData::SeriesData(MatrixXd values, std::int64_t period, std::int64_t ar_order)
    : values_(std::move(values)), period_(period), ar_order_(ar_order) {
    const std::int64_t n = values_.rows();
    const std::int64_t c = values_.cols();
    if (c != 1 && c != 2) {
        throw InvalidArgumentError("series must have 1 or 2 components, got " + std::to_string(c));
    }
    if (period_ < 1) throw InvalidArgumentError("period must be positive");
    if (ar_order_ < 0) throw InvalidArgumentError("ar_order must be non-negative");
    if (n < 2 * period_ + ar_order_) {
        throw InvalidArgumentError("need N >= 2T + p observations; N=" + std::to_string(n) +
                                   ", T=" + std::to_string(period_) +
                                   ", p=" + std::to_string(ar_order_));
    }
    if (!values_.allFinite()) {
        throw InvalidArgumentError("series contains missing or non-finite entries");
    }
}

ChangepointConfig::ChangepointConfig(std::int64_t n, std::int64_t p, int components)
    : n_(n), p_(p), components_(components) {
    if (components != 1 && components != 2) {
        throw InvalidArgumentError("config must have 1 or 2 components");
    }
    if (p < 0 || n <= p) throw InvalidArgumentError("config requires N > p >= 0");
    times_.resize(components);
    bits_.assign(components, std::vector<std::uint8_t>(static_cast<std::size_t>(n - p), 0));
}

void ChangepointConfig::check_time(std::int64_t t) const {
    if (t <= p_ || t > n_) {
        throw OutOfRangeError("changepoint time " + std::to_string(t) + " outside [" +
                              std::to_string(p_ + 1) + ", " + std::to_string(n_) + "]");
    }
}

bool ChangepointConfig::is_changepoint(int comp, std::int64_t t) const {
    if (t <= p_ || t > n_) return false;
    return bits_[comp][static_cast<std::size_t>(t - p_ - 1)] != 0;
}

std::int64_t ChangepointConfig::total_changepoints() const {
    std::int64_t m = 0;
    for (const auto& ts : times_) m += static_cast<std::int64_t>(ts.size());
    return m;
}

void ChangepointConfig::set(int comp, std::int64_t t) {
    check_time(t);
    auto& bit = bits_[comp][static_cast<std::size_t>(t - p_ - 1)];
    if (bit) throw DuplicateError("time " + std::to_string(t) + " already a changepoint");
    bit = 1;
    auto& ts = times_[comp];
    ts.insert(std::upper_bound(ts.begin(), ts.end(), t), t);
}

void ChangepointConfig::clear(int comp, std::int64_t t) {
    check_time(t);
    auto& bit = bits_[comp][static_cast<std::size_t>(t - p_ - 1)];
    if (!bit) throw InvalidArgumentError("time " + std::to_string(t) + " is not a changepoint");
    bit = 0;
    auto& ts = times_[comp];
    ts.erase(std::lower_bound(ts.begin(), ts.end(), t));
}

std::vector<std::uint64_t> ChangepointConfig::packed_bits() const {
    const std::size_t per_comp = (static_cast<std::size_t>(n_ - p_) + 63) / 64;
    std::vector<std::uint64_t> packed(per_comp * static_cast<std::size_t>(components_), 0);
    for (int c = 0; c < components_; ++c) {
        for (std::int64_t t : times_[c]) {
            const std::size_t idx = static_cast<std::size_t>(t - p_ - 1);
            packed[static_cast<std::size_t>(c) * per_comp + idx / 64] |= (1ULL << (idx % 64));
        }
    }
    return packed;
}

bool ChangepointConfig::operator==(const ChangepointConfig& other) const {
    return n_ == other.n_ && p_ == other.p_ && components_ == other.components_ &&
           times_ == other.times_;
}

ChangepointConfig config_from_times(const std::vector<std::vector<std::int64_t>>& times,
                                    std::int64_t n, std::int64_t p, int components) {
    if (static_cast<int>(times.size()) != components) {
        throw InvalidArgumentError("one time list per component required");
    }
    ChangepointConfig config(n, p, components);
    for (int c = 0; c < components; ++c) {
        for (std::int64_t t : times[c]) config.set(c, t);  // set() rejects range/duplicates
    }
    return config;
}

ChangepointConfig config_from_times(const std::vector<std::int64_t>& times, std::int64_t n,
                                    std::int64_t p) {
    return config_from_times(std::vector<std::vector<std::int64_t>>{times}, n, p, 1);
}

std::vector<RegimeRange> regime_partition(const std::vector<std::int64_t>& times, std::int64_t n) {
    std::vector<RegimeRange> regimes;
    regimes.reserve(times.size() + 1);
    std::int64_t start = 1;
    for (std::int64_t tau : times) {
        regimes.push_back({start, tau - 1});
        start = tau;
    }
    regimes.push_back({start, n});
    return regimes;
}

Metadata::Metadata(std::vector<std::int64_t> documented_times, std::int64_t n, std::int64_t p)
    : times_(std::move(documented_times)) {
    std::sort(times_.begin(), times_.end());
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (times_[i] <= p || times_[i] > n) {
            throw OutOfRangeError("metadata time " + std::to_string(times_[i]) + " outside [" +
                                  std::to_string(p + 1) + ", " + std::to_string(n) + "]");
        }
        if (i > 0 && times_[i] == times_[i - 1]) {
            throw DuplicateError("metadata time " + std::to_string(times_[i]) + " repeated");
        }
    }
}

bool Metadata::contains(std::int64_t t) const {
    return std::binary_search(times_.begin(), times_.end(), t);
}

ClassifiedCounts classify_counts(const ChangepointConfig& config, int comp, const Metadata& meta) {
    ClassifiedCounts counts{};
    counts.n_doc = meta.count();
    counts.n_undoc = config.eligible_count() - counts.n_doc;
    for (std::int64_t t : config.times(comp)) {
        if (meta.contains(t)) {
            ++counts.m_doc;
        } else {
            ++counts.m_undoc;
        }
    }
    return counts;
}

Hyperparams Hyperparams::objective_bayes() {
    Hyperparams hp;
    hp.a = 1.0;
    hp.b_undoc = 1.0;
    hp.b_doc = 1.0;
    return hp;
}

Hyperparams Hyperparams::mitchell_rate() {
    Hyperparams hp;
    hp.a = 1.0;
    hp.b_undoc = 199.0;
    hp.b_doc = 199.0;
    return hp;
}

void Hyperparams::validate(bool metadata_present) const {
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(a) || !positive(b_undoc) || !positive(b_doc) || !positive(nu)) {
        throw InvalidArgumentError("hyperparameters must be strictly positive");
    }
    for (double v : alpha_undoc) {
        if (!positive(v)) throw InvalidArgumentError("alpha_undoc entries must be positive");
    }
    for (double v : alpha_doc) {
        if (!positive(v)) throw InvalidArgumentError("alpha_doc entries must be positive");
    }
    if (metadata_present && !(b_undoc > b_doc)) {
        throw InvalidArgumentError("metadata prior requires b_undoc > b_doc");
    }
}

}  // namespace bmdl
